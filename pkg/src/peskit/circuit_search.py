"""Compositional beam search over entangling-layer sequences.

The pool is every nonempty matching of R_ZZ gates on m qubits. Each
iteration appends one pool layer to each retained circuit, screens the
children by the beta metric at inherited parameters, keeps the best M,
and optimizes the parameters of newly retained circuits by Bayesian
optimization of the surrogate objective. Because the shared R_ZZ scale
Theta adds no parameters with depth, the beta penalty is depth-independent.

Every circuit is optimized exactly once, when first retained, with a seed
derived from its canonical form; retained incumbents keep their frozen
scores, which makes the best-beta trace monotone and the whole search
deterministic and order-independent.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import standardize
from .gp import (beta, fit, log_marginal_likelihood, predict, rmse,
                 surrogate_objective)
from .optimizer import SENTINEL, SearchSpace, maximize, stable_seed
from .quantum import QuantumKernel, build_variable_ansatz

__all__ = ["LayerPool", "BeamState", "Candidate", "CircuitSearchConfig",
           "CircuitTraceRow", "involution_count", "layer_pool", "extend",
           "screen", "refine", "search_circuit", "canonical_layers",
           "trace_to_csv"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class _SearchData:
    """Training view with standardized targets used inside the search."""

    X: np.ndarray
    y: np.ndarray


def involution_count(n):
    """T(n) = T(n-1) + (n-1) T(n-2): permutations that are their own inverse."""
    a, b = 1, 1
    for k in range(2, n + 1):
        a, b = b, b + (k - 1) * a
    return b


def _matchings(qubits):
    if not qubits:
        yield ()
        return
    first, rest = qubits[0], qubits[1:]
    # first qubit idle
    for m in _matchings(rest):
        yield m
    # first qubit paired with any later one
    for i, q in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for m in _matchings(remaining):
            yield ((first, q),) + m


@dataclass(frozen=True)
class LayerPool:
    """All nonempty R_ZZ matchings on m qubits, canonically ordered."""

    m: int
    layers: tuple

    def __len__(self):
        return len(self.layers)


def layer_pool(m) -> LayerPool:
    if m < 2:
        raise ValueError("layer pool needs m >= 2")
    layers = sorted(tuple(sorted(match)) for match in _matchings(tuple(range(m)))
                    if match)
    return LayerPool(m=m, layers=tuple(layers))


def canonical_layers(layers):
    """Canonical string id of a layer sequence."""
    return ";".join(",".join(f"{i}-{j}" for i, j in layer) for layer in layers)


@dataclass
class Candidate:
    layers: tuple  # sequence of matchings, each a tuple of (i, j) pairs
    params: np.ndarray
    log_o: float = -np.inf
    beta_score: float = -np.inf
    refined: bool = False
    protected: bool = False  # the depth-0 baseline never counts against M

    @property
    def key(self):
        return (-self.beta_score, len(self.layers), canonical_layers(self.layers))


@dataclass
class BeamState:
    candidates: list
    iteration: int = 0
    converged: bool = False

    def best(self) -> Candidate:
        return min(self.candidates, key=lambda c: c.key)


@dataclass
class CircuitSearchConfig:
    refine_budget: int = 40
    final_budget: int = 200
    eps_beta: float = 0.5
    max_depth: int = 8
    seed: int = 0
    sigma_n: float = 0.0
    jitter: float = 1e-10
    d: float = 1.0  # surrogate offset in log(L + d)
    holdout: object = None  # optional (X_test, y_test) for the trace


@dataclass(frozen=True)
class CircuitTraceRow:
    iteration: int
    best_beta: float
    best_logO: float
    layers: str
    rmse_holdout: float
    wall_time: float


def _log_o(layers, params, X, y, cfg):
    spec = build_variable_ansatz(X.shape[1], layers)
    try:
        logL = log_marginal_likelihood(QuantumKernel(spec),
                                       spec.default_params().with_values(params),
                                       X, y, sigma_n=cfg.sigma_n,
                                       jitter=cfg.jitter)
    except Exception as exc:
        log.warning("scoring failed for [%s]: %s", canonical_layers(layers), exc)
        return SENTINEL
    return surrogate_objective(logL, cfg.d)


def extend(beam: BeamState, pool: LayerPool):
    """Children of every retained circuit: parent layers + one pool layer."""
    children, seen = [], set()
    for parent in beam.candidates:
        for layer in pool.layers:
            layers = parent.layers + (layer,)
            key = canonical_layers(layers)
            if key in seen:
                continue
            seen.add(key)
            children.append(Candidate(layers=layers,
                                      params=parent.params.copy()))
    return children


def screen(candidates, data, M, cfg: CircuitSearchConfig) -> BeamState:
    """Score unrefined candidates at inherited parameters; keep the top M."""
    X, y = data.X, data.y
    N = y.size
    pool, seen = [], set()
    for c in candidates:
        key = canonical_layers(c.layers)
        if key in seen:
            continue
        seen.add(key)
        if not c.refined:
            c.log_o = _log_o(c.layers, c.params, X, y, cfg)
            c.beta_score = beta(c.log_o, X.shape[1] + 1, N)
        pool.append(c)
    pool.sort(key=lambda c: c.key)
    protected = [c for c in pool if c.protected]
    rest = [c for c in pool if not c.protected]
    return BeamState(candidates=protected + rest[:M])


def refine(beam: BeamState, data, cfg: CircuitSearchConfig) -> BeamState:
    """Optimize parameters of circuits not yet refined; frozen afterwards."""
    X, y = data.X, data.y
    N = y.size
    for c in beam.candidates:
        if c.refined:
            continue
        if cfg.refine_budget < 1:
            c.refined = True
            continue

        def objective(v, layers=c.layers):
            return _log_o(layers, v, X, y, cfg)

        spec = build_variable_ansatz(X.shape[1], c.layers)
        pv = spec.default_params()
        try:
            res = maximize(objective, SearchSpace.from_params(pv),
                           cfg.refine_budget,
                           seed=stable_seed(cfg.seed, "circuit",
                                            canonical_layers(c.layers)),
                           warm_start=c.params)
            c.params = np.asarray(res.best_point, dtype=float)
            c.log_o = res.best_value
        except Exception as exc:
            log.warning("refine failed for [%s], keeping inherited parameters: %s",
                        canonical_layers(c.layers), exc)
        c.beta_score = beta(c.log_o, X.shape[1] + 1, N)
        c.refined = True
    beam.candidates.sort(key=lambda c: c.key)
    return beam


def _holdout_rmse(best: Candidate, data, cfg, mean=0.0, scale=1.0):
    if cfg.holdout is None:
        return float("nan")
    Xt, yt = cfg.holdout
    spec = build_variable_ansatz(data.X.shape[1], best.layers)
    try:
        gp = fit(QuantumKernel(spec),
                 spec.default_params().with_values(best.params),
                 data.X, data.y, sigma_n=cfg.sigma_n, jitter=cfg.jitter)
        return rmse(mean + scale * predict(gp, Xt), yt)
    except Exception as exc:
        log.warning("holdout RMSE failed: %s", exc)
        return float("nan")


def search_circuit(data, M, config: CircuitSearchConfig | None = None):
    """Beam search over entangling-layer sequences; returns (spec, params, trace).

    The depth-0 circuit (no entangling layers) is always scored as the
    baseline and retained outside the beam width.
    """
    if M < 1:
        raise ValueError("beam width M must be >= 1")
    cfg = config or CircuitSearchConfig()
    m = data.X.shape[1]
    ys, mean, scale = standardize(data.y)
    sdata = _SearchData(X=data.X, y=ys)
    pool = layer_pool(m)
    init = build_variable_ansatz(m, ()).default_params().values

    seeds = [Candidate(layers=(), params=init.copy(), protected=True)]
    seeds += [Candidate(layers=(layer,), params=init.copy())
              for layer in pool.layers]

    trace = []
    t0 = time.perf_counter()
    beam = refine(screen(seeds, sdata, M, cfg), sdata, cfg)
    best = beam.best()
    trace.append(CircuitTraceRow(0, best.beta_score, best.log_o,
                                 canonical_layers(best.layers),
                                 _holdout_rmse(best, sdata, cfg, mean, scale),
                                 time.perf_counter() - t0))

    for iteration in range(1, cfg.max_depth):
        t0 = time.perf_counter()
        children = extend(beam, pool)
        refined_ids = {canonical_layers(c.layers) for c in beam.candidates}
        children = [c for c in children
                    if canonical_layers(c.layers) not in refined_ids]
        beam = refine(screen(beam.candidates + children, sdata, M, cfg),
                      sdata, cfg)
        new_best = beam.best()
        trace.append(CircuitTraceRow(iteration, new_best.beta_score,
                                     new_best.log_o,
                                     canonical_layers(new_best.layers),
                                     _holdout_rmse(new_best, sdata, cfg,
                                                   mean, scale),
                                     time.perf_counter() - t0))
        improvement = new_best.beta_score - best.beta_score
        best = new_best
        if improvement < cfg.eps_beta:
            beam.converged = True
            break

    # final re-optimization of the winner at the larger budget
    if cfg.final_budget >= 1:
        spec = build_variable_ansatz(m, best.layers)
        pv = spec.default_params()

        def objective(v, layers=best.layers):
            return _log_o(layers, v, sdata.X, sdata.y, cfg)

        res = maximize(objective, SearchSpace.from_params(pv), cfg.final_budget,
                       seed=stable_seed(cfg.seed, "circuit-final",
                                        canonical_layers(best.layers)),
                       warm_start=best.params)
        best = replace_candidate(best, res)
    spec = build_variable_ansatz(m, best.layers)
    params = spec.default_params().with_values(best.params)
    return spec, params, trace


def replace_candidate(c: Candidate, res):
    out = Candidate(layers=c.layers, params=np.asarray(res.best_point, float),
                    log_o=res.best_value, refined=True, protected=c.protected)
    out.beta_score = c.beta_score + (res.best_value - c.log_o)
    return out


def trace_to_csv(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "best_beta", "best_logO", "layers",
                    "rmse_holdout", "wall_time"])
        for r in trace:
            w.writerow([r.iteration, r.best_beta, r.best_logO, r.layers,
                        r.rmse_holdout, r.wall_time])
