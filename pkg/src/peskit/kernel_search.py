"""Greedy compositional construction of classical kernels.

Each iteration combines the incumbent with every base kernel as a
coefficient-weighted sum and product, optimizes every candidate's
parameters by Bayesian optimization of the log marginal likelihood, and
keeps the candidate with the largest BIC. The incumbent is retained in
every candidate pool, so the best-BIC trace never decreases.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import pdist

from .data import standardize
from .gp import bic, log_marginal_likelihood
from .kernels import (ClassicalKernel, Prod, Sum, ensure_coef, new_leaf,
                      param_vector, serialize, with_params)
from .optimizer import SearchSpace, maximize, stable_seed

__all__ = ["DEFAULT_BASES", "ClassicalSearchConfig", "SearchTrace",
           "TraceRow", "expand", "search_classical"]

log = logging.getLogger(__name__)

# the five base families; Matern contributes its smoothness variants
DEFAULT_BASES = ("RBF", "DOT", "RQ", "PER", "MAT12", "MAT32", "MAT52")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    n_candidates: int
    best_expr: str
    best_bic: float
    best_logL: float
    M: int
    wall_time: float


@dataclass
class SearchTrace:
    rows: list = field(default_factory=list)

    def append(self, row: TraceRow):
        self.rows.append(row)

    def best_bics(self):
        return [r.best_bic for r in self.rows]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "n_candidates", "bic", "logL", "M",
                        "wall_time", "kernel"])
            for r in self.rows:
                w.writerow([r.iteration, r.n_candidates, r.best_bic,
                            r.best_logL, r.M, r.wall_time, r.best_expr])


@dataclass
class ClassicalSearchConfig:
    bases: tuple = DEFAULT_BASES
    budget: int = 50
    final_budget: int = 200
    eps_rel: float = 0.01  # converged when improvement < max(eps_rel*|BIC|, eps_abs)
    eps_abs: float = 0.5
    max_depth: int = 8
    seed: int = 0
    sigma_n: float = 0.0
    jitter: float = 1e-10


def expand(incumbent, bases=DEFAULT_BASES):
    """Sum and product of the incumbent with each base, plus the incumbent."""
    if not bases:
        raise ValueError("base set must be nonempty")
    inc = ensure_coef(incumbent)
    out = []
    for b in bases:
        out.append(Sum(left=inc, right=new_leaf(b, coef=1.0)))
        out.append(Prod(left=inc, right=new_leaf(b, coef=None)))
    out.append(incumbent)
    return out


@dataclass(frozen=True)
class _Scored:
    expr: object  # fitted expression (values embedded)
    logL: float
    bic: float
    M: int

    @property
    def key(self):
        # argmax by BIC; ties by fewer parameters, then serialization order
        return (-self.bic, self.M, serialize(self.expr))


def _optimize_candidate(expr, X, y, cfg, budget, p_scale):
    pv = param_vector(expr, p_scale=p_scale)
    kernel = ClassicalKernel(expr=expr, p_scale=p_scale)

    def objective(v):
        return log_marginal_likelihood(kernel, pv.with_values(v), X, y,
                                       sigma_n=cfg.sigma_n, jitter=cfg.jitter)

    res = maximize(objective, SearchSpace.from_params(pv), budget,
                   seed=stable_seed(cfg.seed, "classical", serialize(expr)),
                   warm_start=pv.values)
    fitted = with_params(expr, res.best_point)
    return _Scored(expr=fitted, logL=res.best_value,
                   bic=bic(res.best_value, pv.size, y.size), M=pv.size)


def search_classical(data, config: ClassicalSearchConfig | None = None):
    """Run the greedy composite-kernel search on a training set.

    Returns (best expression, fitted ParamVector, SearchTrace).
    """
    cfg = config or ClassicalSearchConfig()
    X = data.X
    y, _, _ = standardize(data.y)  # scores live on the standardized scale
    dists = pdist(X)
    p_scale = float(np.median(dists)) if dists.size else 1.0

    def score_pool(candidates, incumbent_scored, iteration):
        t0 = time.perf_counter()
        scored = []
        for expr in candidates:
            if incumbent_scored is not None and expr is incumbent_scored.expr:
                scored.append(incumbent_scored)  # frozen score, not re-optimized
                continue
            try:
                scored.append(_optimize_candidate(expr, X, y, cfg, cfg.budget,
                                                  p_scale))
            except Exception as exc:
                log.warning("discarding candidate %s: %s", serialize(expr), exc)
        if not scored:
            raise RuntimeError("all candidates failed to optimize")
        best = min(scored, key=lambda s: s.key)
        return best, len(candidates), time.perf_counter() - t0

    trace = SearchTrace()
    pool = [new_leaf(b, coef=1.0) for b in cfg.bases]
    best, n_cand, dt = score_pool(pool, None, 0)
    trace.append(TraceRow(0, n_cand, serialize(best.expr), best.bic,
                          best.logL, best.M, dt))

    for iteration in range(1, cfg.max_depth):
        pool = expand(best.expr, cfg.bases)
        new_best, n_cand, dt = score_pool(pool, best, iteration)
        trace.append(TraceRow(iteration, n_cand, serialize(new_best.expr),
                              new_best.bic, new_best.logL, new_best.M, dt))
        improvement = new_best.bic - best.bic
        converged = improvement < max(cfg.eps_rel * abs(best.bic), cfg.eps_abs)
        best = new_best
        if converged:
            break

    # re-optimize the winner at the larger final budget
    final = _optimize_candidate(best.expr, X, y, cfg, cfg.final_budget, p_scale)
    if final.bic >= best.bic:
        best = final
    return best.expr, param_vector(best.expr, p_scale=p_scale), trace
