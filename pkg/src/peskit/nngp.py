"""Neural-network Gaussian process kernel with erf activation.

The infinite-width layer recursion has a closed arcsine form for erf,
used here instead of numerical integration. Per-layer weight and bias
scales are independent trainable parameters; depth is grown until the
training log-likelihood plateaus.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .data import standardize
from .gp import KernelFn, ParamVector, log_marginal_likelihood
from .optimizer import SearchSpace, maximize, stable_seed

__all__ = ["NNGPKernel", "NNGPSearchConfig", "DepthTraceRow", "search_depth"]

log = logging.getLogger(__name__)

SIGMA_W_BOUNDS = (1e-2, 1e1)
SIGMA_B_BOUNDS = (0.0, 1e1)
_ARCSIN_TOL = 1e-12


@dataclass(frozen=True)
class NNGPKernel(KernelFn):
    """Kernel of an infinite-width erf network with ``depth`` hidden layers.

    Parameters are (sigma_w, sigma_b) per layer l = 0..depth, flattened in
    layer order; M = 2 (depth + 1). Layer 0 produces the affine base case
    k0 = sigma_b^2 + sigma_w^2 <x, x'> / D.
    """

    depth: int

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")

    def default_params(self) -> ParamVector:
        n = self.depth + 1
        names = tuple(f"{p}_{l}" for l in range(n) for p in ("sw", "sb"))
        values = np.tile([1.0, 0.1], n)
        lower = np.tile([SIGMA_W_BOUNDS[0], SIGMA_B_BOUNDS[0]], n)
        upper = np.tile([SIGMA_W_BOUNDS[1], SIGMA_B_BOUNDS[1]], n)
        scales = ("log", "linear") * n
        return ParamVector(names=names, values=values, lower=lower,
                           upper=upper, scales=scales)

    def eval(self, x, xp, params: ParamVector) -> float:
        return float(self.gram(np.atleast_2d(x), np.atleast_2d(xp), params)[0, 0])

    def gram(self, X, X2, params: ParamVector) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        X2 = np.atleast_2d(np.asarray(X2, dtype=float))
        v = params.values
        if v.size != 2 * (self.depth + 1):
            raise ValueError(
                f"depth {self.depth} NNGP needs {2 * (self.depth + 1)} parameters")
        D = X.shape[1]
        sw2, sb2 = v[0] ** 2, v[1] ** 2
        K = sb2 + sw2 * (X @ X2.T) / D
        kx = sb2 + sw2 * np.sum(X ** 2, axis=1) / D
        kx2 = sb2 + sw2 * np.sum(X2 ** 2, axis=1) / D
        for l in range(1, self.depth + 1):
            sw2, sb2 = v[2 * l] ** 2, v[2 * l + 1] ** 2
            denom = np.sqrt(np.outer(1.0 + 2.0 * kx, 1.0 + 2.0 * kx2))
            arg = 2.0 * K / denom
            worst = np.max(np.abs(arg)) - 1.0
            if worst > _ARCSIN_TOL:
                raise FloatingPointError(
                    f"arcsin argument out of range by {worst:.3e}")
            arg = np.clip(arg, -1.0, 1.0)
            K = sb2 + sw2 * (2.0 / math.pi) * np.arcsin(arg)
            kx = sb2 + sw2 * (2.0 / math.pi) * np.arcsin(2.0 * kx / (1.0 + 2.0 * kx))
            kx2 = sb2 + sw2 * (2.0 / math.pi) * np.arcsin(2.0 * kx2 / (1.0 + 2.0 * kx2))
        return K


@dataclass
class NNGPSearchConfig:
    budget: int = 50
    max_depth: int = 6
    tol: float = 0.5  # nats of logL improvement required to keep growing
    seed: int = 0
    sigma_n: float = 0.0
    jitter: float = 1e-10


@dataclass(frozen=True)
class DepthTraceRow:
    depth: int
    logL: float
    M: int
    wall_time: float


def search_depth(data, config: NNGPSearchConfig | None = None):
    """Grow NNGP depth until the optimized logL stops improving.

    Returns (kernel, fitted ParamVector, trace) for the best depth seen.
    """
    cfg = config or NNGPSearchConfig()
    X = data.X
    y, _, _ = standardize(data.y)
    trace = []
    best = None  # (logL, kernel, params)
    prev_logL = None
    warm = None
    for L in range(1, cfg.max_depth + 1):
        t0 = time.perf_counter()
        kernel = NNGPKernel(depth=L)
        pv = kernel.default_params()
        if warm is not None:
            # reuse fitted lower layers, initialize the new top layer fresh
            values = pv.values.copy()
            values[:warm.size] = warm
            pv = pv.with_values(values)

        def objective(v, kernel=kernel, pv=pv):
            return log_marginal_likelihood(kernel, pv.with_values(v), X, y,
                                           sigma_n=cfg.sigma_n, jitter=cfg.jitter)

        try:
            res = maximize(objective, SearchSpace.from_params(pv), cfg.budget,
                           seed=stable_seed(cfg.seed, "nngp", L),
                           warm_start=pv.values)
        except Exception as exc:
            log.warning("NNGP depth %d optimization failed: %s", L, exc)
            break
        fitted = pv.with_values(res.best_point)
        trace.append(DepthTraceRow(depth=L, logL=res.best_value,
                                   M=fitted.size,
                                   wall_time=time.perf_counter() - t0))
        if best is None or res.best_value > best[0]:
            best = (res.best_value, kernel, fitted)
        warm = res.best_point
        if prev_logL is not None and res.best_value - prev_logL < cfg.tol:
            break
        prev_logL = res.best_value
    _, kernel, fitted = best
    return kernel, fitted, trace
