"""The kernel density estimator and the empirical characteristic function.

f_hat(x) = (1/n) sum_i K_h(x - X_i)          with K_h(x) = K(x/h)/h
phi_n(t) = (1/n) sum_j exp(i t X_j)

Evaluation is direct O(n * points): the sample sizes in scope stay small
enough that binned or FFT approximations would only add error to the exact
risk bookkeeping downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densities import Sample
from .errors import InvalidBandwidth
from .kernels import KernelSpec, kernel_eval

__all__ = ["Estimate", "EvalGrid", "kde_eval", "kde_eval_grid", "ecf", "ecf_abs2"]

_CHUNK = 2_000_000  # max elements of one (points x sample) difference block


@dataclass(frozen=True)
class Estimate:
    kernel: KernelSpec
    bandwidth: float
    sample: Sample

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise InvalidBandwidth(f"bandwidth must be > 0, got {self.bandwidth}")


@dataclass(frozen=True)
class EvalGrid:
    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.count < 2:
            raise ValueError("grid needs at least 2 points")

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


def kde_eval(est: Estimate, x):
    """Estimator value (1/n) sum_i K_h(x - X_i) at scalar or array x."""
    pts = est.sample.points
    h = est.bandwidth
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(arr)
    step = max(1, _CHUNK // pts.size)
    for i in range(0, arr.size, step):
        diffs = (arr[i:i + step, None] - pts[None, :]) / h
        vals = kernel_eval(est.kernel, diffs)
        out[i:i + step] = vals.mean(axis=1) / h
    return float(out[0]) if np.asarray(x).ndim == 0 else out


def kde_eval_grid(est: Estimate, grid: EvalGrid) -> np.ndarray:
    """kde_eval at ``count`` equispaced points from lo to hi inclusive."""
    return kde_eval(est, grid.points())


def ecf(sample: Sample, t):
    """Empirical characteristic function phi_n(t); |phi_n| <= 1."""
    pts = sample.points
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(arr.shape, dtype=complex)
    step = max(1, _CHUNK // pts.size)
    for i in range(0, arr.size, step):
        phase = arr[i:i + step, None] * pts[None, :]
        # numpy's pairwise summation keeps the O(n) rounding drift down
        out[i:i + step] = (np.cos(phase).mean(axis=1)
                           + 1j * np.sin(phase).mean(axis=1))
    return complex(out[0]) if np.asarray(t).ndim == 0 else out


def ecf_abs2(sample: Sample, t):
    """|phi_n(t)|^2, evaluated in real arithmetic."""
    pts = sample.points
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(arr)
    step = max(1, _CHUNK // pts.size)
    for i in range(0, arr.size, step):
        phase = arr[i:i + step, None] * pts[None, :]
        c = np.cos(phase).mean(axis=1)
        s = np.sin(phase).mean(axis=1)
        out[i:i + step] = c * c + s * s
    return float(out[0]) if np.asarray(t).ndim == 0 else out
