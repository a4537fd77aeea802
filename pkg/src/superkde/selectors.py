"""Data-driven bandwidth selectors.

* ``politis_select`` -- estimate the cf support edge D from the first
  frequency beyond which |phi_n|^2 stays under c log(n)/n on a unit-length
  lookahead window, then take h = 1/D.
* ``lscv_select``    -- least-squares cross-validation on a fixed grid,
  with R(f_hat) evaluated through the kernel's exact self-convolution (the
  Fourier-side value, organized as pair sums).
* ``sj_select``      -- the classical solve-the-equation plug-in for the
  Gaussian kernel: two-stage normal-reference pilots for psi6/psi4 and a
  bisection on h = [R(K)/(n m2^2 psi4(gamma(h)))]^{1/5}.

All three are pure functions of their sample, so repeated calls agree
bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _fastmath
from .densities import DensitySpec, Sample
from .errors import DegenerateSample, EmptyGrid, NoFlatRegion, NoRoot
from .estimation import ecf_abs2
from .kernels import KernelSpec, compute_s_t, kernel_roughness

__all__ = [
    "PolitisSettings",
    "SelectorResult",
    "politis_select",
    "lscv_select",
    "lscv_objective",
    "default_lscv_grid",
    "sj_select",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class PolitisSettings:
    c: float = 1.0
    ell: float = 1.0
    d_step: float = 0.01
    d_max: float = 20.0
    t_step: float = 0.01

    def __post_init__(self):
        for name in ("c", "ell", "d_step", "d_max", "t_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.d_step > self.d_max:
            raise ValueError("d_step must not exceed d_max")


@dataclass(frozen=True)
class SelectorResult:
    h: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("selected bandwidth must be positive")


def _ecf_abs2_fast(pts: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """|phi_n|^2 on a frequency grid, trig through the fast backend."""
    n = pts.size
    out = np.empty(ts.size)
    step = max(1, int(4.0e6 // n))
    phase = np.empty((min(step, ts.size), n))
    buf = np.empty_like(phase)
    for i in range(0, ts.size, step):
        chunk = ts[i:i + step]
        if chunk.size != phase.shape[0]:
            phase = np.empty((chunk.size, n))
            buf = np.empty_like(phase)
        np.multiply.outer(chunk, pts, out=phase)
        _fastmath.cos_into(phase.reshape(-1), buf.reshape(-1))
        c = buf.mean(axis=1)
        _fastmath.sin_into(phase.reshape(-1), buf.reshape(-1))
        s = buf.mean(axis=1)
        out[i:i + step] = c * c + s * s
    return out


def politis_select(sample: Sample, settings: PolitisSettings | None = None) -> SelectorResult:
    """Flat-region rule: h = 1 / D_hat.

    D_hat is the smallest grid frequency D such that |phi_n(D + t)|^2 stays
    below c log(n)/n for every t on the inner grid of (0, ell). With no
    qualifying D up to d_max the rule has no answer and ``NoFlatRegion`` is
    raised (the simulation harness substitutes h = 1/d_max and counts the
    event).
    """
    st = settings or PolitisSettings()
    n = sample.n
    if n < 2:
        raise DegenerateSample("flat-region rule needs n >= 2")
    threshold = st.c * math.log(n) / n
    kd = int(round(st.d_max / st.d_step))
    k_in = int(math.floor((st.ell - 1e-12) / st.t_step))
    if k_in < 1:
        raise ValueError("t_step leaves no inner grid point in (0, ell)")

    if abs(st.d_step - st.t_step) < 1e-15:
        # shared grid: D + t all land on multiples of the common step
        js = np.arange(2, kd + k_in + 1)
        vals = _ecf_abs2_fast(sample.points, js * st.d_step)
        windows = sliding_window_view(vals, k_in)[:kd]
        ok = windows.max(axis=1) < threshold
        hits = np.nonzero(ok)[0]
        if hits.size == 0:
            raise NoFlatRegion(
                f"|phi_n|^2 never stays below {threshold:.3e} up to D = {st.d_max:g}"
            )
        d_hat = (hits[0] + 1) * st.d_step
    else:
        offs = np.arange(1, k_in + 1) * st.t_step
        d_hat = None
        for i in range(1, kd + 1):
            d = i * st.d_step
            if np.max(_ecf_abs2_fast(sample.points, d + offs)) < threshold:
                d_hat = d
                break
        if d_hat is None:
            raise NoFlatRegion(
                f"|phi_n|^2 never stays below {threshold:.3e} up to D = {st.d_max:g}"
            )
    return SelectorResult(
        h=1.0 / d_hat,
        diagnostics={"d_hat": float(d_hat), "threshold": threshold, "n": float(n)},
    )


# ----------------------------------------------------------------------
# least-squares cross-validation
# ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def _s_k(kernel: KernelSpec) -> float:
    return compute_s_t(kernel)[0]


def _pair_abs_diffs(pts: np.ndarray) -> np.ndarray:
    n = pts.size
    out = np.empty(n * (n - 1) // 2)
    pos = 0
    for i in range(n - 1):
        m = n - 1 - i
        np.subtract(pts[i + 1:], pts[i], out=out[pos:pos + m])
        pos += m
    np.abs(out, out=out)
    return out


class _TrapezoidPairSums:
    """Fused in-place pipeline for the trapezoidal K and K*K pair sums.

    Per bandwidth this costs one sin and one cos over the pair-distance
    array (cos 2y and sin 2y come from double-angle identities), with all
    arithmetic running through preallocated buffers.
    """

    def __init__(self, d: np.ndarray):
        self.d = d
        self.w = np.empty_like(d)
        self.c = np.empty_like(d)
        self.s = np.empty_like(d)
        self.a = np.empty_like(d)
        self.b = np.empty_like(d)

    def __call__(self, h: float) -> tuple[float, float]:
        d, w, c, s, a, b = self.d, self.w, self.c, self.s, self.a, self.b
        np.divide(d, h, out=w)
        _fastmath.cos_into(w, c)
        _fastmath.sin_into(w, s)
        np.multiply(w, w, out=a)                      # a = y^2
        # K(y) = (cos y - cos 2y)/(pi y^2), cos 2y = 2c^2 - 1
        np.multiply(c, c, out=b)
        np.multiply(b, 2.0, out=b)
        np.subtract(b, 1.0, out=b)
        np.subtract(c, b, out=b)
        np.divide(b, a, out=b)
        sum_k = float(b.sum()) / math.pi
        # (K*K)(y) = (2/pi)(c/y^2 + s(1 - 2c)/y^3)
        np.multiply(c, -2.0, out=b)
        np.add(b, 1.0, out=b)
        np.multiply(b, s, out=b)
        np.divide(b, a, out=b)
        np.divide(b, w, out=b)
        np.divide(c, a, out=a)
        np.add(a, b, out=a)
        sum_kk = float(a.sum()) * (2.0 / math.pi)
        return sum_k, sum_kk

    # pair distances of coincident points are zero; callers must not hand
    # them to this pipeline (division by y). Guarded in _pair_terms.


def _pair_terms(kernel: KernelSpec, d: np.ndarray, h: float,
                fused: Optional[_TrapezoidPairSums]) -> tuple[float, float]:
    if d.size == 0:
        return 0.0, 0.0
    if fused is not None and not np.any(d == 0.0):
        return fused(h)
    from .kernels import kernel_eval

    y = d / h
    sum_k = float(np.sum(kernel_eval(kernel, y, allow_nonintegrable=True)))
    sum_kk = float(np.sum(kernel.self_convolution(y)))
    return sum_k, sum_kk


def lscv_objective(sample: Sample, kernel: KernelSpec, h: float) -> float:
    """LSCV(h) = R(f_hat_h) - (2/n) sum_i f_hat_{-i}(X_i)."""
    d = _pair_abs_diffs(sample.points)
    return _lscv_objective_given(sample, kernel, d, h, None)


def _lscv_objective_given(sample: Sample, kernel: KernelSpec, d: np.ndarray,
                          h: float, fused) -> float:
    n = sample.n
    r_k = kernel_roughness(kernel)
    sum_k, sum_kk = _pair_terms(kernel, d, h, fused)
    r_fhat = r_k / (n * h) + 2.0 * sum_kk / (n * n * h)
    loo = 4.0 * sum_k / (n * (n - 1) * h)
    return r_fhat - loo


def lscv_select(sample: Sample, kernel: KernelSpec,
                h_grid: Sequence[float]) -> SelectorResult:
    """Grid minimizer of the cross-validation objective.

    Requires a kernel with a closed-form self-convolution (all built-ins
    that are integrable have one). Ties break toward the smaller h.
    """
    grid = np.asarray(list(h_grid), dtype=float)
    if grid.size == 0:
        raise EmptyGrid("cross-validation needs a nonempty bandwidth grid")
    if np.any(grid <= 0):
        raise ValueError("bandwidth grid must be positive")
    if sample.n < 2:
        raise DegenerateSample("cross-validation needs n >= 2")
    if kernel.self_convolution is None:
        raise ValueError(f"kernel {kernel.name!r} has no self-convolution")
    order = np.argsort(grid, kind="stable")
    grid = grid[order]
    d = _pair_abs_diffs(sample.points)
    fused = None
    if kernel.name == "trapezoidal" and d.size >= 65536 and not np.any(d == 0.0):
        fused = _TrapezoidPairSums(d)
    vals = np.array([
        _lscv_objective_given(sample, kernel, d, float(h), fused) for h in grid
    ])
    best = int(np.argmin(vals))  # first minimum = smallest h on ties
    return SelectorResult(
        h=float(grid[best]),
        diagnostics={"objective": float(vals[best]), "grid_size": float(grid.size)},
    )


def default_lscv_grid(
    sample: Sample,
    kernel: KernelSpec,
    density: DensitySpec | None = None,
    size: int = 40,
) -> np.ndarray:
    """40 log-spaced bandwidths on [0.1, 4] x (zero-bias h when defined).

    Without a finite cf-support target the anchor falls back to the
    normal-reference scale sigma_hat n^{-1/5}.
    """
    s_k = _s_k(kernel)
    if density is not None and s_k > 0 and math.isfinite(density.d_f):
        base = s_k / density.d_f
    else:
        x = sample.points
        sd = float(x.std(ddof=1)) if sample.n > 1 else 1.0
        base = max(sd, 1e-12) * sample.n ** (-0.2)
    return np.geomspace(0.1 * base, 4.0 * base, size)


# ----------------------------------------------------------------------
# Sheather-Jones solve-the-equation plug-in (Gaussian kernel)
# ----------------------------------------------------------------------

_RK_GAUSS = 1.0 / (2.0 * math.sqrt(math.pi))
# stage constants 0.920 and 0.912 are stated for an IQR scale; fold in the
# normal IQR/sigma ratio so they apply to min(sd, IQR/1.349)
_A_STAGE = 0.920 * 1.349
_B_STAGE = 0.912 * 1.349


class _GaussPairFunctionals:
    """psi4/psi6 pair functionals with preallocated buffers.

    Diagonal terms are included with the n(n-1) divisor, matching the
    classical solve-the-equation implementation.
    """

    def __init__(self, d: np.ndarray, n: int):
        self.d2 = d * d
        self.n = n
        self.y2 = np.empty_like(d)
        self.e = np.empty_like(d)
        self.p = np.empty_like(d)

    def _phase(self, g: float) -> None:
        np.divide(self.d2, g * g, out=self.y2)
        np.multiply(self.y2, -0.5, out=self.e)
        _fastmath.exp_into(self.e, self.e)

    def psi4(self, g: float) -> float:
        self._phase(g)
        y2, e, p = self.y2, self.e, self.p
        # (y^4 - 6y^2 + 3) phi(y)
        np.multiply(y2, y2, out=p)
        np.subtract(p, 6.0 * y2, out=p)
        np.add(p, 3.0, out=p)
        np.multiply(p, e, out=p)
        total = 2.0 * float(p.sum()) + self.n * 3.0
        return total / (self.n * (self.n - 1) * g ** 5 * _SQRT2PI)

    def psi6(self, g: float) -> float:
        self._phase(g)
        y2, e, p = self.y2, self.e, self.p
        # (y^6 - 15y^4 + 45y^2 - 15) phi(y)
        np.subtract(y2, 15.0, out=p)
        np.multiply(p, y2, out=p)
        np.add(p, 45.0, out=p)
        np.multiply(p, y2, out=p)
        np.subtract(p, 15.0, out=p)
        np.multiply(p, e, out=p)
        total = 2.0 * float(p.sum()) - self.n * 15.0
        return total / (self.n * (self.n - 1) * g ** 7 * _SQRT2PI)


def sj_select(sample: Sample) -> SelectorResult:
    """Solve-the-equation plug-in bandwidth for the Gaussian kernel."""
    n = sample.n
    if n < 10:
        raise DegenerateSample("plug-in selector needs n >= 10")
    x = sample.points
    sd = float(x.std(ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    iqr = float(q75 - q25)
    candidates = [v for v in (sd, iqr / 1.349) if v > 0]
    if not candidates:
        raise DegenerateSample("sample has zero scale")
    scale = min(candidates)

    d = _pair_abs_diffs(x)
    funcs = _GaussPairFunctionals(d, n)
    a = _A_STAGE * scale * n ** (-1.0 / 7.0)
    b = _B_STAGE * scale * n ** (-1.0 / 9.0)
    td = -funcs.psi6(b)
    sd4 = funcs.psi4(a)
    if td <= 0 or sd4 <= 0:
        raise NoRoot("pilot functionals nonpositive; sample too sparse")
    gamma_c = 1.357 * (sd4 / td) ** (1.0 / 7.0)

    def f(h: float) -> float:
        p4 = funcs.psi4(gamma_c * h ** (5.0 / 7.0))
        if p4 <= 0:
            return 1.0  # pushes the root right; only reachable on tiny n
        return (_RK_GAUSS / (n * p4)) ** 0.2 - h

    lo, hi = 1e-3 * scale, 10.0 * scale
    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo > 0.0 > f_hi):
        raise NoRoot(
            f"no sign change on [{lo:.3e}, {hi:.3e}] "
            f"(f(lo)={f_lo:.3e}, f(hi)={f_hi:.3e})"
        )
    iters = 0
    while hi - lo > 1e-7 * scale and iters < 64:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        iters += 1
    h = 0.5 * (lo + hi)
    return SelectorResult(
        h=h,
        diagnostics={"scale": scale, "stage_a": a, "stage_b": b,
                     "iterations": float(iters)},
    )
