"""Exact L2 risk in the Fourier domain.

By Parseval, 2 pi MISE(h) = B(h) + V(h) with

    B(h) = int |phi_f(t)|^2 (phi_K(th) - 1)^2 dt          (squared bias)
    V(h) = (1/(nh)) int phi_K(u)^2 du
           - (1/n) int phi_f(t)^2 phi_K(th)^2 dt           (integrated variance)

and the realized error of one estimate satisfies

    ISE  = (1/2pi) int |phi_n(t) phi_K(th) - phi_f(t)|^2 dt
         = R(f_hat) - (2/n) sum_j (K_h * f)(X_j) + R(f),

which is how ``ise_exact`` evaluates it: the quadratic ECF term collapses
into pairwise self-convolution sums with closed forms, and the cross term
is one smooth compact-support integral shared by every sample point. A
direct adaptive quadrature of the first display is kept available in
``ise_exact_quadrature`` as an independent route for cross-checks (it is
exact too, but its cost grows with the sample spread).

No spatial convolution is ever formed; every integral here is a finite
interval quadrature with panels split at the characteristic functions'
breakpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _fastmath
from .densities import DensitySpec, Sample, deriv_roughness
from .errors import InvalidBandwidth, NotApplicable
from .estimation import ecf
from .kernels import KernelSpec, compute_s_t, kernel_roughness
from .numerics import DEFAULT_QUADRATURE, QuadratureSettings, integrate, minimize_scalar

__all__ = [
    "RiskReport",
    "OptimalBandwidthResult",
    "mise_exact",
    "variance_identity_check",
    "optimal_bandwidth",
    "minimal_mise",
    "ise_exact",
    "ise_exact_quadrature",
    "conv_with_density",
    "zero_bias_bandwidth",
    "parametric_bound",
    "smooth_rate_bound",
    "supersmooth_rate_check",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RiskReport:
    """B(h), V(h) and MISE = (B + V)/(2 pi) at one bandwidth."""

    h: float
    bias_term: float
    variance_term: float
    mise: float
    n: int

    def __post_init__(self):
        if self.bias_term < 0 or self.variance_term < 0:
            raise ValueError("risk terms must be nonnegative")
        expected = (self.bias_term + self.variance_term) / _TWO_PI
        if abs(self.mise - expected) > 1e-12 * max(abs(expected), 1e-300):
            raise ValueError("mise inconsistent with its Parseval terms")


@dataclass(frozen=True)
class OptimalBandwidthResult:
    h0n: float
    phi: float
    bracket: tuple[float, float]


@lru_cache(maxsize=None)
def _s_t(kernel: KernelSpec) -> tuple[float, float]:
    return compute_s_t(kernel)


def _t_side_breakpoints(kernel: KernelSpec, density: DensitySpec, h: float) -> list[float]:
    bps = list(density.cf_breakpoints)
    bps += [b / h for b in kernel.cf_breakpoints]
    s_k, t_k = _s_t(kernel)
    bps += [s_k / h, t_k / h]
    return [b for b in bps if b > 0 and math.isfinite(b)]


def mise_exact(
    kernel: KernelSpec,
    density: DensitySpec,
    n: int,
    h: float,
    settings: QuadratureSettings | None = None,
) -> RiskReport:
    """Exact MISE of the estimator with this kernel/density/n/h."""
    if not h > 0:
        raise InvalidBandwidth(f"bandwidth must be > 0, got {h}")
    if n < 1:
        raise ValueError("sample size must be >= 1")
    settings = settings or DEFAULT_QUADRATURE
    upper_f = density.cf_quad_upper()
    bps = _t_side_breakpoints(kernel, density, h)

    bias = 2.0 * integrate(
        lambda t: density.cf_fn(t) ** 2 * (kernel.cf_fn(t * h) - 1.0) ** 2,
        0.0, upper_f, settings, breakpoints=bps,
    )
    bias = max(bias, 0.0)

    upper_v = min(upper_f, kernel.cf_quad_upper() / h)
    v2 = 2.0 * integrate(
        lambda t: density.cf_fn(t) ** 2 * kernel.cf_fn(t * h) ** 2,
        0.0, upper_v, settings, breakpoints=bps,
    )
    v1 = _TWO_PI * kernel_roughness(kernel) / h
    variance = (v1 - v2) / n
    return RiskReport(
        h=float(h),
        bias_term=bias,
        variance_term=variance,
        mise=(bias + variance) / _TWO_PI,
        n=int(n),
    )


def variance_identity_check(
    kernel: KernelSpec,
    density: DensitySpec,
    n: int,
    h: float,
    settings: QuadratureSettings | None = None,
) -> float:
    """R(K)/(nh) - R(K_h * f)/n, the integrated-variance identity.

    R(K_h * f) is evaluated under the substitution u = th, a deliberately
    different quadrature route from ``mise_exact``; the two must agree to
    quadrature accuracy with V(h)/(2 pi).
    """
    if not h > 0:
        raise InvalidBandwidth(f"bandwidth must be > 0, got {h}")
    settings = settings or DEFAULT_QUADRATURE
    r_k = kernel_roughness(kernel)
    upper_u = min(kernel.cf_quad_upper(), h * density.cf_quad_upper())
    bps = [b for b in kernel.cf_breakpoints]
    bps += [h * b for b in density.cf_breakpoints]
    r_khf = integrate(
        lambda u: kernel.cf_fn(u) ** 2 * density.cf_fn(u / h) ** 2,
        0.0, upper_u, settings,
        breakpoints=[b for b in bps if 0 < b < upper_u],
    ) / (math.pi * h)
    return r_k / (n * h) - r_khf / n


def optimal_bandwidth(
    kernel: KernelSpec,
    density: DensitySpec,
    n: int,
    h_lo: float | None = None,
    h_hi: float | None = None,
    tol: float = 1e-7,
    settings: QuadratureSettings | None = None,
) -> OptimalBandwidthResult:
    """Minimize MISE over h; Phi(n, f, K) is the attained value.

    Should the curve be flat to rounding accuracy on a plateau around the
    minimizer, the largest plateau point is returned (larger h sits on the
    lower-variance side).
    """
    s_k, _ = _s_t(kernel)
    if h_lo is None or h_hi is None:
        if s_k > 0 and math.isfinite(density.d_f):
            base = s_k / density.d_f
            lo, hi = 0.05 * base, 20.0 * base
        else:
            lo, hi = 1e-3 * density.scale, 10.0 * density.scale
        h_lo = lo if h_lo is None else h_lo
        h_hi = hi if h_hi is None else h_hi

    def g(h: float) -> float:
        return mise_exact(kernel, density, n, h, settings).mise

    h_star, phi = minimize_scalar(g, h_lo, h_hi, tol)

    # plateau scan: walk right while the curve stays at the minimum
    flat_tol = 8.0 * np.finfo(float).eps * max(abs(phi), 1e-300)
    step = max(4.0 * tol * max(h_star, 1.0), 1e-12)
    edge = h_star
    probe = min(h_star + step, h_hi)
    while probe > edge and g(probe) <= phi + flat_tol:
        edge = probe
        if edge >= h_hi:
            break
        step *= 2.0
        probe = min(edge + step, h_hi)
    if edge > h_star:
        lo_e, hi_e = edge, probe
        while hi_e - lo_e > max(tol, 1e-12):
            mid = 0.5 * (lo_e + hi_e)
            if g(mid) <= phi + flat_tol:
                lo_e = mid
            else:
                hi_e = mid
        h_star = lo_e
        phi = g(h_star)

    return OptimalBandwidthResult(h0n=float(h_star), phi=float(phi),
                                  bracket=(float(h_lo), float(h_hi)))


def minimal_mise(kernel: KernelSpec, density: DensitySpec, n: int, **kw) -> float:
    """Phi(n, f, K) = min_h MISE."""
    return optimal_bandwidth(kernel, density, n, **kw).phi


@lru_cache(maxsize=None)
def _density_roughness(density: DensitySpec) -> float:
    return deriv_roughness(density, 0)


def _pair_diffs(pts: np.ndarray) -> np.ndarray:
    n = pts.size
    out = np.empty(n * (n - 1) // 2)
    pos = 0
    for i in range(n - 1):
        m = n - 1 - i
        np.subtract(pts[i + 1:], pts[i], out=out[pos:pos + m])
        pos += m
    return out


def conv_with_density(
    kernel: KernelSpec,
    density: DensitySpec,
    h: float,
    xs,
) -> np.ndarray:
    """(K_h * f)(x) = (1/pi) int_0^U phi_f(t) phi_K(th) cos(tx) dt.

    One fixed composite Gauss-Kronrod grid serves every x at once; the
    panel count scales with max|x| so no panel ever sees more than ~2/3 of
    an oscillation period, keeping the rule at full accuracy.
    """
    if not h > 0:
        raise InvalidBandwidth(f"bandwidth must be > 0, got {h}")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    upper = min(density.cf_quad_upper(), kernel.cf_quad_upper() / h)
    xmax = max(1.0, float(np.abs(xs).max()))

    from .numerics import _XK, _WK  # GK15 abscissae/weights

    # segment at cf kinks, then subdivide so no panel sees more than ~2/3
    # of a period of the fastest cos(t x)
    cuts = sorted({b for b in _t_side_breakpoints(kernel, density, h) if 0 < b < upper})
    segments = np.array([0.0, *cuts, upper])
    edge_list = []
    for lo, hi in zip(segments[:-1], segments[1:]):
        count = int(min(max(4, math.ceil((hi - lo) * xmax / 4.0)), 4_000_000))
        edge_list.append(np.linspace(lo, hi, count + 1)[:-1])
    edges = np.concatenate([*edge_list, [upper]])
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _XK[None, :]).reshape(-1)
    weights = (half[:, None] * _WK[None, :]).reshape(-1)
    gw = density.cf_fn(nodes) * kernel.cf_fn(nodes * h) * weights

    out = np.empty(xs.size)
    step = max(1, int(2.0e7 // nodes.size))
    scratch = np.empty((min(step, xs.size), nodes.size))
    for i in range(0, xs.size, step):
        chunk = xs[i:i + step]
        if chunk.size != scratch.shape[0]:
            scratch = np.empty((chunk.size, nodes.size))
        np.multiply.outer(chunk, nodes, out=scratch)
        flat = scratch.reshape(-1)
        _fastmath.cos_into(flat, flat)
        out[i:i + step] = scratch @ gw
    return out / math.pi


def ise_exact(
    kernel: KernelSpec,
    h: float,
    sample: Sample,
    density: DensitySpec,
) -> float:
    """Exact integrated squared error of the realized estimate.

    Evaluates R(f_hat) - (2/n) sum_j (K_h*f)(X_j) + R(f) with the pairwise
    self-convolution closed form; falls back to the direct quadrature route
    when the kernel has no closed-form self-convolution.
    """
    if not h > 0:
        raise InvalidBandwidth(f"bandwidth must be > 0, got {h}")
    if kernel.self_convolution is None:
        return ise_exact_quadrature(kernel, h, sample, density)
    pts = sample.points
    n = pts.size
    r_k = kernel_roughness(kernel)
    if n > 1:
        d = _pair_diffs(pts)
        conv_sum = float(np.sum(kernel.self_convolution(d / h)))
    else:
        conv_sum = 0.0
    r_fhat = r_k / (n * h) + 2.0 * conv_sum / (n * n * h)
    cross = 2.0 * float(conv_with_density(kernel, density, h, pts).mean())
    value = r_fhat - cross + _density_roughness(density)
    return max(value, 0.0)


def ise_exact_quadrature(
    kernel: KernelSpec,
    h: float,
    sample: Sample,
    density: DensitySpec,
    settings: QuadratureSettings | None = None,
) -> float:
    """Direct adaptive route: (1/2pi) int |phi_n phi_K(th) - phi_f|^2 dt.

    The integrand is expanded in real arithmetic. Adaptive panels must
    resolve the ECF's oscillation (scale ~ 1/spread of the sample), so this
    route suits cross-checks and small samples rather than the hot loop.
    """
    if not h > 0:
        raise InvalidBandwidth(f"bandwidth must be > 0, got {h}")
    settings = settings or QuadratureSettings(1e-12, 1e-10, 2 ** 18)
    upper = max(density.cf_quad_upper(), kernel.cf_quad_upper() / h)

    def integrand(t):
        ph = ecf(sample, t)
        pk = kernel.cf_fn(t * h)
        pf = density.cf_fn(t)
        return (ph.real * pk - pf) ** 2 + (ph.imag * pk) ** 2

    bps = _t_side_breakpoints(kernel, density, h)
    return integrate(integrand, 0.0, upper, settings, breakpoints=bps) / math.pi


def zero_bias_bandwidth(kernel: KernelSpec, density: DensitySpec) -> float:
    """s_k / d_f, the bandwidth making the estimator exactly unbiased."""
    s_k, _ = _s_t(kernel)
    if s_k <= 0:
        raise NotApplicable(f"kernel {kernel.name!r} has s_k = 0")
    if not math.isfinite(density.d_f):
        raise NotApplicable(f"density {density.name!r} has unbounded cf support")
    return s_k / density.d_f


def parametric_bound(kernel: KernelSpec, density: DensitySpec) -> float:
    """d_f R(K) / s_k, an upper bound for n * Phi(n, f, K) at every n."""
    s_k, _ = _s_t(kernel)
    if s_k <= 0:
        raise NotApplicable(f"kernel {kernel.name!r} has s_k = 0")
    if not math.isfinite(density.d_f):
        raise NotApplicable(f"density {density.name!r} has unbounded cf support")
    return density.d_f * kernel_roughness(kernel) / s_k


def smooth_rate_bound(kernel: KernelSpec, density: DensitySpec, k: int) -> float:
    """(2k+1) (2k)^{-2k/(2k+1)} (R(K)/s_k)^{2k/(2k+1)} R(f^(k))."""
    if k < 1:
        raise ValueError("k must be >= 1")
    s_k, _ = _s_t(kernel)
    if s_k <= 0:
        raise NotApplicable(f"kernel {kernel.name!r} has s_k = 0")
    r_fk = deriv_roughness(density, k)
    ratio = kernel_roughness(kernel) / s_k
    expo = 2.0 * k / (2.0 * k + 1.0)
    return (2.0 * k + 1.0) * (2.0 * k) ** (-expo) * ratio ** expo * r_fk


def supersmooth_rate_check(
    kernel: KernelSpec,
    density: DensitySpec,
    alpha: float,
    gamma: float,
    n_list: Sequence[int],
) -> list[float]:
    """The sequence n / (log n)^{1/alpha} * Phi(n, f, K) over n_list."""
    from .densities import supersmooth_integral

    s_k, _ = _s_t(kernel)
    if s_k <= 0:
        raise NotApplicable(f"kernel {kernel.name!r} has s_k = 0")
    supersmooth_integral(density, alpha, gamma)  # raises Divergent if infinite
    out = []
    for n in n_list:
        if n < 2:
            raise ValueError("supersmooth rate check needs n >= 2 (log n > 0)")
        out.append(n / math.log(n) ** (1.0 / alpha) * minimal_mise(kernel, density, n))
    return out
