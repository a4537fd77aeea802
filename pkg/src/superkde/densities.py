"""Target densities: pdf, characteristic function, exact sampler, cdf.

Built-ins:

* ``fvp``      -- Fejer-de la Vallee-Poussin density f(x) = (1-cos x)/(pi x^2),
                  the canonical target whose characteristic function
                  (1-|t|) 1_{[-1,1]} has compact support (c_f = d_f = 1),
* ``gaussian`` -- standard normal, phi_f(t) = exp(-t^2/2),
* ``cauchy``   -- standard Cauchy, phi_f(t) = exp(-|t|).

Samplers draw only uniforms from the stream and apply exact transforms
(rejection for fvp, Box-Muller for the normal, the tangent map for the
Cauchy), so every sample is a pure, reproducible function of its
``RngStream``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, Divergent, NonConvergence
from .numerics import DEFAULT_QUADRATURE, QuadratureSettings, RngStream, integrate

__all__ = [
    "Sample",
    "DensitySpec",
    "get_density",
    "density_names",
    "density_eval",
    "density_cf",
    "density_cdf",
    "sample",
    "deriv_roughness",
    "supersmooth_integral",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Sample:
    """Immutable sequence of real observations."""

    points: np.ndarray
    n: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 1:
            raise ValueError("sample needs a one-dimensional, nonempty point array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample points must be finite")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "n", int(pts.size))

    @classmethod
    def of(cls, points) -> "Sample":
        pts = np.asarray(points, dtype=float)
        return cls(points=pts, n=pts.size)


@dataclass(frozen=True, eq=False)
class DensitySpec:
    """A target density with both spatial and Fourier descriptions.

    ``d_f`` is the supremum of |t| with phi_f(t) != 0 (inf when phi_f has
    unbounded support, in which case ``cf_truncation_radius`` bounds the
    quadratures); ``c_f`` is the corresponding inner constant, equal to
    ``d_f`` for all built-ins here.
    """

    name: str
    pdf_fn: Callable[[np.ndarray], np.ndarray]
    cf_fn: Callable[[np.ndarray], np.ndarray]
    cdf_fn: Callable[[np.ndarray], np.ndarray]
    sampler_fn: Callable[[RngStream, int], np.ndarray]
    cf_breakpoints: tuple[float, ...] = ()
    c_f: float = math.inf
    d_f: float = math.inf
    cf_truncation_radius: float = 40.0
    scale: float = 1.0

    def cf_quad_upper(self) -> float:
        if math.isfinite(self.d_f):
            return self.d_f
        return self.cf_truncation_radius


def _dispatch(fn, x):
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    out = fn(np.atleast_1d(arr))
    return float(out[0]) if scalar else out.reshape(arr.shape)


def density_eval(density: DensitySpec, x):
    """f(x)."""
    return _dispatch(density.pdf_fn, x)


def density_cf(density: DensitySpec, t):
    """phi_f(t)."""
    return _dispatch(density.cf_fn, t)


def density_cdf(density: DensitySpec, x):
    """F(x) = int_{-inf}^x f."""
    return _dispatch(density.cdf_fn, x)


def sample(density: DensitySpec, n: int, rng: RngStream) -> Sample:
    """Draw n independent points; identical rng gives identical points."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    pts = density.sampler_fn(rng, int(n))
    return Sample.of(pts)


def deriv_roughness(
    density: DensitySpec,
    k: int,
    settings: QuadratureSettings | None = None,
) -> float:
    """R(f^(k)) = (1/2pi) int |t|^{2k} phi_f(t)^2 dt.

    For unbounded cf support the integral is truncated at the density's
    quadrature radius; the integrand must already be below tolerance there,
    otherwise the truncated value cannot be trusted and ``NonConvergence``
    is raised.
    """
    if k < 0:
        raise ValueError("derivative index must be >= 0")
    settings = settings or DEFAULT_QUADRATURE
    upper = density.cf_quad_upper()

    def integrand(t):
        return t ** (2 * k) * density.cf_fn(t) ** 2

    if not math.isfinite(density.d_f):
        edge = float(integrand(np.array([upper]))[0])
        if edge > settings.abs_tol:
            raise NonConvergence(
                f"R(f^({k})) for {density.name!r}: integrand still "
                f"{edge:.3e} at truncation radius {upper:g}"
            )
    val = integrate(integrand, 0.0, upper, settings,
                    breakpoints=density.cf_breakpoints)
    return val / math.pi


def supersmooth_integral(
    density: DensitySpec,
    alpha: float,
    gamma: float,
    settings: QuadratureSettings | None = None,
) -> float:
    """int exp(gamma |t|^alpha) phi_f(t)^2 dt, or ``Divergent``.

    With compact cf support the integral is a plain finite quadrature. For
    unbounded support the truncation radius doubles until the integrand
    falls below tolerance while decreasing; failure to do so by the cap is
    reported as divergence.
    """
    if alpha <= 0 or gamma <= 0:
        raise ValueError("alpha and gamma must be positive")
    settings = settings or DEFAULT_QUADRATURE

    def integrand(t):
        with np.errstate(over="ignore"):
            return np.exp(gamma * np.abs(t) ** alpha) * density.cf_fn(t) ** 2

    if math.isfinite(density.d_f):
        upper = density.d_f
    else:
        upper = None
        probe = 4.0
        with np.errstate(over="ignore", invalid="ignore"):
            prev = float(integrand(np.array([probe / 2.0]))[0])
            while probe <= 16384.0:
                cur = float(integrand(np.array([probe]))[0])
                # overflow * vanishing cf gives nan: not evidence of decay
                if math.isfinite(cur) and cur <= 1e-16 and cur <= prev:
                    upper = probe
                    break
                prev = cur
                probe *= 2.0
        if upper is None:
            raise Divergent(
                f"int exp({gamma:g}|t|^{alpha:g}) phi^2 for {density.name!r} "
                "grows beyond every truncation radius"
            )
    return 2.0 * integrate(integrand, 0.0, upper, settings,
                           breakpoints=density.cf_breakpoints)


# ----------------------------------------------------------------------
# Fejer-de la Vallee-Poussin
# ----------------------------------------------------------------------

def _fvp_eval(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    small = np.abs(x) < 1e-2
    x2 = x[small] ** 2
    # (1-cos x)/(pi x^2) = (1/pi)(1/2 - x^2/24 + x^4/720 - x^6/40320 ...)
    out[small] = (0.5 - x2 * (1.0 / 24.0 - x2 * (1.0 / 720.0 - x2 / 40320.0))) / math.pi
    xl = x[~small]
    out[~small] = (1.0 - np.cos(xl)) / (math.pi * xl * xl)
    return out


def _fvp_cf(t: np.ndarray) -> np.ndarray:
    at = np.abs(t)
    return np.where(at < 1.0, 1.0 - at, 0.0)


_FVP_GRID_STEP = 0.005
_FVP_GRID_MAX = 400.0
_FVP_ASYMPTOTIC = 380.0


@lru_cache(maxsize=1)
def _fvp_cdf_table() -> tuple[np.ndarray, np.ndarray]:
    # Cumulative Simpson over [0, 400]; each 0.005 cell uses its midpoint.
    edges = np.arange(0.0, _FVP_GRID_MAX + 0.5 * _FVP_GRID_STEP, _FVP_GRID_STEP)
    mids = 0.5 * (edges[:-1] + edges[1:])
    f_edges = _fvp_eval(edges)
    f_mids = _fvp_eval(mids)
    cells = (_FVP_GRID_STEP / 6.0) * (f_edges[:-1] + 4.0 * f_mids + f_edges[1:])
    cum = np.concatenate([[0.0], np.cumsum(cells)])
    return edges, cum


def _fvp_cdf_positive(x: np.ndarray) -> np.ndarray:
    edges, cum = _fvp_cdf_table()
    out = np.empty_like(x)
    far = x > _FVP_ASYMPTOTIC
    xf = x[far]
    # tail survival: (1/pi)(1/x + sin x/x^2 - 2 cos x/x^3) + O(x^-4)
    out[far] = 1.0 - (1.0 / xf + np.sin(xf) / xf ** 2
                      - 2.0 * np.cos(xf) / xf ** 3) / math.pi
    xn = x[~far]
    out[~far] = 0.5 + np.interp(xn, edges, cum)
    return out


def _fvp_cdf(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = _fvp_cdf_positive(x[pos])
    out[~pos] = 1.0 - _fvp_cdf_positive(-x[~pos])
    return out


def _fvp_sampler(rng: RngStream, n: int) -> np.ndarray:
    """Rejection sampler under the envelope min(1/(2pi), 2/(pi x^2)).

    The envelope mixture is half a uniform on [-2, 2] and half a two-sided
    inverse-square tail; acceptance probability is pi/4. Each attempt
    consumes exactly three uniforms, so the accepted sequence depends only
    on the stream, not on batch sizes.
    """
    gen = rng.generator()
    chunks: list[np.ndarray] = []
    got = 0
    while got < n:
        m = int((n - got) / 0.75) + 16
        u = gen.random((m, 3))
        tail = u[:, 0] >= 0.5
        x = np.empty(m)
        x[~tail] = -2.0 + 4.0 * u[~tail, 1]
        v = u[tail, 1]
        sign = np.where(v < 0.5, -1.0, 1.0)
        w = np.where(v < 0.5, 2.0 * v, 2.0 * v - 1.0)
        x[tail] = sign * 2.0 / np.maximum(w, 1e-12)
        f = _fvp_eval(x)
        g = np.where(np.abs(x) <= 2.0, 1.0 / (2.0 * math.pi),
                     2.0 / (math.pi * x * x))
        keep = x[u[:, 2] * g < f]
        got += keep.size
        chunks.append(keep)
    return np.concatenate(chunks)[:n]


# ----------------------------------------------------------------------
# standard normal / standard Cauchy
# ----------------------------------------------------------------------

def _norm_eval(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * x * x) / _SQRT2PI


def _norm_cf(t: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * t * t)


def _norm_cdf(x: np.ndarray) -> np.ndarray:
    return np.array([0.5 * (1.0 + math.erf(v / math.sqrt(2.0))) for v in x])


def _norm_sampler(rng: RngStream, n: int) -> np.ndarray:
    # Box-Muller on uniform pairs; fixed two-uniforms-per-pair layout.
    m = (n + 1) // 2
    u = rng.generator().random((m, 2))
    r = np.sqrt(-2.0 * np.log(1.0 - u[:, 0]))
    theta = 2.0 * math.pi * u[:, 1]
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:n]


def _cauchy_eval(x: np.ndarray) -> np.ndarray:
    return 1.0 / (math.pi * (1.0 + x * x))


def _cauchy_cf(t: np.ndarray) -> np.ndarray:
    return np.exp(-np.abs(t))


def _cauchy_cdf(x: np.ndarray) -> np.ndarray:
    return 0.5 + np.arctan(x) / math.pi


def _cauchy_sampler(rng: RngStream, n: int) -> np.ndarray:
    u = rng.generator().random(n)
    return np.tan(math.pi * (u - 0.5))


@lru_cache(maxsize=None)
def _build_density(name: str) -> DensitySpec:
    if name == "fvp":
        return DensitySpec(
            name="fvp",
            pdf_fn=_fvp_eval,
            cf_fn=_fvp_cf,
            cdf_fn=_fvp_cdf,
            sampler_fn=_fvp_sampler,
            cf_breakpoints=(1.0,),
            c_f=1.0,
            d_f=1.0,
            cf_truncation_radius=1.0,
        )
    if name == "gaussian":
        return DensitySpec(
            name="gaussian",
            pdf_fn=_norm_eval,
            cf_fn=_norm_cf,
            cdf_fn=_norm_cdf,
            sampler_fn=_norm_sampler,
            cf_truncation_radius=40.0,
        )
    if name == "cauchy":
        return DensitySpec(
            name="cauchy",
            pdf_fn=_cauchy_eval,
            cf_fn=_cauchy_cf,
            cdf_fn=_cauchy_cdf,
            sampler_fn=_cauchy_sampler,
            cf_truncation_radius=60.0,
        )
    raise ConfigError(f"unknown density: {name!r}")


_DENSITY_NAMES = ("fvp", "gaussian", "cauchy")


def density_names() -> tuple[str, ...]:
    return _DENSITY_NAMES


def get_density(name: str) -> DensitySpec:
    """Look up a built-in density by (case-insensitive) name."""
    key = str(name).strip().lower()
    if key not in _DENSITY_NAMES:
        raise ConfigError(
            f"unknown density: {name!r} (choose from {', '.join(_DENSITY_NAMES)})"
        )
    return _build_density(key)
