"""Kernel objects and their classification functionals.

A kernel is carried in two coordinates at once: its spatial form K(x) and
its characteristic function phi_K(t) = int e^{itx} K(x) dx. All risk
computation downstream happens on the phi side, where compact supports make
every integral a finite-interval quadrature; the spatial side serves the
estimator itself and the moment functionals.

Classification quantities:

* ``s_k``  -- largest r with phi_K identically 1 on [0, r],
* ``t_k``  -- largest t with phi_K(t) = 1,
* order    -- smallest j >= 1 with nonzero j-th moment m_j = int x^j K,
              infinite when every moment vanishes,
* roughness R(K) = int K^2 = (1/2pi) int phi_K^2,
* superkernel  <=>  s_k == t_k > 0.

A kernel whose characteristic function is exactly 1 on a neighborhood of
zero has every moment equal to zero (all derivatives of phi_K vanish at the
origin), which is why the flat-top built-ins classify as infinite order
without any quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, NonConvergence, NotIntegrable, InvalidBandwidth
from .numerics import DEFAULT_QUADRATURE, QuadratureSettings, integrate

__all__ = [
    "KernelSpec",
    "KernelClassification",
    "get_kernel",
    "kernel_names",
    "kernel_eval",
    "kernel_scaled_eval",
    "kernel_cf",
    "compute_s_t",
    "kernel_moment",
    "classify",
    "kernel_roughness",
    "check_admissible",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A kernel given by spatial form and characteristic function.

    ``cf_breakpoints`` lists the kink/support points of phi_K on t >= 0;
    they are forwarded as panel boundaries to every quadrature that sees
    phi_K. ``cf_support_upper`` is the smallest U with phi_K = 0 beyond U
    (inf when the support is unbounded, in which case
    ``cf_truncation_radius`` bounds the quadrature range).
    ``spatial_decay_exponent`` p is the guaranteed decay K(x) = O(|x|^-p),
    used to decide whether a truncated moment integral converges at all.
    """

    name: str
    cf_fn: Callable[[np.ndarray], np.ndarray]
    eval_fn: Optional[Callable[[np.ndarray], np.ndarray]]
    cf_breakpoints: tuple[float, ...] = ()
    cf_support_upper: float = math.inf
    integrable: bool = True
    symmetric: bool = True
    spatial_decay_exponent: float = math.inf
    spatial_support_upper: float = math.inf
    cf_truncation_radius: float = 40.0
    self_convolution: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def cf_quad_upper(self) -> float:
        """Upper quadrature limit for integrals of phi_K."""
        if math.isfinite(self.cf_support_upper):
            return self.cf_support_upper
        return self.cf_truncation_radius


@dataclass(frozen=True)
class KernelClassification:
    s_k: float
    t_k: float
    order: Optional[int]  # None marks infinite order
    moments: tuple[float, ...]
    roughness: float
    is_superkernel: bool

    def __post_init__(self):
        if self.s_k > self.t_k + 1e-9:
            raise ValueError("s_k cannot exceed t_k")
        if not self.roughness > 0:
            raise ValueError("roughness must be positive")

    @property
    def order_label(self) -> str:
        return "infinite" if self.order is None else str(self.order)


def _dispatch(fn: Callable[[np.ndarray], np.ndarray], x) -> float | np.ndarray:
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    out = fn(np.atleast_1d(arr))
    return float(out[0]) if scalar else out.reshape(arr.shape)


def kernel_eval(kernel: KernelSpec, x, *, allow_nonintegrable: bool = False):
    """Spatial evaluation K(x); scalar in, scalar out (arrays likewise)."""
    if not kernel.integrable and not allow_nonintegrable:
        raise NotIntegrable(
            f"kernel {kernel.name!r} is not integrable; spatial evaluation "
            "requires allow_nonintegrable=True"
        )
    if kernel.eval_fn is None:
        raise NotIntegrable(f"kernel {kernel.name!r} has no spatial form")
    return _dispatch(kernel.eval_fn, x)


def kernel_scaled_eval(kernel: KernelSpec, h: float, x):
    """K_h(x) = K(x/h)/h."""
    if not h > 0:
        raise InvalidBandwidth(f"bandwidth must be > 0, got {h}")
    arr = np.asarray(x, dtype=float)
    out = kernel_eval(kernel, arr / h)
    return out / h


def kernel_cf(kernel: KernelSpec, t):
    """Characteristic function phi_K(t)."""
    return _dispatch(kernel.cf_fn, t)


def compute_s_t(
    kernel: KernelSpec,
    flatness_eps: float = 1e-9,
    scan_step: float = 1e-3,
    scan_max: float = 10.0,
) -> tuple[float, float]:
    """Scan where |phi_K - 1| <= flatness_eps on a [0, scan_max] grid.

    Returns (s_k, t_k): the end of the flat prefix and the last flat grid
    point. Breakpoints are forced onto the grid so piecewise cfs are probed
    exactly at their corners.
    """
    if flatness_eps <= 0 or scan_step <= 0:
        raise ValueError("flatness_eps and scan_step must be positive")
    grid = np.arange(0.0, scan_max + 0.5 * scan_step, scan_step)
    bps = [b for b in kernel.cf_breakpoints if 0.0 < b <= scan_max]
    if bps:
        grid = np.unique(np.concatenate([grid, np.asarray(bps, dtype=float)]))
    flat = np.abs(kernel.cf_fn(grid) - 1.0) <= flatness_eps
    if not flat[0]:
        return 0.0, 0.0
    t_k = float(grid[np.nonzero(flat)[0][-1]])
    not_flat = np.nonzero(~flat)[0]
    s_k = float(grid[-1]) if not_flat.size == 0 else float(grid[not_flat[0] - 1])
    return s_k, t_k


def kernel_moment(
    kernel: KernelSpec,
    j: int,
    radius: float = 200.0,
    settings: QuadratureSettings | None = None,
) -> float:
    """j-th moment m_j(K) = int x^j K(x) dx by truncated quadrature.

    Odd moments of symmetric kernels are zero without quadrature. For even
    j the spatial tail must actually be integrable (decay exponent
    p > j + 1); slowly decaying kernels such as the trapezoidal one fail
    this for every even j and raise ``NonConvergence``, as does any case
    where oscillatory cancellation inflates int |x^j K| so far that the
    result cannot be certified against floating-point noise.
    """
    if j < 1:
        raise ValueError("moment index must be >= 1")
    if not kernel.integrable:
        raise NotIntegrable(f"kernel {kernel.name!r} is not integrable")
    if kernel.symmetric and j % 2 == 1:
        return 0.0
    if kernel.spatial_decay_exponent <= j + 1:
        raise NonConvergence(
            f"moment {j} of kernel {kernel.name!r}: spatial decay "
            f"O(|x|^-{kernel.spatial_decay_exponent:g}) leaves the truncated "
            "tail above tolerance"
        )
    settings = settings or DEFAULT_QUADRATURE
    upper = min(radius, kernel.spatial_support_upper)
    bps = [b for b in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0) if b < upper]
    bps += [-b for b in bps] + [0.0]

    def f(x):
        return x ** j * kernel.eval_fn(x)

    value = integrate(f, -upper, upper, settings, breakpoints=bps)
    mass = integrate(lambda x: np.abs(f(x)), -upper, upper,
                     QuadratureSettings(1e-6, 1e-6, settings.max_subdivisions),
                     breakpoints=bps)
    if 1e-13 * mass > 1e-7:
        raise NonConvergence(
            f"moment {j} of kernel {kernel.name!r}: cancellation over "
            f"int|x^{j} K| = {mass:.3e} exceeds the certifiable noise floor"
        )
    return value


def classify(
    kernel: KernelSpec,
    j_max: int = 10,
    moment_eps: float = 1e-6,
) -> KernelClassification:
    """Full classification: flatness constants, order, roughness.

    Order search stops at the first moment exceeding ``moment_eps``. When
    the cf is flat at the origin (s_k > 0) every moment is identically
    zero, so the moment list is all zeros and the order infinite.
    """
    if j_max < 2:
        raise ValueError("j_max must be >= 2")
    s_k, t_k = compute_s_t(kernel)
    rough = kernel_roughness(kernel)
    if s_k > 0.0:
        moments: tuple[float, ...] = (0.0,) * j_max
        order = None
    else:
        found: list[float] = []
        order = None
        for j in range(1, j_max + 1):
            m = kernel_moment(kernel, j)
            found.append(m)
            if abs(m) > moment_eps:
                order = j
                break
        moments = tuple(found)
    return KernelClassification(
        s_k=s_k,
        t_k=t_k,
        order=order,
        moments=moments,
        roughness=rough,
        is_superkernel=(s_k > 0.0 and abs(s_k - t_k) <= 1e-12),
    )


@lru_cache(maxsize=None)
def kernel_roughness(kernel: KernelSpec) -> float:
    """R(K) = int K^2, computed Fourier-side as (1/2pi) int phi_K^2."""
    upper = kernel.cf_quad_upper()
    val = integrate(
        lambda t: kernel.cf_fn(t) ** 2,
        0.0,
        upper,
        DEFAULT_QUADRATURE,
        breakpoints=kernel.cf_breakpoints,
    )
    return val / math.pi  # 2 * (1/2pi) * int_0^U


def check_admissible(kernel: KernelSpec) -> bool:
    """Whether int K^2 < 2 K(0), the condition for an optimal bandwidth.

    K(0) <= 0 settles it immediately (R(K) >= 0 can never be below 2K(0)),
    which also sidesteps roughness quadrature for pathological cf fields.
    """
    if not kernel.integrable:
        raise NotIntegrable(f"kernel {kernel.name!r} is not integrable")
    k0 = kernel_eval(kernel, 0.0)
    if k0 <= 0.0:
        return False
    return kernel_roughness(kernel) < 2.0 * k0


# ----------------------------------------------------------------------
# built-ins
# ----------------------------------------------------------------------

def _trap_eval(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    small = np.abs(x) < 1e-2
    x2 = x[small] ** 2
    # (cos x - cos 2x)/(pi x^2); series needed against cancellation near 0
    out[small] = (1.5 - x2 * (0.625 - x2 * (0.0875 - x2 * (255.0 / 40320.0)))) / math.pi
    xl = x[~small]
    out[~small] = (np.cos(xl) - np.cos(2.0 * xl)) / (math.pi * xl * xl)
    return out


def _trap_cf(t: np.ndarray) -> np.ndarray:
    at = np.abs(t)
    return np.where(at < 1.0, 1.0, np.where(at < 2.0, 2.0 - at, 0.0))


def _trap_selfconv(y: np.ndarray) -> np.ndarray:
    # (K*K)(y) = (2/pi) [cos y / y^2 + (sin y - sin 2y) / y^3]
    out = np.empty_like(y)
    small = np.abs(y) < 1e-2
    y2 = y[small] ** 2
    out[small] = (4.0 / 3.0 - y2 * (13.0 / 30.0 - y2 / 21.0)) / math.pi
    z = y[~small]
    c = np.cos(z)
    s = np.sin(z)
    z2 = z * z
    out[~small] = (2.0 / math.pi) * (c / z2 + (s - 2.0 * s * c) / (z2 * z))
    return out


def _gauss_eval(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * x * x) / _SQRT2PI


def _gauss_cf(t: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * t * t)


def _gauss_selfconv(y: np.ndarray) -> np.ndarray:
    return np.exp(-0.25 * y * y) / (2.0 * math.sqrt(math.pi))


def _epan_eval(x: np.ndarray) -> np.ndarray:
    return np.where(np.abs(x) <= 1.0, 0.75 * (1.0 - x * x), 0.0)


def _epan_cf(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    small = np.abs(t) < 0.1
    t2 = t[small] ** 2
    out[small] = 1.0 - t2 * (0.1 - t2 * (1.0 / 280.0 - t2 / 15120.0))
    tl = t[~small]
    out[~small] = 3.0 * (np.sin(tl) - tl * np.cos(tl)) / tl ** 3
    return out


def _epan_selfconv(y: np.ndarray) -> np.ndarray:
    a = np.abs(y)
    return np.where(a < 2.0, (3.0 / 160.0) * (2.0 - a) ** 3 * (a * a + 6.0 * a + 4.0), 0.0)


_NATTERER_M = 4096


@lru_cache(maxsize=1)
def _natterer_nodes() -> tuple[np.ndarray, np.ndarray]:
    # Interior trapezoid nodes on [-1, 1]; the cf is C^infty with all
    # derivatives vanishing at the endpoints, so the periodic trapezoid rule
    # converges faster than any power of 1/M (node count fixed well past
    # double precision).
    j = np.arange(1, _NATTERER_M)
    t = -1.0 + 2.0 * j / _NATTERER_M
    g = np.exp(-t * t / (1.0 - t * t))
    return t, g / (math.pi * _NATTERER_M)


def _natterer_eval(x: np.ndarray) -> np.ndarray:
    t, w = _natterer_nodes()
    flat = x.reshape(-1)
    out = np.empty_like(flat)
    step = max(1, int(2_000_000 // t.size))
    for i in range(0, flat.size, step):
        out[i:i + step] = np.cos(np.multiply.outer(flat[i:i + step], t)) @ w
    return out.reshape(x.shape)


def _natterer_cf(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-ti * ti / (1.0 - ti * ti))
    return out


def _sinc_eval(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    small = np.abs(x) < 1e-2
    x2 = x[small] ** 2
    out[small] = (1.0 - x2 * (1.0 / 6.0 - x2 / 120.0)) / math.pi
    xl = x[~small]
    out[~small] = np.sin(xl) / (math.pi * xl)
    return out


def _sinc_cf(t: np.ndarray) -> np.ndarray:
    return np.where(np.abs(t) <= 1.0, 1.0, 0.0)


@lru_cache(maxsize=None)
def _build_kernel(name: str) -> KernelSpec:
    if name == "trapezoidal":
        return KernelSpec(
            name="trapezoidal",
            cf_fn=_trap_cf,
            eval_fn=_trap_eval,
            cf_breakpoints=(1.0, 2.0),
            cf_support_upper=2.0,
            spatial_decay_exponent=2.0,
            self_convolution=_trap_selfconv,
        )
    if name == "gaussian":
        return KernelSpec(
            name="gaussian",
            cf_fn=_gauss_cf,
            eval_fn=_gauss_eval,
            cf_truncation_radius=40.0,
            self_convolution=_gauss_selfconv,
        )
    if name == "epanechnikov":
        return KernelSpec(
            name="epanechnikov",
            cf_fn=_epan_cf,
            eval_fn=_epan_eval,
            spatial_support_upper=1.0,
            cf_truncation_radius=4000.0,
            self_convolution=_epan_selfconv,
        )
    if name == "natterer":
        return KernelSpec(
            name="natterer",
            cf_fn=_natterer_cf,
            eval_fn=_natterer_eval,
            cf_breakpoints=(1.0,),
            cf_support_upper=1.0,
        )
    if name == "sinc":
        return KernelSpec(
            name="sinc",
            cf_fn=_sinc_cf,
            eval_fn=_sinc_eval,
            cf_breakpoints=(1.0,),
            cf_support_upper=1.0,
            integrable=False,
            spatial_decay_exponent=1.0,
            self_convolution=_sinc_eval,
        )
    raise ConfigError(f"unknown kernel: {name!r}")


_KERNEL_NAMES = ("trapezoidal", "gaussian", "epanechnikov", "natterer", "sinc")


def kernel_names() -> tuple[str, ...]:
    return _KERNEL_NAMES


def get_kernel(name: str) -> KernelSpec:
    """Look up a built-in kernel by (case-insensitive) name."""
    key = str(name).strip().lower()
    if key not in _KERNEL_NAMES:
        raise ConfigError(
            f"unknown kernel: {name!r} (choose from {', '.join(_KERNEL_NAMES)})"
        )
    return _build_kernel(key)
