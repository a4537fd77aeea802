"""Deterministic numerical core.

Everything downstream (risk integrals, classification functionals, the
simulation harness) funnels through the three primitives here:

* ``integrate``        -- adaptive Gauss-Kronrod (G7,K15) quadrature on a
                          finite interval, with caller-supplied panel
                          boundaries at integrand kinks,
* ``minimize_scalar``  -- derivative-free bounded minimization
                          (golden section refined by parabolic steps),
* ``RngStream``        -- a (seed, stream_id) handle onto the Philox4x64
                          counter-based generator; equal keys reproduce the
                          identical uniform stream, distinct stream ids give
                          statistically independent streams.

The Philox choice is frozen: all samplers in the package consume uniforms
(or standard transforms of uniforms) from ``RngStream.generator()``, so a
run is reproducible bit-for-bit from its (seed, stream_id) keys.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidBracket, NonConvergence

__all__ = [
    "QuadratureSettings",
    "DEFAULT_QUADRATURE",
    "integrate",
    "minimize_scalar",
    "RngStream",
    "PRNG_ALGORITHM",
]

PRNG_ALGORITHM = "philox4x64 (numpy Philox, key=[seed, stream_id])"

# 15-point Kronrod extension of 7-point Gauss, abscissae/weights on [-1, 1].
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
# Gauss-7 weights aligned with the odd Kronrod abscissae.
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870,
])
_G_IDX = np.arange(1, 15, 2)


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerance and budget for one adaptive integration."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 2 ** 15

    def __post_init__(self):
        if not (self.abs_tol > 0):
            raise ValueError("abs_tol must be > 0")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be >= 0")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureSettings()


def _vectorized(f: Callable) -> Callable[[np.ndarray], np.ndarray]:
    """Adapt ``f`` so it maps an ndarray of abscissae to an ndarray."""
    probe = np.array([0.5, 0.25])
    try:
        out = np.asarray(f(probe), dtype=float)
        if out.shape == probe.shape:
            return lambda x: np.asarray(f(x), dtype=float)
    except Exception:
        pass
    return lambda x: np.array([float(f(v)) for v in x])


def _gk15(fv, a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod panel: returns (K15 value, error estimate)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y = fv(mid + half * _XK)
    k15 = half * float(_WK @ y)
    g7 = half * float(_WG @ y[_G_IDX])
    return k15, abs(k15 - g7)


def integrate(
    f: Callable,
    a: float,
    b: float,
    settings: QuadratureSettings | None = None,
    breakpoints: Iterable[float] = (),
) -> float:
    """Integrate ``f`` over the finite interval [a, b].

    ``breakpoints`` must list any interior kink points of the integrand
    (piecewise characteristic functions have them at their support edges);
    each becomes a hard panel boundary so the per-panel rule only ever sees
    a smooth integrand.

    Raises ``NonConvergence`` when ``max_subdivisions`` panels are not
    enough to bring the estimated error under
    ``max(abs_tol, rel_tol * |result|)``.
    """
    settings = settings or DEFAULT_QUADRATURE
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise ValueError(f"need finite a < b, got [{a}, {b}]")
    fv = _vectorized(f)

    pts = [a]
    for p in sorted(set(float(p) for p in breakpoints)):
        if a < p < b:
            pts.append(p)
    pts.append(b)

    total = 0.0
    err = 0.0
    heap = []  # (-panel_error, tiebreak, lo, hi, value, error)
    tick = 0
    for lo, hi in zip(pts[:-1], pts[1:]):
        q, e = _gk15(fv, lo, hi)
        total += q
        err += e
        heapq.heappush(heap, (-e, tick, lo, hi, q, e))
        tick += 1

    splits = 0
    while err > max(settings.abs_tol, settings.rel_tol * abs(total)):
        if splits >= settings.max_subdivisions:
            raise NonConvergence(
                f"quadrature on [{a}, {b}]: error {err:.3e} after "
                f"{splits} subdivisions (tol abs={settings.abs_tol:.1e} "
                f"rel={settings.rel_tol:.1e})"
            )
        _, _, lo, hi, q, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # interval at floating-point resolution; accept its estimate
            heapq.heappush(heap, (0.0, tick, lo, hi, q, 0.0))
            tick += 1
            err -= e
            continue
        q1, e1 = _gk15(fv, lo, mid)
        q2, e2 = _gk15(fv, mid, hi)
        total += q1 + q2 - q
        err += e1 + e2 - e
        heapq.heappush(heap, (-e1, tick, lo, mid, q1, e1))
        heapq.heappush(heap, (-e2, tick + 1, mid, hi, q2, e2))
        tick += 2
        splits += 1
    return total


_GOLDEN = 0.3819660112501051


def minimize_scalar(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-7,
) -> tuple[float, float]:
    """Locate a local minimizer of ``g`` on [lo, hi].

    Golden-section search refined by successive parabolic interpolation
    (Brent). The caller supplies a bracket known to contain the minimizer;
    on curves that are flat to within rounding the returned point is some
    point of the flat region. Returns ``(argmin, g(argmin))``.
    """
    if not (0 < lo < hi) or not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidBracket(f"need 0 < lo < hi, got [{lo}, {hi}]")
    a, b = lo, hi
    x = w = v = a + _GOLDEN * (b - a)
    fx = fw = fv = g(x)
    d = e = 0.0
    for _ in range(500):
        m = 0.5 * (a + b)
        tol1 = tol * abs(x) / 3.0 + tol / 3.0 + 1e-15
        tol2 = 2.0 * tol1
        if abs(x - m) <= tol2 - 0.5 * (b - a):
            break
        use_golden = True
        if abs(e) > tol1:
            # fit a parabola through (v, w, x)
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0:
                p = -p
            q = abs(q)
            e_prev, e = e, d
            if abs(p) < abs(0.5 * q * e_prev) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = tol1 if x < m else -tol1
                use_golden = False
        if use_golden:
            e = (b - x) if x < m else (a - x)
            d = _GOLDEN * e
        u = x + d if abs(d) >= tol1 else x + (tol1 if d > 0 else -tol1)
        fu = g(u)
        if fu <= fx:
            if u < x:
                b = x
            else:
                a = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx


_U64_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class RngStream:
    """Key of one reproducible random stream.

    Equal ``(seed, stream_id)`` pairs always yield the identical draw
    sequence; distinct stream ids are independent. The handle is stateless:
    every ``generator()`` call restarts the stream from the beginning, which
    makes consumers pure functions of their stream argument.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) <= _U64_MAX):
                raise ValueError(f"{name} must be an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))
