"""In-place elementwise transcendentals for the hot Monte Carlo loops.

numpy's float64 sin/cos are scalar-libm bound (~25 ns/element); torch's
SLEEF-vectorized kernels are ~15x faster *when writing into preallocated
buffers* (fresh tensor allocation is pathologically slow under some
sandboxed allocators, so every call here requires an ``out`` array).

torch is optional: when it is not importable the same numpy call runs into
the same buffer. Results agree to the last bit or to ~1 ulp, and a given
environment always takes the same path, so reproducibility within an
environment is unaffected. Import is deferred so that light CLI paths
(risk reports, classification) never pay torch's startup cost.
"""

from __future__ import annotations

import numpy as np

_TORCH = None
_TORCH_CHECKED = False
_MIN_SIZE = 4096  # below this, from_numpy overhead beats the SIMD gain


def _torch():
    global _TORCH, _TORCH_CHECKED
    if not _TORCH_CHECKED:
        _TORCH_CHECKED = True
        try:
            import torch

            _TORCH = torch
        except Exception:
            _TORCH = None
    return _TORCH


def _use_torch(x: np.ndarray) -> bool:
    return (
        x.size >= _MIN_SIZE
        and x.dtype == np.float64
        and x.flags.c_contiguous
        and _torch() is not None
    )


def sin_into(x: np.ndarray, out: np.ndarray) -> np.ndarray:
    if _use_torch(x) and out.flags.c_contiguous:
        t = _torch()
        t.sin(t.from_numpy(x), out=t.from_numpy(out))
        return out
    return np.sin(x, out=out)


def cos_into(x: np.ndarray, out: np.ndarray) -> np.ndarray:
    if _use_torch(x) and out.flags.c_contiguous:
        t = _torch()
        t.cos(t.from_numpy(x), out=t.from_numpy(out))
        return out
    return np.cos(x, out=out)


def exp_into(x: np.ndarray, out: np.ndarray) -> np.ndarray:
    if _use_torch(x) and out.flags.c_contiguous:
        t = _torch()
        t.exp(t.from_numpy(x), out=t.from_numpy(out))
        return out
    return np.exp(x, out=out)


def cos_outer(x: np.ndarray, y: np.ndarray, scratch: np.ndarray | None = None) -> np.ndarray:
    """cos(x[:, None] * y[None, :]) into a (len(x), len(y)) array."""
    if scratch is None or scratch.shape != (x.size, y.size):
        scratch = np.empty((x.size, y.size))
    np.multiply.outer(x, y, out=scratch)
    flat = scratch.reshape(-1)
    cos_into(flat, flat)
    return scratch
