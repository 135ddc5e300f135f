"""Convolution kernel backend selection.

The compiled extension is preferred when importable; the numpy reference
implementation is the fallback.  Set PCMANIP_PURE_PYTHON=1 to force the
fallback (used by the cross-backend tests and the benchmark).

Both backends implement:

    conv3d_forward(x, w, b)        -> out
    conv3d_grad_input(gout, w)     -> dx
    conv3d_grad_params(x, gout)    -> (dw, db)

with channels-first layouts and C-contiguous float32/float64 arrays.
"""

from __future__ import annotations

import os

import numpy as np

from . import reference

BACKEND = "reference"
_impl = reference

if os.environ.get("PCMANIP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _native

        BACKEND = "native"
        _impl = _native
    except ImportError:
        pass


def _c(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a)


def conv3d_forward(x, w, b):
    return np.asarray(_impl.conv3d_forward(_c(x), _c(w), _c(b)))


def conv3d_grad_input(gout, w):
    return np.asarray(_impl.conv3d_grad_input(_c(gout), _c(w)))


def conv3d_grad_params(x, gout):
    dw, db = _impl.conv3d_grad_params(_c(x), _c(gout))
    return np.asarray(dw), np.asarray(db)


def get_backend() -> str:
    return BACKEND
