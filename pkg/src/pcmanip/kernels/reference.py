"""Pure-numpy convolution kernels (valid padding, stride 1).

Layouts are channels-first: inputs (B, Cin, D, H, W), kernels
(Cout, Cin, kd, kh, kw).  The 2-D layers reuse these through a singleton
depth axis, so this is the only convolution implementation to verify.

These are the fallback for the compiled extension; both backends must
produce bit-comparable results at float64 and agree within a few ulps at
float32.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv3d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross-correlation of x with w plus per-channel bias.

    Output shape (B, Cout, D-kd+1, H-kh+1, W-kw+1).
    """
    win = sliding_window_view(x, w.shape[2:], axis=(2, 3, 4))
    out = np.einsum("bcdhwxyz,ocxyz->bodhw", win, w, optimize=True)
    return out + b[None, :, None, None, None]


def conv3d_grad_input(gout: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gradient of the loss w.r.t. the convolution input.

    Full correlation of the output gradient with the flipped kernel;
    result has the original input shape.
    """
    kd, kh, kw = w.shape[2:]
    gp = np.pad(
        gout,
        ((0, 0), (0, 0), (kd - 1, kd - 1), (kh - 1, kh - 1), (kw - 1, kw - 1)),
    )
    win = sliding_window_view(gp, (kd, kh, kw), axis=(2, 3, 4))
    wf = w[:, :, ::-1, ::-1, ::-1]
    return np.einsum("bodhwxyz,ocxyz->bcdhw", win, wf, optimize=True)


def conv3d_grad_params(x: np.ndarray, gout: np.ndarray):
    """Gradients w.r.t. kernel weights and bias."""
    kd = x.shape[2] - gout.shape[2] + 1
    kh = x.shape[3] - gout.shape[3] + 1
    kw = x.shape[4] - gout.shape[4] + 1
    win = sliding_window_view(x, (kd, kh, kw), axis=(2, 3, 4))
    dw = np.einsum("bcdhwxyz,bodhw->ocxyz", win, gout, optimize=True)
    db = gout.sum(axis=(0, 2, 3, 4))
    return dw, db
