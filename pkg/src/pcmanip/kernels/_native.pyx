# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled convolution kernels, same contracts as kernels.reference.

Plain nested loops over C-contiguous buffers; the fused type covers the
float32 training path and the float64 gradient-check path.
"""

import numpy as np

cimport cython

ctypedef fused real:
    float
    double


def conv3d_forward(real[:, :, :, :, ::1] x, real[:, :, :, :, ::1] w, real[::1] b):
    cdef Py_ssize_t B = x.shape[0], Ci = x.shape[1]
    cdef Py_ssize_t D = x.shape[2], H = x.shape[3], W = x.shape[4]
    cdef Py_ssize_t Co = w.shape[0]
    cdef Py_ssize_t kd = w.shape[2], kh = w.shape[3], kw = w.shape[4]
    cdef Py_ssize_t Do = D - kd + 1, Ho = H - kh + 1, Wo = W - kw + 1

    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.empty((B, Co, Do, Ho, Wo), dtype=dtype)
    cdef real[:, :, :, :, ::1] out = out_arr

    cdef Py_ssize_t n, o, c, i, j, k, p, q, s
    cdef real acc
    for n in range(B):
        for o in range(Co):
            for i in range(Do):
                for j in range(Ho):
                    for k in range(Wo):
                        acc = b[o]
                        for c in range(Ci):
                            for p in range(kd):
                                for q in range(kh):
                                    for s in range(kw):
                                        acc = acc + x[n, c, i + p, j + q, k + s] * w[o, c, p, q, s]
                        out[n, o, i, j, k] = acc
    return out_arr


def conv3d_grad_input(real[:, :, :, :, ::1] gout, real[:, :, :, :, ::1] w):
    cdef Py_ssize_t B = gout.shape[0], Co = gout.shape[1]
    cdef Py_ssize_t Do = gout.shape[2], Ho = gout.shape[3], Wo = gout.shape[4]
    cdef Py_ssize_t Ci = w.shape[1]
    cdef Py_ssize_t kd = w.shape[2], kh = w.shape[3], kw = w.shape[4]
    cdef Py_ssize_t D = Do + kd - 1, H = Ho + kh - 1, W = Wo + kw - 1

    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    dx_arr = np.zeros((B, Ci, D, H, W), dtype=dtype)
    cdef real[:, :, :, :, ::1] dx = dx_arr

    cdef Py_ssize_t n, o, c, i, j, k, p, q, s
    cdef real g
    for n in range(B):
        for o in range(Co):
            for i in range(Do):
                for j in range(Ho):
                    for k in range(Wo):
                        g = gout[n, o, i, j, k]
                        for c in range(Ci):
                            for p in range(kd):
                                for q in range(kh):
                                    for s in range(kw):
                                        dx[n, c, i + p, j + q, k + s] = (
                                            dx[n, c, i + p, j + q, k + s] + g * w[o, c, p, q, s]
                                        )
    return dx_arr


def conv3d_grad_params(real[:, :, :, :, ::1] x, real[:, :, :, :, ::1] gout):
    cdef Py_ssize_t B = x.shape[0], Ci = x.shape[1]
    cdef Py_ssize_t D = x.shape[2], H = x.shape[3], W = x.shape[4]
    cdef Py_ssize_t Co = gout.shape[1]
    cdef Py_ssize_t Do = gout.shape[2], Ho = gout.shape[3], Wo = gout.shape[4]
    cdef Py_ssize_t kd = D - Do + 1, kh = H - Ho + 1, kw = W - Wo + 1

    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    dw_arr = np.zeros((Co, Ci, kd, kh, kw), dtype=dtype)
    db_arr = np.zeros(Co, dtype=dtype)
    cdef real[:, :, :, :, ::1] dw = dw_arr
    cdef real[::1] db = db_arr

    cdef Py_ssize_t n, o, c, i, j, k, p, q, s
    cdef real g
    for n in range(B):
        for o in range(Co):
            for i in range(Do):
                for j in range(Ho):
                    for k in range(Wo):
                        g = gout[n, o, i, j, k]
                        db[o] = db[o] + g
                        for c in range(Ci):
                            for p in range(kd):
                                for q in range(kh):
                                    for s in range(kw):
                                        dw[o, c, p, q, s] = (
                                            dw[o, c, p, q, s] + g * x[n, c, i + p, j + q, k + s]
                                        )
    return dw_arr, db_arr
