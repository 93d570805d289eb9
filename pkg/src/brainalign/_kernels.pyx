# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Same signatures as ``brainalign._kernels_np``; selected automatically by
``brainalign.kernels`` when the extension built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

BACKEND = "cython"


def pool2x2(cnp.ndarray[cnp.float64_t, ndim=3] x):
    """Mean-pool an (H, W, D) grid to (H/2, W/2, D). H and W must be even."""
    cdef Py_ssize_t h = x.shape[0], w = x.shape[1], d = x.shape[2]
    cdef Py_ssize_t ho = h // 2, wo = w // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty((ho, wo, d))
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(ho):
        for j in range(wo):
            for k in range(d):
                acc = (
                    x[2 * i, 2 * j, k]
                    + x[2 * i, 2 * j + 1, k]
                    + x[2 * i + 1, 2 * j, k]
                    + x[2 * i + 1, 2 * j + 1, k]
                )
                out[i, j, k] = 0.25 * acc
    return out


def silu(object x):
    """x * sigmoid(x), elementwise."""
    shape = np.shape(x)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef Py_ssize_t i, n = flat.shape[0]
    for i in range(n):
        out[i] = flat[i] / (1.0 + exp(-flat[i]))
    return out.reshape(shape)


def silu_grad(object x, object gout):
    """Backward of silu: gout * sigmoid(x) * (1 + x * (1 - sigmoid(x)))."""
    shape = np.shape(x)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xf = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gf = np.ascontiguousarray(gout, dtype=np.float64).reshape(-1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(xf)
    cdef Py_ssize_t i, n = xf.shape[0]
    cdef double s
    for i in range(n):
        s = 1.0 / (1.0 + exp(-xf[i]))
        out[i] = gf[i] * s * (1.0 + xf[i] * (1.0 - s))
    return out.reshape(shape)


def corrupt_rows(
    cnp.ndarray[cnp.float64_t, ndim=2] v,
    cnp.ndarray[cnp.float64_t, ndim=2] eps,
    cnp.ndarray[cnp.float64_t, ndim=1] sa,
    cnp.ndarray[cnp.float64_t, ndim=1] sb,
):
    """Per-row affine mix sa[i]*v[i] + sb[i]*eps[i] for (R, C) arrays."""
    cdef Py_ssize_t r = v.shape[0], c = v.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((r, c))
    cdef Py_ssize_t i, j
    cdef double a, b
    for i in range(r):
        a = sa[i]
        b = sb[i]
        for j in range(c):
            out[i, j] = a * v[i, j] + b * eps[i, j]
    return out


def masked_sq_err(cnp.ndarray[cnp.float64_t, ndim=2] diff, cnp.ndarray mask):
    """Sum of squared entries of diff over rows where mask is true."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t r = diff.shape[0], c = diff.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(r):
        if m[i]:
            for j in range(c):
                acc += diff[i, j] * diff[i, j]
    return acc


def adamw_update(
    cnp.ndarray[cnp.float64_t, ndim=1] p,
    cnp.ndarray[cnp.float64_t, ndim=1] g,
    cnp.ndarray[cnp.float64_t, ndim=1] m,
    cnp.ndarray[cnp.float64_t, ndim=1] v,
    int step,
    double lr,
    double beta1,
    double beta2,
    double eps,
    double wd,
):
    """One decoupled-weight-decay Adam update, in place on p, m, v."""
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double bc1 = 1.0 - beta1 ** step
    cdef double bc2 = 1.0 - beta2 ** step
    cdef double decay = 1.0 - lr * wd
    cdef double mhat, vhat
    for i in range(n):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
        mhat = m[i] / bc1
        vhat = v[i] / bc2
        p[i] = p[i] * decay - lr * mhat / (sqrt(vhat) + eps)


def iou_batch(
    cnp.ndarray[cnp.float64_t, ndim=2] a,
    cnp.ndarray[cnp.float64_t, ndim=2] b,
):
    """IoU per row for (N, 4) corner boxes; 0 where the union is empty."""
    cdef Py_ssize_t i, n = a.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n)
    cdef double ix, iy, inter, area_a, area_b, union
    for i in range(n):
        ix = min(a[i, 2], b[i, 2]) - max(a[i, 0], b[i, 0])
        if ix < 0.0:
            ix = 0.0
        iy = min(a[i, 3], b[i, 3]) - max(a[i, 1], b[i, 1])
        if iy < 0.0:
            iy = 0.0
        inter = ix * iy
        area_a = (a[i, 2] - a[i, 0]) * (a[i, 3] - a[i, 1])
        area_b = (b[i, 2] - b[i, 0]) * (b[i, 3] - b[i, 1])
        union = area_a + area_b - inter
        if union > 0.0:
            out[i] = inter / union
    return out
