# Compiled hot kernels; see _pykernels.py for the reference semantics.
import numpy as np
cimport cython
from cython.parallel cimport prange

NAME = "cython"


def correlate_axis(x, weights, int axis, int nthreads=1):
    cdef Py_ssize_t a = 1, b = 1, n, i, j, q, k, t, s, K, radius
    x = np.ascontiguousarray(x, dtype=np.float64)
    shape = x.shape
    for d in shape[:axis]:
        a *= d
    for d in shape[axis + 1:]:
        b *= d
    n = shape[axis]
    w_arr = np.ascontiguousarray(weights, dtype=np.float64)
    K = w_arr.shape[0]
    radius = K // 2
    idx_arr = np.pad(np.arange(n, dtype=np.intp), radius, mode="symmetric")
    out_arr = np.empty((a, n, b), dtype=np.float64)

    cdef const double[:, :, ::1] src = x.reshape(a, n, b)
    cdef double[:, :, ::1] out = out_arr
    cdef const double[::1] w = w_arr
    cdef Py_ssize_t[::1] idx = idx_arr
    cdef double wk, acc
    if nthreads < 1:
        nthreads = 1

    if b == 1:
        # last axis: accumulate in a register, same summation order
        for t in prange(a * n, nogil=True, num_threads=nthreads, schedule="static"):
            i = t // n
            j = t % n
            acc = 0.0
            for k in range(K):
                acc = acc + w[k] * src[i, idx[j + k], 0]
            out[i, j, 0] = acc
        return out_arr.reshape(shape)

    for t in prange(a * n, nogil=True, num_threads=nthreads, schedule="static"):
        i = t // n
        j = t % n
        for q in range(b):
            out[i, j, q] = 0.0
        for k in range(K):
            s = idx[j + k]
            wk = w[k]
            for q in range(b):
                out[i, j, q] = out[i, j, q] + wk * src[i, s, q]
    return out_arr.reshape(shape)


def ictm_fused(sqrt_g, g, conv_sqrt_g, conv_u, u, double lam):
    cdef Py_ssize_t i, N
    shape = u.shape
    cdef const double[::1] sg = np.ascontiguousarray(sqrt_g, dtype=np.float64).ravel()
    cdef const double[::1] gg = np.ascontiguousarray(g, dtype=np.float64).ravel()
    cdef const double[::1] cs = np.ascontiguousarray(conv_sqrt_g, dtype=np.float64).ravel()
    cdef const double[::1] cu = np.ascontiguousarray(conv_u, dtype=np.float64).ravel()
    cdef const unsigned char[::1] uu = np.ascontiguousarray(u, dtype=np.bool_).ravel().view(np.uint8)
    nxt_arr = np.empty(u.size, dtype=np.uint8)
    cdef unsigned char[::1] nxt = nxt_arr
    cdef Py_ssize_t flips = 0
    cdef double perimeter = 0.0, area = 0.0, phi
    cdef unsigned char v
    N = sg.shape[0]
    with nogil:
        for i in range(N):
            phi = sg[i] * (cs[i] - 2.0 * cu[i]) + lam * gg[i]
            v = 1 if phi <= 0.0 else 0
            nxt[i] = v
            if v != uu[i]:
                flips += 1
            if uu[i]:
                perimeter += sg[i] * (cs[i] - cu[i])
                area += gg[i]
    return nxt_arr.view(np.bool_).reshape(shape), int(flips), perimeter, area
