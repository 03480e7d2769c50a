# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, isfinite

cnp.import_array()

cdef double SIG_CLIP = 35.0


cdef inline double _sigmoid(double z) noexcept nogil:
    if z > SIG_CLIP:
        z = SIG_CLIP
    elif z < -SIG_CLIP:
        z = -SIG_CLIP
    return 1.0 / (1.0 + exp(-z))


cdef inline double _forward_row(const double[:, ::1] X, Py_ssize_t r,
                                const double[:, ::1] W, const double[::1] b,
                                const double[::1] v, double c,
                                double[::1] h) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t d = W.shape[1], nh = W.shape[0]
    cdef double acc
    for j in range(nh):
        acc = b[j]
        for i in range(d):
            acc = acc + W[j, i] * X[r, i]
        h[j] = _sigmoid(acc)
    acc = c
    for j in range(nh):
        acc = acc + v[j] * h[j]
    return _sigmoid(acc)


def mlfn_forward_batch(const double[:, ::1] X, const double[:, ::1] W,
                       const double[::1] b, const double[::1] v, double c):
    cdef Py_ssize_t n = X.shape[0], r
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[::1] h = np.empty(W.shape[0])
    with nogil:
        for r in range(n):
            out[r] = _forward_row(X, r, W, b, v, c, h)
    return out_arr


def mlfn_train(const double[:, ::1] X, const double[::1] t,
               double[:, ::1] W, double[::1] b, double[::1] v, double[::1] c,
               double lr, double momentum, const cnp.intp_t[:, ::1] orders):
    cdef Py_ssize_t n_epochs = orders.shape[0], n = orders.shape[1]
    cdef Py_ssize_t nh = W.shape[0], d = W.shape[1]
    cdef Py_ssize_t e, s, r, i, j
    cdef double y, err, d_out, d_hid, mse, resid, vc = 0.0
    trace_arr = np.empty(n_epochs)
    cdef double[::1] trace = trace_arr
    cdef double[::1] h = np.empty(nh)
    cdef double[:, ::1] vW = np.zeros((nh, d))
    cdef double[::1] vb = np.zeros(nh)
    cdef double[::1] vv = np.zeros(nh)
    cdef Py_ssize_t fail_e = -1, fail_s = -1
    cdef bint finite

    with nogil:
        for e in range(n_epochs):
            for s in range(n):
                r = orders[e, s]
                y = _forward_row(X, r, W, b, v, c[0], h)
                err = y - t[r]
                if not isfinite(err):
                    fail_e = e
                    fail_s = s
                    break
                d_out = err * y * (1.0 - y)
                finite = True
                for j in range(nh):
                    # uses v[j] before its own update
                    d_hid = d_out * v[j] * h[j] * (1.0 - h[j])
                    vv[j] = momentum * vv[j] - lr * (d_out * h[j])
                    v[j] = v[j] + vv[j]
                    finite = finite and isfinite(v[j])
                    for i in range(d):
                        vW[j, i] = momentum * vW[j, i] - lr * (d_hid * X[r, i])
                        W[j, i] = W[j, i] + vW[j, i]
                        finite = finite and isfinite(W[j, i])
                    vb[j] = momentum * vb[j] - lr * d_hid
                    b[j] = b[j] + vb[j]
                    finite = finite and isfinite(b[j])
                vc = momentum * vc - lr * d_out
                c[0] = c[0] + vc
                if not (finite and isfinite(c[0])):
                    fail_e = e
                    fail_s = s
                    break
            if fail_e >= 0:
                break
            mse = 0.0
            for r in range(n):
                resid = _forward_row(X, r, W, b, v, c[0], h) - t[r]
                mse = mse + resid * resid
            mse = mse / n
            if not isfinite(mse):
                fail_e = e
                fail_s = n - 1
                break
            trace[e] = mse
    return trace_arr, fail_e, fail_s


def grnn_predict_batch(const double[:, ::1] Q, const double[:, ::1] E,
                       const double[::1] T, double sigma):
    cdef Py_ssize_t n = Q.shape[0], m = E.shape[0], d = Q.shape[1]
    cdef Py_ssize_t q, k, i, nearest
    cdef double inv = 1.0 / (2.0 * sigma * sigma)
    cdef double d2, diff, w, num, den, best
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    with nogil:
        for q in range(n):
            num = 0.0
            den = 0.0
            best = 0.0
            nearest = 0
            for k in range(m):
                d2 = 0.0
                for i in range(d):
                    diff = Q[q, i] - E[k, i]
                    d2 = d2 + diff * diff
                if k == 0 or d2 < best:
                    best = d2
                    nearest = k
                w = exp(-d2 * inv)
                num = num + w * T[k]
                den = den + w
            if den > 0.0:
                out[q] = num / den
            else:
                out[q] = T[nearest]
    return out_arr
