"""Pure-numpy kernels; the fallback for ``_ckernels``.

Every function here has the same signature and semantics as its Cython twin.
Accumulations run in the same order (bias first, then inputs in ascending
index) so each output row depends only on its own input row, never on the
batch it was computed in.
"""

import numpy as np

SIG_CLIP = 35.0


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -SIG_CLIP, SIG_CLIP)))


def _hidden(X, W, b):
    Z = np.empty((X.shape[0], W.shape[0]))
    Z[:] = b
    for i in range(X.shape[1]):
        Z += X[:, i : i + 1] * W[:, i]
    return _sigmoid(Z)


def _output(H, v, c):
    y = np.full(H.shape[0], c)
    for j in range(H.shape[1]):
        y += v[j] * H[:, j]
    return _sigmoid(y)


def mlfn_forward_batch(X, W, b, v, c):
    """Network outputs for each row of normalized inputs ``X``."""
    return _output(_hidden(X, W, b), v, float(c))


def mlfn_train(X, t, W, b, v, c, lr, momentum, orders):
    """Online backpropagation with momentum.

    ``W``, ``b``, ``v`` and the one-element array ``c`` are updated in place.
    ``orders[e]`` is the sample order of epoch ``e``. Returns the per-epoch
    mean squared error and, on breakdown, the failing (epoch, sample) pair,
    otherwise ``(-1, -1)``.
    """
    n_epochs = orders.shape[0]
    trace = np.empty(n_epochs)
    vW = np.zeros_like(W)
    vb = np.zeros_like(b)
    vv = np.zeros_like(v)
    vc = 0.0
    for e in range(n_epochs):
        for s, r in enumerate(orders[e]):
            x = X[r]
            h = _sigmoid(b + W @ x)
            y = float(_sigmoid(c[0] + v @ h))
            err = y - t[r]
            if not np.isfinite(err):
                return trace, e, s
            d_out = err * y * (1.0 - y)
            d_hid = d_out * v * h * (1.0 - h)
            vv = momentum * vv - lr * (d_out * h)
            vc = momentum * vc - lr * d_out
            vW = momentum * vW - lr * np.multiply.outer(d_hid, x)
            vb = momentum * vb - lr * d_hid
            v += vv
            c[0] += vc
            W += vW
            b += vb
            if not np.isfinite(W.sum() + b.sum() + v.sum() + c[0]):
                return trace, e, s
        resid = mlfn_forward_batch(X, W, b, v, c[0]) - t
        mse = float(np.mean(resid * resid))
        if not np.isfinite(mse):
            return trace, e, X.shape[0] - 1
        trace[e] = mse
    return trace, -1, -1


def grnn_predict_batch(Q, E, T, sigma):
    """Gaussian kernel-weighted mean of ``T``; nearest exemplar when all weights underflow."""
    n, m = Q.shape[0], E.shape[0]
    inv = 1.0 / (2.0 * sigma * sigma)
    out = np.empty(n)
    step = max(1, 2_000_000 // max(m, 1))
    for start in range(0, n, step):
        q = Q[start : start + step]
        D2 = np.zeros((q.shape[0], m))
        for i in range(Q.shape[1]):
            diff = q[:, i : i + 1] - E[:, i]
            D2 += diff * diff
        Wk = np.exp(-D2 * inv)
        den = Wk.sum(axis=1)
        num = (Wk * T).sum(axis=1)
        nearest = T[np.argmin(D2, axis=1)]
        with np.errstate(invalid="ignore", divide="ignore"):
            out[start : start + step] = np.where(den > 0.0, num / den, nearest)
    return out
