"""Pure-NumPy kernel backend.

Reference implementation of the minibatch loss/gradient kernels. The
compiled backend in ``_fast.pyx`` mirrors these formulas exactly; this
module is the fallback when the extension is not built.

Parameter layouts (flat float64 vectors):
  logistic regression: [W (d*C, row-major), b (C)]
  one-hidden-layer MLP (tanh): [W1 (d*H), b1 (H), W2 (H*C), b2 (C)]
"""

import numpy as np

BACKEND = "numpy"


def _log_softmax(z):
    m = z.max(axis=1, keepdims=True)
    shifted = z - m
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return shifted - lse


def _split_logreg(params, d, c):
    w = params[: d * c].reshape(d, c)
    b = params[d * c :]
    return w, b


def _split_mlp(params, d, h, c):
    o = 0
    w1 = params[o : o + d * h].reshape(d, h)
    o += d * h
    b1 = params[o : o + h]
    o += h
    w2 = params[o : o + h * c].reshape(h, c)
    o += h * c
    b2 = params[o : o + c]
    return w1, b1, w2, b2


def logreg_loss(params, x, y, num_classes):
    d = x.shape[1]
    w, b = _split_logreg(params, d, num_classes)
    logp = _log_softmax(x @ w + b)
    return float(-logp[np.arange(x.shape[0]), y].mean())


def logreg_grad(params, x, y, num_classes):
    n, d = x.shape
    w, b = _split_logreg(params, d, num_classes)
    z = x @ w + b
    p = np.exp(_log_softmax(z))
    p[np.arange(n), y] -= 1.0
    p /= n
    return np.concatenate([(x.T @ p).ravel(), p.sum(axis=0)])


def mlp_loss(params, x, y, hidden_dim, num_classes):
    d = x.shape[1]
    w1, b1, w2, b2 = _split_mlp(params, d, hidden_dim, num_classes)
    hid = np.tanh(x @ w1 + b1)
    logp = _log_softmax(hid @ w2 + b2)
    return float(-logp[np.arange(x.shape[0]), y].mean())


def mlp_grad(params, x, y, hidden_dim, num_classes):
    n, d = x.shape
    w1, b1, w2, b2 = _split_mlp(params, d, hidden_dim, num_classes)
    hid = np.tanh(x @ w1 + b1)
    p = np.exp(_log_softmax(hid @ w2 + b2))
    p[np.arange(n), y] -= 1.0
    p /= n
    dhid = (p @ w2.T) * (1.0 - hid * hid)
    return np.concatenate(
        [
            (x.T @ dhid).ravel(),
            dhid.sum(axis=0),
            (hid.T @ p).ravel(),
            p.sum(axis=0),
        ]
    )


def logreg_logits(params, x, num_classes):
    w, b = _split_logreg(params, x.shape[1], num_classes)
    return x @ w + b


def mlp_logits(params, x, hidden_dim, num_classes):
    w1, b1, w2, b2 = _split_mlp(params, x.shape[1], hidden_dim, num_classes)
    return np.tanh(x @ w1 + b1) @ w2 + b2
