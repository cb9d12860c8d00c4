# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel backend.

Same formulas as fedsim.kernels._ref, written as per-sample C loops so the
many tiny minibatch gradient calls issued by the simulator avoid NumPy
call overhead. Summation order differs from the BLAS path, so results may
differ from the reference backend in the last few ulps.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, tanh

cnp.import_array()

BACKEND = "cython"


def logreg_loss(const double[::1] params, const double[:, ::1] x,
                const cnp.int64_t[::1] y, int num_classes):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t c = num_classes
    cdef double[::1] z = np.empty(c, dtype=np.float64)
    cdef double total = 0.0
    cdef double m, s, acc
    cdef Py_ssize_t i, j, k

    for i in range(n):
        for k in range(c):
            acc = params[d * c + k]
            for j in range(d):
                acc += x[i, j] * params[j * c + k]
            z[k] = acc
        m = z[0]
        for k in range(1, c):
            if z[k] > m:
                m = z[k]
        s = 0.0
        for k in range(c):
            s += exp(z[k] - m)
        total -= z[y[i]] - m - log(s)
    return total / n


def logreg_grad(const double[::1] params, const double[:, ::1] x,
                const cnp.int64_t[::1] y, int num_classes):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t c = num_classes
    grad_arr = np.zeros(d * c + c, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    cdef double[::1] z = np.empty(c, dtype=np.float64)
    cdef double m, s, acc, delta
    cdef Py_ssize_t i, j, k

    for i in range(n):
        for k in range(c):
            acc = params[d * c + k]
            for j in range(d):
                acc += x[i, j] * params[j * c + k]
            z[k] = acc
        m = z[0]
        for k in range(1, c):
            if z[k] > m:
                m = z[k]
        s = 0.0
        for k in range(c):
            z[k] = exp(z[k] - m)
            s += z[k]
        for k in range(c):
            delta = z[k] / s
            if k == y[i]:
                delta -= 1.0
            delta /= n
            grad[d * c + k] += delta
            for j in range(d):
                grad[j * c + k] += x[i, j] * delta
    return grad_arr


def mlp_loss(const double[::1] params, const double[:, ::1] x,
             const cnp.int64_t[::1] y, int hidden_dim, int num_classes):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t h = hidden_dim
    cdef Py_ssize_t c = num_classes
    cdef Py_ssize_t ob1 = d * h
    cdef Py_ssize_t ow2 = ob1 + h
    cdef Py_ssize_t ob2 = ow2 + h * c
    cdef double[::1] hid = np.empty(h, dtype=np.float64)
    cdef double[::1] z = np.empty(c, dtype=np.float64)
    cdef double total = 0.0
    cdef double m, s, acc
    cdef Py_ssize_t i, j, k

    for i in range(n):
        for j in range(h):
            acc = params[ob1 + j]
            for k in range(d):
                acc += x[i, k] * params[k * h + j]
            hid[j] = tanh(acc)
        for k in range(c):
            acc = params[ob2 + k]
            for j in range(h):
                acc += hid[j] * params[ow2 + j * c + k]
            z[k] = acc
        m = z[0]
        for k in range(1, c):
            if z[k] > m:
                m = z[k]
        s = 0.0
        for k in range(c):
            s += exp(z[k] - m)
        total -= z[y[i]] - m - log(s)
    return total / n


def mlp_grad(const double[::1] params, const double[:, ::1] x,
             const cnp.int64_t[::1] y, int hidden_dim, int num_classes):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t h = hidden_dim
    cdef Py_ssize_t c = num_classes
    cdef Py_ssize_t ob1 = d * h
    cdef Py_ssize_t ow2 = ob1 + h
    cdef Py_ssize_t ob2 = ow2 + h * c
    grad_arr = np.zeros(ob2 + c, dtype=np.float64)
    cdef double[::1] grad = grad_arr
    cdef double[::1] hid = np.empty(h, dtype=np.float64)
    cdef double[::1] z = np.empty(c, dtype=np.float64)
    cdef double[::1] da = np.empty(h, dtype=np.float64)
    cdef double m, s, acc, delta
    cdef Py_ssize_t i, j, k

    for i in range(n):
        for j in range(h):
            acc = params[ob1 + j]
            for k in range(d):
                acc += x[i, k] * params[k * h + j]
            hid[j] = tanh(acc)
        for k in range(c):
            acc = params[ob2 + k]
            for j in range(h):
                acc += hid[j] * params[ow2 + j * c + k]
            z[k] = acc
        m = z[0]
        for k in range(1, c):
            if z[k] > m:
                m = z[k]
        s = 0.0
        for k in range(c):
            z[k] = exp(z[k] - m)
            s += z[k]
        for j in range(h):
            da[j] = 0.0
        for k in range(c):
            delta = z[k] / s
            if k == y[i]:
                delta -= 1.0
            delta /= n
            grad[ob2 + k] += delta
            for j in range(h):
                grad[ow2 + j * c + k] += hid[j] * delta
                da[j] += delta * params[ow2 + j * c + k]
        for j in range(h):
            da[j] *= 1.0 - hid[j] * hid[j]
            grad[ob1 + j] += da[j]
            for k in range(d):
                grad[k * h + j] += x[i, k] * da[j]
    return grad_arr
