# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled elementwise kernels.

Same contract as ``_kernels_py``: each function computes value and
derivative(s) in one fused pass instead of materialising numpy temporaries.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, sqrt, sinh, cosh, fabs, fmin

cnp.import_array()

cdef double GELU_C = sqrt(2.0 / 3.141592653589793)
cdef double GELU_K = 0.044715


cdef inline void _sig(double x, double *v, double *d) noexcept nogil:
    cdef double z = exp(-fabs(x))
    cdef double inv = 1.0 / (1.0 + z)
    if x >= 0:
        v[0] = inv
    else:
        v[0] = z * inv
    # rounding can push the product one ulp past the true maximum 0.25
    d[0] = fmin(z * inv * inv, 0.25)


def _flat(x):
    # returns the input as an array (original shape kept, 0-d included) and a contiguous 1-d view
    arr = np.asarray(x, dtype=np.float64)
    return arr, np.ascontiguousarray(arr).reshape(-1)


def sigmoid_vd(x):
    arr, flat = _flat(x)
    cdef const double[::1] xs = flat
    cdef Py_ssize_t i, n = xs.shape[0]
    out_v = np.empty(n)
    out_d = np.empty(n)
    cdef double[::1] v = out_v
    cdef double[::1] d = out_d
    with nogil:
        for i in range(n):
            _sig(xs[i], &v[i], &d[i])
    return out_v.reshape(arr.shape), out_d.reshape(arr.shape)


def sigmoid_theta_vd(x, double alpha):
    arr, flat = _flat(x)
    cdef const double[::1] xs = flat
    cdef Py_ssize_t i, n = xs.shape[0]
    out_v = np.empty(n)
    out_d = np.empty(n)
    cdef double[::1] v = out_v
    cdef double[::1] d = out_d
    with nogil:
        for i in range(n):
            _sig(xs[i], &v[i], &d[i])
            v[i] = v[i] + alpha * xs[i]
            d[i] = d[i] + alpha
    return out_v.reshape(arr.shape), out_d.reshape(arr.shape)


def xi_sigmoid_vd(x):
    arr, flat = _flat(x)
    cdef const double[::1] xs = flat
    cdef Py_ssize_t i, n = xs.shape[0]
    cdef double ep, em
    out_v = np.empty(n)
    out_d = np.empty(n)
    cdef double[::1] v = out_v
    cdef double[::1] d = out_d
    with nogil:
        for i in range(n):
            ep = exp(xs[i])
            em = exp(-xs[i])
            v[i] = ep - em + 2.0 * xs[i]
            d[i] = ep + 2.0 + em
    return out_v.reshape(arr.shape), out_d.reshape(arr.shape)


def xi_sigmoid_theta_vd(x, double alpha):
    arr, flat = _flat(x)
    cdef const double[::1] xs = flat
    cdef Py_ssize_t i, n = xs.shape[0]
    cdef double r = sqrt(4.0 * alpha + 1.0)
    cdef double p = 2.0 * alpha + 1.0 + r
    cdef double q = 2.0 * alpha + 1.0 - r
    cdef double lp = log(p), lq = log(q)
    cdef double z, lr, sd
    out_v = np.empty(n)
    out_d = np.empty(n)
    cdef double[::1] v = out_v
    cdef double[::1] d = out_d
    with nogil:
        for i in range(n):
            z = exp(-fabs(xs[i]))
            if xs[i] >= 0:
                lr = log1p(p * z / (2.0 * alpha)) - log1p(q * z / (2.0 * alpha))
            else:
                lr = (log1p(2.0 * alpha * z / p) + lp) - log1p(2.0 * alpha * z / q) - lq
            v[i] = lr / (alpha * r) + xs[i] / alpha
            sd = 1.0 / (1.0 + z)
            sd = fmin(z * sd * sd, 0.25)
            d[i] = 1.0 / (sd + alpha)
    return out_v.reshape(arr.shape), out_d.reshape(arr.shape)


def tanh_vd(x):
    arr, flat = _flat(x)
    cdef const double[::1] xs = flat
    cdef Py_ssize_t i, n = xs.shape[0]
    cdef double s, sd
    out_v = np.empty(n)
    out_d = np.empty(n)
    cdef double[::1] v = out_v
    cdef double[::1] d = out_d
    with nogil:
        for i in range(n):
            _sig(2.0 * xs[i], &s, &sd)
            v[i] = 2.0 * s - 1.0
            d[i] = 4.0 * sd
    return out_v.reshape(arr.shape), out_d.reshape(arr.shape)


def gelu_vd(x):
    arr, flat = _flat(x)
    cdef const double[::1] xs = flat
    cdef Py_ssize_t i, n = xs.shape[0]
    cdef double u, s, sd, t, xi
    out_v = np.empty(n)
    out_d = np.empty(n)
    cdef double[::1] v = out_v
    cdef double[::1] d = out_d
    with nogil:
        for i in range(n):
            xi = xs[i]
            u = GELU_C * (xi + GELU_K * xi * xi * xi)
            _sig(2.0 * u, &s, &sd)
            t = 2.0 * s - 1.0
            v[i] = 0.5 * xi * (1.0 + t)
            d[i] = 0.5 * (1.0 + t) + 0.5 * xi * (4.0 * sd) * GELU_C * (1.0 + 3.0 * GELU_K * xi * xi)
    return out_v.reshape(arr.shape), out_d.reshape(arr.shape)


def tanh_split4_vp(c1, c2, c3, c4):
    arr, f1 = _flat(c1)
    cdef const double[::1] x1 = f1
    cdef const double[::1] x2 = _flat(c2)[1]
    cdef const double[::1] x3 = _flat(c3)[1]
    cdef const double[::1] x4 = _flat(c4)[1]
    cdef Py_ssize_t i, n = x1.shape[0]
    cdef double e1, em2, e3, em4, num, den
    outs = [np.empty(n) for _ in range(5)]
    cdef double[::1] v = outs[0]
    cdef double[::1] p1 = outs[1]
    cdef double[::1] p2 = outs[2]
    cdef double[::1] p3 = outs[3]
    cdef double[::1] p4 = outs[4]
    with nogil:
        for i in range(n):
            e1 = exp(x1[i])
            em2 = exp(-x2[i])
            e3 = exp(x3[i])
            em4 = exp(-x4[i])
            num = e1 - em2
            den = e3 + em4
            v[i] = num / den
            p1[i] = e1 / den
            p2[i] = em2 / den
            p3[i] = -num * e3 / (den * den)
            p4[i] = num * em4 / (den * den)
    return tuple(o.reshape(arr.shape) for o in outs)


def gelu_split4_vp(c1, c2, c3, c4):
    arr, f1 = _flat(c1)
    cdef const double[::1] x1 = f1
    cdef const double[::1] x2 = _flat(c2)[1]
    cdef const double[::1] x3 = _flat(c3)[1]
    cdef const double[::1] x4 = _flat(c4)[1]
    cdef Py_ssize_t i, n = x1.shape[0]
    cdef double inner, s, sd, t, half
    outs = [np.empty(n) for _ in range(5)]
    cdef double[::1] v = outs[0]
    cdef double[::1] p1 = outs[1]
    cdef double[::1] p2 = outs[2]
    cdef double[::1] p3 = outs[3]
    cdef double[::1] p4 = outs[4]
    with nogil:
        for i in range(n):
            inner = 1.0 + GELU_K * x3[i] * x4[i]
            _sig(2.0 * (GELU_C * x2[i] * inner), &s, &sd)
            t = 2.0 * s - 1.0
            half = 0.5 * x1[i] * (4.0 * sd) * GELU_C
            v[i] = 0.5 * x1[i] * (1.0 + t)
            p1[i] = 0.5 * (1.0 + t)
            p2[i] = half * inner
            p3[i] = half * x2[i] * GELU_K * x4[i]
            p4[i] = half * x2[i] * GELU_K * x3[i]
    return tuple(o.reshape(arr.shape) for o in outs)


def xi_tanh_fwd(c1, c2, c3, c4, a):
    arr, f1 = _flat(c1)
    cdef const double[::1] x1 = f1
    cdef const double[::1] x2 = _flat(c2)[1]
    cdef const double[::1] x3 = _flat(c3)[1]
    cdef const double[::1] x4 = _flat(c4)[1]
    cdef double[::1] al = np.ascontiguousarray(a, dtype=np.float64).reshape(-1)
    cdef double a1 = al[0], a2 = al[1], a3 = al[2], a4 = al[3], a5 = al[4], a6 = al[5]
    cdef double a7 = al[6], a8 = al[7], a9 = al[8], a10 = al[9], a11 = al[10], a12 = al[11]
    cdef double q3 = a7 * a8 - 1.0, q4 = a10 * a11 - 1.0
    cdef double t1, t2, t3, t4
    cdef Py_ssize_t i, n = x1.shape[0]
    out = np.empty(n)
    cdef double[::1] v = out
    with nogil:
        for i in range(n):
            t1 = -(a1 + a2) * exp(-x1[i]) + a3
            t2 = -(a4 + a5) * exp(-x2[i]) + a6
            t3 = a7 * (exp(-x3[i]) / (a8 * a8) - exp(x3[i]) - 2.0 * x3[i] / a8) / q3 + a9
            t4 = a10 * (a11 * a11 * exp(x4[i]) - exp(-x4[i]) - 2.0 * a11 * x4[i]) / q4 + a12
            v[i] = ((t1 + t2) + t3) + t4
    return out.reshape(arr.shape)


def xi_tanh_bwd(g, c1, c2, c3, c4, a):
    arr, fg = _flat(g)
    cdef const double[::1] gs = fg
    cdef const double[::1] x1 = _flat(c1)[1]
    cdef const double[::1] x2 = _flat(c2)[1]
    cdef const double[::1] x3 = _flat(c3)[1]
    cdef const double[::1] x4 = _flat(c4)[1]
    cdef double[::1] al = np.ascontiguousarray(a, dtype=np.float64).reshape(-1)
    cdef double a1 = al[0], a2 = al[1], a4 = al[3], a5 = al[4]
    cdef double a7 = al[6], a8 = al[7], a10 = al[9], a11 = al[10]
    cdef double q3 = a7 * a8 - 1.0, q4 = a10 * a11 - 1.0
    cdef double em1, em2, e3, em3, e4, em4, p3, p4, dp3, dp4, gi
    cdef double s_g = 0, s_em1 = 0, s_em2 = 0, s_p3 = 0, s_a8 = 0, s_p4 = 0, s_a11 = 0
    cdef Py_ssize_t i, n = gs.shape[0]
    outs = [np.empty(n) for _ in range(4)]
    cdef double[::1] g1 = outs[0]
    cdef double[::1] g2 = outs[1]
    cdef double[::1] g3 = outs[2]
    cdef double[::1] g4 = outs[3]
    with nogil:
        for i in range(n):
            gi = gs[i]
            em1 = exp(-x1[i])
            em2 = exp(-x2[i])
            e3 = exp(x3[i])
            em3 = exp(-x3[i])
            e4 = exp(x4[i])
            em4 = exp(-x4[i])
            p3 = em3 / (a8 * a8) - e3 - 2.0 * x3[i] / a8
            p4 = a11 * a11 * e4 - em4 - 2.0 * a11 * x4[i]
            g1[i] = gi * (a1 + a2) * em1
            g2[i] = gi * (a4 + a5) * em2
            g3[i] = gi * a7 * (-em3 / (a8 * a8) - e3 - 2.0 / a8) / q3
            g4[i] = gi * a10 * (a11 * a11 * e4 + em4 - 2.0 * a11) / q4
            dp3 = -2.0 * em3 / (a8 * a8 * a8) + 2.0 * x3[i] / (a8 * a8)
            dp4 = 2.0 * a11 * e4 - 2.0 * x4[i]
            s_g += gi
            s_em1 += gi * em1
            s_em2 += gi * em2
            s_p3 += gi * p3
            s_a8 += gi * (a7 * dp3 / q3 - a7 * a7 * p3 / (q3 * q3))
            s_p4 += gi * p4
            s_a11 += gi * (a10 * dp4 / q4 - a10 * a10 * p4 / (q4 * q4))
    ga = np.array([
        -s_em1, -s_em1, s_g,
        -s_em2, -s_em2, s_g,
        -s_p3 / (q3 * q3), s_a8, s_g,
        -s_p4 / (q4 * q4), s_a11, s_g,
    ])
    return tuple(o.reshape(arr.shape) for o in outs) + (ga,)


def xi_gelu_fwd(c1, cbar, q):
    arr, f1 = _flat(c1)
    cdef const double[::1] x1 = f1
    cdef const double[::1] xb = _flat(cbar)[1]
    cdef double[::1] qs = np.ascontiguousarray(q, dtype=np.float64).reshape(-1)
    cdef double a1 = qs[0], a2 = qs[1], a4 = qs[2], a5 = qs[3], beta = qs[4]
    cdef double d1 = qs[5], d2 = qs[6], d3 = qs[7]
    cdef double slope = a4 * beta + a5
    cdef Py_ssize_t i, n = x1.shape[0]
    out = np.empty(n)
    cdef double[::1] v = out
    with nogil:
        for i in range(n):
            v[i] = (a1 * x1[i] + a2) * (d1 * sinh(slope * xb[i]) + d2 * xb[i] + d3)
    return out.reshape(arr.shape)


def xi_gelu_bwd(g, c1, cbar, q):
    arr, fg = _flat(g)
    cdef const double[::1] gs = fg
    cdef const double[::1] x1 = _flat(c1)[1]
    cdef const double[::1] xb = _flat(cbar)[1]
    cdef double[::1] qs = np.ascontiguousarray(q, dtype=np.float64).reshape(-1)
    cdef double a1 = qs[0], a2 = qs[1], a4 = qs[2], a5 = qs[3], beta = qs[4]
    cdef double d1 = qs[5], d2 = qs[6], d3 = qs[7]
    cdef double slope = a4 * beta + a5
    cdef double w, sh, ch, lhs, rhs, gl
    cdef double s_a1 = 0, s_a2 = 0, s_common = 0, s_d1 = 0, s_d2 = 0, s_d3 = 0
    cdef Py_ssize_t i, n = gs.shape[0]
    out1 = np.empty(n)
    outb = np.empty(n)
    cdef double[::1] g1 = out1
    cdef double[::1] gb = outb
    with nogil:
        for i in range(n):
            w = slope * xb[i]
            sh = sinh(w)
            ch = cosh(w)
            lhs = a1 * x1[i] + a2
            rhs = d1 * sh + d2 * xb[i] + d3
            gl = gs[i] * lhs
            g1[i] = gs[i] * a1 * rhs
            gb[i] = gl * (d1 * ch * slope + d2)
            s_a1 += gs[i] * x1[i] * rhs
            s_a2 += gs[i] * rhs
            s_common += gl * d1 * ch * xb[i]
            s_d1 += gl * sh
            s_d2 += gl * xb[i]
            s_d3 += gl
    gq = np.array([s_a1, s_a2, s_common * beta, s_common, s_common * a4, s_d1, s_d2, s_d3])
    return out1.reshape(arr.shape), outb.reshape(arr.shape), gq
