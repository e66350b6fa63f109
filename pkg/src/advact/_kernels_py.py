"""Pure numpy implementation of the elementwise kernels.

This is the fallback used when the compiled ``_kernels`` extension is not
available; it is also the reference the compiled kernels are tested against.
Every function takes float64 arrays of one common shape (``a``/``q`` are
short parameter vectors) and returns arrays of that shape.  No argument
validation happens here; see :mod:`advact.activations` for the checked API.
"""

import numpy as np

GELU_C = float(np.sqrt(2.0 / np.pi))
GELU_K = 0.044715


def _sig_parts(x):
    # z = e^{-|x|} keeps both branches inside the float range
    z = np.exp(-np.abs(x))
    inv = 1.0 / (1.0 + z)
    v = np.where(x >= 0, inv, z * inv)
    # rounding can push the product one ulp past the true maximum 0.25
    return v, np.minimum(z * inv * inv, 0.25)


def sigmoid_vd(x):
    return _sig_parts(x)


def sigmoid_theta_vd(x, alpha):
    v, d = _sig_parts(x)
    return v + alpha * x, d + alpha


def xi_sigmoid_vd(x):
    ep = np.exp(x)
    em = np.exp(-x)
    return ep - em + 2.0 * x, ep + 2.0 + em


def xi_sigmoid_theta_vd(x, alpha):
    r = np.sqrt(4.0 * alpha + 1.0)
    p = 2.0 * alpha + 1.0 + r
    q = 2.0 * alpha + 1.0 - r
    z = np.exp(-np.abs(x))
    # ln(2a e^x + p) - ln(2a e^x + q), rewritten per sign of x to avoid e^x
    pos = np.log1p(p * z / (2.0 * alpha)) - np.log1p(q * z / (2.0 * alpha))
    neg = (np.log1p(2.0 * alpha * z / p) + np.log(p)
           - np.log1p(2.0 * alpha * z / q) - np.log(q))
    log_ratio = np.where(x >= 0, pos, neg)
    v = log_ratio / (alpha * r) + x / alpha
    _, sd = _sig_parts(x)
    return v, 1.0 / (sd + alpha)


def tanh_vd(x):
    s, sd = _sig_parts(2.0 * x)
    return 2.0 * s - 1.0, 4.0 * sd


def gelu_vd(x):
    u = GELU_C * (x + GELU_K * x ** 3)
    t, sech2 = tanh_vd(u)
    v = 0.5 * x * (1.0 + t)
    d = 0.5 * (1.0 + t) + 0.5 * x * sech2 * GELU_C * (1.0 + 3.0 * GELU_K * x * x)
    return v, d


def tanh_split4_vp(c1, c2, c3, c4):
    e1 = np.exp(c1)
    em2 = np.exp(-c2)
    e3 = np.exp(c3)
    em4 = np.exp(-c4)
    num = e1 - em2
    den = e3 + em4
    den2 = den * den
    return (num / den, e1 / den, em2 / den, -num * e3 / den2, num * em4 / den2)


def gelu_split4_vp(c1, c2, c3, c4):
    inner = 1.0 + GELU_K * c3 * c4
    z = GELU_C * c2 * inner
    t, sech2 = tanh_vd(z)
    half = 0.5 * c1 * sech2 * GELU_C
    return (0.5 * c1 * (1.0 + t), 0.5 * (1.0 + t), half * inner,
            half * c2 * GELU_K * c4, half * c2 * GELU_K * c3)


def xi_tanh_fwd(c1, c2, c3, c4, a):
    a1, a2, a3, a4, a5, a6, a7, a8, a9, a10, a11, a12 = (float(v) for v in a)
    t1 = -(a1 + a2) * np.exp(-c1) + a3
    t2 = -(a4 + a5) * np.exp(-c2) + a6
    t3 = a7 * (np.exp(-c3) / (a8 * a8) - np.exp(c3) - 2.0 * c3 / a8) / (a7 * a8 - 1.0) + a9
    t4 = a10 * (a11 * a11 * np.exp(c4) - np.exp(-c4) - 2.0 * a11 * c4) / (a10 * a11 - 1.0) + a12
    return ((t1 + t2) + t3) + t4


def xi_tanh_bwd(g, c1, c2, c3, c4, a):
    """Gradients of ``sum(g * xi_tanh_fwd(...))`` w.r.t. the four inputs and ``a``."""
    a1, a2, a3, a4, a5, a6, a7, a8, a9, a10, a11, a12 = (float(v) for v in a)
    em1 = np.exp(-c1)
    em2 = np.exp(-c2)
    e3, em3 = np.exp(c3), np.exp(-c3)
    e4, em4 = np.exp(c4), np.exp(-c4)
    q3 = a7 * a8 - 1.0
    q4 = a10 * a11 - 1.0
    p3 = em3 / (a8 * a8) - e3 - 2.0 * c3 / a8
    p4 = a11 * a11 * e4 - em4 - 2.0 * a11 * c4

    g1 = g * (a1 + a2) * em1
    g2 = g * (a4 + a5) * em2
    g3 = g * a7 * (-em3 / (a8 * a8) - e3 - 2.0 / a8) / q3
    g4 = g * a10 * (a11 * a11 * e4 + em4 - 2.0 * a11) / q4

    ga = np.empty(12)
    ga[0] = ga[1] = -np.sum(g * em1)
    ga[2] = np.sum(g)
    ga[3] = ga[4] = -np.sum(g * em2)
    ga[5] = ga[2]
    ga[6] = -np.sum(g * p3) / (q3 * q3)
    dp3 = -2.0 * em3 / a8 ** 3 + 2.0 * c3 / (a8 * a8)
    ga[7] = np.sum(g * (a7 * dp3 / q3 - a7 * a7 * p3 / (q3 * q3)))
    ga[8] = ga[2]
    ga[9] = -np.sum(g * p4) / (q4 * q4)
    dp4 = 2.0 * a11 * e4 - 2.0 * c4
    ga[10] = np.sum(g * (a10 * dp4 / q4 - a10 * a10 * p4 / (q4 * q4)))
    ga[11] = ga[2]
    return g1, g2, g3, g4, ga


def xi_gelu_fwd(c1, cbar, q):
    a1, a2, a4, a5, beta, d1, d2, d3 = (float(v) for v in q)
    w = (a4 * beta + a5) * cbar
    return (a1 * c1 + a2) * (d1 * np.sinh(w) + d2 * cbar + d3)


def xi_gelu_bwd(g, c1, cbar, q):
    """Gradients of ``sum(g * xi_gelu_fwd(...))``; ``q`` is (a1, a2, a4, a5, beta, d1, d2, d3)."""
    a1, a2, a4, a5, beta, d1, d2, d3 = (float(v) for v in q)
    slope = a4 * beta + a5
    w = slope * cbar
    sh = np.sinh(w)
    ch = np.cosh(w)
    lhs = a1 * c1 + a2
    rhs = d1 * sh + d2 * cbar + d3
    g_c1 = g * a1 * rhs
    g_bar = g * lhs * (d1 * ch * slope + d2)
    glhs = g * lhs
    common = np.sum(glhs * d1 * ch * cbar)
    gq = np.array([
        np.sum(g * c1 * rhs),
        np.sum(g * rhs),
        common * beta,
        common,
        common * a4,
        np.sum(glhs * sh),
        np.sum(glhs * cbar),
        np.sum(glhs),
    ])
    return g_c1, g_bar, gq
