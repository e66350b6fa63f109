"""Split-adversarial functions for the 4-term Tanh and GeLu decompositions.

The adversarial Tanh is the sum of four per-term integrals whose
chi-dependent constants have been replaced by trainable scalars:

    T1 = -(a1 + a2) e^{-c1} + a3
    T2 = -(a4 + a5) e^{-c2} + a6
    T3 = a7 (e^{-c3} / a8^2 - e^{c3} - 2 c3 / a8) / (a7 a8 - 1) + a9
    T4 = a10 (a11^2 e^{c4} - e^{-c4} - 2 a11 c4) / (a10 a11 - 1) + a12

The adversarial GeLu uses the simplified two-input form

    (a1 c1 + a2) * (d1 sinh((a4 beta + a5) cbar) + d2 cbar + d3)

with cbar the mean of the last three branch pre-activations.
"""

import math
from dataclasses import dataclass

import numpy as np

from advact import kernels as K
from advact.autodiff import custom, lift, parameter
from advact.errors import ContractError, NumericOverflowError, SingularityError

E = math.e
SQRT_2_PI = math.sqrt(2.0 / math.pi)
GELU_K = 0.044715
SINGULAR_EPS = 1e-8
DEFAULT_CLAMP = 10.0
EXP_LIMIT = 700.0


def clamp_gradient(g, bound):
    if not bound > 0:
        raise ContractError("clamp bound must be positive")
    return np.clip(np.asarray(g, dtype=np.float64), -bound, bound)


@dataclass
class ClampPolicy:
    """Where and how hard singular reciprocal partials are clipped."""

    bound: float = DEFAULT_CLAMP
    eps: float = SINGULAR_EPS
    hits: int = 0


class TrainableScalar:
    """View of one entry of a :class:`ScalarBank`."""

    def __init__(self, bank, index):
        self._bank = bank
        self._index = index

    @property
    def name(self):
        return self._bank.names[self._index]

    @property
    def value(self):
        return float(self._bank.tensor.value[0, self._index])

    @value.setter
    def value(self, v):
        self._bank.tensor.value[0, self._index] = v

    @property
    def init(self):
        return float(self._bank.init[self._index])

    @property
    def penalized(self):
        return bool(self._bank.penalized[self._index])

    @property
    def grad(self):
        g = self._bank.tensor.grad
        return 0.0 if g is None else float(g[0, self._index])

    def __repr__(self):
        return f"TrainableScalar({self.name}={self.value:.6g})"


class ScalarBank:
    """A named set of trainable scalars held in one 1 x m parameter tensor."""

    def __init__(self, names, init, penalized=None, label="scalars"):
        self.names = tuple(names)
        self.init = np.array(init, dtype=np.float64)
        if penalized is None or isinstance(penalized, str):
            penalized = np.ones(len(self.names), dtype=bool)
        self.penalized = np.array(penalized, dtype=bool)
        if self.penalized.shape != (len(self.names),):
            raise ContractError(f"penalty mask needs {len(self.names)} flags")
        self.tensor = parameter(self.init.copy(), name=label)
        self.label = label

    def __len__(self):
        return len(self.names)

    def __getitem__(self, name):
        return float(self.tensor.value[0, self.names.index(name)])

    def __setitem__(self, name, value):
        self.tensor.value[0, self.names.index(name)] = value

    @property
    def values(self):
        return self.tensor.value[0]

    def scalars(self):
        return [TrainableScalar(self, i) for i in range(len(self.names))]

    def reset(self):
        self.tensor.value = self.init.reshape(1, -1).copy()


XI_TANH_NAMES = tuple(f"alpha{i}" for i in range(1, 13))


def xi_tanh_init():
    """Initial values: every exponential-derived coefficient is e, constants of integration 0."""
    v = {name: E for name in XI_TANH_NAMES}
    for name in ("alpha3", "alpha6", "alpha9", "alpha12"):
        v[name] = 0.0
    return v


# Scalars whose products alpha7*alpha8 and alpha10*alpha11 sit in a denominator.
XI_TANH_DENOMINATOR = ("alpha7", "alpha8", "alpha10", "alpha11")
PENALTY_MODES = ("all", "nonsingular")


class XiTanhParams(ScalarBank):
    """ξ_Tanh scalars.  ``penalized="nonsingular"`` leaves the denominator
    scalars out of the L2 penalty, since shrinking them drives the
    products toward the singular value 1."""

    def __init__(self, penalized=None, label="xi_tanh"):
        init = xi_tanh_init()
        if penalized == "nonsingular":
            penalized = [n not in XI_TANH_DENOMINATOR for n in XI_TANH_NAMES]
        super().__init__(XI_TANH_NAMES, [init[n] for n in XI_TANH_NAMES], penalized, label)


def xi_gelu_unsimplified_init():
    """The sixteen per-term constants before the simplification step."""
    pi = math.pi
    sqrt2, sqrtpi = math.sqrt(2.0), math.sqrt(pi)
    tail = 1.0 / (0.5 * (1.0 + math.tanh(SQRT_2_PI * (1.0 + GELU_K))))
    v = {
        "alpha1": tail,
        "alpha2": 0.0,
        "alpha3": 17757500000.0 * pi / 10418555191.0,
        "alpha4": 20325.0 * sqrt2 / (7103.0 * sqrtpi),
        "alpha5": 2.0 * SQRT_2_PI,
        "alpha6": 78125.32 * math.sqrt(2.0 * pi) / 301716.0,
        "alpha7": 0.0,
        "alpha8": 185011841.0 * pi / 3029441250.0,
        "alpha9": 26047.0 * sqrtpi / (74525.0 * sqrt2),
        "alpha10": 0.0,
        "alpha11": 185011841.0 * pi / 3029441250.0,
        "alpha12": 26047.0 * sqrtpi / (74525.0 * sqrt2),
        "alpha13": 0.0,
        "beta1": 1.0,
        "beta2": 1.0,
        "beta3": 1.0,
    }
    return v


XI_GELU_NAMES = ("alpha1", "alpha2", "alpha4", "alpha5", "beta", "delta1", "delta2", "delta3")


class XiGeluParams(ScalarBank):
    """Trainable scalars of the simplified adversarial GeLu.

    ``unsimplified`` keeps the full per-term table the simplified
    parameters are averaged from.
    """

    def __init__(self, penalized=None, label="xi_gelu"):
        u = xi_gelu_unsimplified_init()
        self.unsimplified = u
        init = {
            "alpha1": u["alpha1"],
            "alpha2": u["alpha2"],
            "alpha4": u["alpha4"],
            "alpha5": u["alpha5"],
            "beta": u["beta1"] * u["beta2"] * u["beta3"],
            "delta1": (u["alpha3"] + u["alpha8"] + u["alpha11"]) / 3.0,
            "delta2": (u["alpha6"] + u["alpha9"] + u["alpha12"]) / 3.0,
            "delta3": (u["alpha7"] + u["alpha10"] + u["alpha13"]) / 3.0,
        }
        super().__init__(XI_GELU_NAMES, [init[n] for n in XI_GELU_NAMES], penalized, label)


def _chis(p, k=4):
    chis = tuple(np.asarray(c, dtype=np.float64) for c in p)
    if len(chis) != k:
        raise ContractError(f"expected {k} split inputs, got {len(chis)}")
    return chis


def _out(value, p):
    return float(value) if np.ndim(p[0]) == 0 else value


def xi_tanh_partials(p, policy=None):
    """Reciprocals of the four partials of the 4-term Tanh split.

    Where ``|e^{-c2} - e^{c1}| < policy.eps`` the third and fourth entries
    are singular; they are replaced by ``+-policy.bound`` and
    ``policy.hits`` counts the replacements.
    """
    policy = policy or ClampPolicy()
    c1, c2, c3, c4 = _chis(p)
    e1, em2, e3, em4 = np.exp(c1), np.exp(-c2), np.exp(c3), np.exp(-c4)
    den = e3 + em4
    gap = em2 - e1
    singular = np.abs(gap) < policy.eps
    safe_gap = np.where(singular, 1.0, gap)
    d1 = den / e1
    d2 = den / em2
    d3 = den * den / (safe_gap * e3)
    d4 = den * den / (-safe_gap * em4)
    if np.any(singular):
        policy.hits += int(np.sum(singular))
        sign = np.where(gap >= 0, 1.0, -1.0)
        d3 = np.where(singular, sign * policy.bound, d3)
        d4 = np.where(singular, -sign * policy.bound, d4)
    return tuple(_out(d, p) for d in (d1, d2, d3, d4))


def _values(params):
    return params.values if isinstance(params, ScalarBank) else np.asarray(params, dtype=np.float64)


def _check_tanh_params(a):
    if abs(a[6] * a[7] - 1.0) < SINGULAR_EPS or abs(a[9] * a[10] - 1.0) < SINGULAR_EPS:
        raise SingularityError("alpha7*alpha8 or alpha10*alpha11 is 1")


def xi_tanh_terms(p, params):
    """The four integrated terms separately (same order as the split inputs)."""
    a = _values(params)
    _check_tanh_params(a)
    c1, c2, c3, c4 = _chis(p)
    t1 = -(a[0] + a[1]) * np.exp(-c1) + a[2]
    t2 = -(a[3] + a[4]) * np.exp(-c2) + a[5]
    t3 = a[6] * (np.exp(-c3) / a[7] ** 2 - np.exp(c3) - 2.0 * c3 / a[7]) / (a[6] * a[7] - 1.0) + a[8]
    t4 = a[9] * (a[10] ** 2 * np.exp(c4) - np.exp(-c4) - 2.0 * a[10] * c4) / (a[9] * a[10] - 1.0) + a[11]
    return tuple(_out(t, p) for t in (t1, t2, t3, t4))


def xi_tanh_forward(p, params):
    a = _values(params)
    _check_tanh_params(a)
    chis = _chis(p)
    if any(np.any(np.abs(c) > EXP_LIMIT) for c in chis):
        raise NumericOverflowError("split input outside the exp range")
    return _out(K.xi_tanh_fwd(*chis, a), p)


def xi_gelu_forward(c1, cbar, params):
    q = _values(params)
    c1 = np.asarray(c1, dtype=np.float64)
    cbar = np.asarray(cbar, dtype=np.float64)
    if np.any(np.abs((q[2] * q[4] + q[3]) * cbar) > EXP_LIMIT):
        raise NumericOverflowError("sinh argument outside the float range")
    v = K.xi_gelu_fwd(c1, cbar, q)
    return float(v) if np.ndim(c1) == 0 else v


def xi_tanh2(c1, c2):
    """Adversarial of the 2-term Tanh split: the Sigmoid adversarial of each term, summed."""
    v1, _ = K.xi_sigmoid_vd(np.asarray(c1, dtype=np.float64))
    v2, _ = K.xi_sigmoid_vd(np.asarray(c2, dtype=np.float64))
    v = v1 + v2
    return float(v) if np.ndim(c1) == 0 else v


def l2_penalty(banks, coeff):
    """coeff * sum of squares of every penalized scalar, as a 1x1 tape node."""
    if coeff < 0:
        raise ContractError("L2 coefficient must be >= 0")
    banks = list(banks)
    total = 0.0
    for b in banks:
        v = b.tensor.value[0]
        total += float(np.sum(v[b.penalized] ** 2))

    def bwd(g):
        return tuple(2.0 * coeff * g[0, 0] * b.tensor.value * b.penalized for b in banks)

    return custom([b.tensor for b in banks], coeff * total, bwd, "l2_penalty")


def _clip(g, clamp, on_clamp):
    if clamp is None:
        return g
    hit = np.abs(g) > clamp
    if on_clamp is not None and hit.any():
        on_clamp(int(hit.sum()))
    return clamp_gradient(g, clamp)


def xi_tanh_op(chis, bank, clamp=None, on_clamp=None, name=None):
    """Tape node for the adversarial 4-term Tanh; gradients reach chis and the bank."""
    chis = [lift(c) for c in chis]
    a = bank.tensor.value[0].copy()
    _check_tanh_params(a)
    vals = [c.value for c in chis]
    out = K.xi_tanh_fwd(*vals, a)

    def bwd(g):
        g1, g2, g3, g4, ga = K.xi_tanh_bwd(g, *vals, a)
        return tuple(_clip(gi, clamp, on_clamp) for gi in (g1, g2, g3, g4)) + (ga.reshape(1, -1),)

    return custom(chis + [bank.tensor], out, bwd, "xi_tanh4", name=name)


def xi_gelu_op(chis, bank, clamp=None, on_clamp=None, name=None):
    chis = [lift(c) for c in chis]
    q = bank.tensor.value[0].copy()
    c1 = chis[0].value
    cbar = (chis[1].value + chis[2].value + chis[3].value) / 3.0
    if np.any(np.abs((q[2] * q[4] + q[3]) * cbar) > EXP_LIMIT):
        raise NumericOverflowError("sinh argument outside the float range", layer=name)
    out = K.xi_gelu_fwd(c1, cbar, q)

    def bwd(g):
        g1, gbar, gq = K.xi_gelu_bwd(g, c1, cbar, q)
        g1 = _clip(g1, clamp, on_clamp)
        gbar = _clip(gbar / 3.0, clamp, on_clamp)
        return (g1, gbar, gbar, gbar, gq.reshape(1, -1))

    return custom(chis + [bank.tensor], out, bwd, "xi_gelu4", name=name)


def xi_tanh2_op(chis, clamp=None, on_clamp=None, name=None):
    chis = [lift(c) for c in chis]
    v1, d1 = K.xi_sigmoid_vd(chis[0].value)
    v2, d2 = K.xi_sigmoid_vd(chis[1].value)

    def bwd(g):
        return _clip(g * d1, clamp, on_clamp), _clip(g * d2, clamp, on_clamp)

    return custom(chis, v1 + v2, bwd, "xi_tanh2", name=name)

