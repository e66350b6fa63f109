"""Standard activations and the Sigmoid adversarial pairs.

The scalar functions accept Python floats or numpy arrays and return the
same kind.  The adversarial member of a pair is written ``xi_*``: its
derivative is the reciprocal of the (possibly lifted) Sigmoid derivative,
and its integration constant is fixed to 0.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from advact import kernels as K
from advact.adversarial import clamp_gradient
from advact.autodiff import elementwise, lift, custom
from advact.errors import DomainError, NumericOverflowError, SingularityError

EXP_LIMIT = 700.0
DEFAULT_ALPHA = 1.0


def _apply(fn, x, *args):
    arr = np.asarray(x, dtype=np.float64)
    out = fn(arr, *args)
    if np.ndim(x) == 0:
        return float(out)
    return out


def _check_alpha(alpha):
    if not alpha > 0:
        raise DomainError(f"lift alpha must be > 0, got {alpha}")


def _check_exp_range(x):
    if np.any(np.abs(np.asarray(x)) > EXP_LIMIT):
        raise NumericOverflowError(f"|x| > {EXP_LIMIT:g} leaves the exp range")


def sigmoid(x):
    return _apply(lambda a: K.sigmoid_vd(a)[0], x)


def sigmoid_prime(x):
    return _apply(lambda a: K.sigmoid_vd(a)[1], x)


def xi_sigmoid(x):
    """e^x - e^-x + 2x, the antiderivative of (1 + e^x)^2 / e^x."""
    _check_exp_range(x)
    return _apply(lambda a: K.xi_sigmoid_vd(a)[0], x)


def xi_sigmoid_prime(x):
    _check_exp_range(x)
    return _apply(lambda a: K.xi_sigmoid_vd(a)[1], x)


def sigmoid_theta(x, alpha=DEFAULT_ALPHA):
    _check_alpha(alpha)
    return _apply(lambda a: K.sigmoid_theta_vd(a, alpha)[0], x)


def sigmoid_theta_prime(x, alpha=DEFAULT_ALPHA):
    """sigma'(x) + alpha, valued in (alpha, alpha + 0.25)."""
    _check_alpha(alpha)
    return _apply(lambda a: K.sigmoid_theta_vd(a, alpha)[1], x)


def _check_pole(x, alpha):
    r = math.sqrt(4.0 * alpha + 1.0)
    q = 2.0 * alpha + 1.0 - r
    with np.errstate(over="ignore"):
        arg = 2.0 * alpha * np.exp(np.asarray(x, dtype=np.float64)) + q
    if np.any(np.abs(arg) < 1e-300):
        raise SingularityError("log argument of the lifted adversarial function vanishes")


def xi_sigmoid_theta(x, alpha=DEFAULT_ALPHA):
    """Antiderivative of 1 / (sigma'(x) + alpha), integration constant 0."""
    _check_alpha(alpha)
    _check_pole(x, alpha)
    return _apply(lambda a: K.xi_sigmoid_theta_vd(a, alpha)[0], x)


def xi_sigmoid_theta_prime(x, alpha=DEFAULT_ALPHA):
    """(1 + e^x)^2 / (e^x + alpha (1 + e^x)^2), valued in (1/(0.25 + alpha), 1/alpha)."""
    _check_alpha(alpha)
    return _apply(lambda a: K.xi_sigmoid_theta_vd(a, alpha)[1], x)


def tanh(x):
    """2 sigmoid(2x) - 1."""
    return _apply(lambda a: K.tanh_vd(a)[0], x)


def tanh_prime(x):
    return _apply(lambda a: K.tanh_vd(a)[1], x)


def gelu_tanh_approx(x):
    return _apply(lambda a: K.gelu_vd(a)[0], x)


def gelu_prime(x):
    return _apply(lambda a: K.gelu_vd(a)[1], x)


def relu(x):
    return _apply(lambda a: np.maximum(a, 0.0), x)


def relu_prime(x):
    return _apply(lambda a: (a > 0).astype(np.float64), x)


@dataclass(frozen=True)
class GaPair:
    """An activation and its adversarial counterpart.

    ``f_sup`` and ``xi_sup`` are the suprema of the two derivative ranges.
    ``small_member`` reports which one is smaller; network alternation
    always ends on f regardless.
    """

    name: str
    f: Callable
    f_prime: Callable
    xi: Callable
    xi_prime: Callable
    alpha: float
    f_tag: str
    xi_tag: str
    f_sup: float
    xi_sup: float

    def small_member(self):
        return "f" if self.f_sup <= self.xi_sup else "xi"

    def small_tag(self):
        return self.f_tag if self.small_member() == "f" else self.xi_tag

    def large_tag(self):
        return self.xi_tag if self.small_member() == "f" else self.f_tag


def sigmoid_pair():
    return GaPair("sigmoid", sigmoid, sigmoid_prime, xi_sigmoid, xi_sigmoid_prime,
                  0.0, "sigmoid", "xi_sigmoid", 0.25, math.inf)


def sigmoid_theta_pair(alpha=DEFAULT_ALPHA):
    _check_alpha(alpha)
    return GaPair(
        "sigmoid_theta",
        lambda x: sigmoid_theta(x, alpha),
        lambda x: sigmoid_theta_prime(x, alpha),
        lambda x: xi_sigmoid_theta(x, alpha),
        lambda x: xi_sigmoid_theta_prime(x, alpha),
        alpha, "sigmoid_theta", "xi_sigmoid_theta", alpha + 0.25, 1.0 / alpha,
    )


def ga_pair(base, alpha=DEFAULT_ALPHA):
    if base == "sigmoid":
        return sigmoid_pair()
    if base == "sigmoid_theta":
        return sigmoid_theta_pair(alpha)
    raise DomainError(f"no global adversarial pair for {base!r}")


def _relu_vd(a):
    return np.maximum(a, 0.0), (a > 0).astype(np.float64)


def _identity_vd(a):
    return a, np.ones_like(a)


def kernel_for(tag, alpha=DEFAULT_ALPHA):
    """Return a ``(value, derivative)`` kernel for an activation tag."""
    table = {
        "sigmoid": K.sigmoid_vd,
        "xi_sigmoid": K.xi_sigmoid_vd,
        "sigmoid_theta": lambda a: K.sigmoid_theta_vd(a, alpha),
        "xi_sigmoid_theta": lambda a: K.xi_sigmoid_theta_vd(a, alpha),
        "tanh": K.tanh_vd,
        "gelu": K.gelu_vd,
        "relu": _relu_vd,
        "identity": _identity_vd,
    }
    if tag in ("sigmoid_theta", "xi_sigmoid_theta"):
        _check_alpha(alpha)
    try:
        return table[tag]
    except KeyError:
        raise DomainError(f"unknown activation {tag!r}") from None


ACTIVATION_TAGS = ("sigmoid", "xi_sigmoid", "sigmoid_theta", "xi_sigmoid_theta",
                   "tanh", "gelu", "relu", "identity")


def activate(x, tag, alpha=DEFAULT_ALPHA, clamp=None, name=None, on_clamp=None):
    """Record an elementwise activation on the tape.

    For adversarial tags a positive ``clamp`` bounds the gradient leaving the
    op; ``on_clamp(n)`` is told how many entries were clipped.
    """
    vd = kernel_for(tag, alpha)
    if clamp is None or not tag.startswith("xi_"):
        return elementwise(x, vd, tag, name=name)
    x = lift(x)
    v, d = vd(x.value)

    def bwd(g):
        out = g * d
        hit = np.abs(out) > clamp
        if on_clamp is not None and hit.any():
            on_clamp(int(hit.sum()))
        return (clamp_gradient(out, clamp),)

    return custom((x,), v, bwd, tag, name=name)
