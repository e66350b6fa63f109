"""High-dimensional function graph decomposition (split-linear layers).

A split layer replaces ``act(x @ W)`` by ``f(x @ W_1, ..., x @ W_k)`` where
``f`` is a k-ary recombination formula that reduces to ``act`` when all
branch inputs coincide.  Three decompositions are provided: a 2-term and a
4-term Tanh, and a 4-term tanh-approximated GeLu.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from advact import kernels as K
from advact.adversarial import XiGeluParams, XiTanhParams, xi_gelu_op, xi_tanh2_op, xi_tanh_op
from advact.autodiff import Tensor, add, custom, matmul, parameter
from advact.errors import ContractError, NumericOverflowError, ShapeError, SpecError

EXP_LIMIT = 700.0

RECOMBINE_K = {"TANH2": 2, "TANH4": 4, "GELU4": 4, "XI_TANH2": 2, "XI_TANH4": 4, "XI_GELU4": 4}
ADVERSARIAL_OF = {"TANH2": "XI_TANH2", "TANH4": "XI_TANH4", "GELU4": "XI_GELU4"}
BASE_ACTIVATION = {"TANH2": "tanh", "TANH4": "tanh", "GELU4": "gelu"}


@dataclass(frozen=True)
class SplitPoint:
    """Per-branch pre-activations at one hidden unit."""

    chis: tuple

    def __post_init__(self):
        object.__setattr__(self, "chis", tuple(float(c) for c in self.chis))
        if not all(math.isfinite(c) for c in self.chis):
            raise ContractError("split inputs must be finite")

    def __iter__(self):
        return iter(self.chis)

    def __len__(self):
        return len(self.chis)


def _arrays(p, k):
    chis = tuple(np.asarray(c, dtype=np.float64) for c in p)
    if len(chis) != k:
        raise ContractError(f"expected {k} split inputs, got {len(chis)}")
    return chis


def _scalarize(values, p):
    if np.ndim(next(iter(p))) == 0:
        return tuple(float(v) for v in values)
    return tuple(values)


def _check_exp(chis):
    if any(np.any(np.abs(c) > EXP_LIMIT) for c in chis):
        raise NumericOverflowError(f"split input beyond |{EXP_LIMIT:g}|")


def tanh_split2(c1, c2):
    """sigmoid(c1) + sigmoid(c2) - 1; equals tanh(x) at c1 = c2 = 2x."""
    s1, _ = K.sigmoid_vd(np.asarray(c1, dtype=np.float64))
    s2, _ = K.sigmoid_vd(np.asarray(c2, dtype=np.float64))
    v = s1 + s2 - 1.0
    return float(v) if np.ndim(c1) == 0 else v


def tanh_split2_partials(c1, c2):
    _, d1 = K.sigmoid_vd(np.asarray(c1, dtype=np.float64))
    _, d2 = K.sigmoid_vd(np.asarray(c2, dtype=np.float64))
    return _scalarize((d1, d2), (c1,))


def tanh_split4(p):
    """(e^{c1} - e^{-c2}) / (e^{c3} + e^{-c4})."""
    chis = _arrays(p, 4)
    _check_exp(chis)
    return _scalarize(K.tanh_split4_vp(*chis)[:1], p)[0]


def tanh_split4_partials(p):
    chis = _arrays(p, 4)
    _check_exp(chis)
    return _scalarize(K.tanh_split4_vp(*chis)[1:], p)


def gelu_split4(p):
    """0.5 c1 (1 + tanh(sqrt(2/pi) c2 (1 + 0.044715 c3 c4)))."""
    return _scalarize(K.gelu_split4_vp(*_arrays(p, 4))[:1], p)[0]


def gelu_split4_partials(p):
    return _scalarize(K.gelu_split4_vp(*_arrays(p, 4))[1:], p)


def recombine(chis, tag, bank=None, clamp=None, on_clamp=None, name=None):
    """Record the k-ary recombination ``tag`` over branch tensors on the tape."""
    if len(chis) != RECOMBINE_K[tag]:
        raise ContractError(f"{tag} takes {RECOMBINE_K[tag]} branches, got {len(chis)}")
    if tag == "XI_TANH4":
        return xi_tanh_op(chis, bank, clamp, on_clamp, name)
    if tag == "XI_GELU4":
        return xi_gelu_op(chis, bank, clamp, on_clamp, name)
    if tag == "XI_TANH2":
        return xi_tanh2_op(chis, clamp, on_clamp, name)
    vals = [c.value for c in chis]
    if tag == "TANH2":
        s1, d1 = K.sigmoid_vd(vals[0])
        s2, d2 = K.sigmoid_vd(vals[1])
        out, partials = s1 + s2 - 1.0, (d1, d2)
    elif tag == "TANH4":
        out, *partials = K.tanh_split4_vp(*vals)
    elif tag == "GELU4":
        out, *partials = K.gelu_split4_vp(*vals)
    else:
        raise SpecError(f"unknown recombination {tag!r}")
    return custom(chis, out, lambda g: tuple(g * d for d in partials), tag.lower(), name=name)


def he_uniform(rng, fan_in, fan_out):
    limit = math.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def branch_width(hidden, n):
    width = math.floor(Fraction(hidden) / Fraction(n))
    if n < 1 or width < 1:
        raise SpecError(f"parallelism divisor {n} leaves no units out of {hidden}")
    return width


class SplitLinear:
    """k parallel linear maps feeding one recombination formula.

    ``hidden`` is the width of the dense layer being replaced; each branch
    has ``floor(hidden / n)`` units, which is also the layer's output width.
    """

    kind = "SPLIT_LINEAR"

    def __init__(self, in_dim, hidden, k, n, recombine, rng, bias=True, clamp=None,
                 name="split", penalized=None):
        if recombine not in RECOMBINE_K:
            raise SpecError(f"unknown recombination {recombine!r}")
        if RECOMBINE_K[recombine] != k:
            raise SpecError(f"{recombine} needs k={RECOMBINE_K[recombine]}, got k={k}")
        self.in_dim = in_dim
        self.hidden = hidden
        self.k = k
        self.n = n
        self.width = branch_width(hidden, n)
        self.recombine = recombine
        self.clamp = clamp
        self.name = name
        self.clamped = 0
        self.last_preact = None
        branch_rngs = rng.spawn(k)
        self.weights = [parameter(he_uniform(r, in_dim, self.width), name=f"{name}.W{i + 1}")
                        for i, r in enumerate(branch_rngs)]
        self.biases = ([parameter(np.zeros((1, self.width)), name=f"{name}.b{i + 1}")
                        for i in range(k)] if bias else [])
        self.bank = None
        if recombine == "XI_TANH4":
            self.bank = XiTanhParams(penalized, label=f"{name}.xi")
        elif recombine == "XI_GELU4":
            self.bank = XiGeluParams(penalized, label=f"{name}.xi")

    @property
    def out_dim(self):
        return self.width

    def _count_clamp(self, hits):
        self.clamped += hits

    def branches(self, x, order=None):
        """Branch pre-activations chi_i = x W_i (+ b_i), evaluated in ``order``."""
        x = x if isinstance(x, Tensor) else Tensor(x)
        if x.shape[1] != self.in_dim:
            raise ShapeError("split layer input width", x.shape, (x.shape[0], self.in_dim))
        out = [None] * self.k
        for i in (range(self.k) if order is None else order):
            chi = matmul(x, self.weights[i])
            if self.biases:
                chi = add(chi, self.biases[i])
            out[i] = chi
        return out

    def forward(self, x, training=True):
        chis = self.branches(x)
        self.last_preact = np.concatenate([c.value for c in chis], axis=1)
        return recombine(chis, self.recombine, self.bank, self.clamp, self._count_clamp, self.name)

    def parameters(self):
        params = [(w.name, w) for w in self.weights] + [(b.name, b) for b in self.biases]
        if self.bank is not None:
            params.append((self.bank.label, self.bank.tensor))
        return params

    def banks(self):
        return [] if self.bank is None else [self.bank]

    def weight_grads(self):
        grads = [w.grad for w in self.weights]
        if any(g is None for g in grads):
            return None
        return np.concatenate([g.ravel() for g in grads])

    def tie_branches(self):
        """Copy branch 1 into every branch (used to check reduction to the base activation)."""
        for w in self.weights[1:]:
            w.value = self.weights[0].value.copy()
        for b in self.biases[1:]:
            b.value = self.biases[0].value.copy()

    def manifest(self):
        return {"kind": self.kind, "name": self.name, "in": self.in_dim, "hidden": self.hidden,
                "k": self.k, "n": str(Fraction(self.n)), "width": self.width,
                "activation": self.recombine, "bias": bool(self.biases)}


def split_linear_forward(layer, x):
    return layer.forward(x)


def parallel_matrix_count(psi_i, psi_h, psi_o, k):
    """Parallelism divisor n that makes a k-term split MLP block parameter-neutral."""
    if min(psi_i, psi_h, psi_o, k) <= 0:
        raise ContractError("all dimensions must be positive")
    return Fraction(psi_i * psi_h * k + psi_h * psi_o, psi_i * psi_h + psi_h * psi_o)


def split_parameter_budget(psi_i, psi_h, psi_o, k, n):
    """Baseline and split parameter counts for one MLP block (no biases).

    ``exact_split`` uses hidden/n as a rational; ``split`` uses the floored
    branch width actually built, and ``deficit`` is baseline - split.
    """
    baseline = psi_i * psi_h + psi_h * psi_o
    per_branch = Fraction(psi_h) / Fraction(n)
    exact = psi_i * per_branch * k + per_branch * psi_o
    width = branch_width(psi_h, n)
    built = psi_i * width * k + width * psi_o
    return {"baseline": baseline, "exact_split": exact, "split": built, "deficit": baseline - built}
