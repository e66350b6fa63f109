"""MLP assembly with adversarial alternation policies."""

import json
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from advact.activations import DEFAULT_ALPHA, activate, ga_pair, kernel_for
from advact.adversarial import PENALTY_MODES
from advact.autodiff import Tensor, add, custom, matmul, parameter
from advact.errors import ContractError, NumericOverflowError, ShapeError, SpecError
from advact.split import ADVERSARIAL_OF, RECOMBINE_K, SplitLinear, branch_width, he_uniform

LAYER_KINDS = ("DENSE", "SPLIT_LINEAR", "BATCHNORM", "ACTIVATION", "XI_ACTIVATION")
POLICY_MODES = ("NONE", "GA", "SA")
BRANCH_INITS = ("independent", "tied")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    width: int = 0
    activation: str = None
    k: int = 1
    n: Fraction = 1
    bias: bool = True

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise SpecError(f"unknown layer kind {self.kind!r}")


@dataclass(frozen=True)
class AlternationPolicy:
    """How activations are assigned across activated layers.

    In GA and SA mode the activated layers alternate between the two
    members of a pair, walking backward from the output so that the last
    one is always the original activation f and the one before it is ξ.

    ``penalize`` selects which ξ scalars enter the L2 penalty ("all" or
    "nonsingular"); ``branch_init="tied"`` copies branch 1 into every
    split branch so each split layer starts out equal to its base activation.
    """

    mode: str = "NONE"
    alpha: float = DEFAULT_ALPHA
    clamp: float = 10.0
    penalize: str = "all"
    branch_init: str = "independent"

    def __post_init__(self):
        if self.mode not in POLICY_MODES:
            raise SpecError(f"unknown policy mode {self.mode!r}")
        if self.penalize not in PENALTY_MODES:
            raise SpecError(f"penalize must be one of {PENALTY_MODES}")
        if self.branch_init not in BRANCH_INITS:
            raise SpecError(f"branch_init must be one of {BRANCH_INITS}")


class Dense:
    kind = "DENSE"

    def __init__(self, in_dim, out_dim, rng, bias=True, name="dense"):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.name = name
        self.W = parameter(he_uniform(rng, in_dim, out_dim), name=f"{name}.W")
        self.b = parameter(np.zeros((1, out_dim)), name=f"{name}.b") if bias else None
        self.last_preact = None

    def forward(self, x, training=True):
        if x.shape[1] != self.in_dim:
            raise ShapeError("dense input width", x.shape, (x.shape[0], self.in_dim))
        out = matmul(x, self.W)
        if self.b is not None:
            out = add(out, self.b)
        self.last_preact = out.value
        return out

    def parameters(self):
        return [(self.W.name, self.W)] + ([(self.b.name, self.b)] if self.b is not None else [])

    def banks(self):
        return []

    def weight_grads(self):
        return None if self.W.grad is None else self.W.grad.ravel()

    def manifest(self):
        return {"kind": self.kind, "name": self.name, "in": self.in_dim, "width": self.out_dim,
                "bias": self.b is not None}


class BatchNorm:
    """Per-feature standardisation with learnable scale and shift."""

    kind = "BATCHNORM"

    def __init__(self, width, momentum=0.1, eps=1e-5, name="bn"):
        self.in_dim = self.out_dim = width
        self.momentum = momentum
        self.eps = eps
        self.name = name
        self.gamma = parameter(np.ones((1, width)), name=f"{name}.gamma")
        self.beta = parameter(np.zeros((1, width)), name=f"{name}.beta")
        self.running_mean = np.zeros((1, width))
        self.running_var = np.ones((1, width))

    def forward(self, x, training=True):
        if x.shape[1] != self.in_dim:
            raise ShapeError("batchnorm input width", x.shape, (x.shape[0], self.in_dim))
        xv = x.value
        gamma, beta = self.gamma.value, self.beta.value
        if training:
            m = xv.shape[0]
            if m < 2:
                raise ContractError("batch norm needs at least 2 samples in training mode")
            mu = xv.mean(axis=0, keepdims=True)
            var = xv.var(axis=0, keepdims=True)
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mu
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * var * m / (m - 1)
        else:
            mu, var = self.running_mean, self.running_var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (xv - mu) * inv
        out = gamma * xhat + beta

        def bwd(g):
            dgamma = (g * xhat).sum(axis=0, keepdims=True)
            dbeta = g.sum(axis=0, keepdims=True)
            dxhat = g * gamma
            if training:
                dx = inv * (dxhat - dxhat.mean(axis=0, keepdims=True)
                            - xhat * (dxhat * xhat).mean(axis=0, keepdims=True))
            else:
                dx = dxhat * inv
            return dx, dgamma, dbeta

        return custom((x, self.gamma, self.beta), out, bwd, "batchnorm", name=self.name)

    def parameters(self):
        return [(self.gamma.name, self.gamma), (self.beta.name, self.beta)]

    def banks(self):
        return []

    def manifest(self):
        return {"kind": self.kind, "name": self.name, "width": self.in_dim}


def batchnorm_forward(x, state, training=True):
    return state.forward(x if isinstance(x, Tensor) else Tensor(x), training)


class Activation:
    def __init__(self, width, tag, alpha=DEFAULT_ALPHA, clamp=None, name="act"):
        kernel_for(tag, alpha)
        self.in_dim = self.out_dim = width
        self.tag = tag
        self.alpha = alpha
        self.clamp = clamp
        self.name = name
        self.clamped = 0

    @property
    def kind(self):
        return "XI_ACTIVATION" if self.tag.startswith("xi_") else "ACTIVATION"

    def _count(self, hits):
        self.clamped += hits

    def forward(self, x, training=True):
        return activate(x, self.tag, self.alpha, self.clamp, self.name, self._count)

    def parameters(self):
        return []

    def banks(self):
        return []

    def manifest(self):
        d = {"kind": self.kind, "name": self.name, "width": self.in_dim, "activation": self.tag}
        if "sigmoid_theta" in self.tag:
            d["alpha"] = self.alpha
        return d


class Network:
    def __init__(self, layers, input_dim, seed, policy):
        self.layers = layers
        self.input_dim = input_dim
        self.seed = seed
        self.policy = policy

    def forward(self, x, training=True):
        out = x if isinstance(x, Tensor) else Tensor(x)
        for layer in self.layers:
            try:
                out = layer.forward(out, training)
            except NumericOverflowError as exc:
                if "layer" in exc.context:
                    raise
                raise type(exc)(exc.base_message, **exc.context, layer=layer.name) from exc
        return out

    __call__ = forward

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def banks(self):
        return [b for layer in self.layers for b in layer.banks()]

    def zero_grad(self):
        for _, p in self.parameters():
            p.zero_grad()

    def activated_units(self):
        """(linear layer, activation tag) for every linear map followed by a nonlinearity."""
        units = []
        pending = None
        for layer in self.layers:
            if isinstance(layer, SplitLinear):
                units.append((layer, layer.recombine))
                pending = None
            elif isinstance(layer, Dense):
                pending = layer
            elif isinstance(layer, Activation) and pending is not None:
                units.append((pending, layer.tag))
                pending = None
        return units

    def activation_tags(self):
        return [tag for _, tag in self.activated_units()]

    def clamp_hits(self):
        return sum(getattr(layer, "clamped", 0) for layer in self.layers)

    def manifest(self):
        return {
            "seed": self.seed,
            "input_dim": self.input_dim,
            "policy": {"mode": self.policy.mode, "alpha": self.policy.alpha,
                       "clamp": self.policy.clamp, "penalize": self.policy.penalize,
                       "branch_init": self.policy.branch_init},
            "parameters": count_parameters(self),
            "layers": [layer.manifest() for layer in self.layers],
        }

    def manifest_text(self):
        return json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n"


def _assign(specs, policy):
    """Return specs with activation tags rewritten by the alternation policy."""
    if policy.mode == "NONE":
        return list(specs)
    specs = list(specs)
    if policy.mode == "GA":
        slots = [i for i, s in enumerate(specs) if s.kind in ("ACTIVATION", "XI_ACTIVATION")]
        if not slots:
            raise SpecError("GA policy needs at least one activation layer")
        bases = {specs[i].activation for i in slots}
        if len(bases) != 1:
            raise SpecError(f"GA policy needs one base activation, got {sorted(bases)}")
        pair = ga_pair(bases.pop(), policy.alpha)
        for depth_from_end, i in enumerate(reversed(slots)):
            tag = pair.f_tag if depth_from_end % 2 == 0 else pair.xi_tag
            kind = "XI_ACTIVATION" if tag.startswith("xi_") else "ACTIVATION"
            specs[i] = replace(specs[i], kind=kind, activation=tag)
        return specs
    slots = [i for i, s in enumerate(specs) if s.kind == "SPLIT_LINEAR"]
    if not slots:
        raise SpecError("SA policy needs at least one split-linear layer")
    for depth_from_end, i in enumerate(reversed(slots)):
        base = specs[i].activation
        if base not in ADVERSARIAL_OF:
            raise SpecError(f"SA policy has no adversarial form for {base!r}")
        tag = base if depth_from_end % 2 == 0 else ADVERSARIAL_OF[base]
        specs[i] = replace(specs[i], activation=tag)
    return specs


def build_network(specs, policy=None, seed=0, input_dim=None):
    """Instantiate layers from specs; initial parameters depend only on (specs, policy, seed)."""
    policy = policy or AlternationPolicy()
    specs = list(specs)
    if not specs:
        raise SpecError("network spec is empty")
    if input_dim is None or input_dim < 1:
        raise SpecError("input_dim must be a positive width")
    specs = _assign(specs, policy)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(specs))]
    penalized = policy.penalize
    layers = []
    width = input_dim
    for idx, (spec, rng) in enumerate(zip(specs, rngs)):
        name = f"{idx}.{spec.kind.lower()}"
        if spec.kind == "DENSE":
            if spec.width < 1:
                raise SpecError(f"layer {idx}: dense width must be positive")
            layer = Dense(width, spec.width, rng, spec.bias, name)
        elif spec.kind == "SPLIT_LINEAR":
            if spec.activation not in RECOMBINE_K:
                raise SpecError(f"layer {idx}: unknown recombination {spec.activation!r}")
            branch_width(spec.width, spec.n)
            clamp = policy.clamp if spec.activation.startswith("XI_") else None
            layer = SplitLinear(width, spec.width, spec.k, spec.n, spec.activation, rng,
                                spec.bias, clamp, name, penalized)
            if policy.branch_init == "tied":
                layer.tie_branches()
        elif spec.kind == "BATCHNORM":
            if spec.width and spec.width != width:
                raise SpecError(f"layer {idx}: batchnorm width {spec.width} != incoming {width}")
            layer = BatchNorm(width, name=name)
        else:
            if spec.width and spec.width != width:
                raise SpecError(f"layer {idx}: activation width {spec.width} != incoming {width}")
            tag = spec.activation or "identity"
            clamp = policy.clamp if tag.startswith("xi_") else None
            layer = Activation(width, tag, policy.alpha, clamp, name)
        layers.append(layer)
        width = layer.out_dim
    return Network(layers, input_dim, seed, policy)


def count_parameters(net):
    return int(sum(p.value.size for _, p in net.parameters()))


def mlp_specs(depth, width, out_dim, activation="sigmoid", batchnorm=True, split=None, bias=True):
    """Specs for ``depth`` activated layers plus a linear head.

    ``split`` = (k, n, recombine) turns every hidden layer into a split layer
    whose dense equivalent has ``width`` units.
    """
    specs = []
    for _ in range(depth):
        if batchnorm:
            specs.append(LayerSpec("BATCHNORM"))
        if split is None:
            specs.append(LayerSpec("DENSE", width, bias=bias))
            specs.append(LayerSpec("ACTIVATION", activation=activation))
        else:
            k, n, recombine = split
            specs.append(LayerSpec("SPLIT_LINEAR", width, recombine, k=k, n=n, bias=bias))
    specs.append(LayerSpec("DENSE", out_dim, bias=bias))
    return specs
