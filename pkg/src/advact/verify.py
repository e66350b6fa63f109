"""Closed-form, reciprocity and accounting checks run by ``advact verify``.

Each check returns a :class:`Check` holding the measured worst deviation
and the tolerance it is held to.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from advact import activations as A
from advact import split as S
from advact.adversarial import E, XiGeluParams, XiTanhParams, xi_tanh_partials
from advact.autodiff import Tensor, backward, checked_mode, gradcheck
from advact.network import AlternationPolicy, LayerSpec, build_network, count_parameters
from advact.trainer import mse_loss

ALPHAS = (0.5, 1.0, 2.0)


@dataclass
class Check:
    name: str
    worst: float
    tol: float

    @property
    def passed(self):
        return bool(self.worst < self.tol)


def reciprocity():
    x = np.linspace(-6.0, 6.0, 1000)
    worst = float(np.max(np.abs(A.sigmoid_prime(x) * A.xi_sigmoid_prime(x) - 1.0)))
    for a in ALPHAS:
        prod = A.sigmoid_theta_prime(x, a) * A.xi_sigmoid_theta_prime(x, a)
        worst = max(worst, float(np.max(np.abs(prod - 1.0))))
    return Check("reciprocity sigma' * xi' = 1", worst, 1e-12)


def _rel(fd, exact):
    return float(np.max(np.abs(fd - exact) / np.maximum(np.abs(exact), 1e-300)))


def antiderivatives():
    x = np.linspace(-5.0, 5.0, 1001)
    h = 1e-5
    fd = (A.xi_sigmoid(x + h) - A.xi_sigmoid(x - h)) / (2 * h)
    worst = _rel(fd, (1 + np.exp(x)) ** 2 / np.exp(x))
    for a in ALPHAS:
        fd = (A.xi_sigmoid_theta(x + h, a) - A.xi_sigmoid_theta(x - h, a)) / (2 * h)
        worst = max(worst, _rel(fd, 1.0 / (A.sigmoid_prime(x) + a)))
    return Check("antiderivative finite differences", worst, 1e-6)


def tanh_identity():
    x = np.linspace(-10.0, 10.0, 2001)
    worst = float(np.max(np.abs(2.0 * A.sigmoid(2.0 * x) - 1.0 - np.tanh(x))))
    return Check("tanh(x) = 2 sigmoid(2x) - 1", worst, 1e-14)


def split_reduction():
    x = np.linspace(-6.0, 6.0, 1000)
    tanh, gelu = np.tanh(x), A.gelu_tanh_approx(x)
    worst = float(np.max(np.abs(S.tanh_split2(2 * x, 2 * x) - tanh)))
    worst = max(worst, float(np.max(np.abs(S.tanh_split4((x, x, x, x)) - tanh))))
    worst = max(worst, float(np.max(np.abs(S.gelu_split4((x, x, x, x)) - gelu))))
    return Check("split forms reduce to tanh / GELU", worst, 1e-12)


def parallel_counts():
    got = [S.parallel_matrix_count(768, 3072, 768, k) for k in (3, 4)]
    ok = got == [Fraction(2), Fraction(5, 2)]
    return Check("parallel matrix count k=3 -> 2, k=4 -> 5/2", 0.0 if ok else 1.0, 0.5)


def partial_reciprocity():
    rng = np.random.default_rng(0)
    p = rng.uniform(-2.0, 2.0, size=(4, 200))
    fwd = S.tanh_split4_partials(tuple(p))
    rev = xi_tanh_partials(tuple(p))
    worst = max(float(np.max(np.abs(f * r - 1.0))) for f, r in zip(fwd, rev))
    return Check("tanh-4 partials times adversarial partials = 1", worst, 1e-10)


def init_constants():
    t = XiTanhParams()
    worst = max(abs(t[n] - E) for n in ("alpha1", "alpha2", "alpha4", "alpha5", "alpha7",
                                        "alpha8", "alpha10", "alpha11"))
    worst = max(worst, *(abs(t[n]) for n in ("alpha3", "alpha6", "alpha9", "alpha12")))
    g = XiGeluParams()
    a4 = 20325.0 * math.sqrt(2.0) / (7103.0 * math.sqrt(math.pi))
    worst = max(worst, abs(g["alpha4"] - a4), abs(g["alpha5"] - 2.0 * math.sqrt(2.0 / math.pi)),
                abs(g["alpha2"]), abs(g["beta"] - 1.0))
    return Check("adversarial parameter initialisation", worst, 1e-15)


def network_gradcheck():
    specs = [LayerSpec("DENSE", 5), LayerSpec("ACTIVATION", activation="sigmoid_theta"),
             LayerSpec("DENSE", 4), LayerSpec("ACTIVATION", activation="sigmoid_theta"),
             LayerSpec("DENSE", 1)]
    net = build_network(specs, AlternationPolicy("GA", clamp=None), seed=3, input_dim=3)
    rng = np.random.default_rng(1)
    x = rng.uniform(-1.0, 1.0, size=(6, 3))
    y = rng.uniform(-1.0, 1.0, size=(6, 1))
    params = [p for _, p in net.parameters()]
    with checked_mode():
        worst = gradcheck(lambda: mse_loss(net.forward(Tensor(x)), y), params)
    return Check("3-layer network autodiff vs finite differences", worst, 1e-6)


def parameter_accounting():
    def block(hidden_kind, k, n, recombine):
        if hidden_kind == "DENSE":
            specs = [LayerSpec("DENSE", 3072, bias=False), LayerSpec("ACTIVATION", activation="tanh"),
                     LayerSpec("DENSE", 768, bias=False)]
        else:
            specs = [LayerSpec("SPLIT_LINEAR", 3072, recombine, k=k, n=n, bias=False),
                     LayerSpec("DENSE", 768, bias=False)]
        return count_parameters(build_network(specs, seed=0, input_dim=768))

    got = (block("DENSE", 1, 1, None), block("SPLIT", 4, 4, "TANH4"), block("SPLIT", 4, 4, "XI_TANH4"))
    ok = got == (4718592, 2949120, 2949120 + 12)
    return Check("parameter counts 4,718,592 / 2,949,120 (+12 scalars)", 0.0 if ok else 1.0, 0.5)


CHECKS = (reciprocity, antiderivatives, tanh_identity, split_reduction, parallel_counts,
          partial_reciprocity, init_constants, network_gradcheck, parameter_accounting)


def run_all():
    return [check() for check in CHECKS]


def format_table(results):
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  {'worst':>10}  {'tol':>8}  result"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {r.worst:>10.3g}  {r.tol:>8.0e}  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
