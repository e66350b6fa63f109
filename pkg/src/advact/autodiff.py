"""Dense float64 matrices and a define-by-run reverse-mode tape.

Every value is a 2-D ``float64`` ndarray.  A :class:`Tensor` wraps one such
matrix together with the parents it was computed from and a closure that
maps its own gradient to parent gradients.  Tensors are numbered at creation,
so sorting the reachable set by that number gives a valid tape order.
"""

import itertools
from contextlib import contextmanager

import numpy as np

from advact.errors import ContractError, NumericOverflowError, ShapeError

_counter = itertools.count()
_checked = False


def set_checked(flag):
    """Turn NaN/Inf rejection on or off globally; returns the previous setting."""
    global _checked
    previous, _checked = _checked, bool(flag)
    return previous


def is_checked():
    return _checked


@contextmanager
def checked_mode(flag=True):
    previous = set_checked(flag)
    try:
        yield
    finally:
        set_checked(previous)


def as_matrix(data):
    """Coerce ``data`` to a 2-D float64 array (scalars become 1x1, vectors 1xn)."""
    m = np.array(data, dtype=np.float64)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(1, -1)
    elif m.ndim != 2:
        raise ShapeError("matrices are 2-D", m.shape)
    if _checked and not np.all(np.isfinite(m)):
        raise NumericOverflowError("non-finite entry in matrix")
    return m


class Tensor:
    __slots__ = ("value", "grad", "parents", "op", "name", "requires_grad", "_backward", "_id")

    def __init__(self, value, parents=(), op="leaf", name=None, requires_grad=False, backward=None):
        self.value = as_matrix(value)
        self.grad = None
        self.parents = tuple(parents)
        self.op = op
        self.name = name
        self.requires_grad = requires_grad or any(p.requires_grad for p in self.parents)
        self._backward = backward
        self._id = next(_counter)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor({self.op}{label}, shape={self.shape})"

    def backward(self):
        backward(self)

    def zero_grad(self):
        self.grad = None

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def parameter(value, name=None):
    return Tensor(value, name=name, requires_grad=True)


def lift(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    if shape[0] == 1 and g.shape[0] != 1:
        g = g.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] != 1:
        g = g.sum(axis=1, keepdims=True)
    return g


def _check_broadcast(a, b):
    for da, db in zip(a.shape, b.shape):
        if da != db and da != 1 and db != 1:
            raise ShapeError("cannot broadcast", a.shape, b.shape)


def matmul(a, b):
    a, b = lift(a), lift(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError("matmul inner dimensions differ", a.shape, b.shape)
    av, bv = a.value, b.value

    def bwd(g):
        return g @ bv.T, av.T @ g

    return Tensor(av @ bv, (a, b), "matmul", backward=bwd)


def add(a, b):
    a, b = lift(a), lift(b)
    _check_broadcast(a, b)
    sa, sb = a.shape, b.shape

    def bwd(g):
        return _unbroadcast(g, sa), _unbroadcast(g, sb)

    return Tensor(a.value + b.value, (a, b), "add", backward=bwd)


def sub(a, b):
    a, b = lift(a), lift(b)
    _check_broadcast(a, b)
    sa, sb = a.shape, b.shape

    def bwd(g):
        return _unbroadcast(g, sa), -_unbroadcast(g, sb)

    return Tensor(a.value - b.value, (a, b), "sub", backward=bwd)


def mul(a, b):
    a, b = lift(a), lift(b)
    _check_broadcast(a, b)
    av, bv = a.value, b.value

    def bwd(g):
        return _unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)

    return Tensor(av * bv, (a, b), "mul", backward=bwd)


def square(a):
    a = lift(a)
    av = a.value
    return Tensor(av * av, (a,), "square", backward=lambda g: (2.0 * av * g,))


def total(a):
    """Sum of all entries as a 1x1 tensor."""
    a = lift(a)
    shape = a.shape
    return Tensor(a.value.sum(), (a,), "sum", backward=lambda g: (np.full(shape, g[0, 0]),))


def mean(a):
    a = lift(a)
    shape = a.shape
    n = a.value.size
    return Tensor(a.value.sum() / n, (a,), "mean",
                  backward=lambda g: (np.full(shape, g[0, 0] / n),))


def elementwise(x, vd, op, name=None):
    """Apply a kernel returning ``(value, derivative)`` and record it on the tape."""
    x = lift(x)
    v, d = vd(x.value)
    return Tensor(v, (x,), op, name=name, backward=lambda g: (g * d,))


def custom(parents, value, backward, op, name=None):
    """Record an operation whose gradient closure the caller supplies."""
    return Tensor(value, parents, op, name=name, backward=backward)


def backward(loss):
    """Propagate d(loss)/d(node) to every node reachable from ``loss``.

    Gradients accumulate into leaves, so call ``zero_grad`` (or let the
    optimizer do it) between steps.
    """
    if loss.shape != (1, 1):
        raise ContractError(f"backward needs a 1x1 loss, got {loss.shape}")
    nodes = {}
    stack = [loss]
    while stack:
        node = stack.pop()
        if node._id in nodes or not node.requires_grad:
            continue
        nodes[node._id] = node
        stack.extend(node.parents)

    pending = {loss._id: np.ones((1, 1))}
    for key in sorted(nodes, reverse=True):
        node = nodes[key]
        g = pending.pop(key, None)
        if g is None:
            continue
        if node._backward is None:
            node.grad = g if node.grad is None else node.grad + g
            if not np.all(np.isfinite(node.grad)):
                raise NumericOverflowError("non-finite gradient", layer=node.name or node.op)
            continue
        node.grad = g
        for parent, pg in zip(node.parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            if _checked and not np.all(np.isfinite(pg)):
                raise NumericOverflowError("non-finite gradient", layer=node.name or node.op)
            prev = pending.get(parent._id)
            pending[parent._id] = pg if prev is None else prev + pg


def finite_difference_grad(f, x, h=1e-5):
    """Central-difference gradient of scalar ``f`` at matrix ``x``."""
    if not h > 0:
        raise ContractError("step size must be positive")
    x = np.array(x, dtype=np.float64)
    grad = np.empty_like(x)
    probe = x.copy()
    for idx in np.ndindex(x.shape):
        orig = probe[idx]
        probe[idx] = orig + h
        fp = float(f(probe))
        probe[idx] = orig - h
        fm = float(f(probe))
        probe[idx] = orig
        grad[idx] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(analytic, numeric, floor=1e-8):
    """max|a - n| / max(max|n|, floor); the comparison used by all gradient checks."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(float(np.max(np.abs(numeric), initial=0.0)), floor)
    return float(np.max(np.abs(analytic - numeric), initial=0.0)) / scale


def gradcheck(loss_fn, params, h=1e-5):
    """Compare tape gradients of ``loss_fn()`` with central differences.

    ``params`` are leaf tensors that ``loss_fn`` reads; their values are
    perturbed in place and restored.  Returns the worst relative error.
    """
    for p in params:
        p.zero_grad()
    backward(loss_fn())
    worst = 0.0
    for p in params:
        analytic = p.grad.copy() if p.grad is not None else np.zeros(p.shape)
        saved = p.value

        def f(v, p=p):
            p.value = v
            return loss_fn().value[0, 0]

        numeric = finite_difference_grad(f, saved.copy(), h)
        p.value = saved
        worst = max(worst, relative_error(analytic, numeric))
    for p in params:
        p.zero_grad()
    return worst
