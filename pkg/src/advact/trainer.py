"""Minibatch SGD with step-decayed learning rate."""

from dataclasses import asdict, dataclass, field

import numpy as np

from advact.adversarial import l2_penalty
from advact.autodiff import Tensor, add, backward, custom, mean, square, sub
from advact.errors import ContractError, NumericOverflowError

LOSSES = ("MSE", "CROSS_ENTROPY")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch_size: int = 128
    lr: float = 0.1
    lr_half_life: int = 20
    l2_coeff: float = 0.0
    seed: int = 0
    loss: str = "MSE"
    grad_clip: float = 0.0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.lr <= 0 or self.lr_half_life < 1:
            raise ContractError("epochs >= 0, batch_size >= 1, lr > 0 and lr_half_life >= 1 required")
        if self.l2_coeff < 0 or self.grad_clip < 0:
            raise ContractError("l2_coeff and grad_clip must be >= 0")
        if self.loss not in LOSSES:
            raise ContractError(f"loss must be one of {LOSSES}")


def lr_at(epoch, cfg):
    """lr * 0.5 ** floor(epoch / half_life)."""
    if epoch < 0:
        raise ContractError("epoch must be >= 0")
    return cfg.lr * 0.5 ** (epoch // cfg.lr_half_life)


def sgd_step(net, lr):
    """param <- param - lr * grad for every parameter, then clear gradients."""
    params = net.parameters() if hasattr(net, "parameters") else net
    for name, p in params:
        if p.grad is None:
            continue
        if not np.all(np.isfinite(p.grad)):
            raise NumericOverflowError("non-finite gradient", layer=name)
        p.value = p.value - lr * p.grad
        p.grad = None


def clip_grad_norm(params, max_norm):
    """Rescale all gradients so their joint L2 norm is at most ``max_norm``; return the norm."""
    grads = [p.grad for _, p in params if p.grad is not None]
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for _, p in params:
            if p.grad is not None:
                p.grad = p.grad * scale
    return norm


def mse_loss(pred, target):
    return mean(square(sub(pred, target)))


def cross_entropy(logits, labels):
    """Mean negative log-likelihood of integer ``labels`` under softmax(logits)."""
    z = logits.value
    shifted = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logsum
    rows = np.arange(z.shape[0])
    loss = -logp[rows, labels].mean()

    def bwd(g):
        probs = np.exp(logp)
        probs[rows, labels] -= 1.0
        return (g[0, 0] * probs / z.shape[0],)

    return custom((logits,), loss, bwd, "cross_entropy")


def topk_error(logits, labels, k=5):
    k = min(k, logits.shape[1])
    top = np.argsort(-logits, axis=1, kind="stable")[:, :k]
    return float(np.mean(~np.any(top == labels[:, None], axis=1)))


def evaluate(net, x, y, loss):
    if len(x) == 0:
        return {}
    out = net.forward(Tensor(x), training=False).value
    if not np.all(np.isfinite(out)):
        raise NumericOverflowError("non-finite network output in evaluation")
    if loss == "MSE":
        return {"mse": float(np.mean((out - y) ** 2))}
    labels = y.astype(int)
    ce = cross_entropy(Tensor(out), labels).value[0, 0]
    return {
        "loss": float(ce),
        "accuracy": float(np.mean(np.argmax(out, axis=1) == labels)),
        "top5_error": topk_error(out, labels),
    }


def epoch_permutation(seed, epoch, n):
    """Shuffle order for one epoch from a counter-based stream keyed by (seed, epoch)."""
    key = np.array([seed % 2**64, epoch], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).permutation(n)


@dataclass
class TrainReport:
    epochs: int
    train_loss: list = field(default_factory=list)
    test_curve: list = field(default_factory=list)
    initial: dict = field(default_factory=dict)
    final: dict = field(default_factory=dict)
    clamp_hits: int = 0

    def to_dict(self):
        return asdict(self)


def train(net, data, cfg, hooks=None):
    """Train ``net`` in place and return the loss and test-metric curves.

    ``hooks`` may define ``on_step(net, epoch, batch)`` (called after
    backward, before the update) and ``on_epoch_end(net, epoch)``.
    """
    x, y = data.x_train, data.y_train
    if x.shape[1] != net.input_dim:
        raise ContractError(f"dataset has {x.shape[1]} features, network expects {net.input_dim}")
    target = y.astype(int) if cfg.loss == "CROSS_ENTROPY" else y
    on_step = getattr(hooks, "on_step", None)
    on_epoch_end = getattr(hooks, "on_epoch_end", None)
    banks = net.banks()

    report = TrainReport(epochs=cfg.epochs)
    try:
        report.initial = evaluate(net, data.x_test, data.y_test, cfg.loss)
    except NumericOverflowError as exc:
        raise type(exc)(exc.base_message, **exc.context, phase="initial") from exc
    n = len(x)
    for epoch in range(cfg.epochs):
        lr = lr_at(epoch, cfg)
        order = epoch_permutation(cfg.seed, epoch, n)
        losses = []
        for batch, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            if len(idx) < 2:
                continue
            try:
                out = net.forward(Tensor(x[idx]), training=True)
                if cfg.loss == "MSE":
                    data_loss = mse_loss(out, target[idx])
                else:
                    data_loss = cross_entropy(out, target[idx])
                loss = data_loss
                if cfg.l2_coeff > 0 and banks:
                    loss = add(loss, l2_penalty(banks, cfg.l2_coeff))
                value = float(data_loss.value[0, 0])
                if not np.isfinite(loss.value[0, 0]):
                    raise NumericOverflowError("non-finite loss")
                backward(loss)
                if on_step is not None:
                    on_step(net, epoch, batch)
                if cfg.grad_clip > 0:
                    clip_grad_norm(net.parameters(), cfg.grad_clip)
                sgd_step(net, lr)
            except NumericOverflowError as exc:
                context = {**exc.context, "epoch": epoch, "batch": batch}
                raise type(exc)(exc.base_message, **context) from exc
            losses.append(value)
        report.train_loss.append(float(np.mean(losses)) if losses else None)
        try:
            metrics = evaluate(net, data.x_test, data.y_test, cfg.loss)
        except NumericOverflowError as exc:
            raise type(exc)(exc.base_message, **exc.context, epoch=epoch, phase="test") from exc
        report.test_curve.append(metrics)
        if on_epoch_end is not None:
            on_epoch_end(net, epoch)
    if cfg.epochs:
        report.final = report.test_curve[-1]
    report.clamp_hits = net.clamp_hits()
    return report
