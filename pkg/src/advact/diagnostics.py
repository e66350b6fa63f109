"""Per-layer gradient and pre-activation statistics collected during training."""

import csv
import math
from dataclasses import dataclass

import numpy as np

from advact.errors import ContractError

CSV_COLUMNS = ("run_id", "epoch", "layer", "grad_norm", "grad_hist", "act_mean", "act_std", "ics_drift")


def histogram(values, bins, lo, hi):
    """Counts in ``bins`` equal-width bins over [lo, hi] plus underflow/overflow.

    Returns ``bins + 2`` integers: below ``lo``, the bins in order, above
    ``hi``.  Bins are half-open except the last, which includes ``hi``.
    """
    if bins < 1 or not lo < hi:
        raise ContractError("need bins >= 1 and lo < hi")
    v = np.asarray(values, dtype=np.float64).ravel()
    counts = np.zeros(bins + 2, dtype=np.int64)
    if v.size == 0:
        return counts
    below = v < lo
    above = v > hi
    inside = v[~(below | above)]
    # searching explicit edges avoids the rounding of (v - lo) / width near an edge
    edges = lo + (hi - lo) * np.arange(bins + 1) / bins
    idx = np.searchsorted(edges, inside, side="right") - 1
    np.minimum(idx, bins - 1, out=idx)
    counts[0] = below.sum()
    counts[-1] = above.sum()
    counts[1:-1] = np.bincount(idx, minlength=bins)
    return counts


@dataclass
class LayerEpochStats:
    layer: int
    epoch: int
    grad_hist: np.ndarray
    grad_norm: float
    act_mean: float
    act_std: float
    count: int
    tag: str = ""


def gradient_chain_ratio(norms):
    """First activated layer's gradient norm over the last one's.

    A single layer gives 1; a zero last-layer norm gives +inf.
    """
    norms = [float(n) for n in norms]
    if not norms:
        raise ContractError("no layers recorded")
    if len(norms) == 1:
        return 1.0
    if norms[-1] == 0.0:
        return math.inf
    return norms[0] / norms[-1]


def ics_drift(prev, curr):
    """|change in mean| + |change in std| of a layer's pre-activations between epochs."""
    if prev.layer != curr.layer:
        raise ContractError(f"drift between different layers ({prev.layer} vs {curr.layer})")
    return abs(curr.act_mean - prev.act_mean) + abs(curr.act_std - prev.act_std)


class _Accumulator:
    def __init__(self, bins):
        self.hist = np.zeros(bins + 2, dtype=np.int64)
        self.norms = []
        self.total = 0.0
        self.total_sq = 0.0
        self.count = 0


class DiagnosticsCollector:
    """Training hook recording, for every activated layer, weight-gradient
    histograms and norms plus pre-activation moments, once per epoch.

    It only reads network state, so a run with the collector attached
    follows the same trajectory as one without.
    """

    def __init__(self, run_id="run", bins=32, bound=1.0):
        self.run_id = run_id
        self.bins = bins
        self.bound = bound
        self.history = []
        self._acc = {}

    def on_step(self, net, epoch, batch):
        for i, (layer, tag) in enumerate(net.activated_units()):
            acc = self._acc.setdefault(i, _Accumulator(self.bins))
            acc.tag = tag
            g = layer.weight_grads()
            if g is not None:
                acc.hist += histogram(g, self.bins, -self.bound, self.bound)
                acc.norms.append(float(np.sqrt(np.dot(g, g))))
            pre = layer.last_preact
            if pre is not None:
                acc.total += float(pre.sum())
                acc.total_sq += float(np.sum(pre * pre))
                acc.count += pre.size

    def on_epoch_end(self, net, epoch):
        stats = []
        for i in sorted(self._acc):
            acc = self._acc[i]
            m = acc.total / acc.count if acc.count else 0.0
            var = acc.total_sq / acc.count - m * m if acc.count else 0.0
            stats.append(LayerEpochStats(
                layer=i, epoch=epoch, grad_hist=acc.hist,
                grad_norm=float(np.mean(acc.norms)) if acc.norms else 0.0,
                act_mean=m, act_std=math.sqrt(max(var, 0.0)),
                count=int(acc.hist.sum()), tag=acc.tag,
            ))
        self.history.append(stats)
        self._acc = {}

    def chain_ratios(self):
        return [gradient_chain_ratio([s.grad_norm for s in epoch]) for epoch in self.history if epoch]

    def drifts(self):
        """Per-epoch list of per-layer drifts, starting at the second epoch."""
        out = []
        for prev, curr in zip(self.history, self.history[1:]):
            out.append([ics_drift(p, c) for p, c in zip(prev, curr)])
        return out

    def mean_drift(self):
        values = [d for epoch in self.drifts() for d in epoch]
        return float(np.mean(values)) if values else 0.0

    def rows(self):
        rows = []
        for e, epoch in enumerate(self.history):
            for j, s in enumerate(epoch):
                drift = "" if e == 0 else repr(ics_drift(self.history[e - 1][j], s))
                rows.append({
                    "run_id": self.run_id,
                    "epoch": s.epoch,
                    "layer": s.layer,
                    "grad_norm": repr(s.grad_norm),
                    "grad_hist": ";".join(str(int(c)) for c in s.grad_hist),
                    "act_mean": repr(s.act_mean),
                    "act_std": repr(s.act_std),
                    "ics_drift": drift,
                })
        return rows


def write_csv(path, rows):
    """Write row dicts (as produced by ``DiagnosticsCollector.rows``) with the fixed header."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
