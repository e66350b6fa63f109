import bisect
import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advact.data import synth_dataset
from advact.diagnostics import (CSV_COLUMNS, DiagnosticsCollector, LayerEpochStats,
                                gradient_chain_ratio, histogram, ics_drift, write_csv)
from advact.errors import ContractError
from advact.network import AlternationPolicy, build_network, mlp_specs
from advact.trainer import TrainConfig, train


def oracle_histogram(values, bins, lo, hi):
    """Edge-by-edge binning with bisect, independent of the vectorised version."""
    edges = [lo + (hi - lo) * i / bins for i in range(bins + 1)]
    counts = [0] * (bins + 2)
    for v in values:
        if v < lo:
            counts[0] += 1
        elif v > hi:
            counts[-1] += 1
        elif v == hi:
            counts[bins] += 1
        else:
            counts[bisect.bisect_right(edges, v)] += 1
    return counts


@pytest.mark.parametrize("values, bins, lo, hi, expected", [
    ([0.5], 2, 0.0, 1.0, [0, 0, 1, 0]),
    ([0.0], 2, 0.0, 1.0, [0, 1, 0, 0]),
    ([1.0], 2, 0.0, 1.0, [0, 0, 1, 0]),
    ([-0.1, 1.1, 0.25], 2, 0.0, 1.0, [1, 1, 0, 1]),
    ([], 3, -1.0, 1.0, [0, 0, 0, 0, 0]),
    ([-3e-241], 5, -2.0, 3.0, [0, 0, 1, 0, 0, 0, 0]),
])
def test_histogram_examples(values, bins, lo, hi, expected):
    assert list(histogram(values, bins, lo, hi)) == expected


def test_histogram_matches_oracle_on_normal_samples():
    x = np.random.default_rng(7).standard_normal(10_000)
    got = histogram(x, 64, -4.0, 4.0)
    assert list(got) == oracle_histogram(x.tolist(), 64, -4.0, 4.0)
    assert got.sum() == 10_000


@given(st.lists(st.floats(-1e3, 1e3), max_size=200), st.integers(1, 40))
@settings(max_examples=100, deadline=None)
def test_histogram_conservation(values, bins):
    counts = histogram(values, bins, -2.0, 3.0)
    assert counts.sum() == len(values)
    assert list(counts) == oracle_histogram(values, bins, -2.0, 3.0)


@pytest.mark.parametrize("bins, lo, hi", [(0, 0.0, 1.0), (3, 1.0, 1.0), (3, 2.0, 1.0)])
def test_histogram_rejects_bad_range(bins, lo, hi):
    with pytest.raises(ContractError):
        histogram([0.0], bins, lo, hi)


@pytest.mark.parametrize("norms, expected", [
    ([0.3, 0.3, 0.3], 1.0),
    ([1e-6, 1.0], 1e-6),
    ([2.0], 1.0),
    ([1.0, 0.0], math.inf),
])
def test_gradient_chain_ratio(norms, expected):
    assert gradient_chain_ratio(norms) == pytest.approx(expected)


def test_gradient_chain_ratio_needs_layers():
    with pytest.raises(ContractError):
        gradient_chain_ratio([])


def _stats(layer, mean, std):
    return LayerEpochStats(layer, 0, np.zeros(3, dtype=int), 0.0, mean, std, 0)


def test_ics_drift():
    assert ics_drift(_stats(0, 0.2, 1.0), _stats(0, 0.2, 1.0)) == 0.0
    assert ics_drift(_stats(1, 0.0, 1.0), _stats(1, 0.3, 1.1)) == pytest.approx(0.4)
    with pytest.raises(ContractError):
        ics_drift(_stats(0, 0.0, 1.0), _stats(1, 0.0, 1.0))


def _collect(epochs=3, bins=8):
    ds = synth_dataset("regress-sin", n=160, seed=2)
    net = build_network(mlp_specs(3, 6, 1, "sigmoid"), AlternationPolicy("GA"), 2, ds.input_dim)
    col = DiagnosticsCollector("r", bins=bins, bound=0.5)
    train(net, ds, TrainConfig(epochs=epochs, batch_size=40, lr=0.05, seed=2, grad_clip=1.0), col)
    return col, net


def test_collector_records_every_activated_layer():
    col, net = _collect()
    assert len(col.history) == 3
    for epoch in col.history:
        assert [s.layer for s in epoch] == [0, 1, 2]
        assert [s.tag for s in epoch] == net.activation_tags()
        for s in epoch:
            # four batches of 40 per epoch, weights 3x6, 6x6, 6x6
            assert s.grad_hist.sum() == s.count
            assert s.act_std >= 0 and s.grad_norm > 0
    assert [s.count for s in col.history[0]] == [4 * 18, 4 * 36, 4 * 36]
    assert len(col.chain_ratios()) == 3
    assert len(col.drifts()) == 2 and col.mean_drift() >= 0


def test_collector_moments_match_direct_computation():
    col, net = _collect(epochs=1)
    # re-derive layer-0 moments from a fresh identical run with a recording hook
    ds = synth_dataset("regress-sin", n=160, seed=2)
    net2 = build_network(mlp_specs(3, 6, 1, "sigmoid"), AlternationPolicy("GA"), 2, ds.input_dim)
    seen = []

    class Recorder:
        def on_step(self, net, epoch, batch):
            seen.append(net.activated_units()[0][0].last_preact.copy())

    train(net2, ds, TrainConfig(epochs=1, batch_size=40, lr=0.05, seed=2, grad_clip=1.0), Recorder())
    allv = np.concatenate([s.ravel() for s in seen])
    s0 = col.history[0][0]
    assert s0.act_mean == pytest.approx(allv.mean(), rel=1e-10, abs=1e-12)
    assert s0.act_std == pytest.approx(allv.std(), rel=1e-8)


def test_rows_and_csv(tmp_path):
    col, _ = _collect(epochs=2, bins=4)
    rows = col.rows()
    assert len(rows) == 2 * 3
    assert all(r["ics_drift"] == "" for r in rows if r["epoch"] == 0)
    assert all(float(r["ics_drift"]) >= 0 for r in rows if r["epoch"] == 1)
    path = tmp_path / "d.csv"
    write_csv(path, rows)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        assert tuple(next(reader)) == CSV_COLUMNS
        body = list(reader)
    assert len(body) == 6
    assert all(len(r[4].split(";")) == 6 for r in body)
