import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advact.autodiff import Tensor, backward, gradcheck, parameter
from advact.data import Dataset, synth_dataset
from advact.diagnostics import DiagnosticsCollector
from advact.errors import ContractError, NumericOverflowError
from advact.network import AlternationPolicy, LayerSpec, build_network, mlp_specs
from advact.trainer import (TrainConfig, clip_grad_norm, cross_entropy, epoch_permutation,
                            lr_at, sgd_step, topk_error, train)


@pytest.mark.parametrize("epoch, expected", [(0, 0.1), (19, 0.1), (20, 0.05), (45, 0.025), (60, 0.0125)])
def test_lr_schedule(epoch, expected):
    assert lr_at(epoch, TrainConfig()) == pytest.approx(expected, rel=1e-15)


@given(st.integers(0, 400))
@settings(max_examples=100, deadline=None)
def test_lr_non_increasing_and_halves_at_multiples(epoch):
    cfg = TrainConfig()
    assert lr_at(epoch + 1, cfg) <= lr_at(epoch, cfg)
    if (epoch + 1) % cfg.lr_half_life == 0:
        assert lr_at(epoch + 1, cfg) == lr_at(epoch, cfg) / 2


def test_lr_rejects_negative_epoch():
    with pytest.raises(ContractError):
        lr_at(-1, TrainConfig())


@pytest.mark.parametrize("kwargs", [{"epochs": -1}, {"batch_size": 0}, {"lr": 0.0}, {"lr_half_life": 0},
                                    {"l2_coeff": -0.1}, {"grad_clip": -1.0}, {"loss": "HINGE"}])
def test_train_config_validation(kwargs):
    with pytest.raises(ContractError):
        TrainConfig(**kwargs)


def test_sgd_step_known_update():
    p = parameter([[1.0]], name="p")
    p.grad = np.array([[0.5]])
    sgd_step([("p", p)], 0.1)
    assert p.value[0, 0] == pytest.approx(0.95)
    assert p.grad is None


def test_sgd_step_zero_grad_keeps_value():
    p = parameter([[1.0, -2.0]])
    p.grad = np.zeros((1, 2))
    sgd_step([("p", p)], 0.1)
    np.testing.assert_array_equal(p.value, [[1.0, -2.0]])


def test_sgd_step_nan_names_layer():
    p = parameter([[1.0]])
    p.grad = np.array([[np.nan]])
    with pytest.raises(NumericOverflowError) as info:
        sgd_step([("3.dense.W", p)], 0.1)
    assert info.value.context["layer"] == "3.dense.W"


def test_sgd_step_reduces_quadratic():
    # L(w) = (w - 3)^2, one step with lr 0.1 from w = 0
    w = parameter([[0.0]])
    backward(Tensor((w.value - 3.0) ** 2, (w,), "q", backward=lambda g: (g * 2 * (w.value - 3.0),)))
    before = (w.value[0, 0] - 3.0) ** 2
    sgd_step([("w", w)], 0.1)
    assert w.value[0, 0] == pytest.approx(0.6)
    assert (w.value[0, 0] - 3.0) ** 2 < before


def test_clip_grad_norm():
    a, b = parameter([[3.0]]), parameter([[4.0]])
    a.grad, b.grad = np.array([[3.0]]), np.array([[4.0]])
    assert clip_grad_norm([("a", a), ("b", b)], 1.0) == pytest.approx(5.0)
    np.testing.assert_allclose([a.grad[0, 0], b.grad[0, 0]], [0.6, 0.8])
    assert clip_grad_norm([("a", a), ("b", b)], 2.0) == pytest.approx(1.0)
    np.testing.assert_allclose([a.grad[0, 0], b.grad[0, 0]], [0.6, 0.8])


def test_cross_entropy_value_and_gradient(rng):
    logits = parameter(rng.normal(size=(6, 3)))
    labels = np.array([0, 2, 1, 1, 0, 2])
    z = logits.value
    expected = np.mean(np.log(np.exp(z).sum(axis=1)) - z[np.arange(6), labels])
    assert cross_entropy(logits, labels).value[0, 0] == pytest.approx(expected, rel=1e-13)
    assert gradcheck(lambda: cross_entropy(logits, labels), [logits]) < 1e-6


@pytest.mark.parametrize("logits, labels, k, expected", [
    ([[0.1, 0.9], [0.8, 0.2]], [1, 1], 1, 0.5),
    ([[0.1, 0.9], [0.8, 0.2]], [1, 1], 5, 0.0),
    ([[1, 2, 3, 4, 5, 6]], [0], 5, 1.0),
    ([[1, 2, 3, 4, 5, 6]], [1], 5, 0.0),
])
def test_topk_error(logits, labels, k, expected):
    assert topk_error(np.array(logits, float), np.array(labels), k) == expected


def test_epoch_permutation_keyed_by_seed_and_epoch():
    a = epoch_permutation(5, 0, 50)
    assert sorted(a) == list(range(50))
    np.testing.assert_array_equal(a, epoch_permutation(5, 0, 50))
    assert not np.array_equal(a, epoch_permutation(5, 1, 50))
    assert not np.array_equal(a, epoch_permutation(6, 0, 50))


def _small_run(hooks=None, seed=3, epochs=3, policy="GA"):
    ds = synth_dataset("regress-sin", n=200, seed=seed)
    net = build_network(mlp_specs(3, 8, 1, "sigmoid"), AlternationPolicy(policy), seed, ds.input_dim)
    cfg = TrainConfig(epochs=epochs, batch_size=32, lr=0.05, seed=seed, grad_clip=1.0)
    return train(net, ds, cfg, hooks), net


def test_zero_epochs_reports_initial_only():
    report, _ = _small_run(epochs=0)
    assert report.train_loss == [] and report.test_curve == [] and report.final == {}
    assert set(report.initial) == {"mse"}


def test_train_is_deterministic():
    a, _ = _small_run()
    b, _ = _small_run()
    assert a.to_dict() == b.to_dict()


def test_diagnostics_hook_is_neutral():
    plain, net_a = _small_run()
    hooked, net_b = _small_run(DiagnosticsCollector())
    assert plain.to_dict() == hooked.to_dict()
    for (_, p), (_, q) in zip(net_a.parameters(), net_b.parameters()):
        np.testing.assert_array_equal(p.value, q.value)


def test_linear_regression_loss_decreases_monotonically(rng):
    x = rng.normal(size=(100, 3))
    y = x @ np.array([[1.0], [-2.0], [0.5]]) + 0.3
    ds = Dataset(x, y, x[:10], y[:10])
    net = build_network([LayerSpec("DENSE", 1)], seed=0, input_dim=3)
    report = train(net, ds, TrainConfig(epochs=25, batch_size=100, lr=0.05))
    losses = report.train_loss
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_classification_metrics(rng):
    ds = synth_dataset("blobs-2class", n=200, noise=0.5, seed=1, separation=6.0)
    net = build_network(mlp_specs(1, 8, 2, "tanh", batchnorm=False), seed=1, input_dim=2)
    report = train(net, ds, TrainConfig(epochs=10, batch_size=32, lr=0.1, loss="CROSS_ENTROPY"))
    assert set(report.final) == {"loss", "accuracy", "top5_error"}
    assert report.final["accuracy"] > 0.95
    assert report.final["top5_error"] == 0.0


def test_feature_width_mismatch():
    ds = synth_dataset("regress-sin", n=20)
    net = build_network([LayerSpec("DENSE", 1)], seed=0, input_dim=5)
    with pytest.raises(ContractError):
        train(net, ds, TrainConfig(epochs=1))


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
def test_divergence_carries_context(rng):
    x = rng.normal(size=(64, 2)) * 1e3
    y = rng.normal(size=(64, 1)) * 1e150
    ds = Dataset(x, y, x[:4], y[:4])
    net = build_network([LayerSpec("DENSE", 1)], seed=0, input_dim=2)
    with pytest.raises(NumericOverflowError) as info:
        train(net, ds, TrainConfig(epochs=5, batch_size=16, lr=10.0))
    assert {"epoch", "batch"} <= set(info.value.context)


def test_penalty_enters_training_loss():
    ds = synth_dataset("spirals-2class", n=100, seed=0)
    specs = mlp_specs(2, 8, 2, "TANH4", batchnorm=False, split=(4, 2, "TANH4"))

    def run(l2):
        net = build_network(specs, AlternationPolicy("SA"), 0, 2)
        train(net, ds, TrainConfig(epochs=1, batch_size=20, lr=0.05, l2_coeff=l2,
                                   loss="CROSS_ENTROPY", grad_clip=1.0))
        return net.banks()[0].values.copy()

    assert not np.array_equal(run(0.0), run(0.05))


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
@pytest.mark.parametrize("checked", [True, False])
def test_non_finite_evaluation_aborts(rng, checked):
    from advact.autodiff import checked_mode
    x = rng.normal(size=(20, 1))
    ds = Dataset(x, x, np.full((4, 1), 1e308), np.zeros((4, 1)))
    net = build_network([LayerSpec("DENSE", 1)], seed=0, input_dim=1)
    net.layers[0].W.value = np.array([[10.0]])
    with checked_mode(checked), pytest.raises(NumericOverflowError) as info:
        train(net, ds, TrainConfig(epochs=1, batch_size=10, lr=1e-3))
    assert info.value.context["phase"] == "initial"
