from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advact import config as C
from advact.errors import SpecError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def test_defaults_follow_training_recipe():
    cfg = C.ExperimentConfig(output="out", seeds=[0])
    assert (cfg.train.epochs, cfg.train.batch_size, cfg.train.lr, cfg.train.lr_half_life) == (150, 128, 0.1, 20)
    assert cfg.model.divisor == 1


def test_round_trip_default():
    cfg = C.ExperimentConfig(output="out", seeds=[3, 1])
    assert C.loads(C.dumps(cfg)) == cfg


@given(
    depth=st.integers(1, 12), width=st.integers(1, 128), epochs=st.integers(0, 200),
    lr=st.floats(1e-4, 1.0), seeds=st.lists(st.integers(0, 2**31), min_size=1, max_size=5),
    mode=st.sampled_from(["NONE", "GA"]), noise=st.floats(0.0, 1.0),
)
@settings(max_examples=50, deadline=None)
def test_round_trip_property(depth, width, epochs, lr, seeds, mode, noise):
    cfg = C.from_dict({
        "output": "runs/x", "seeds": seeds,
        "dataset": {"noise": noise, "params": {"turns": 2.0}},
        "model": {"depth": depth, "width": width, "policy": mode, "activation": "sigmoid"},
        "train": {"epochs": epochs, "lr": lr},
    })
    assert C.loads(C.dumps(cfg)) == cfg


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    cfg = C.load(path)
    assert C.loads(C.dumps(cfg)) == cfg


def test_fractional_parallelism():
    cfg = C.from_dict({"output": "o", "seeds": [0],
                       "model": {"activation": "TANH4", "policy": "SA", "n": "5/2"}})
    assert cfg.model.divisor == Fraction(5, 2) and cfg.model.is_split
    numeric = C.from_dict({"output": "o", "seeds": [0], "model": {"n": 4}})
    assert numeric.model.n == "4"


@pytest.mark.parametrize("raw", [
    {"output": "o", "seeds": [0], "extra": 1},
    {"output": "o", "seeds": [0], "model": {"widht": 3}},
    {"output": "o", "seeds": []},
    {"seeds": [0]},
    {"output": "o", "seeds": [0], "model": {"policy": "SA", "activation": "tanh"}},
    {"output": "o", "seeds": [0], "model": {"policy": "GA", "activation": "tanh"}},
    {"output": "o", "seeds": [0], "model": {"activation": "swish"}},
    {"output": "o", "seeds": [0], "model": {"n": "four"}},
    {"output": "o", "seeds": [0], "model": {"depth": 0}},
    {"output": "o", "seeds": [0], "dataset": {"source": "csv"}},
    {"output": "o", "seeds": [0], "dataset": {"source": "http"}},
    {"output": "o", "seeds": [0], "model": {"penalize": "none"}},
    {"output": "o", "seeds": [0], "train": "fast"},
    [1, 2],
])
def test_invalid_configs(raw):
    with pytest.raises(SpecError):
        C.from_dict(raw)


def test_invalid_yaml():
    with pytest.raises(SpecError):
        C.loads("output: [unclosed")
