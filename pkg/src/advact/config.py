"""Declarative experiment description, read from and written to YAML.

Schema (every key optional except where noted)::

    dataset:
      source: synth            # synth | csv
      name: regress-sin        # synth generator name
      n: 1000
      noise: 0.1
      params: {}               # extra generator keywords, e.g. {separation: 10}
      path: null               # csv file (source: csv)
      label_column: y
      task: regression         # regression | classification (csv only)
      normalize: false
    model:
      depth: 8                 # activated layers; a linear head is added
      width: 64
      activation: sigmoid      # scalar tag, or TANH2 | TANH4 | GELU4 for split layers
      policy: NONE             # NONE | GA | SA
      n: "4"                   # parallelism divisor for split layers (e.g. "5/2")
      batchnorm: true
      alpha: 1.0
      l2_coeff: 0.0
      clamp: 10.0
      penalize: all            # all | nonsingular
      branch_init: independent # independent | tied
    train:
      epochs: 150
      batch_size: 128
      lr: 0.1
      lr_half_life: 20
      loss: MSE                # MSE | CROSS_ENTROPY
      grad_clip: 0.0           # global gradient-norm bound, 0 disables
    diagnostics:
      bins: 32
      bound: 1.0
    output: runs/example       # required
    seeds: [0]                 # required, non-empty
"""

from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

import yaml

from advact.activations import ACTIVATION_TAGS
from advact.adversarial import PENALTY_MODES
from advact.errors import SpecError
from advact.network import BRANCH_INITS, POLICY_MODES
from advact.split import ADVERSARIAL_OF, RECOMBINE_K


@dataclass(frozen=True)
class DatasetConfig:
    source: str = "synth"
    name: str = "regress-sin"
    n: int = 1000
    noise: float = 0.1
    params: dict = field(default_factory=dict)
    path: str = None
    label_column: str = "y"
    task: str = "regression"
    normalize: bool = False


@dataclass(frozen=True)
class ModelConfig:
    depth: int = 8
    width: int = 64
    activation: str = "sigmoid"
    policy: str = "NONE"
    n: str = "1"
    batchnorm: bool = True
    alpha: float = 1.0
    l2_coeff: float = 0.0
    clamp: float = 10.0
    penalize: str = "all"
    branch_init: str = "independent"

    @property
    def divisor(self):
        return Fraction(str(self.n))

    @property
    def is_split(self):
        return self.activation in RECOMBINE_K


@dataclass(frozen=True)
class TrainSection:
    epochs: int = 150
    batch_size: int = 128
    lr: float = 0.1
    lr_half_life: int = 20
    loss: str = "MSE"
    grad_clip: float = 0.0


@dataclass(frozen=True)
class DiagnosticsConfig:
    bins: int = 32
    bound: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    output: str
    seeds: tuple
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainSection = field(default_factory=TrainSection)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        validate(self)

    def to_dict(self):
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d


def _section(cls, raw, where):
    raw = raw or {}
    if not isinstance(raw, dict):
        raise SpecError(f"{where}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise SpecError(f"{where}: unknown keys {sorted(unknown)}")
    return cls(**raw)


def validate(cfg):
    m, d = cfg.model, cfg.dataset
    if not cfg.seeds:
        raise SpecError("seeds must be non-empty")
    if not cfg.output:
        raise SpecError("output directory is required")
    if d.source not in ("synth", "csv"):
        raise SpecError(f"dataset.source must be synth or csv, got {d.source!r}")
    if d.source == "csv" and not d.path:
        raise SpecError("dataset.path is required for csv datasets")
    if m.policy not in POLICY_MODES:
        raise SpecError(f"model.policy must be one of {POLICY_MODES}")
    if m.activation not in ACTIVATION_TAGS and not m.is_split:
        raise SpecError(f"unknown model.activation {m.activation!r}")
    if m.policy == "SA" and m.activation not in ADVERSARIAL_OF:
        raise SpecError(f"SA policy needs a splittable activation, got {m.activation!r}")
    if m.policy == "GA" and m.activation not in ("sigmoid", "sigmoid_theta"):
        raise SpecError(f"GA policy needs sigmoid or sigmoid_theta, got {m.activation!r}")
    if m.penalize not in PENALTY_MODES or m.branch_init not in BRANCH_INITS:
        raise SpecError("invalid model.penalize or model.branch_init")
    if m.depth < 1 or m.width < 1:
        raise SpecError("model depth and width must be positive")
    try:
        m.divisor
    except (ValueError, ZeroDivisionError):
        raise SpecError(f"model.n is not a number: {m.n!r}") from None


def from_dict(raw):
    if not isinstance(raw, dict):
        raise SpecError("config must be a mapping")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise SpecError(f"unknown top-level keys {sorted(unknown)}")
    if "output" not in raw or "seeds" not in raw:
        raise SpecError("config needs 'output' and 'seeds'")
    model = dict(raw.get("model") or {})
    if "n" in model:
        model["n"] = str(model["n"])
    return ExperimentConfig(
        output=str(raw["output"]),
        seeds=raw["seeds"],
        dataset=_section(DatasetConfig, raw.get("dataset"), "dataset"),
        model=_section(ModelConfig, model, "model"),
        train=_section(TrainSection, raw.get("train"), "train"),
        diagnostics=_section(DiagnosticsConfig, raw.get("diagnostics"), "diagnostics"),
    )


def dumps(cfg):
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def loads(text):
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"invalid YAML: {exc}") from None
    return from_dict(raw)


def load(path):
    with open(path) as fh:
        return loads(fh.read())
