"""Run an ExperimentConfig over its seeds and write reports.

Output directory layout::

    config.yaml           resolved configuration
    manifest.json         architecture manifest per seed
    report_seed{s}.json   per-seed TrainReport plus diagnostics summary
    aggregate.json        mean and population std of final metrics over seeds
    diagnostics.csv       one row per (seed, layer, epoch)
    run.log               plain-text progress log, no timestamps
    FAILED                present only when some seed aborted

Every file is a pure function of the config, so reruns are byte-identical.

Per-seed report keys (strict JSON, sorted)::

    seed, epochs, parameters     ints
    train_loss                   mean minibatch loss per epoch, null for an epoch with no batches
    test_curve                   per-epoch test metrics, {"mse"} or {"accuracy", "loss", "top5_error"}
    initial, final               test metrics before training and after the last epoch
    gradient_chain_ratio         per-epoch first/last layer grad-norm ratio, "inf" when the last is 0
    chain_ratio_flagged          true when any ratio is "inf"
    mean_ics_drift               mean per-layer activation drift between consecutive epochs
    clamp_hits                   gradient entries clamped by the ξ clamp policy
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from advact import config as config_mod
from advact.data import load_csv, synth_dataset
from advact.diagnostics import DiagnosticsCollector, write_csv
from advact.errors import NumericOverflowError
from advact.network import AlternationPolicy, build_network, count_parameters, mlp_specs
from advact.split import RECOMBINE_K
from advact.trainer import TrainConfig, train


def load_dataset(cfg, seed):
    d = cfg.dataset
    if d.source == "csv":
        return load_csv(d.path, d.label_column, d.normalize, seed, d.task)
    return synth_dataset(d.name, d.n, d.noise, seed, d.normalize, **d.params)


def build_for(cfg, ds, seed):
    m = cfg.model
    split = (RECOMBINE_K[m.activation], m.divisor, m.activation) if m.is_split else None
    specs = mlp_specs(m.depth, m.width, ds.output_dim, m.activation, m.batchnorm, split)
    policy = AlternationPolicy(m.policy, m.alpha, m.clamp, m.penalize, m.branch_init)
    return build_network(specs, policy, seed, ds.input_dim)


def train_config(cfg, seed):
    t = cfg.train
    return TrainConfig(epochs=t.epochs, batch_size=t.batch_size, lr=t.lr,
                       lr_half_life=t.lr_half_life, l2_coeff=cfg.model.l2_coeff,
                       seed=seed, loss=t.loss, grad_clip=t.grad_clip)


def run_seed(cfg, seed):
    """Train one seed; returns a dict of everything the writer needs."""
    log = []
    collector = DiagnosticsCollector(f"seed{seed}", cfg.diagnostics.bins, cfg.diagnostics.bound)
    ds = load_dataset(cfg, seed)
    net = build_for(cfg, ds, seed)
    result = {"seed": seed, "manifest": net.manifest(), "error": None, "report": None}
    log.append(f"seed {seed}: {count_parameters(net)} parameters, "
               f"activations {','.join(net.activation_tags())}")
    try:
        report = train(net, ds, train_config(cfg, seed), collector)
    except NumericOverflowError as exc:
        result["error"] = str(exc)
        log.append(f"seed {seed}: FAILED {exc}")
    else:
        ratios = collector.chain_ratios()
        body = report.to_dict()
        body.update({
            "seed": seed,
            "parameters": count_parameters(net),
            # JSON has no infinity; a zero last-layer norm is written as the string "inf"
            "gradient_chain_ratio": [r if math.isfinite(r) else "inf" for r in ratios],
            "chain_ratio_flagged": any(math.isinf(r) for r in ratios),
            "mean_ics_drift": collector.mean_drift(),
        })
        result["report"] = body
        for e, loss in enumerate(report.train_loss):
            metrics = " ".join(f"{k}={v:.6g}" for k, v in sorted(report.test_curve[e].items()))
            shown = "none" if loss is None else f"{loss:.6g}"
            log.append(f"seed {seed}: epoch {e} train_loss={shown} {metrics}")
        log.append(f"seed {seed}: done")
    result["rows"] = collector.rows()
    result["log"] = log
    return result


def aggregate(reports):
    """Mean and population std of every final metric over the given per-seed reports."""
    metrics = sorted({k for r in reports for k in r["final"]})
    out = {"seeds": [r["seed"] for r in reports], "metrics": {}}
    for k in metrics:
        values = [r["final"][k] for r in reports]
        out["metrics"][k] = {"mean": float(np.mean(values)), "std": float(np.std(values)),
                             "values": values}
    return out


def _dump(path, obj):
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def run_experiment(cfg, jobs=1):
    """Execute every seed and write outputs; returns 0 on success, 1 if any seed aborted."""
    os.makedirs(cfg.output, exist_ok=True)
    failed_marker = os.path.join(cfg.output, "FAILED")
    if os.path.exists(failed_marker):
        os.remove(failed_marker)
    with open(os.path.join(cfg.output, "config.yaml"), "w") as fh:
        fh.write(config_mod.dumps(cfg))

    if jobs > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_seed, [cfg] * len(cfg.seeds), cfg.seeds))
    else:
        results = [run_seed(cfg, s) for s in cfg.seeds]

    ok = [r for r in results if r["error"] is None]
    for r in ok:
        _dump(os.path.join(cfg.output, f"report_seed{r['seed']}.json"), r["report"])
    _dump(os.path.join(cfg.output, "manifest.json"),
          {f"seed{r['seed']}": r["manifest"] for r in results})
    _dump(os.path.join(cfg.output, "aggregate.json"), aggregate([r["report"] for r in ok]))

    write_csv(os.path.join(cfg.output, "diagnostics.csv"), [row for r in results for row in r["rows"]])
    with open(os.path.join(cfg.output, "run.log"), "w") as fh:
        for r in results:
            fh.write("\n".join(r["log"]) + "\n")
    failures = [r for r in results if r["error"] is not None]
    if failures:
        with open(failed_marker, "w") as fh:
            for r in failures:
                fh.write(f"seed {r['seed']}: {r['error']}\n")
        return 1
    return 0
