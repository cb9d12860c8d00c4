"""Experiment configuration, orchestration, and metrics post-processing.

Configs are flat JSON documents (one key per ExperimentConfig field, plus
an optional "preset" that supplies a named base). run_experiment executes
one simulator run per (protocol, seed), writes JSON-lines logs and a
summary, and returns the summary rows. All times in outputs are
simulated seconds.
"""

import csv
import io
import json
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from . import engine
from .data import dataset_to_json
from .engine import PROTOCOLS, run_protocol
from .errors import ConfigError
from .kernels import BACKEND as KERNEL_BACKEND
from .models import LOGISTIC, MLP, Batch, ModelSpec, evaluate, grad, init_params, sgd_step
from .presets import get_preset

SLOT_ALIASES = ("first", "mid", "penultimate")


@dataclass(frozen=True)
class ExperimentConfig:
    # sweep
    protocols: tuple = ("fedasmu",)
    seeds: tuple = (1, 2, 3, 4, 5)
    targets: tuple = (0.7,)
    # population / schedule
    m: int = 20
    m_prime: int = 5
    T: int = 200
    tau: int = 99
    trigger_period: float = 2.0
    local_epochs: int = 5
    batch_size: int = 32
    # model
    model_kind: str = LOGISTIC
    input_dim: int = 10
    hidden_dim: int = 0
    num_classes: int = 5
    # dataset
    num_samples: int = 2000
    class_separation: float = 3.0
    noise_std: float = 1.5
    dataset_seed: int = None
    concentration: float = 0.5
    test_fraction: float = 0.1
    # environment
    heterogeneity_ratio: float = 5.0
    epoch_time_base: float = 1.0
    uplink_bw: float = 400.0
    downlink_bw: float = 2000.0
    bandwidth_scale: float = 1.0
    # local optimization
    eta_i: float = 0.1
    full_batch: bool = False
    # server-side aggregation controls
    mu_alpha: float = 5.0
    lambda0: float = 1.0
    sigma0: float = 1.0
    iota0: float = 0.0
    eta_lambda: float = 0.0001
    eta_sigma: float = 0.0001
    eta_iota: float = 0.0001
    # device-side aggregation controls
    mu_beta: float = 1.0
    gamma0: float = 1.0
    upsilon0: float = 0.5
    eta_gamma: float = 0.0001
    eta_upsilon: float = 0.0001
    # request-slot policies
    eta_rl: float = 0.001
    rho: float = 0.5
    q_phi: float = 0.5
    q_psi: float = 0.9
    epsilon: float = 0.1
    q_epsilon_decay: float = 0.99
    q_epsilon_floor: float = 0.01
    slot_override: int = None
    # ablations / modes
    disable_dynamic_server: bool = False
    disable_device_merge: bool = False
    server_alpha_mode: str = "dynamic"
    sigma_grad_mode: str = "corrected-ln"
    # baselines
    fedasync_alpha: float = 0.6
    fedasync_poly_a: float = 0.5
    fedbuff_k: int = 5
    # bookkeeping
    eval_every: int = 1
    max_sim_time: float = 1e9


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_TUPLE_FIELDS = ("protocols", "seeds", "targets")


def _validate(config):
    problems = []

    def need(cond, msg):
        if not cond:
            problems.append(msg)

    for p in config.protocols:
        need(p in PROTOCOLS, f"protocols: unknown protocol {p!r}")
    need(len(config.protocols) > 0, "protocols: at least one protocol required")
    need(len(config.seeds) > 0, "seeds: at least one seed required")
    need(config.m >= 1, "m: must be >= 1")
    need(config.m_prime >= 1, "m_prime: must be >= 1")
    need(config.m_prime <= config.m, "m_prime: must satisfy m_prime <= m")
    need(config.T >= 1, "T: must be >= 1")
    need(config.tau >= 1, "tau: must be >= 1")
    need(config.trigger_period > 0, "trigger_period: must be > 0")
    need(config.local_epochs >= 2, "local_epochs: must be >= 2")
    need(config.batch_size >= 1, "batch_size: must be >= 1")
    need(config.model_kind in (LOGISTIC, MLP), f"model_kind: unknown kind {config.model_kind!r}")
    if config.model_kind == MLP:
        need(config.hidden_dim >= 1, "hidden_dim: must be >= 1 for mlp-1hidden")
    else:
        need(config.hidden_dim == 0, "hidden_dim: must be 0 for logistic-regression")
    need(config.input_dim >= 1, "input_dim: must be >= 1")
    need(config.num_classes >= 2, "num_classes: must be >= 2")
    need(config.num_samples >= config.num_classes, "num_samples: must be >= num_classes")
    need(config.num_samples >= config.m, "num_samples: must be >= m")
    need(config.class_separation > 0, "class_separation: must be > 0")
    need(config.noise_std > 0, "noise_std: must be > 0")
    need(config.concentration > 0, "concentration: must be > 0")
    need(0 < config.test_fraction < 1, "test_fraction: must be in (0, 1)")
    need(config.heterogeneity_ratio >= 1, "heterogeneity_ratio: must be >= 1")
    need(config.epoch_time_base > 0, "epoch_time_base: must be > 0")
    need(config.uplink_bw > 0, "uplink_bw: must be > 0")
    need(config.downlink_bw > 0, "downlink_bw: must be > 0")
    need(config.bandwidth_scale > 0, "bandwidth_scale: must be > 0")
    for name in (
        "eta_i",
        "eta_lambda",
        "eta_sigma",
        "eta_iota",
        "eta_gamma",
        "eta_upsilon",
        "eta_rl",
        "mu_alpha",
        "mu_beta",
    ):
        need(getattr(config, name) > 0, f"{name}: must be > 0")
    need(0 < config.rho < 1, "rho: must be in (0, 1)")
    need(0 < config.q_phi <= 1, "q_phi: must be in (0, 1]")
    need(0 <= config.q_psi < 1, "q_psi: must be in [0, 1)")
    need(0 <= config.epsilon <= 1, "epsilon: must be in [0, 1]")
    need(0 < config.q_epsilon_decay <= 1, "q_epsilon_decay: must be in (0, 1]")
    need(0 <= config.q_epsilon_floor <= 1, "q_epsilon_floor: must be in [0, 1]")
    if config.slot_override is not None:
        need(
            1 <= config.slot_override <= config.local_epochs - 1,
            "slot_override: must be in [1, local_epochs - 1]",
        )
    need(
        config.server_alpha_mode in ("dynamic", "static-poly", "harmonic"),
        "server_alpha_mode: must be dynamic, static-poly, or harmonic",
    )
    need(
        config.sigma_grad_mode in ("corrected-ln", "paper-literal"),
        "sigma_grad_mode: must be corrected-ln or paper-literal",
    )
    need(0 < config.fedasync_alpha <= 1, "fedasync_alpha: must be in (0, 1]")
    need(config.fedasync_poly_a >= 0, "fedasync_poly_a: must be >= 0")
    need(config.fedbuff_k >= 1, "fedbuff_k: must be >= 1")
    for target in config.targets:
        need(0 < target < 1, f"targets: target {target} must be in (0, 1)")
    need(config.eval_every >= 1, "eval_every: must be >= 1")
    need(config.max_sim_time > 0, "max_sim_time: must be > 0")
    if problems:
        raise ConfigError(problems)


def _resolve_slot_alias(value, local_epochs):
    if value == "first":
        return 1
    if value == "mid":
        return max(1, local_epochs // 2)
    if value == "penultimate":
        return max(1, local_epochs - 1)
    return value


def config_from_dict(doc):
    """Build a validated config from a flat dict (preset-expanded)."""
    doc = dict(doc)
    problems = []
    if "preset" in doc:
        base = get_preset(doc.pop("preset"))
        base.update(doc)
        doc = base
    if "protocol" in doc and "protocols" not in doc:
        doc["protocols"] = [doc.pop("protocol")]
    elif "protocol" in doc:
        problems.append("protocol: give either 'protocol' or 'protocols', not both")
        doc.pop("protocol")
    unknown = sorted(set(doc) - set(_FIELDS))
    for key in unknown:
        problems.append(f"{key}: unknown configuration key")
        doc.pop(key)
    for key in _TUPLE_FIELDS:
        if key in doc:
            doc[key] = tuple(doc[key])
    if isinstance(doc.get("slot_override"), str):
        if doc["slot_override"] in SLOT_ALIASES:
            doc["slot_override"] = _resolve_slot_alias(
                doc["slot_override"], doc.get("local_epochs", ExperimentConfig.local_epochs)
            )
        else:
            problems.append(
                f"slot_override: must be an integer or one of {', '.join(SLOT_ALIASES)}"
            )
            doc.pop("slot_override")
    try:
        config = ExperimentConfig(**doc)
        _validate(config)
    except ConfigError as exc:
        problems.extend(exc.problems)
    except (TypeError, ValueError) as exc:
        problems.append(str(exc))
    if problems:
        raise ConfigError(problems)
    return config


def config_to_dict(config):
    """Emit a config as a plain dict; parse(emit(c)) == c."""
    out = {}
    for name in _FIELDS:
        value = getattr(config, name)
        out[name] = list(value) if isinstance(value, tuple) else value
    return out


def parse_config(path):
    """Load and validate a JSON config file; raises ConfigError listing
    every problem found."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: not valid JSON ({exc})"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError([f"{path}: top-level JSON value must be an object"])
    return config_from_dict(doc)


def time_to_target(records, target_acc):
    """Earliest sim_time whose accuracy reaches target_acc; None if never.

    Uses the first crossing even if accuracy later dips.
    """
    for rec in records:
        acc = rec["eval_acc"] if isinstance(rec, dict) else rec.eval_acc
        if acc >= target_acc:
            return rec["sim_time"] if isinstance(rec, dict) else rec.sim_time
    return None


@dataclass(frozen=True)
class SummaryRow:
    protocol: str
    seed: int
    final_acc: float
    time_to_target: dict  # str(target) -> simulated seconds or None


def summary_rows_from_results(results, targets):
    """Pure fold from run results to summary rows, sorted by (protocol, seed)."""
    rows = []
    for res in sorted(results, key=lambda r: (r.protocol, r.seed)):
        rows.append(
            SummaryRow(
                protocol=res.protocol,
                seed=res.seed,
                final_acc=res.final_acc,
                time_to_target={str(t): time_to_target(res.records, t) for t in targets},
            )
        )
    return rows


def _log_filename(protocol, seed):
    return f"{protocol}-seed{seed}.jsonl"


def write_run_log(result, path):
    with open(path, "w") as fh:
        for rec in result.records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")


def summary_to_dict(rows, config):
    return {
        "unit": "simulated seconds",
        "kernel_backend": KERNEL_BACKEND,
        "targets": list(config.targets),
        "rows": [
            {
                "protocol": r.protocol,
                "seed": r.seed,
                "final_acc": r.final_acc,
                "time_to_target": r.time_to_target,
            }
            for r in rows
        ],
    }


def summary_csv(rows, targets):
    buf = io.StringIO()
    writer = csv.writer(buf)
    header = ["protocol", "seed", "final_acc"] + [f"ttt_{t}" for t in targets]
    writer.writerow(header)
    for r in rows:
        ttt = [
            "" if r.time_to_target[str(t)] is None else repr(r.time_to_target[str(t)])
            for t in targets
        ]
        writer.writerow([r.protocol, r.seed, repr(r.final_acc)] + ttt)
    return buf.getvalue()


def run_experiment(config, out_dir=None, write_csv=False, archive_data=False):
    """One simulator run per (protocol, seed); returns SummaryRows.

    When out_dir is given, writes per-run JSON-lines logs, summary.json,
    and optionally summary.csv and the generated dataset archives.
    """
    results = []
    for protocol in sorted(set(config.protocols)):
        for seed in sorted(set(config.seeds)):
            result = run_protocol(config, protocol, seed)
            results.append(result)
            if out_dir is not None:
                os.makedirs(out_dir, exist_ok=True)
                write_run_log(result, os.path.join(out_dir, _log_filename(protocol, seed)))
    rows = summary_rows_from_results(results, config.targets)
    if out_dir is not None:
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(summary_to_dict(rows, config), fh, sort_keys=True, indent=2)
            fh.write("\n")
        if write_csv:
            with open(os.path.join(out_dir, "summary.csv"), "w") as fh:
                fh.write(summary_csv(rows, config.targets))
        if archive_data:
            for seed in sorted(set(config.seeds)):
                train, test, _ = engine.prepare_data(config, seed)
                with open(os.path.join(out_dir, f"dataset-seed{seed}.json"), "w") as fh:
                    fh.write(
                        json.dumps(
                            {
                                "train": json.loads(dataset_to_json(train)),
                                "test": json.loads(dataset_to_json(test)),
                            },
                            sort_keys=True,
                        )
                    )
    return rows


def centralized_ceiling(config, seed, passes=40, batch_size=64, lr=0.2, decay=0.97):
    """Accuracy a centrally trained model reaches on this seed's task.

    Trains the configured model with seeded minibatch SGD on the full
    training split and reports test accuracy; used as the oracle ceiling
    when setting relative accuracy targets.
    """
    train, test, _ = engine.prepare_data(config, seed)
    spec = ModelSpec(
        kind=config.model_kind,
        input_dim=config.input_dim,
        num_classes=config.num_classes,
        hidden_dim=config.hidden_dim,
    )
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xCE11]))
    params = init_params(spec, rng)
    n = len(train)
    steps_per_pass = max(1, n // batch_size)
    rate = lr
    for _ in range(passes):
        for _ in range(steps_per_pass):
            idx = rng.integers(0, n, size=batch_size)
            batch = Batch(train.inputs[idx], train.labels[idx])
            params = sgd_step(params, grad(spec, params, batch), rate)
        rate *= decay
    _, acc = evaluate(spec, params, test)
    return acc
