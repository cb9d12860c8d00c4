"""Built-in invariant suite behind `fedsim selftest`.

Each check prints one PASS/FAIL line; the command exits 2 on any
failure. This is a quick field check, not a replacement for the full
pytest suite.
"""

from dataclasses import replace

import numpy as np

from .aggregation import ServerControls, DeviceControls, alpha_partials, alpha_weight, beta_partials, beta_weight
from .data import DatasetSpec, dirichlet_partition, make_synthetic
from .engine import FEDASMU, run_fedasmu, run_protocol
from .harness import ExperimentConfig
from .models import LOGISTIC, MLP, Batch, ModelSpec, grad, loss


def _check_gradients(trials):
    rng = np.random.default_rng(101)
    specs = [
        ModelSpec(LOGISTIC, input_dim=5, num_classes=3),
        ModelSpec(MLP, input_dim=5, num_classes=3, hidden_dim=4),
    ]
    worst = 0.0
    for spec in specs:
        for _ in range(trials):
            params = rng.uniform(-0.5, 0.5, spec.param_count)
            batch = Batch(
                rng.standard_normal((8, spec.input_dim)),
                rng.integers(0, spec.num_classes, 8).astype(np.int64),
            )
            analytic = grad(spec, params, batch)
            h = 1e-5
            for i in range(len(params)):
                up = params.copy()
                up[i] += h
                down = params.copy()
                down[i] -= h
                fd = (loss(spec, up, batch) - loss(spec, down, batch)) / (2 * h)
                denom = max(abs(analytic[i]), abs(fd), 1e-6)
                worst = max(worst, abs(analytic[i] - fd) / denom)
    return worst < 1e-4, f"max gradient relative error {worst:.2e}"


def _check_weight_partials(trials):
    rng = np.random.default_rng(102)
    h = 1e-6
    worst = 0.0
    for _ in range(trials):
        sc = ServerControls(
            lam=rng.uniform(0.2, 2),
            sigma=rng.uniform(0.2, 2),
            iota=rng.uniform(0.01, 0.5),
            mu_alpha=rng.uniform(0.5, 2),
        )
        t = int(rng.integers(2, 100))
        o = int(rng.integers(1, t))
        d_lam, d_sigma, d_iota = alpha_partials(sc, t, o)
        for analytic, attr in ((d_lam, "lam"), (d_sigma, "sigma"), (d_iota, "iota")):
            lo = alpha_weight(replace(sc, **{attr: getattr(sc, attr) - h}), t, o)
            hi = alpha_weight(replace(sc, **{attr: getattr(sc, attr) + h}), t, o)
            fd = (hi - lo) / (2 * h)
            worst = max(worst, abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-8))
        dc = DeviceControls(
            gamma=rng.uniform(0.2, 2),
            upsilon=rng.uniform(-0.5, 0.5),
            mu_beta=rng.uniform(0.5, 2),
        )
        g = int(rng.integers(1, 50))
        o = int(rng.integers(1, g + 1))
        d_gamma, d_upsilon = beta_partials(dc, g, o)
        for analytic, attr in ((d_gamma, "gamma"), (d_upsilon, "upsilon")):
            lo = beta_weight(replace(dc, **{attr: getattr(dc, attr) - h}), g, o)
            hi = beta_weight(replace(dc, **{attr: getattr(dc, attr) + h}), g, o)
            fd = (hi - lo) / (2 * h)
            worst = max(worst, abs(analytic - fd) / max(abs(analytic), abs(fd), 1e-8))
    return worst < 1e-5, f"max weight-partial relative error {worst:.2e}"


def _check_partitions(trials):
    rng = np.random.default_rng(103)
    ds = make_synthetic(
        DatasetSpec(num_samples=500, input_dim=6, num_classes=5, class_separation=3.0, noise_std=1.0, seed=7)
    )
    for _ in range(trials):
        m = int(rng.integers(1, 30))
        parts = dirichlet_partition(ds, m, float(10 ** rng.uniform(-1, 2)), seed=int(rng.integers(1 << 30)))
        seen = np.concatenate([p.sample_indices for p in parts])
        if len(seen) != len(ds) or len(np.unique(seen)) != len(ds):
            return False, f"partition cover/disjointness broken at m={m}"
        if any(len(p) == 0 for p in parts):
            return False, f"empty partition at m={m}"
    return True, "cover, disjointness, nonemptiness hold"


def _small_config(T):
    return ExperimentConfig(
        seeds=(1,),
        m=10,
        m_prime=3,
        T=T,
        num_samples=300,
        input_dim=6,
        num_classes=3,
        local_epochs=3,
        batch_size=16,
    )


def _check_staleness_safety(T):
    config = replace(_small_config(T), tau=2)
    result = run_fedasmu(config, seed=3)
    bad = [a for a in result.aggregation_audit if a["accepted"] and a["staleness"] > config.tau]
    return not bad, f"{len(bad)} accepted aggregations beyond tau on a tau=2 run"


def _check_determinism(T):
    config = _small_config(T)
    runs = [run_protocol(config, FEDASMU, 5) for _ in range(2)]
    a, b = (tuple((r.sim_time, r.version, r.eval_loss, r.eval_acc) for r in run.records) for run in runs)
    return a == b, "identical (config, seed) reproduce the run log" if a == b else "logs diverged"


def run_selftest(fast=False):
    trials = 20 if fast else 100
    checks = [
        ("gradient finite differences", lambda: _check_gradients(10 if fast else 50)),
        ("weight-formula partials", lambda: _check_weight_partials(trials)),
        ("partition invariants", lambda: _check_partitions(10 if fast else 50)),
        ("staleness safety", lambda: _check_staleness_safety(15 if fast else 40)),
        ("determinism", lambda: _check_determinism(10 if fast else 30)),
    ]
    failures = 0
    for name, fn in checks:
        ok, detail = fn()
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        if not ok:
            failures += 1
    return 0 if failures == 0 else 2
