"""Replicated Monte Carlo study of estimator robustness under contamination.

Each scenario fixes a truncation bound, contamination pair (eta, delta),
sample size, and generator truth (beta0, beta1, alpha); replicates draw a
standard-normal covariate, simulate counts from the contaminated mixture,
fit the requested families by MCMC, and aggregate posterior medians and 95%
intervals into bias, RMSE, coverage, and mean interval length per parameter.

Replicates are independent jobs keyed by (scenario seed, replicate index),
so results are reproducible bit for bit no matter how the worker pool
schedules them; aggregation folds records in replicate order.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict, replace
from pathlib import Path

import numpy as np

from ctdw import dwcore, sampler
from ctdw.regress import Dataset
from ctdw.sampler import McmcConfig, PriorSpec

__all__ = [
    "Scenario",
    "ParamMetrics",
    "ScenarioResult",
    "desk_mcmc_config",
    "generate_replicate",
    "fit_replicate",
    "run_scenario",
    "run_grid",
    "load_grid",
    "write_results_csv",
]

#: PSRF level a replicate must reach (after one automatic doubling) to count.
PSRF_LIMIT = 1.1

#: A scenario aborts when more than this fraction of replicates fail.
MAX_FAILURE_FRACTION = 0.2


@dataclass(frozen=True)
class Scenario:
    """Generator truth and replication plan for one simulation cell."""

    name: str
    c: int
    eta: float
    delta: float
    n: int
    beta_true: tuple[float, float] = (2.0, 0.3)
    alpha_true: float = 0.6
    replicates: int = 100
    seed: int = 0
    x_law: str = "normal"
    redraw_x: bool = True

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if self.n < 2:
            raise ValueError("need at least two observations")
        if self.c < 0 or int(self.c) != self.c:
            raise ValueError("truncation bound c must be a nonnegative integer")
        if not self.alpha_true > 0:
            raise ValueError("alpha_true must be positive")
        if not self.eta >= 1.0:
            raise ValueError("eta must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie strictly inside (0, 1)")
        if self.x_law not in ("normal", "uniform"):
            raise ValueError("x_law must be 'normal' or 'uniform'")
        if len(self.beta_true) != 2:
            raise ValueError("beta_true must be (intercept, slope)")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def truths(self, family: str) -> dict[str, float]:
        base = {"beta0": self.beta_true[0], "beta1": self.beta_true[1], "alpha": self.alpha_true}
        if family == "ctdw":
            base.update(eta=self.eta, delta=self.delta)
        return base


def desk_mcmc_config(seed=0) -> McmcConfig:
    """Reduced schedule for minutes-scale studies: 2 chains, 500 adaptation,
    1000 burn-in, 5000 kept draws per chain."""
    return McmcConfig(chains=2, adapt=500, burnin=1000, iterations=5000, thin=1, seed=seed)


def _rep_rng(scenario: Scenario, rep_index: int, stream: int):
    ss = np.random.SeedSequence((scenario.seed, stream, rep_index))
    return np.random.Generator(np.random.Philox(key=int(ss.generate_state(1, np.uint64)[0])))


def _rep_seed(scenario: Scenario, rep_index: int, stream: int) -> int:
    ss = np.random.SeedSequence((scenario.seed, stream, rep_index))
    return int(ss.generate_state(1, np.uint64)[0])


def generate_replicate(scenario: Scenario, rep_index: int) -> Dataset:
    """Simulate one dataset; deterministic in (scenario.seed, rep_index)."""
    if not 0 <= rep_index < scenario.replicates:
        raise ValueError("rep_index out of range")
    # stream 0 holds the covariates shared by all replicates when redraw_x=False
    if scenario.redraw_x:
        x_rng = _rep_rng(scenario, rep_index, stream=1)
    else:
        x_rng = _rep_rng(scenario, 0, stream=0)
    if scenario.x_law == "normal":
        x = x_rng.standard_normal(scenario.n)
    else:
        x = x_rng.uniform(-1.0, 1.0, scenario.n)
    y_rng = _rep_rng(scenario, rep_index, stream=2)
    b0, b1 = scenario.beta_true
    m_star = scenario.c + np.exp(b0 + b1 * x)
    y = dwcore.ctdw_sample(
        m_star, scenario.alpha_true, scenario.eta, scenario.delta, scenario.c, scenario.n, y_rng
    )
    X = np.column_stack([np.ones(scenario.n), x])
    return Dataset(y=y, X=X, c=scenario.c, colnames=("beta0", "beta1"))


def fit_replicate(scenario: Scenario, rep_index: int, families, mcmc: McmcConfig, test_hook=None):
    """Fit every family to one replicate.

    Returns ``{family: {"params": {name: (median, lo, hi)}, "failed": bool,
    "doubled": bool}}``.  A fit whose worst split-Rhat exceeds 1.1 is retried
    once with doubled iterations and excluded (failed) if still above.
    """
    out = {}
    if test_hook == "identity":
        for family in families:
            params = {k: (v, v, v) for k, v in scenario.truths(family).items()}
            out[family] = {"params": params, "failed": False, "doubled": False}
        return out

    data = generate_replicate(scenario, rep_index)
    prior = PriorSpec(delta_max=0.5)
    for fi, family in enumerate(families):
        cfg = replace(mcmc, seed=_rep_seed(scenario, rep_index, stream=10 + fi))
        draws = sampler.run_chains(family, data, prior, cfg)
        worst = max(v["psrf"] for v in sampler.psrf_report(draws).values())
        doubled = False
        if worst > PSRF_LIMIT:
            doubled = True
            cfg = replace(cfg, iterations=cfg.iterations * 2)
            draws = sampler.run_chains(family, data, prior, cfg)
            worst = max(v["psrf"] for v in sampler.psrf_report(draws).values())
        failed = worst > PSRF_LIMIT
        params = {}
        names = {"beta0": "beta0", "beta1": "beta1", "alpha": "alpha", "eta": "eta", "delta": "delta"}
        for key in scenario.truths(family):
            pooled = draws.flat(names[key])
            lo, med, hi = np.quantile(pooled, [0.025, 0.5, 0.975])
            params[key] = (float(med), float(lo), float(hi))
        out[family] = {"params": params, "failed": failed, "doubled": doubled}
    return out


@dataclass(frozen=True)
class ParamMetrics:
    truth: float
    bias: float
    rmse: float
    coverage: float
    mean_bci_length: float

    def __post_init__(self):
        if self.rmse < abs(self.bias) - 1e-12:
            raise ValueError("rmse cannot be below |bias|")
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must lie in [0, 1]")


@dataclass(frozen=True)
class ScenarioResult:
    scenario: str
    family: str
    params: dict[str, ParamMetrics]
    replicates_used: int
    replicates_failed: int


def _aggregate(scenario: Scenario, family: str, records) -> ScenarioResult:
    """Fold per-replicate records (ordered by replicate index) into metrics."""
    truths = scenario.truths(family)
    used = [r for r in records if not r["failed"]]
    failed = len(records) - len(used)
    params = {}
    for key, truth in truths.items():
        med = np.array([r["params"][key][0] for r in used])
        lo = np.array([r["params"][key][1] for r in used])
        hi = np.array([r["params"][key][2] for r in used])
        err = med - truth
        params[key] = ParamMetrics(
            truth=truth,
            bias=float(err.mean()),
            rmse=float(np.sqrt(np.mean(err**2))),
            coverage=float(np.mean((lo <= truth) & (truth <= hi))),
            mean_bci_length=float(np.mean(hi - lo)),
        )
    return ScenarioResult(
        scenario=scenario.name,
        family=family,
        params=params,
        replicates_used=len(used),
        replicates_failed=failed,
    )


def _worker(args):
    scenario, rep, families, mcmc, test_hook = args
    return rep, fit_replicate(scenario, rep, families, mcmc, test_hook)


def run_scenario(
    scenario: Scenario,
    families=("tdw", "ctdw"),
    mcmc: McmcConfig | None = None,
    workers: int = 1,
    test_hook=None,
) -> dict[str, ScenarioResult]:
    """Run all replicates of one scenario and aggregate per family."""
    mcmc = mcmc or desk_mcmc_config()
    jobs = [(scenario, rep, tuple(families), mcmc, test_hook) for rep in range(scenario.replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_worker, jobs))
    else:
        results = dict(map(_worker, jobs))
    records = [results[rep] for rep in range(scenario.replicates)]

    out = {}
    for family in families:
        fam_records = [rec[family] for rec in records]
        n_failed = sum(r["failed"] for r in fam_records)
        if n_failed > MAX_FAILURE_FRACTION * scenario.replicates:
            raise RuntimeError(
                f"scenario {scenario.name!r}: {n_failed}/{scenario.replicates} "
                f"replicates failed convergence for family {family!r}"
            )
        out[family] = _aggregate(scenario, family, fam_records)
    return out


# ---------------------------------------------------------------------------
# grid configs, manifests, and CSV output
# ---------------------------------------------------------------------------


def load_grid(path) -> dict:
    """Parse and validate a scenario-grid JSON config."""
    raw = json.loads(Path(path).read_text())
    if "scenarios" not in raw or not raw["scenarios"]:
        raise ValueError("grid config needs a nonempty 'scenarios' list")
    seed = int(raw.get("seed", 0))
    scenarios = []
    for i, sc in enumerate(raw["scenarios"]):
        scenarios.append(
            Scenario(
                name=sc.get("name", f"scenario{i}"),
                c=int(sc["c"]),
                eta=float(sc["eta"]),
                delta=float(sc["delta"]),
                n=int(sc["n"]),
                beta_true=tuple(sc.get("beta_true", (2.0, 0.3))),
                alpha_true=float(sc.get("alpha_true", 0.6)),
                replicates=int(sc.get("replicates", 100)),
                seed=int(sc.get("seed", seed + i)),
                x_law=sc.get("x_law", "normal"),
                redraw_x=bool(sc.get("redraw_x", True)),
            )
        )
    mc = raw.get("mcmc", {})
    mcmc = McmcConfig(
        chains=int(mc.get("chains", 2)),
        adapt=int(mc.get("adapt", 500)),
        burnin=int(mc.get("burnin", 1000)),
        iterations=int(mc.get("iterations", 5000)),
        thin=int(mc.get("thin", 1)),
        seed=seed,
    )
    families = tuple(raw.get("families", ("tdw", "ctdw")))
    bad = [f for f in families if f not in ("tdw", "ctdw")]
    if bad:
        raise ValueError(f"simulation families must be tdw/ctdw, got {bad}")
    return {"seed": seed, "scenarios": scenarios, "mcmc": mcmc, "families": families}


def _grid_hash(grid) -> str:
    payload = {
        "seed": grid["seed"],
        "families": list(grid["families"]),
        "mcmc": asdict(grid["mcmc"]),
        "scenarios": [asdict(s) for s in grid["scenarios"]],
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_results_csv(results, path):
    """One row per (scenario, family, parameter), ordered deterministically."""
    lines = [
        "scenario,family,parameter,truth,bias,rmse,coverage,mean_bci_length,"
        "replicates_used,replicates_failed"
    ]
    for res in results:
        for key, m in res.params.items():
            lines.append(
                f"{res.scenario},{res.family},{key},{m.truth!r},{m.bias!r},{m.rmse!r},"
                f"{m.coverage!r},{m.mean_bci_length!r},{res.replicates_used},"
                f"{res.replicates_failed}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def _write_manifest(path, manifest):
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    os.replace(tmp, path)


def run_grid(grid, out_dir, workers=1, test_hook=None, progress=None):
    """Run every scenario of a grid with a resumable manifest.

    Per-replicate records land in ``manifest.json`` as they complete, so an
    interrupted run picks up where it stopped and produces the identical
    final ``results.csv``.  A manifest that no longer parses, or that was
    produced by a different grid, raises and requires a restart.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    grid_hash = _grid_hash(grid)

    if manifest_path.exists():
        try:
            manifest = json.loads(manifest_path.read_text())
        except json.JSONDecodeError:
            raise RuntimeError(
                "manifest.json is corrupted; delete the output directory and restart"
            ) from None
        if manifest.get("grid_hash") != grid_hash:
            raise RuntimeError("manifest.json belongs to a different grid config; restart")
    else:
        manifest = {
            "grid_hash": grid_hash,
            "seed": grid["seed"],
            "families": list(grid["families"]),
            "records": {},
            "scenario_seeds": {s.name: s.seed for s in grid["scenarios"]},
        }

    records = manifest["records"]
    for scenario in grid["scenarios"]:
        sc_rec = records.setdefault(scenario.name, {})
        missing = [r for r in range(scenario.replicates) if str(r) not in sc_rec]
        jobs = [(scenario, rep, grid["families"], grid["mcmc"], test_hook) for rep in missing]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for rep, rec in pool.map(_worker, jobs):
                    sc_rec[str(rep)] = rec
                    _write_manifest(manifest_path, manifest)
                    if progress:
                        progress(scenario.name, rep)
        else:
            for job in jobs:
                rep, rec = _worker(job)
                sc_rec[str(rep)] = rec
                _write_manifest(manifest_path, manifest)
                if progress:
                    progress(scenario.name, rep)

    results = []
    failure_counts = {}
    for scenario in grid["scenarios"]:
        sc_rec = records[scenario.name]
        ordered = [sc_rec[str(r)] for r in range(scenario.replicates)]
        for family in grid["families"]:
            fam_records = [rec[family] for rec in ordered]
            n_failed = sum(r["failed"] for r in fam_records)
            failure_counts[f"{scenario.name}/{family}"] = n_failed
            if n_failed > MAX_FAILURE_FRACTION * scenario.replicates:
                raise RuntimeError(
                    f"scenario {scenario.name!r}: {n_failed}/{scenario.replicates} "
                    f"replicates failed convergence for family {family!r}"
                )
            results.append(_aggregate(scenario, family, fam_records))
    manifest["failure_counts"] = failure_counts
    _write_manifest(manifest_path, manifest)
    write_results_csv(results, out_dir / "results.csv")
    return results
