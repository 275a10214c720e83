"""Command-line front end.

Subcommands
-----------
fit        ingest a CSV, run the MCMC, archive draws + summary + PSRF report
diagnose   PIT residuals, KL influence, PSIS-LOO, and SVG plots for a fit
loo        just the PSIS-LOO report for a fit
simulate   run a scenario-grid JSON through the Monte Carlo harness
dist       evaluate pmf/cdf/quantile/moment/kurtosis/mean for scripting

Outputs carry the config hash and seed; reruns with identical configuration
are byte-identical.  Exit codes: 0 success, 1 error, 3 fit completed but some
PSRF exceeded 1.05.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from ctdw import diagnostics, dwcore, regress, sampler, simharness, svgplot

__all__ = ["main"]

PSRF_GATE = 1.05


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 1


def _config_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _read_records(path):
    raw = Path(path).read_bytes()
    text = raw.decode("utf-8-sig")
    rows = list(csv.DictReader(text.splitlines()))
    if not rows:
        raise ValueError(f"input file {path} contains no data rows")
    return rows, hashlib.sha256(raw).hexdigest()


def _load_dataset(args):
    records, digest = _read_records(args.input)
    if args.generic:
        data = regress.build_generic(records, c=args.c)
    else:
        data = regress.build_design(records, c=args.c)
    return data, digest


def _mcmc_config(args) -> sampler.McmcConfig:
    return sampler.McmcConfig(
        chains=args.chains,
        adapt=args.adapt,
        burnin=args.burnin,
        iterations=args.iters,
        thin=args.thin,
        seed=args.seed,
    )


def _prior(args) -> sampler.PriorSpec:
    return sampler.PriorSpec(
        sigma2_beta=args.sigma2_beta,
        a_alpha=args.a_alpha,
        b_alpha=args.b_alpha,
        a_eta=args.a_eta,
        b_eta=args.b_eta,
        delta_max=args.delta_max,
    )


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def cmd_fit(args) -> int:
    try:
        data, digest = _load_dataset(args)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    config = _mcmc_config(args)
    prior = _prior(args)
    cfg_payload = {
        "command": "fit",
        "family": args.family,
        "c": args.c,
        "generic": args.generic,
        "prior": {
            "sigma2_beta": prior.sigma2_beta,
            "a_alpha": prior.a_alpha,
            "b_alpha": prior.b_alpha,
            "a_eta": prior.a_eta,
            "b_eta": prior.b_eta,
            "delta_max": prior.delta_max,
        },
        "mcmc": {
            "chains": config.chains,
            "adapt": config.adapt,
            "burnin": config.burnin,
            "iterations": config.iterations,
            "thin": config.thin,
            "seed": config.seed,
        },
    }

    draws = sampler.run_chains(args.family, data, prior, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = sampler.save_draws(
        draws,
        out,
        extra_meta={
            "config_hash": _config_hash(cfg_payload),
            "run_config": cfg_payload,
            "data": {"n": data.n, "sha256": digest, "columns": list(data.colnames), "c": data.c},
        },
    )

    lines = ["parameter,estimate,lower95,upper95"]
    for s in sampler.summarize(draws):
        lines.append(f"{s.name},{s.median!r},{s.lower95!r},{s.upper95!r}")
    (out / "summary.csv").write_text("\n".join(lines) + "\n")

    report = meta["psrf"]
    lines = ["parameter,psrf,degenerate"]
    for name in draws.param_names:
        entry = report[name]
        lines.append(f"{name},{entry['psrf']!r},{int(entry['degenerate'])}")
    (out / "psrf.csv").write_text("\n".join(lines) + "\n")

    worst = max(entry["psrf"] for entry in report.values())
    print(f"fit complete: {data.n} rows, family={args.family}, worst PSRF {worst:.4f}")
    if worst > PSRF_GATE:
        print(f"warning: PSRF above {PSRF_GATE}; chains have not converged", file=sys.stderr)
        return 3
    return 0


# ---------------------------------------------------------------------------
# diagnose / loo
# ---------------------------------------------------------------------------


def _load_fit_for_data(args):
    data, digest = _load_dataset(args)
    draws, meta = sampler.load_draws(args.draws, verify=True)
    bound = meta.get("data", {})
    if bound.get("n") != data.n or bound.get("sha256") != digest:
        raise ValueError("draws archive was produced from different data (n or hash mismatch)")
    if bound.get("c") != args.c:
        raise ValueError("draws archive used a different truncation bound")
    return data, draws, meta


def cmd_diagnose(args) -> int:
    try:
        data, draws, meta = _load_fit_for_data(args)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(str(exc))

    rng = np.random.default_rng(np.random.Philox(key=args.seed))
    residuals = diagnostics.pit_residuals(draws, data, n_sims=args.n_sims, rng=rng)
    influence = diagnostics.kl_influence(draws, data)
    loo = diagnostics.psis_loo(draws, data)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "config_hash": meta.get("config_hash"),
        "seed": args.seed,
        "n_sims": args.n_sims,
        "family": draws.family,
        "ks_stat": residuals.ks_stat,
        "residuals": [float(v) for v in residuals.residuals],
        "qq_theoretical": [float(v) for v in residuals.qq_theoretical],
        "qq_empirical": [float(v) for v in residuals.qq_empirical],
        "kl": [None if not np.isfinite(v) else float(v) for v in influence.kl],
        "calibration": [None if not np.isfinite(v) else float(v) for v in influence.calibration],
        "flags": [bool(v) for v in influence.flags],
        "unestimable": [bool(v) for v in influence.unestimable],
        "n_flagged": influence.n_flagged,
        "elpd_loo": loo.elpd_loo,
        "looic": loo.looic,
        "p_loo": loo.p_loo,
        "pareto_k": [float(v) for v in loo.pareto_k],
        "n_high_pareto_k": loo.n_high_k,
    }
    _write_json(out / "diagnostics.json", payload)

    lines = ["id,pit,kl,calibration,flag,pareto_k"]
    for i in range(data.n):
        kl = influence.kl[i]
        cal = influence.calibration[i]
        lines.append(
            f"{data.row_ids[i]},{residuals.residuals[i]!r},"
            f"{'' if not np.isfinite(kl) else repr(float(kl))},"
            f"{'' if not np.isfinite(cal) else repr(float(cal))},"
            f"{int(influence.flags[i])},{loo.pareto_k[i]!r}"
        )
    (out / "diagnostics.csv").write_text("\n".join(lines) + "\n")

    (out / "qq.svg").write_text(
        svgplot.qq_plot_svg(residuals.qq_theoretical, residuals.qq_empirical)
    )
    (out / "influence.svg").write_text(
        svgplot.influence_bar_svg(
            influence.kl, influence.flags, diagnostics.KL_FLAG_THRESHOLD
        )
    )
    print(
        f"diagnostics complete: KS {residuals.ks_stat:.4f}, "
        f"{influence.n_flagged} influential, LOOIC {loo.looic:.1f}"
    )
    return 0


def cmd_loo(args) -> int:
    try:
        data, draws, meta = _load_fit_for_data(args)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(str(exc))
    loo = diagnostics.psis_loo(draws, data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "loo.json",
        {
            "config_hash": meta.get("config_hash"),
            "family": draws.family,
            "elpd_loo": loo.elpd_loo,
            "looic": loo.looic,
            "p_loo": loo.p_loo,
            "n_high_pareto_k": loo.n_high_k,
        },
    )
    lines = ["id,elpd_i,pareto_k,smoothing_skipped"]
    for i in range(data.n):
        lines.append(
            f"{data.row_ids[i]},{loo.elpd_i[i]!r},{loo.pareto_k[i]!r},"
            f"{int(loo.smoothing_skipped[i])}"
        )
    (out / "loo.csv").write_text("\n".join(lines) + "\n")
    print(f"LOO complete: elpd {loo.elpd_loo:.2f}, LOOIC {loo.looic:.1f}, p_loo {loo.p_loo:.2f}")
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    try:
        grid = simharness.load_grid(args.config)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(f"bad grid config: {exc}")
    if args.replicates is not None:
        from dataclasses import replace

        grid["scenarios"] = [replace(s, replicates=args.replicates) for s in grid["scenarios"]]
    try:
        results = simharness.run_grid(
            grid, args.out, workers=args.workers, test_hook=args.test_hook
        )
    except RuntimeError as exc:
        return _fail(str(exc))
    print(f"simulation complete: {len(results)} (scenario, family) cells -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# dist
# ---------------------------------------------------------------------------


def cmd_dist(args) -> int:
    try:
        if args.family == "tnb":
            if args.mu is None:
                return _fail("tnb needs --mu")
            params = dwcore.TNBParams(mu=args.mu, alpha_nb=args.alpha, c=args.c)
        elif args.family == "ctdw":
            if args.m_star is None or args.eta is None or args.delta is None:
                return _fail("ctdw needs --m-star, --eta and --delta")
            params = dwcore.CTDWParams(
                base=dwcore.TDWParams(args.m_star, args.alpha, args.c),
                eta=args.eta,
                delta=args.delta,
            )
        else:
            if args.m_star is None:
                return _fail("tdw needs --m-star")
            params = dwcore.TDWParams(args.m_star, args.alpha, args.c)

        op = args.op
        if op in ("pmf", "cdf"):
            if args.at is None:
                return _fail(f"{op} needs a count argument")
            y = int(args.at)
            value = float(params.pmf(y) if op == "pmf" else params.cdf(y))
        elif op == "quantile":
            if args.at is None:
                return _fail("quantile needs a probability argument")
            value = int(params.quantile(float(args.at)))
        elif op == "moment":
            if args.family != "tdw":
                return _fail("raw moments are available for the tdw family only")
            if args.at is None:
                return _fail("moment needs the order k")
            value = float(params.raw_moment(int(args.at)))
        elif op == "kurtosis":
            if args.family != "tdw":
                return _fail("kurtosis is available for the tdw family only")
            value = float(params.kurtosis())
        elif op == "mean":
            if args.family != "tnb":
                return _fail("mean is available for the tnb family only")
            value = float(params.truncated_mean())
        else:  # pragma: no cover - argparse restricts choices
            return _fail(f"unknown operation {op}")
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return _fail(str(exc))
    print(json.dumps({"family": args.family, "op": op, "arg": args.at, "value": value}))
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def _add_mcmc_flags(p):
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--adapt", type=int, default=2000)
    p.add_argument("--burnin", type=int, default=4000)
    p.add_argument("--iters", type=int, default=25000)
    p.add_argument("--thin", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)


def _add_prior_flags(p):
    p.add_argument("--sigma2-beta", type=float, default=1e3, dest="sigma2_beta")
    p.add_argument("--a-alpha", type=float, default=1e-3, dest="a_alpha")
    p.add_argument("--b-alpha", type=float, default=1e-3, dest="b_alpha")
    p.add_argument("--a-eta", type=float, default=1e-3, dest="a_eta")
    p.add_argument("--b-eta", type=float, default=1e-3, dest="b_eta")
    p.add_argument("--delta-max", type=float, default=0.5, dest="delta_max")


def _add_data_flags(p):
    p.add_argument("--input", required=True, help="CSV with a header row (UTF-8)")
    p.add_argument("--c", type=int, default=1, help="lower truncation bound")
    p.add_argument(
        "--generic",
        action="store_true",
        help="treat the CSV as a 'y' column plus numeric covariates",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctdw",
        description="Robust median regression for lower-truncated counts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model by MCMC and archive the draws")
    _add_data_flags(p)
    p.add_argument("--family", required=True, choices=regress.FAMILIES)
    p.add_argument("--out", required=True)
    _add_mcmc_flags(p)
    _add_prior_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="residual, influence, and LOO reports for a fit")
    _add_data_flags(p)
    p.add_argument("--draws", required=True, help="directory produced by 'fit'")
    p.add_argument("--out", required=True)
    p.add_argument("--n-sims", type=int, default=500, dest="n_sims")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("loo", help="PSIS leave-one-out report for a fit")
    _add_data_flags(p)
    p.add_argument("--draws", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_loo)

    p = sub.add_parser("simulate", help="run a scenario-grid Monte Carlo study")
    p.add_argument("--config", required=True, help="scenario grid JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--replicates", type=int, default=None, help="override every scenario")
    p.add_argument("--test-hook", choices=("identity",), default=None, dest="test_hook")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dist", help="evaluate a distribution quantity")
    p.add_argument("--family", required=True, choices=regress.FAMILIES)
    p.add_argument("--c", type=int, default=0)
    p.add_argument("--m-star", type=float, default=None, dest="m_star")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("op", choices=("pmf", "cdf", "quantile", "moment", "kurtosis", "mean"))
    p.add_argument("at", nargs="?", type=float, default=None)
    p.set_defaults(func=cmd_dist)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
