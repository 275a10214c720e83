"""Native Bayesian inference engine.

Componentwise random-walk Metropolis on transformed parameters:
regression coefficients are sampled raw, the dispersion through ``log``,
the tail inflation through ``log(eta - 1)`` (which bakes the ``eta > 1``
identifiability restriction into the state space), and the mixture weight
through ``logit(delta / delta_max)``.  Proposal scales adapt by
Robbins-Monro toward a 0.44 per-coordinate acceptance rate during a
dedicated adaptation phase and are frozen afterwards, so retained draws
come from a genuine Markov chain.

Chains use independent counter-based (Philox) streams spawned from one
root seed; identical configuration therefore reproduces draws bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

from ctdw import regress
from ctdw.regress import Dataset

__all__ = [
    "PriorSpec",
    "McmcConfig",
    "PosteriorDraws",
    "Target",
    "ParamSummary",
    "make_target",
    "log_posterior",
    "run_target",
    "run_chains",
    "psrf",
    "psrf_report",
    "ess",
    "summarize",
    "save_draws",
    "load_draws",
]


@dataclass(frozen=True)
class PriorSpec:
    """Independent priors: normal betas, gamma dispersion and tail inflation
    (the latter truncated to (1, inf)), uniform mixture weight on (0, delta_max)."""

    sigma2_beta: float = 1e3
    a_alpha: float = 1e-3
    b_alpha: float = 1e-3
    a_eta: float = 1e-3
    b_eta: float = 1e-3
    delta_max: float = 0.5

    def __post_init__(self):
        for name in ("sigma2_beta", "a_alpha", "b_alpha", "a_eta", "b_eta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.delta_max <= 1.0:
            raise ValueError("delta_max must lie in (0, 1]")


@dataclass(frozen=True)
class McmcConfig:
    """Chain schedule; the defaults mirror the application setup
    (4 chains, 2000 adaptation, 4000 burn-in, 25000 iterations thinned by 5)."""

    chains: int = 4
    adapt: int = 2000
    burnin: int = 4000
    iterations: int = 25000
    thin: int = 5
    seed: int = 0
    target_accept: float = 0.44

    def __post_init__(self):
        if self.chains < 1:
            raise ValueError("need at least one chain")
        if min(self.adapt, self.burnin) < 0 or self.iterations < 1:
            raise ValueError("phase lengths must be nonnegative and iterations >= 1")
        if self.thin < 1 or self.iterations % self.thin != 0:
            raise ValueError("thin must be >= 1 and divide iterations exactly")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")

    @property
    def kept_per_chain(self) -> int:
        return self.iterations // self.thin


@dataclass
class Target:
    """An unnormalized posterior on an unconstrained parameter space."""

    names: tuple[str, ...]
    init: np.ndarray
    log_post: Callable[[np.ndarray], float]
    constrain: Callable[[np.ndarray], np.ndarray]
    pointwise: Callable[[np.ndarray], np.ndarray] | None = None
    unconstrain: Callable[[np.ndarray], np.ndarray] | None = None
    clamp_cell: list = field(default_factory=lambda: [0])


@dataclass
class PosteriorDraws:
    """Kept draws on the natural scale plus the pointwise log-likelihood."""

    draws: np.ndarray                 # [chains, kept, n_params]
    param_names: tuple[str, ...]
    loglik: np.ndarray | None         # [chains, kept, n_obs] or None
    accept_rates: np.ndarray          # [chains, n_params], post-adaptation
    seeds: tuple[int, ...]            # per-chain child seeds
    config: McmcConfig
    family: str | None = None
    clamp_events: int = 0

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    @property
    def n_kept(self) -> int:
        return self.draws.shape[1]

    def param_index(self, name: str) -> int:
        try:
            return self.param_names.index(name)
        except ValueError:
            raise KeyError(f"unknown parameter {name!r}") from None

    def chain_values(self, name: str) -> np.ndarray:
        """[chains, kept] matrix for one parameter."""
        return self.draws[:, :, self.param_index(name)]

    def flat(self, name: str) -> np.ndarray:
        """All chains pooled."""
        return self.chain_values(name).reshape(-1)

    def pooled_loglik(self) -> np.ndarray:
        """[chains*kept, n_obs] pointwise log-likelihood matrix."""
        if self.loglik is None:
            raise ValueError("this run recorded no pointwise log-likelihood")
        return self.loglik.reshape(-1, self.loglik.shape[-1])


# ---------------------------------------------------------------------------
# transforms and the family targets
# ---------------------------------------------------------------------------


def _log_sigmoid(z):
    return -np.logaddexp(0.0, -z)


def _exp(x: float) -> float:
    """exp that saturates instead of raising OverflowError."""
    return math.exp(x) if x < 709.0 else math.inf


def _gamma_logpdf(x, a, b):
    return a * math.log(b) - special.gammaln(a) + (a - 1.0) * np.log(x) - b * x


def make_target(family, data: Dataset, prior: PriorSpec) -> Target:
    """Posterior target for one family on one dataset.

    The transformed state is ``[beta..., log(alpha)]`` plus, for the mixture,
    ``log(eta - 1)`` and ``logit(delta / delta_max)``.  The log posterior adds
    the transform Jacobians; the gamma prior on eta is left unnormalized over
    (1, inf) because the truncation constant cancels in Metropolis ratios.
    """
    if family not in regress.FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    loglik = regress.pointwise_loglik_fn(family, data)
    p = data.p
    sigma2 = prior.sigma2_beta
    names = list(data.colnames) + ["alpha"]
    mixture = family == "ctdw"
    if mixture:
        names += ["eta", "delta"]
    clamp_cell = [0]

    delta_max = prior.delta_max
    log_norm_const = -0.5 * p * math.log(2.0 * math.pi * sigma2)

    def split(z):
        beta = z[:p]
        alpha = _exp(z[p])
        if not mixture:
            return beta, alpha, None, None
        eta = 1.0 + _exp(z[p + 1])
        delta = delta_max / (1.0 + _exp(-z[p + 2]))
        return beta, alpha, eta, delta

    def log_prior(z):
        beta, alpha, eta, delta = split(z)
        lp = log_norm_const - 0.5 * float(beta @ beta) / sigma2
        lp += float(_gamma_logpdf(alpha, prior.a_alpha, prior.b_alpha)) + z[p]
        if mixture:
            # eta: gamma density truncated to (1, inf) up to a constant,
            # plus the log(eta - 1) Jacobian
            lp += float(_gamma_logpdf(eta, prior.a_eta, prior.b_eta)) + z[p + 1]
            # delta: uniform(0, delta_max) density with the scaled-logit Jacobian
            lp += float(_log_sigmoid(z[p + 2]) + _log_sigmoid(-z[p + 2]))
        return lp

    def log_post(z):
        beta, alpha, eta, delta = split(z)
        if not np.isfinite(alpha) or alpha <= 0.0:
            return -math.inf
        if mixture and (not np.isfinite(eta) or not 0.0 < delta < delta_max):
            return -math.inf
        ll, clamped = loglik(beta, alpha, eta, delta)
        clamp_cell[0] += clamped
        total = float(np.sum(ll)) + log_prior(z)
        return total if np.isfinite(total) else -math.inf

    def constrain(z):
        beta, alpha, eta, delta = split(z)
        if not mixture:
            return np.concatenate([beta, [alpha]])
        return np.concatenate([beta, [alpha, eta, delta]])

    def unconstrain(theta):
        theta = np.asarray(theta, dtype=float)
        z = np.empty_like(theta)
        z[:p] = theta[:p]
        z[p] = math.log(theta[p])
        if mixture:
            z[p + 1] = math.log(theta[p + 1] - 1.0)
            frac = theta[p + 2] / delta_max
            z[p + 2] = math.log(frac / (1.0 - frac))
        return z

    def pointwise(z):
        beta, alpha, eta, delta = split(z)
        ll, _ = loglik(beta, alpha, eta, delta)
        return ll

    # starting point: intercept at the log of the centered sample median,
    # everything else at neutral values
    med = float(np.median(data.y))
    z0 = np.zeros(len(names))
    z0[0] = math.log(max(med - data.c, 0.5))
    if mixture:
        z0[p + 1] = 0.0                                   # eta = 2
        delta0 = min(0.25, delta_max / 2.0)
        z0[p + 2] = math.log(delta0 / (delta_max - delta0))

    return Target(
        names=tuple(names),
        init=z0,
        log_post=log_post,
        constrain=constrain,
        pointwise=pointwise,
        unconstrain=unconstrain,
        clamp_cell=clamp_cell,
    )


def log_posterior(z, family, data: Dataset, prior: PriorSpec) -> float:
    """Log posterior (with transform Jacobians) at a transformed state."""
    return make_target(family, data, prior).log_post(np.asarray(z, dtype=float))


# ---------------------------------------------------------------------------
# the sampler
# ---------------------------------------------------------------------------


def _chain_seeds(seed, chains):
    root = np.random.SeedSequence(seed)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in root.spawn(chains)]


def _run_one_chain(target: Target, config: McmcConfig, chain_seed: int, n_obs: int | None):
    rng = np.random.Generator(np.random.Philox(key=chain_seed))
    d = len(target.init)
    z = np.array(target.init, dtype=float)
    lp = target.log_post(z)
    attempts = 0
    while not np.isfinite(lp) and attempts < 3:
        z = np.array(target.init, dtype=float) + 0.1 * rng.standard_normal(d)
        lp = target.log_post(z)
        attempts += 1
    if not np.isfinite(lp):
        raise RuntimeError(
            f"log posterior is non-finite after fallback initialization; state={z.tolist()}"
        )

    scales = np.full(d, 0.1)
    kept = config.kept_per_chain
    draws = np.empty((kept, d))
    loglik = np.empty((kept, n_obs)) if target.pointwise is not None and n_obs else None
    accepted = np.zeros(d)
    proposed = np.zeros(d)

    total = config.adapt + config.burnin + config.iterations
    k = 0
    for it in range(total):
        adapting = it < config.adapt
        for j in range(d):
            z_prop = z.copy()
            z_prop[j] += scales[j] * rng.standard_normal()
            lp_prop = target.log_post(z_prop)
            if np.isfinite(lp_prop):
                ap = math.exp(min(0.0, lp_prop - lp))
            else:
                ap = 0.0
            if rng.random() < ap:
                z = z_prop
                lp = lp_prop
                if not adapting:
                    accepted[j] += 1.0
            if adapting:
                gain = (it + 1.0) ** -0.6
                scales[j] *= math.exp(gain * (ap - config.target_accept))
                scales[j] = min(max(scales[j], 1e-8), 1e8)
            else:
                proposed[j] += 1.0
        past_burnin = it - config.adapt - config.burnin
        if past_burnin >= 0 and (past_burnin + 1) % config.thin == 0:
            draws[k] = target.constrain(z)
            if loglik is not None:
                loglik[k] = target.pointwise(z)
            k += 1
    assert k == kept
    rates = np.divide(accepted, proposed, out=np.zeros(d), where=proposed > 0)
    return draws, loglik, rates


def run_target(target: Target, config: McmcConfig, family=None, n_obs=None) -> PosteriorDraws:
    """Run all chains of the componentwise adaptive Metropolis sampler.

    Chains execute sequentially on independent Philox streams; the output is
    a deterministic function of (target, config).
    """
    if n_obs is None and target.pointwise is not None:
        n_obs = len(target.pointwise(np.asarray(target.init, dtype=float)))
    seeds = _chain_seeds(config.seed, config.chains)
    target.clamp_cell[0] = 0
    per_chain = [_run_one_chain(target, config, s, n_obs) for s in seeds]
    draws = np.stack([pc[0] for pc in per_chain])
    loglik = None
    if per_chain[0][1] is not None:
        loglik = np.stack([pc[1] for pc in per_chain])
    rates = np.stack([pc[2] for pc in per_chain])
    return PosteriorDraws(
        draws=draws,
        param_names=target.names,
        loglik=loglik,
        accept_rates=rates,
        seeds=tuple(seeds),
        config=config,
        family=family,
        clamp_events=target.clamp_cell[0],
    )


def run_chains(family, data: Dataset, prior: PriorSpec, config: McmcConfig) -> PosteriorDraws:
    """Fit one family to a dataset and record pointwise log-likelihoods."""
    target = make_target(family, data, prior)
    return run_target(target, config, family=family, n_obs=data.n)


# ---------------------------------------------------------------------------
# convergence diagnostics and summaries
# ---------------------------------------------------------------------------


def _split_chains(values):
    """Halve each chain; drops one trailing draw per chain if the count is odd."""
    chains, kept = values.shape
    half = kept // 2
    if half < 1:
        raise ValueError("need at least two draws per chain for split-Rhat")
    return np.concatenate([values[:, :half], values[:, half : 2 * half]], axis=0)


def _split_rhat(values):
    segs = _split_chains(np.asarray(values, dtype=float))
    m, n = segs.shape
    within = segs.var(axis=1, ddof=1)
    w = within.mean()
    if w == 0.0:
        return 1.0, True
    b = n * segs.mean(axis=1).var(ddof=1)
    var_plus = (n - 1.0) / n * w + b / n
    return float(np.sqrt(var_plus / w)), False


def psrf(draws: PosteriorDraws, param: str) -> float:
    """Split-chain potential scale reduction factor; <= 1.05 counts as converged."""
    if draws.n_chains < 2:
        raise ValueError("PSRF needs at least two chains")
    if draws.n_kept < 50:
        raise ValueError("PSRF needs at least 50 kept draws per chain")
    value, _ = _split_rhat(draws.chain_values(param))
    return value


def psrf_report(draws: PosteriorDraws) -> dict:
    """Per-parameter split-Rhat with a degeneracy flag for constant draws."""
    out = {}
    for name in draws.param_names:
        value, degenerate = _split_rhat(draws.chain_values(name))
        out[name] = {"psrf": value, "degenerate": degenerate}
    return out


def ess(draws: PosteriorDraws, param: str) -> float:
    """Effective sample size via chain-averaged autocorrelations with Geyer's
    initial monotone positive-sequence truncation."""
    values = np.asarray(draws.chain_values(param), dtype=float)
    m, n = values.shape
    variances = values.var(axis=1, ddof=0)
    live = variances > 0.0
    if not np.any(live):
        return float(m * n)
    centered = values[live] - values[live].mean(axis=1, keepdims=True)
    nfft = int(2 ** np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(centered, nfft, axis=1)
    acov = np.fft.irfft(f * np.conj(f), nfft, axis=1)[:, :n].real / n
    rho = (acov / acov[:, :1]).mean(axis=0)
    # Geyer: sum consecutive pairs while they stay positive and decreasing
    pair_sums = []
    t = 1
    prev = math.inf
    while t + 1 < n:
        s = rho[t] + rho[t + 1]
        if s < 0:
            break
        s = min(s, prev)
        pair_sums.append(s)
        prev = s
        t += 2
    tau = 1.0 + 2.0 * float(np.sum(pair_sums))
    return float(m * n / max(tau, 1e-12))


@dataclass(frozen=True)
class ParamSummary:
    name: str
    median: float
    lower95: float
    upper95: float


def summarize(draws: PosteriorDraws) -> list[ParamSummary]:
    """Posterior medians and central 95% intervals on the natural scale."""
    out = []
    for name in draws.param_names:
        pooled = draws.flat(name)
        lo, med, hi = np.quantile(pooled, [0.025, 0.5, 0.975])
        out.append(ParamSummary(name, float(med), float(lo), float(hi)))
    return out


# ---------------------------------------------------------------------------
# draw archives
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def save_draws(draws: PosteriorDraws, out_dir, extra_meta=None) -> dict:
    """Write draws.csv (chain, iter, parameters) plus a JSON sidecar.

    The sidecar records the configuration, per-chain seeds, acceptance rates,
    the PSRF table, and a sha256 of the CSV so later consumers can refuse
    corrupted archives.  Returns the sidecar dictionary.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["chain,iter," + ",".join(draws.param_names)]
    for chain in range(draws.n_chains):
        for it in range(draws.n_kept):
            row = draws.draws[chain, it]
            lines.append(f"{chain},{it}," + ",".join(_fmt(v) for v in row))
    csv_bytes = ("\n".join(lines) + "\n").encode()
    (out_dir / "draws.csv").write_bytes(csv_bytes)

    cfg = draws.config
    meta = {
        "family": draws.family,
        "param_names": list(draws.param_names),
        "config": {
            "chains": cfg.chains,
            "adapt": cfg.adapt,
            "burnin": cfg.burnin,
            "iterations": cfg.iterations,
            "thin": cfg.thin,
            "seed": cfg.seed,
            "target_accept": cfg.target_accept,
        },
        "chain_seeds": list(draws.seeds),
        "accept_rates": {
            name: [float(r) for r in draws.accept_rates[:, j]]
            for j, name in enumerate(draws.param_names)
        },
        "psrf": psrf_report(draws) if draws.n_chains >= 2 else {},
        "clamp_events": draws.clamp_events,
        "draws_sha256": hashlib.sha256(csv_bytes).hexdigest(),
    }
    if extra_meta:
        meta.update(extra_meta)
    (out_dir / "fit.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return meta


def load_draws(in_dir, verify=True):
    """Read an archive back; returns (PosteriorDraws without loglik, sidecar).

    With ``verify=True`` a checksum mismatch between draws.csv and the sidecar
    raises, refusing silently corrupted archives.
    """
    in_dir = Path(in_dir)
    csv_bytes = (in_dir / "draws.csv").read_bytes()
    meta = json.loads((in_dir / "fit.json").read_text())
    if verify:
        digest = hashlib.sha256(csv_bytes).hexdigest()
        if digest != meta.get("draws_sha256"):
            raise ValueError("draws.csv checksum does not match the sidecar; archive corrupted")
    lines = csv_bytes.decode().splitlines()
    header = lines[0].split(",")
    names = tuple(header[2:])
    cfg = meta["config"]
    config = McmcConfig(
        chains=cfg["chains"],
        adapt=cfg["adapt"],
        burnin=cfg["burnin"],
        iterations=cfg["iterations"],
        thin=cfg["thin"],
        seed=cfg["seed"],
        target_accept=cfg["target_accept"],
    )
    body = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    chains = int(body[:, 0].max()) + 1
    kept = body.shape[0] // chains
    draws = body[:, 2:].reshape(chains, kept, len(names))
    rates = np.array(
        [[meta["accept_rates"][name][ch] for name in names] for ch in range(chains)]
    )
    return (
        PosteriorDraws(
            draws=draws,
            param_names=names,
            loglik=None,
            accept_rates=rates,
            seeds=tuple(meta["chain_seeds"]),
            config=config,
            family=meta.get("family"),
            clamp_events=meta.get("clamp_events", 0),
        ),
        meta,
    )
