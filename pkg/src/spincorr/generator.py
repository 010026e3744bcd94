"""Monte Carlo production of correlated proton-pair events.

Events are produced in fixed-size blocks; block b draws from an independent
reproducible substream derived from (seed, b), so the output is identical
for any worker count and workers can process blocks in parallel.

The spin physics enters through the joint azimuthal density of the two
analyzing scatterings,

    f(psi1, psi2) = (1/(2 pi)^2) * [1 + A1 A2 E(theta_rel)],

with theta_rel the folded difference of the scattering-normal azimuths and
E the spin model's correlation law. This standard double-polarimetry form
makes the weighted left/right estimator reproduce E(theta) exactly (for the
odd-symmetric laws used here) and is the bridge between the spin models and
the simulated detector response.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analyzer import AnalyzerModel, analyzer_from_config, ideal_analyzer
from .errors import ConfigError
from .events import (CH_EXCITED, CH_GROUND, CH_HYDROGEN, CH_RANDOM,
                     CHANNEL_CODES, CHANNEL_NAMES, EventBatch, concat_batches,
                     empty_batch)
from .geometry import normal_from_azimuth, rotate_about
from .models import SingletModel, SpinModel, spin_model_from_config

# Share of the correlated yield assigned to ground state, excited states and
# the hydrogen peak when channel fractions are derived from random_fraction.
CORRELATED_SPLIT = (0.70, 0.15, 0.15)


@dataclass(frozen=True)
class GeneratorConfig:
    """Full physics configuration of the event generator.

    Defaults reproduce the experimental scenario: 23 ns beam bursts, sum-energy
    peaks at 169 MeV (p-n) and 157 MeV (12B ground state), relative kinetic
    energies below 1 MeV peaking near 0.5 MeV, a 10% random contamination of
    the prompt window, and a tracking acceptance tuned so that roughly 1 in 50
    produced pairs survives into the correlation analysis.
    """

    seed: int = 20260810
    spin_model: SpinModel = field(default_factory=SingletModel)
    analyzer: AnalyzerModel = field(default_factory=ideal_analyzer)
    beam_burst_period: float = 23.0      # ns
    prompt_sigma: float = 2.0            # ns, width of the prompt |t1-t2| peak
    n_burst_offsets: int = 5             # randoms span bursts -K..K
    random_fraction: float = 0.10        # target BreakupRandom share in the prompt window
    channel_fractions: tuple[float, float, float, float] | None = None
    E_peak_pn: float = 169.0             # MeV
    E_peak_B12: float = 157.0            # MeV
    peak_sigma: float = 1.0              # MeV
    excited_offset: float = 5.0          # MeV below the 12B ground-state peak
    excited_sigma: float = 1.5           # MeV
    random_E_low: float = 140.0          # MeV, breakup continuum
    random_E_high: float = 180.0         # MeV, extends beyond the beam energy
    eps_max: float = 1.0                 # MeV, correlated relative-energy cutoff
    eps_mode: float = 0.5                # MeV, final-state-interaction peak
    eps_random_max: float = 2.0          # MeV, uncorrelated pairs
    energy_split_sigma: float = 2.0      # MeV, E1/E2 asymmetry
    theta_pp_scale: float = 1.0          # deg, pair opening angle at eps_max
    coplanarity_sigma: float = 0.5       # deg, tilt of the primary normal
    polar_theta_min: float = 0.5         # deg, analyzer polar range produced
    polar_scale: float = 6.0             # deg, exponential polar fall-off
    tracking_efficiency: float = 0.13    # Bernoulli acceptance per event
    block_size: int = 65536

    def __post_init__(self):
        if not isinstance(self.spin_model, SpinModel):
            raise ConfigError("spin_model must be a SpinModel instance")
        if not isinstance(self.analyzer, AnalyzerModel):
            raise ConfigError("analyzer must be an AnalyzerModel instance")
        for name in ("beam_burst_period", "prompt_sigma", "peak_sigma",
                     "excited_sigma", "eps_max", "eps_random_max",
                     "energy_split_sigma", "polar_scale"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.n_burst_offsets < 1:
            raise ConfigError("n_burst_offsets must be >= 1")
        if not 0.0 <= self.random_fraction < 1.0:
            raise ConfigError("random_fraction must be in [0, 1)")
        if not 0.0 < self.tracking_efficiency <= 1.0:
            raise ConfigError("tracking_efficiency must be in (0, 1]")
        if not 0.0 < self.eps_mode < self.eps_max:
            raise ConfigError("eps_mode must lie inside (0, eps_max)")
        if not 0.0 < self.polar_theta_min < self.analyzer.theta_max:
            raise ConfigError("polar_theta_min must lie below analyzer.theta_max")
        if self.random_E_low >= self.random_E_high:
            raise ConfigError("random energy range must be non-empty")
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1")
        if self.channel_fractions is not None:
            f = np.asarray(self.channel_fractions, dtype=float)
            if f.shape != (4,) or np.any(f < 0) or np.any(f > 1):
                raise ConfigError("channel_fractions must be 4 probabilities")
            if abs(f.sum() - 1.0) > 1e-9:
                raise ConfigError("channel_fractions must sum to 1 within 1e-9")
            object.__setattr__(self, "channel_fractions", tuple(f))

    def resolved_channel_fractions(self) -> np.ndarray:
        """Channel probabilities, deriving the BreakupRandom share if needed.

        Randoms spread uniformly over 2K+1 burst offsets, so a production
        share f_br puts f_br/(2K+1) of them into the prompt window; solving
        for the requested prompt-window contamination r gives
        f_br = r (2K+1) / (1 + 2 K r).
        """
        if self.channel_fractions is not None:
            return np.asarray(self.channel_fractions, dtype=float)
        r = self.random_fraction
        k = self.n_burst_offsets
        f_br = r * (2 * k + 1) / (1.0 + 2 * k * r)
        split = np.asarray(CORRELATED_SPLIT)
        fractions = np.empty(4)
        fractions[[CH_GROUND, CH_EXCITED, CH_HYDROGEN]] = (1.0 - f_br) * split
        fractions[CH_RANDOM] = f_br
        return fractions

    def to_config_dict(self) -> dict:
        d = {
            "seed": self.seed,
            "spin_model": self.spin_model.to_config(),
            "analyzer": self.analyzer.to_config(),
        }
        for name in ("beam_burst_period", "prompt_sigma", "n_burst_offsets",
                     "random_fraction", "E_peak_pn", "E_peak_B12", "peak_sigma",
                     "excited_offset", "excited_sigma", "random_E_low",
                     "random_E_high", "eps_max", "eps_mode", "eps_random_max",
                     "energy_split_sigma", "theta_pp_scale", "coplanarity_sigma",
                     "polar_theta_min", "polar_scale", "tracking_efficiency",
                     "block_size"):
            d[name] = getattr(self, name)
        if self.channel_fractions is not None:
            d["channel_fractions"] = list(self.channel_fractions)
        return d

    def config_hash(self) -> str:
        payload = json.dumps(self.to_config_dict(), sort_keys=True,
                             separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def generator_config_from_dict(cfg: dict) -> GeneratorConfig:
    """Build a GeneratorConfig from a flat config dict."""
    if not isinstance(cfg, dict):
        raise ConfigError("generator config must be a JSON object")
    kw = dict(cfg)
    if "spin_model" in kw:
        kw["spin_model"] = spin_model_from_config(kw["spin_model"])
    if "analyzer" in kw:
        kw["analyzer"] = analyzer_from_config(kw["analyzer"])
    if "channel_fractions" in kw and kw["channel_fractions"] is not None:
        cf = kw["channel_fractions"]
        if isinstance(cf, dict):
            unknown = set(cf) - set(CHANNEL_NAMES)
            if unknown:
                raise ConfigError(f"unknown channels: {sorted(unknown)}")
            cf = [cf.get(name, 0.0) for name in CHANNEL_NAMES]
        kw["channel_fractions"] = tuple(float(x) for x in cf)
    try:
        return GeneratorConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad generator config: {exc}") from exc


def split_stream(seed: int, worker_index: int) -> np.random.Generator:
    """Reproducible, statistically independent substream for one block/worker."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(worker_index,)))


def _sample_truncated_exp(lo: float, hi: float, scale: float, size: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Exponential-decay density on [lo, hi] by inverse CDF."""
    u = rng.random(size)
    a = np.exp(-lo / scale)
    b = np.exp(-hi / scale)
    return -scale * np.log(a - u * (a - b))


def sample_relative_azimuth(model: SpinModel, a1a2: np.ndarray,
                            rng: np.random.Generator) -> np.ndarray:
    """Draw delta = psi1 - psi2 (deg, [0, 360)) from 1 + A1 A2 E(fold(delta)).

    Rejection from a uniform proposal with per-event bound 1 + |A1 A2|;
    acceptance is at least 50% since |E| <= 1. Count-conserving: returns
    exactly one delta per input weight.
    """
    a1a2 = np.asarray(a1a2, dtype=float)
    n = a1a2.shape[0]
    out = np.empty(n)
    pending = np.arange(n)
    bound = 1.0 + np.abs(a1a2)
    while pending.size:
        cand = rng.uniform(0.0, 360.0, pending.size)
        u = rng.random(pending.size)
        folded = np.where(cand > 180.0, 360.0 - cand, cand)
        density = 1.0 + a1a2[pending] * model.correlation(folded)
        accepted = u * bound[pending] <= density
        out[pending[accepted]] = cand[accepted]
        pending = pending[~accepted]
    return out


def sample_analyzer_pair(model: SpinModel, a1, a2, rng: np.random.Generator,
                         *, theta_min: float = 3.0, theta_max: float = 20.0,
                         polar_scale: float = 6.0):
    """Draw analyzer azimuths and polar angles for proton pairs.

    (phi1, phi2) follow the joint azimuthal law for the supplied per-event
    analyzing powers; theta1, theta2 follow the exponential polar density on
    the admitted range [theta_min, theta_max]. Vectorized: a1/a2 may be
    scalars or arrays; returns arrays of matching length.
    """
    a1 = np.atleast_1d(np.asarray(a1, dtype=float))
    a2 = np.atleast_1d(np.asarray(a2, dtype=float))
    if np.any(np.abs(a1) > 1.0) or np.any(np.abs(a2) > 1.0):
        raise ConfigError("analyzing powers must satisfy |A| <= 1")
    n = np.broadcast_shapes(a1.shape, a2.shape)[0]
    a1 = np.broadcast_to(a1, (n,))
    a2 = np.broadcast_to(a2, (n,))
    phi1 = rng.uniform(0.0, 360.0, n)
    delta = sample_relative_azimuth(model, a1 * a2, rng)
    phi2 = np.mod(phi1 - delta, 360.0)
    theta1 = _sample_truncated_exp(theta_min, theta_max, polar_scale, n, rng)
    theta2 = _sample_truncated_exp(theta_min, theta_max, polar_scale, n, rng)
    return phi1, phi2, theta1, theta2


def _beta_params(mode: float, eps_max: float) -> tuple[float, float]:
    """Beta(a, b) on [0, eps_max] with the requested mode and a = 3."""
    m = mode / eps_max
    a = 3.0
    b = (a - 1.0) / m - a + 2.0
    return a, b


def _generate_block(config: GeneratorConfig, block_index: int, start_id: int,
                    count: int) -> EventBatch:
    """Generate one block of events; draw order is fixed for determinism."""
    rng = split_stream(config.seed, block_index)
    fractions = config.resolved_channel_fractions()

    # Channel assignment and tracking acceptance thin the block first; full
    # kinematics are only sampled for surviving events.
    channel_all = rng.choice(4, size=count, p=fractions).astype(np.int8)
    accepted = rng.random(count) < config.tracking_efficiency
    ids = start_id + np.flatnonzero(accepted).astype(np.int64)
    channel = channel_all[accepted]
    m = channel.shape[0]
    if m == 0:
        return empty_batch()
    is_random = channel == CH_RANDOM

    # Timing: prompt pairs sit in a Gaussian peak at t1 - t2 = 0; randoms are
    # displaced by a uniform burst offset in -K..K (offset 0 models accidental
    # pairs from the same burst, the pedestal under the prompt peak).
    t1 = rng.uniform(0.0, 1000.0, m)
    dt = rng.normal(0.0, config.prompt_sigma, m)
    k = rng.integers(-config.n_burst_offsets, config.n_burst_offsets + 1, m)
    offset = np.where(is_random, k * config.beam_burst_period, 0.0)
    t2 = t1 - dt - offset

    # Sum energies per channel; the breakup continuum extends beyond the
    # beam energy (the unphysical-energy signature of randoms).
    z = rng.normal(0.0, 1.0, m)
    u_e = rng.random(m)
    E_sum = np.select(
        [channel == CH_GROUND, channel == CH_EXCITED, channel == CH_HYDROGEN],
        [config.E_peak_B12 + config.peak_sigma * z,
         config.E_peak_B12 - config.excited_offset + config.excited_sigma * z,
         config.E_peak_pn + config.peak_sigma * z],
        default=config.random_E_low + (config.random_E_high - config.random_E_low) * u_e)

    # Relative kinetic energy: final-state-interaction hump for correlated
    # pairs, broad and flat for uncorrelated ones.
    a_beta, b_beta = _beta_params(config.eps_mode, config.eps_max)
    eps_fsi = config.eps_max * rng.beta(a_beta, b_beta, m)
    eps_flat = config.eps_random_max * rng.random(m)
    eps = np.where(is_random, eps_flat, eps_fsi)

    d_e = rng.normal(0.0, config.energy_split_sigma, m)
    E1 = np.clip(E_sum / 2.0 + d_e, 1.0, E_sum - 1.0)
    E2 = E_sum - E1

    # Pair kinematics: both protons tilt by theta_pp/2 from the beam axis in
    # opposite azimuthal directions.
    theta_pp = config.theta_pp_scale * np.sqrt(eps / config.eps_max)
    psi_pair = rng.uniform(0.0, 360.0, m)
    half = np.radians(theta_pp / 2.0)
    beta = np.radians(psi_pair)
    sin_h = np.sin(half)
    p1 = np.stack([sin_h * np.cos(beta), sin_h * np.sin(beta),
                   np.cos(half)], axis=1)
    p2 = np.stack([-sin_h * np.cos(beta), -sin_h * np.sin(beta),
                   np.cos(half)], axis=1)

    # Primary scattering normal: +y tilted by a half-normal angle in a random
    # direction within the x-z plane.
    chi = np.radians(rng.uniform(0.0, 360.0, m))
    d_cop = np.radians(np.abs(rng.normal(0.0, config.coplanarity_sigma, m)))
    n_primary = np.stack([np.sin(d_cop) * np.cos(chi), np.cos(d_cop),
                          np.sin(d_cop) * np.sin(chi)], axis=1)

    # Analyzer double scattering: polar angles over the produced range (wider
    # than the >theta_min analysis cut), then spin-correlated azimuths.
    theta1 = _sample_truncated_exp(config.polar_theta_min,
                                   config.analyzer.theta_max,
                                   config.polar_scale, m, rng)
    theta2 = _sample_truncated_exp(config.polar_theta_min,
                                   config.analyzer.theta_max,
                                   config.polar_scale, m, rng)
    a1 = config.analyzer.analyzing_power(theta1, E1)
    a2 = config.analyzer.analyzing_power(theta2, E2)
    # Uncorrelated pairs carry no spin correlation: E = 0 exactly.
    a1a2 = np.where(is_random, 0.0, a1 * a2)
    psi1 = rng.uniform(0.0, 360.0, m)
    delta = sample_relative_azimuth(config.spin_model, a1a2, rng)
    psi2 = np.mod(psi1 - delta, 360.0)

    n1 = normal_from_azimuth(p1, psi1)
    n2 = normal_from_azimuth(p2, psi2)
    p1_out = rotate_about(p1, n1, theta1)
    p2_out = rotate_about(p2, n2, theta2)

    return EventBatch(event_id=ids, channel=channel, t1=t1, t2=t2,
                      E1=E1, E2=E2, E_sum=E_sum, eps_rel=eps,
                      theta_pp=theta_pp, p1=p1, p2=p2,
                      p1_out=p1_out, p2_out=p2_out, n_primary=n_primary)


def _block_plan(n_events: int, block_size: int):
    starts = range(0, n_events, block_size)
    return [(b, s, min(block_size, n_events - s)) for b, s in enumerate(starts)]


def generate(config: GeneratorConfig, n_events: int, workers: int = 1) -> EventBatch:
    """Produce n_events candidate pairs; returns the tracking-accepted batch.

    Deterministic for fixed (config, seed): the block plan depends only on
    n_events and config.block_size, never on the worker count. Event ids
    index the produced (pre-acceptance) stream, so merged output is ordered
    and stable however the blocks were farmed out.
    """
    if n_events <= 0:
        raise ConfigError("n_events must be positive")
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    plan = _block_plan(n_events, config.block_size)
    if workers == 1 or len(plan) == 1:
        parts = [_generate_block(config, b, s, c) for b, s, c in plan]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_generate_block, config, b, s, c)
                       for b, s, c in plan]
            parts = [f.result() for f in futures]
    return concat_batches(parts).sorted_by_id()
