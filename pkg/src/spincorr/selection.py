"""Event-selection gates and the accidental-background sideband estimate.

Gate order follows the experimental narrative: prompt timing, sum-energy
windows, relative kinetic energy, analyzer polar angle, coplanarity of the
primary normal, and finally defined left/right sides. Boundary conventions
are fixed from the quoted cuts: the prompt window is inclusive, the angle
cuts are strict. Gates see only observable fields; the generator-truth
channel tag is never read.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .events import EventBatch, Observables, derive_observables

SELECTION_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SelectionConfig:
    """Cut values for the analysis-ready sample.

    energy_windows holds inclusive (low, high) MeV intervals: one spanning
    the 12B ground-state region and below, one around the neutron peak
    (default width: two generator peak sigmas).
    """

    prompt_window: float = 10.0          # ns, |t1 - t2| <= window
    energy_windows: tuple[tuple[float, float], ...] = ((148.0, 161.0),
                                                       (167.0, 171.0))
    theta_analyzer_min: float = 3.0      # deg, strict > for both protons
    coplanarity_max: float = 1.0         # deg, strict <
    eps_max: float = 1.0                 # MeV, inclusive <=
    sideband_periods: tuple[int, ...] = (-1, 1)
    beam_burst_period: float = 23.0      # ns, sideband window centers

    def __post_init__(self):
        if self.prompt_window <= 0:
            raise ConfigError("prompt_window must be positive")
        if not self.energy_windows:
            raise ConfigError("at least one energy window is required")
        windows = tuple(tuple(float(x) for x in w) for w in self.energy_windows)
        for lo, hi in windows:
            if not np.isfinite([lo, hi]).all() or lo >= hi:
                raise ConfigError(f"bad energy window ({lo}, {hi})")
        for (lo1, hi1) in windows:
            for (lo2, hi2) in windows:
                if (lo1, hi1) < (lo2, hi2) and hi1 > lo2:
                    raise ConfigError("energy windows must not overlap")
        object.__setattr__(self, "energy_windows", tuple(sorted(windows)))
        if self.theta_analyzer_min < 0 or self.coplanarity_max <= 0:
            raise ConfigError("angle cuts must be non-negative (coplanarity positive)")
        if self.eps_max <= 0:
            raise ConfigError("eps_max must be positive")
        if not self.sideband_periods or 0 in self.sideband_periods:
            raise ConfigError("sideband_periods must be nonzero burst offsets")
        if self.beam_burst_period <= 2 * self.prompt_window:
            raise ConfigError("sideband windows would overlap the prompt window")

    def to_config_dict(self) -> dict:
        return {
            "prompt_window": self.prompt_window,
            "energy_windows": [list(w) for w in self.energy_windows],
            "theta_analyzer_min": self.theta_analyzer_min,
            "coplanarity_max": self.coplanarity_max,
            "eps_max": self.eps_max,
            "sideband_periods": list(self.sideband_periods),
            "beam_burst_period": self.beam_burst_period,
        }


def selection_config_from_dict(cfg: dict) -> SelectionConfig:
    if not isinstance(cfg, dict):
        raise ConfigError("selection config must be a JSON object")
    kw = dict(cfg)
    if "energy_windows" in kw:
        kw["energy_windows"] = tuple(tuple(w) for w in kw["energy_windows"])
    if "sideband_periods" in kw:
        kw["sideband_periods"] = tuple(kw["sideband_periods"])
    try:
        return SelectionConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad selection config: {exc}") from exc


# Vectorized gates. Each takes observable arrays and returns a boolean mask.

def gate_prompt(t1, t2, prompt_window: float):
    """Inclusive prompt-coincidence window |t1 - t2| <= prompt_window."""
    return np.abs(np.asarray(t1) - np.asarray(t2)) <= prompt_window


def gate_energy(e_sum, energy_windows):
    """Sum energy inside any configured (inclusive) window."""
    if not len(energy_windows):
        raise ConfigError("no energy windows configured")
    e = np.asarray(e_sum)
    mask = np.zeros(e.shape, dtype=bool)
    for lo, hi in energy_windows:
        mask |= (e >= lo) & (e <= hi)
    return mask


def gate_relative_energy(eps_rel, eps_max: float):
    """Relative kinetic energy in the pair center of mass, eps <= eps_max."""
    return np.asarray(eps_rel) <= eps_max


def gate_analyzer_angle(theta1, theta2, theta_min: float):
    """Both protons scattered strictly beyond theta_min in the analyzer."""
    return (np.asarray(theta1) > theta_min) & (np.asarray(theta2) > theta_min)


def gate_coplanarity(coplanarity_deg, coplanarity_max: float):
    """Primary normal strictly within coplanarity_max of the symmetry normal."""
    return np.asarray(coplanarity_deg) < coplanarity_max


def gate_defined_sides(side1, side2):
    """Both analyzing scatterings classified left or right (no undefined)."""
    return (np.asarray(side1) != 0) & (np.asarray(side2) != 0)


@dataclass
class GateCount:
    name: str
    n_input: int
    n_passed: int

    @property
    def n_rejected(self) -> int:
        return self.n_input - self.n_passed


@dataclass
class SelectionReport:
    """Per-gate attrition and the sideband estimate of random contamination.

    Mergeable: reports from sharded runs add counts; the contamination
    estimate is recomputed from the merged counts.
    """

    gates: list[GateCount] = field(default_factory=list)
    n_input: int = 0
    n_selected: int = 0
    n_sideband: int = 0
    n_sideband_windows: int = 2

    @property
    def estimated_random_in_prompt(self) -> float:
        """Accidentals expected in the prompt window, scaled from the sidebands."""
        return self.n_sideband / self.n_sideband_windows

    @property
    def random_contamination_estimate(self) -> float | None:
        if self.n_selected == 0:
            return None
        return self.estimated_random_in_prompt / self.n_selected

    def merged_with(self, other: "SelectionReport") -> "SelectionReport":
        if [g.name for g in self.gates] != [g.name for g in other.gates]:
            raise ConfigError("cannot merge reports with different gate chains")
        if self.n_sideband_windows != other.n_sideband_windows:
            raise ConfigError("cannot merge reports with different sidebands")
        gates = [GateCount(a.name, a.n_input + b.n_input, a.n_passed + b.n_passed)
                 for a, b in zip(self.gates, other.gates)]
        return SelectionReport(
            gates=gates,
            n_input=self.n_input + other.n_input,
            n_selected=self.n_selected + other.n_selected,
            n_sideband=self.n_sideband + other.n_sideband,
            n_sideband_windows=self.n_sideband_windows)

    def to_dict(self) -> dict:
        return {
            "schema_version": SELECTION_SCHEMA_VERSION,
            "n_input": self.n_input,
            "n_selected": self.n_selected,
            "gates": [{"name": g.name, "input": g.n_input, "passed": g.n_passed,
                       "rejected": g.n_rejected} for g in self.gates],
            "sideband": {"n_events": self.n_sideband,
                         "n_windows": self.n_sideband_windows,
                         "estimated_random_in_prompt": self.estimated_random_in_prompt,
                         "random_contamination_estimate":
                             self.random_contamination_estimate},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"{'gate':<16}{'input':>10}{'passed':>10}{'rejected':>10}"]
        for g in self.gates:
            lines.append(f"{g.name:<16}{g.n_input:>10}{g.n_passed:>10}"
                         f"{g.n_rejected:>10}")
        lines.append(f"selected: {self.n_selected} / {self.n_input}")
        est = self.random_contamination_estimate
        if est is not None:
            lines.append(f"sideband events: {self.n_sideband} "
                         f"in {self.n_sideband_windows} windows")
            lines.append(f"estimated random contamination: {est:.4f}")
        return "\n".join(lines)


def _sideband_mask(t1, t2, config: SelectionConfig):
    dt = np.abs(np.asarray(t1) - np.asarray(t2))
    mask = np.zeros(dt.shape, dtype=bool)
    for k in config.sideband_periods:
        center = abs(k) * config.beam_burst_period
        mask |= np.abs(dt - center) <= config.prompt_window
    return mask


def run_selection(batch: EventBatch, config: SelectionConfig,
                  observables: Observables | None = None
                  ) -> tuple[EventBatch, SelectionReport]:
    """Apply the gate chain; returns (selected batch, report).

    The sideband estimate counts events passing every non-timing gate but
    falling in satellite windows at +-k burst periods, scaled by the window
    count; with the prompt window one burst wide this is the standard
    accidental-coincidence subtraction.
    """
    obs = observables if observables is not None else derive_observables(batch)
    n = len(batch)
    report = SelectionReport(n_input=n,
                            n_sideband_windows=len(config.sideband_periods))

    masks = [
        ("prompt", gate_prompt(batch.t1, batch.t2, config.prompt_window)),
        ("energy", gate_energy(batch.E_sum, config.energy_windows)),
        ("relative_energy", gate_relative_energy(batch.eps_rel, config.eps_max)),
        ("analyzer_angle", gate_analyzer_angle(obs.theta1, obs.theta2,
                                               config.theta_analyzer_min)),
        ("coplanarity", gate_coplanarity(obs.coplanarity,
                                         config.coplanarity_max)),
        ("defined_sides", gate_defined_sides(obs.side1, obs.side2)),
    ]

    current = np.ones(n, dtype=bool)
    for name, mask in masks:
        n_in = int(current.sum())
        current &= mask
        report.gates.append(GateCount(name, n_in, int(current.sum())))
    report.n_selected = int(current.sum())

    non_timing = np.ones(n, dtype=bool)
    for name, mask in masks[1:]:
        non_timing &= mask
    report.n_sideband = int((non_timing & _sideband_mask(batch.t1, batch.t2,
                                                         config)).sum())
    return batch.take(current), report
