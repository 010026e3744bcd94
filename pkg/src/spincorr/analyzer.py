"""Carbon-analyzer analyzing-power models A_y(theta, E).

Three families cover the configuration space: a constant (the ideal A = 1
analyzer used by the oracles), a smooth parametric form, and a tabulated
grid with bilinear interpolation. |A_y| <= 1 everywhere; events are only
admitted into the weighted correlation when |A_y| >= a_min.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigError

DEFAULT_THETA_MIN = 3.0
DEFAULT_THETA_MAX = 20.0
DEFAULT_A_MIN = 0.05


@dataclass(frozen=True)
class AnalyzerModel:
    """Analyzing power over the admitted (theta, E) region.

    theta_min/theta_max bound the polar range admitted into the correlation
    analysis (degrees); a_min is the smallest |A_y| accepted for 1/A weighting.
    """

    kind: str = "constant"
    value: float = 1.0
    amplitude: float = 0.6
    energy_center: float = 80.0
    energy_width: float = 60.0
    theta_grid: tuple = ()
    energy_grid: tuple = ()
    table: tuple = ()
    theta_min: float = DEFAULT_THETA_MIN
    theta_max: float = DEFAULT_THETA_MAX
    a_min: float = DEFAULT_A_MIN
    _interp: RegularGridInterpolator | None = field(
        default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "parametric", "table"):
            raise ConfigError(f"unknown analyzer kind {self.kind!r}")
        if not 0.0 < self.theta_min < self.theta_max <= 180.0:
            raise ConfigError("analyzer requires 0 < theta_min < theta_max <= 180")
        if not 0.0 < self.a_min <= 1.0:
            raise ConfigError("a_min must be in (0, 1]")
        if self.kind == "constant" and not abs(self.value) <= 1.0:
            raise ConfigError("constant analyzing power must satisfy |A| <= 1")
        if self.kind == "parametric" and not 0.0 < self.amplitude <= 1.0:
            raise ConfigError("parametric amplitude must be in (0, 1]")
        if self.kind == "table":
            tg = np.asarray(self.theta_grid, dtype=float)
            eg = np.asarray(self.energy_grid, dtype=float)
            tab = np.asarray(self.table, dtype=float)
            if tg.ndim != 1 or eg.ndim != 1 or tab.shape != (tg.size, eg.size):
                raise ConfigError("table shape must be (len(theta_grid), len(energy_grid))")
            if tg.size < 2 or eg.size < 2:
                raise ConfigError("table grids need at least two points per axis")
            if np.any(np.diff(tg) <= 0) or np.any(np.diff(eg) <= 0):
                raise ConfigError("table grids must be strictly increasing")
            if np.max(np.abs(tab)) > 1.0:
                raise ConfigError("tabulated analyzing power must satisfy |A| <= 1")
            object.__setattr__(self, "theta_grid", tuple(tg))
            object.__setattr__(self, "energy_grid", tuple(eg))
            object.__setattr__(self, "table", tuple(map(tuple, tab)))
            object.__setattr__(self, "_interp", RegularGridInterpolator(
                (tg, eg), tab, method="linear", bounds_error=False, fill_value=None))

    def analyzing_power(self, theta_deg, energy_mev):
        """A_y(theta, E); vectorized over matching array shapes."""
        theta = np.asarray(theta_deg, dtype=float)
        energy = np.asarray(energy_mev, dtype=float)
        if self.kind == "constant":
            return np.broadcast_to(np.float64(self.value),
                                   np.broadcast_shapes(theta.shape, energy.shape)).copy()[()]
        if self.kind == "parametric":
            a = self.amplitude * np.sin(2.0 * np.radians(theta))
            a = a * np.exp(-((energy - self.energy_center) / self.energy_width) ** 2)
            return a[()]
        # Table queries are clipped to the grid hull; extrapolation would
        # let |A| escape the validated range.
        tg = np.asarray(self.theta_grid)
        eg = np.asarray(self.energy_grid)
        pts = np.stack([np.clip(theta, tg[0], tg[-1]).ravel(),
                        np.clip(energy, eg[0], eg[-1]).ravel()], axis=1)
        out = self._interp(pts).reshape(np.broadcast_shapes(theta.shape, energy.shape))
        return out[()]

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "theta_min": self.theta_min,
               "theta_max": self.theta_max, "a_min": self.a_min}
        if self.kind == "constant":
            cfg["value"] = self.value
        elif self.kind == "parametric":
            cfg.update(amplitude=self.amplitude, energy_center=self.energy_center,
                       energy_width=self.energy_width)
        else:
            cfg.update(theta_grid=list(self.theta_grid),
                       energy_grid=list(self.energy_grid),
                       table=[list(row) for row in self.table])
        return cfg


def analyzer_from_config(cfg: dict) -> AnalyzerModel:
    """Build an AnalyzerModel from its config dict."""
    if not isinstance(cfg, dict):
        raise ConfigError(f"analyzer config must be a dict, got {type(cfg).__name__}")
    allowed = {"kind", "value", "amplitude", "energy_center", "energy_width",
               "theta_grid", "energy_grid", "table", "theta_min", "theta_max", "a_min"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown analyzer config keys: {sorted(unknown)}")
    kw = dict(cfg)
    for key in ("theta_grid", "energy_grid"):
        if key in kw:
            kw[key] = tuple(kw[key])
    if "table" in kw:
        kw["table"] = tuple(map(tuple, kw["table"]))
    return AnalyzerModel(**kw)


def ideal_analyzer(theta_min: float = DEFAULT_THETA_MIN,
                   theta_max: float = DEFAULT_THETA_MAX) -> AnalyzerModel:
    """The A = 1 analyzer used by analytic oracles and acceptance scenarios."""
    return AnalyzerModel(kind="constant", value=1.0,
                         theta_min=theta_min, theta_max=theta_max)
