"""Pluggable spin-correlation laws E(theta).

A SpinModel supplies the correlation E(theta) between the outcomes of the
two analyzing scatterings as a function of the angle theta (degrees, [0, 180])
between the quantization axes. The event generator is model-agnostic: it only
ever calls `correlation`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


class SpinModel:
    """Base correlation law; subclasses implement correlation(theta_deg)."""

    name = "base"

    def correlation(self, theta_deg):
        raise NotImplementedError

    def to_config(self) -> dict:
        return {"type": self.name}


@dataclass(frozen=True)
class SingletModel(SpinModel):
    """Pure two-proton singlet: E(theta) = -cos(theta)."""

    name = "singlet"

    def correlation(self, theta_deg):
        return -np.cos(np.radians(theta_deg))


@dataclass(frozen=True)
class WernerModel(SpinModel):
    """Singlet diluted by the maximally mixed state: E(theta) = -gamma cos(theta).

    gamma in [0, 1] interpolates between fully unpolarized (0) and pure
    singlet (1); values below 0 would model states outside the intended
    random-contamination picture and are rejected.
    """

    gamma: float
    name = "werner"

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise DomainError(f"Werner gamma must be in [0, 1], got {self.gamma}")

    def correlation(self, theta_deg):
        return -self.gamma * np.cos(np.radians(theta_deg))

    def to_config(self) -> dict:
        return {"type": self.name, "gamma": self.gamma}


@dataclass(frozen=True)
class LhvSignModel(SpinModel):
    """Deterministic hidden-variable sign model: E(theta) = 2 theta/180 - 1.

    Closed form of outcomes s1 = sign(lambda . Q1), s2 = -sign(lambda . Q2)
    for lambda uniform on the sphere; the canonical classical baseline that
    saturates E(0) = -1 and respects the CHSH bound.
    """

    name = "lhv_sign"

    def correlation(self, theta_deg):
        return 2.0 * np.asarray(theta_deg, dtype=float) / 180.0 - 1.0


def spin_model_from_config(cfg: dict) -> SpinModel:
    """Build a SpinModel from its config dict ({"type": ..., ...})."""
    if not isinstance(cfg, dict) or "type" not in cfg:
        raise ConfigError(f"spin model config must carry a 'type': {cfg!r}")
    kind = cfg["type"]
    if kind == "singlet":
        return SingletModel()
    if kind == "werner":
        if "gamma" not in cfg:
            raise ConfigError("werner model requires 'gamma'")
        try:
            return WernerModel(gamma=float(cfg["gamma"]))
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
    if kind == "lhv_sign":
        return LhvSignModel()
    raise ConfigError(f"unknown spin model type {kind!r}")
