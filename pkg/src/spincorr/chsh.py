"""CHSH combination function over binned correlation tables.

The combination evaluated for a triple (a, b, c) of correlation angles is

    S = |P(a) - P(a+b)| + |P(a+b+c) + P(a+c)|

which every local-hidden-variable correlation bounds by 2. Angles are
positive integer multiples of the bin width; triples are enumerated as
index triples (i, j, k) >= 1 with i + j + k <= max_index_sum (the default
bound 9 yields the 84 combinations of the reference analysis on a 12-bin
grid). Experimental tables are looked up at the bin containing each
argument with no interpolation; 180 deg joins the last bin.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .analysis import CorrelationTable
from .errors import ConfigError, MissingBin

CHSH_SCHEMA_VERSION = 1
CLASSICAL_BOUND = 2.0


@dataclass(frozen=True)
class AngleTriple:
    """Correlation-angle triple; arguments are a, a+b, a+b+c and a+c (deg)."""

    theta_a: float
    theta_b: float
    theta_c: float

    @property
    def arguments(self) -> tuple[float, float, float, float]:
        a, b, c = self.theta_a, self.theta_b, self.theta_c
        return (a, a + b, a + b + c, a + c)


def enumerate_triples(n_bins: int = 12, max_index_sum: int = 9) -> list[AngleTriple]:
    """All (i, j, k) >= 1 with i + j + k <= max_index_sum, as angle triples.

    Angles are index * (180 / n_bins) degrees. ConfigError if the largest
    argument would leave the measured range (max_index_sum > n_bins).
    """
    if n_bins < 4:
        raise ConfigError("need at least 4 bins to form CHSH arguments")
    if max_index_sum < 3:
        raise ConfigError("max_index_sum must be >= 3 (indices start at 1)")
    if max_index_sum > n_bins:
        raise ConfigError(
            f"max_index_sum={max_index_sum} pushes arguments beyond 180 deg "
            f"on a {n_bins}-bin grid")
    width = 180.0 / n_bins
    triples = []
    for i, j, k in itertools.product(range(1, max_index_sum + 1), repeat=3):
        if i + j + k <= max_index_sum:
            triples.append(AngleTriple(i * width, j * width, k * width))
    triples.sort(key=lambda t: (t.theta_a, t.theta_b, t.theta_c))
    return triples


def chsh_value(correlation, triple: AngleTriple) -> float:
    """Evaluate the combination for a correlation function theta -> P."""
    p = [float(correlation(arg)) for arg in triple.arguments]
    return abs(p[0] - p[1]) + abs(p[2] + p[3])


def _argument_bins(triple: AngleTriple, table: CorrelationTable) -> list[int]:
    width = table.edges[1] - table.edges[0]
    n_bins = table.n_bins
    bins = []
    for arg in triple.arguments:
        if arg < 0 or arg > 180.0 + 1e-9:
            raise MissingBin(f"argument {arg} deg outside the measured range")
        idx = min(int(arg // width), n_bins - 1)
        if table.n_total[idx] == 0:
            raise MissingBin(f"argument {arg} deg falls in empty bin {idx}")
        bins.append(idx)
    return bins


def _propagated_sigma(p: np.ndarray, sigma: np.ndarray, bins: list[int]
                      ) -> float:
    """Linearized error of S with repeated bins counted once.

    The two absolute values contribute sign factors s12 = sign(p0 - p1) and
    s34 = sign(p2 + p3); per-bin coefficients add before squaring, so a bin
    appearing in several argument slots enters the quadrature once with its
    combined coefficient. When a term sits within one sigma of its kink
    (argument of the absolute value compatible with zero) the sign is
    ambiguous: the quadrature is maximized over both signs and widened by
    the distance to the kink.
    """
    t1 = p[0] - p[1]
    t2 = p[2] + p[3]
    sig_t1 = float(np.hypot(sigma[0], sigma[1]))
    sig_t2 = float(np.hypot(sigma[2], sigma[3]))
    s1_options = [1.0 if t1 >= 0 else -1.0]
    s2_options = [1.0 if t2 >= 0 else -1.0]
    widen = 0.0
    if abs(t1) < sig_t1:
        s1_options = [1.0, -1.0]
        widen += abs(t1)
    if abs(t2) < sig_t2:
        s2_options = [1.0, -1.0]
        widen += abs(t2)

    sigma_by_bin = {b: float(sigma[i]) for i, b in enumerate(bins)}
    best = 0.0
    for s1 in s1_options:
        for s2 in s2_options:
            coeff: dict[int, float] = {}
            for b, c in ((bins[0], s1), (bins[1], -s1),
                         (bins[2], s2), (bins[3], s2)):
                coeff[b] = coeff.get(b, 0.0) + c
            var = sum(c * c * sigma_by_bin[b] ** 2 for b, c in coeff.items())
            best = max(best, var)
    return float(np.sqrt(best)) + widen


@dataclass
class ChshEntry:
    triple: AngleTriple
    s_exp: float
    sigma_s: float
    s_qm: float

    @property
    def violated(self) -> bool:
        return self.s_exp - CLASSICAL_BOUND > 0.0


@dataclass
class ChshReport:
    """All evaluated triples plus the violation summary."""

    entries: list[ChshEntry]
    gamma: float

    @property
    def max_s_exp(self) -> float:
        return max(e.s_exp for e in self.entries)

    @property
    def n_violated(self) -> int:
        return sum(1 for e in self.entries if e.violated)

    def to_csv(self) -> str:
        lines = ["theta_a,theta_b,theta_c,s_exp,sigma_s,s_qm,violated"]
        for e in self.entries:
            lines.append("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s" % (
                e.triple.theta_a, e.triple.theta_b, e.triple.theta_c,
                e.s_exp, e.sigma_s, e.s_qm,
                "true" if e.violated else "false"))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {"schema_version": CHSH_SCHEMA_VERSION,
               "gamma": self.gamma,
               "classical_bound": CLASSICAL_BOUND,
               "summary": {"n_triples": len(self.entries),
                           "max_s_exp": self.max_s_exp,
                           "n_violated": self.n_violated},
               "entries": [{"theta_a": e.triple.theta_a,
                            "theta_b": e.triple.theta_b,
                            "theta_c": e.triple.theta_c,
                            "s_exp": e.s_exp, "sigma_s": e.sigma_s,
                            "s_qm": e.s_qm, "violated": e.violated}
                           for e in self.entries]}
        return json.dumps(doc, indent=2, sort_keys=True)


def evaluate(table: CorrelationTable, gamma: float,
             triples: list[AngleTriple]) -> ChshReport:
    """Evaluate S_exp (table lookups) and S_qm (-gamma cos at bin centers).

    The quantum reference uses the same bin centers as the experimental
    lookup so the two columns compare like for like. Raises MissingBin when
    a required bin is unpopulated.
    """
    entries = []
    for triple in triples:
        bins = _argument_bins(triple, table)
        p = np.array([table.p_hat[b] for b in bins])
        sig = np.array([table.sigma_p[b] for b in bins])
        centers = np.radians(np.array([table.theta_center[b] for b in bins]))
        q = -gamma * np.cos(centers)
        entries.append(ChshEntry(
            triple=triple,
            s_exp=float(abs(p[0] - p[1]) + abs(p[2] + p[3])),
            sigma_s=_propagated_sigma(p, sig, bins),
            s_qm=float(abs(q[0] - q[1]) + abs(q[2] + q[3])),
        ))
    return ChshReport(entries=entries, gamma=gamma)
