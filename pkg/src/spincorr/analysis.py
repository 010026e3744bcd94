"""Weighted left/right correlation estimator, Werner fit and chi-square stats.

Events land in one of four outcome categories per theta bin: (++), (--),
(+-), (-+). Each contributes 1 to the raw counter and 1/(A1 A2) to the
weighted counter; the experimental correlation per bin is

    P_hat = (Nw_pp + Nw_mm - Nw_pm - Nw_mp) / N_total

with N_total the raw count. The statistical error follows from the spread
of the signed event weights:

    Var(P_hat) = (sum w^2 - (sum w)^2 / N) / N^2

with the signed weight w = s1 s2/(A1 A2); degenerate bins (all weights
identical in sign and size) fall back to sqrt(sum w^2)/N, the one-event
scale. Binning is 12 uniform bins over [0, 180] degrees unless configured
otherwise; bin centers sit at half-width + width * k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .analyzer import AnalyzerModel
from .errors import BinningError, ConfigError, InsufficientData, WeightOverflow
from .events import EventBatch, Observables, derive_observables

ANALYSIS_SCHEMA_VERSION = 1
DEFAULT_N_BINS = 12

# Outcome category order: (+,+), (-,-), (+,-), (-,+). The estimator sign is
# + for equal sides and - for opposite sides.
CATEGORY_LABELS = ("pp", "mm", "pm", "mp")


@dataclass
class BinnedCounts:
    """Raw and weighted outcome counts per correlation-angle bin (a monoid)."""

    edges: np.ndarray          # (n_bins + 1,)
    raw: np.ndarray            # (n_bins, 4) int64, category order as above
    weighted: np.ndarray       # (n_bins, 4) float64, sums of 1/(A1 A2)
    sum_w2: np.ndarray         # (n_bins,) sums of squared event weights

    @property
    def n_bins(self) -> int:
        return self.raw.shape[0]

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def n_total(self) -> np.ndarray:
        return self.raw.sum(axis=1)

    def __add__(self, other: "BinnedCounts") -> "BinnedCounts":
        if not np.array_equal(self.edges, other.edges):
            raise BinningError("cannot merge counts with different binnings")
        return BinnedCounts(self.edges.copy(), self.raw + other.raw,
                            self.weighted + other.weighted,
                            self.sum_w2 + other.sum_w2)


def empty_counts(n_bins: int = DEFAULT_N_BINS) -> BinnedCounts:
    if n_bins < 1:
        raise ConfigError("n_bins must be >= 1")
    return BinnedCounts(edges=np.linspace(0.0, 180.0, n_bins + 1),
                        raw=np.zeros((n_bins, 4), dtype=np.int64),
                        weighted=np.zeros((n_bins, 4)),
                        sum_w2=np.zeros(n_bins))


def bin_index(theta_deg, n_bins: int = DEFAULT_N_BINS) -> np.ndarray:
    """Containing bin for theta in [0, 180]; theta = 180 joins the last bin."""
    theta = np.asarray(theta_deg, dtype=float)
    if np.any(theta < 0.0) or np.any(theta > 180.0):
        raise BinningError("correlation angle outside [0, 180] deg")
    width = 180.0 / n_bins
    return np.minimum((theta // width).astype(np.int64), n_bins - 1)


@dataclass
class AnalysisDiagnostics:
    """Counted rejections applied before accumulation (never silent)."""

    n_input: int = 0
    n_undefined_side: int = 0
    n_below_a_min: int = 0

    @property
    def n_accumulated(self) -> int:
        return self.n_input - self.n_undefined_side - self.n_below_a_min

    def to_dict(self) -> dict:
        return {"n_input": self.n_input,
                "n_undefined_side": self.n_undefined_side,
                "n_below_a_min": self.n_below_a_min,
                "n_accumulated": self.n_accumulated}


def accumulate(batch: EventBatch, analyzer: AnalyzerModel,
               n_bins: int = DEFAULT_N_BINS,
               observables: Observables | None = None) -> BinnedCounts:
    """Fill BinnedCounts from an analysis-ready batch.

    Preconditions: both sides defined and |A_y| >= analyzer.a_min for every
    event (enforce upstream via `weightable_mask`); violations raise.
    """
    obs = observables if observables is not None else derive_observables(batch)
    counts = empty_counts(n_bins)
    if len(batch) == 0:
        return counts
    if np.any(obs.side1 == 0) or np.any(obs.side2 == 0):
        raise WeightOverflow("event with undefined side reached accumulation")
    a1 = analyzer.analyzing_power(obs.theta1, batch.E1)
    a2 = analyzer.analyzing_power(obs.theta2, batch.E2)
    if np.any(np.abs(a1) < analyzer.a_min) or np.any(np.abs(a2) < analyzer.a_min):
        raise WeightOverflow(
            f"analyzing power below a_min={analyzer.a_min}; reject upstream")

    bins = bin_index(obs.theta_corr, n_bins)
    same = obs.side1 == obs.side2
    left1 = obs.side1 > 0
    # Category codes: 0 (++), 1 (--), 2 (+-), 3 (-+).
    cat = np.where(same, np.where(left1, 0, 1), np.where(left1, 2, 3))
    w = 1.0 / (a1 * a2)

    flat = bins * 4 + cat
    counts.raw[:] = np.bincount(flat, minlength=4 * n_bins).reshape(n_bins, 4)
    counts.weighted[:] = np.bincount(flat, weights=w,
                                     minlength=4 * n_bins).reshape(n_bins, 4)
    counts.sum_w2[:] = np.bincount(bins, weights=w * w, minlength=n_bins)
    return counts


def weightable_mask(batch: EventBatch, analyzer: AnalyzerModel,
                    observables: Observables | None = None
                    ) -> tuple[np.ndarray, AnalysisDiagnostics]:
    """Mask of events admissible for weighting, with counted rejections."""
    obs = observables if observables is not None else derive_observables(batch)
    diag = AnalysisDiagnostics(n_input=len(batch))
    defined = (obs.side1 != 0) & (obs.side2 != 0)
    diag.n_undefined_side = int((~defined).sum())
    a1 = analyzer.analyzing_power(obs.theta1, batch.E1)
    a2 = analyzer.analyzing_power(obs.theta2, batch.E2)
    strong = (np.abs(a1) >= analyzer.a_min) & (np.abs(a2) >= analyzer.a_min)
    diag.n_below_a_min = int((defined & ~strong).sum())
    return defined & strong, diag


@dataclass
class CorrelationTable:
    """Binned experimental correlation with statistical errors.

    Empty bins are flagged through n_total = 0 and NaN entries, never
    zero-filled.
    """

    theta_center: np.ndarray
    p_hat: np.ndarray
    sigma_p: np.ndarray
    n_total: np.ndarray
    edges: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.theta_center.shape[0]

    @property
    def populated(self) -> np.ndarray:
        return self.n_total > 0

    def to_rows(self) -> list[dict]:
        rows = []
        for i in range(self.n_bins):
            empty = self.n_total[i] == 0
            rows.append({
                "theta_center_deg": float(self.theta_center[i]),
                "p_hat": None if empty else float(self.p_hat[i]),
                "sigma_p": None if empty else float(self.sigma_p[i]),
                "n_total": int(self.n_total[i]),
            })
        return rows

    def to_csv(self) -> str:
        lines = ["theta_center_deg,p_hat,sigma_p,n_total"]
        for row in self.to_rows():
            p = "" if row["p_hat"] is None else "%.17g" % row["p_hat"]
            s = "" if row["sigma_p"] is None else "%.17g" % row["sigma_p"]
            lines.append("%.17g,%s,%s,%d" % (row["theta_center_deg"], p, s,
                                             row["n_total"]))
        return "\n".join(lines) + "\n"


def table_from_rows(rows: list[dict], edges=None) -> CorrelationTable:
    """Rebuild a CorrelationTable from its JSON rows."""
    n = len(rows)
    if n == 0:
        raise InsufficientData("empty correlation table")
    centers = np.array([r["theta_center_deg"] for r in rows])
    n_total = np.array([r["n_total"] for r in rows], dtype=np.int64)
    p_hat = np.array([np.nan if r["p_hat"] is None else r["p_hat"] for r in rows])
    sigma = np.array([np.nan if r["sigma_p"] is None else r["sigma_p"] for r in rows])
    if edges is None:
        width = 180.0 / n
        edges = np.linspace(0.0, 180.0, n + 1)
        if not np.allclose(centers, edges[:-1] + width / 2):
            raise InsufficientData("table rows are not a uniform [0,180] binning")
    return CorrelationTable(centers, p_hat, sigma, n_total, np.asarray(edges))


def correlation(counts: BinnedCounts) -> CorrelationTable:
    """Experimental correlation per bin from accumulated counts."""
    n_total = counts.n_total
    signed = (counts.weighted[:, 0] + counts.weighted[:, 1]
              - counts.weighted[:, 2] - counts.weighted[:, 3])
    p_hat = np.full(counts.n_bins, np.nan)
    sigma = np.full(counts.n_bins, np.nan)
    pop = n_total > 0
    npop = n_total[pop].astype(float)
    p_hat[pop] = signed[pop] / npop
    var = (counts.sum_w2[pop] - signed[pop] ** 2 / npop) / npop ** 2
    floor = counts.sum_w2[pop] / npop ** 3
    sigma[pop] = np.sqrt(np.where(var > 0, var, floor))
    return CorrelationTable(theta_center=counts.centers, p_hat=p_hat,
                            sigma_p=sigma, n_total=n_total,
                            edges=counts.edges.copy())


@dataclass
class FitResult:
    """Weighted least-squares fit of P_hat against -gamma cos(theta).

    chi2/dof uses dof = populated bins - 1; the parameter-free null P = 0
    is evaluated with dof = populated bins.
    """

    gamma: float
    sigma_gamma: float
    chi2: float
    dof: int
    chi2_const0: float
    dof_const0: int

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "sigma_gamma": self.sigma_gamma,
                "chi2": self.chi2, "dof": self.dof,
                "chi2_per_dof": self.chi2 / self.dof if self.dof else None,
                "chi2_const0": self.chi2_const0, "dof_const0": self.dof_const0,
                "chi2_const0_per_dof":
                    self.chi2_const0 / self.dof_const0 if self.dof_const0 else None}


def fit_werner(table: CorrelationTable) -> FitResult:
    """Closed-form linear fit of the Werner dilution factor.

    gamma_hat = -sum(P_i cos t_i / s_i^2) / sum(cos^2 t_i / s_i^2); the fit
    is unconstrained (noise can push the estimate slightly outside [0, 1]).
    """
    pop = table.populated
    if int(pop.sum()) < 2:
        raise InsufficientData("need at least 2 populated bins to fit")
    p = table.p_hat[pop]
    s2 = table.sigma_p[pop] ** 2
    c = np.cos(np.radians(table.theta_center[pop]))
    denom = np.sum(c * c / s2)
    if denom <= 0:
        raise InsufficientData("no cosine leverage in populated bins")
    gamma = -np.sum(p * c / s2) / denom
    sigma_gamma = 1.0 / np.sqrt(denom)
    chi2 = float(np.sum((p + gamma * c) ** 2 / s2))
    chi2_0 = float(np.sum(p * p / s2))
    n = int(pop.sum())
    return FitResult(gamma=float(gamma), sigma_gamma=float(sigma_gamma),
                     chi2=chi2, dof=n - 1, chi2_const0=chi2_0, dof_const0=n)


@dataclass
class RandomSampleCheck:
    """Correlation of a background-only (satellite-gated) sample.

    mean/SE are the inverse-variance weighted average of the populated bins;
    a sample consistent with uncorrelated spins has |mean| within a few SE
    of zero.
    """

    table: CorrelationTable
    mean: float | None
    standard_error: float | None

    @property
    def is_empty(self) -> bool:
        return self.mean is None


def random_sample_check(batch: EventBatch, analyzer: AnalyzerModel,
                        n_bins: int = DEFAULT_N_BINS) -> RandomSampleCheck:
    """Run the estimator on a satellite-gated sample and average the bins."""
    mask, _diag = weightable_mask(batch, analyzer)
    table = correlation(accumulate(batch.take(mask), analyzer, n_bins))
    pop = table.populated
    if not pop.any():
        return RandomSampleCheck(table=table, mean=None, standard_error=None)
    w = 1.0 / table.sigma_p[pop] ** 2
    mean = float(np.sum(table.p_hat[pop] * w) / np.sum(w))
    return RandomSampleCheck(table=table, mean=mean,
                             standard_error=float(1.0 / np.sqrt(np.sum(w))))


def analysis_to_json(table: CorrelationTable, fit: FitResult,
                     diagnostics: AnalysisDiagnostics) -> str:
    doc = {"schema_version": ANALYSIS_SCHEMA_VERSION,
           "table": table.to_rows(),
           "fit": fit.to_dict(),
           "diagnostics": diagnostics.to_dict()}
    return json.dumps(doc, indent=2, sort_keys=True)
