"""Event data model, derived observables, and the JSONL event-file format.

Events are held column-wise in numpy arrays (EventBatch); PairEvent is the
scalar row view. The on-disk format is line-delimited JSON: a header line
carrying schema version, seed and config hash, then one event per line with
floats at 17 significant digits (exact float64 round trip).

The `channel` tag is generator truth retained for diagnostics; selection
gates never read it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry
from .errors import SchemaMismatch

EVENT_SCHEMA_VERSION = 1

CHANNEL_NAMES = ("He2GroundState", "He2Excited", "HydrogenPeak", "BreakupRandom")
CHANNEL_CODES = {name: code for code, name in enumerate(CHANNEL_NAMES)}
CH_GROUND, CH_EXCITED, CH_HYDROGEN, CH_RANDOM = range(4)

_SCALAR_FIELDS = ("t1", "t2", "E1", "E2", "E_sum", "eps_rel", "theta_pp")
_VECTOR_FIELDS = ("p1", "p2", "p1_out", "p2_out", "n_primary")

_LINE_FMT = (
    '{"event_id":%d,"channel":"%s",'
    '"t1":%.17g,"t2":%.17g,"E1":%.17g,"E2":%.17g,"E_sum":%.17g,'
    '"eps_rel":%.17g,"theta_pp":%.17g,'
    '"p1":[%.17g,%.17g,%.17g],"p2":[%.17g,%.17g,%.17g],'
    '"p1_out":[%.17g,%.17g,%.17g],"p2_out":[%.17g,%.17g,%.17g],'
    '"n_primary":[%.17g,%.17g,%.17g]}'
)


@dataclass
class PairEvent:
    """One two-proton event (scalar view of an EventBatch row)."""

    event_id: int
    channel: str
    t1: float
    t2: float
    E1: float
    E2: float
    E_sum: float
    eps_rel: float
    theta_pp: float
    p1: np.ndarray
    p2: np.ndarray
    p1_out: np.ndarray
    p2_out: np.ndarray
    n_primary: np.ndarray


@dataclass
class EventBatch:
    """Column-wise event store; all arrays share the first dimension."""

    event_id: np.ndarray
    channel: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    E_sum: np.ndarray
    eps_rel: np.ndarray
    theta_pp: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p1_out: np.ndarray
    p2_out: np.ndarray
    n_primary: np.ndarray

    def __len__(self) -> int:
        return int(self.event_id.shape[0])

    def row(self, i: int) -> PairEvent:
        return PairEvent(
            event_id=int(self.event_id[i]),
            channel=CHANNEL_NAMES[int(self.channel[i])],
            t1=float(self.t1[i]), t2=float(self.t2[i]),
            E1=float(self.E1[i]), E2=float(self.E2[i]),
            E_sum=float(self.E_sum[i]), eps_rel=float(self.eps_rel[i]),
            theta_pp=float(self.theta_pp[i]),
            p1=self.p1[i].copy(), p2=self.p2[i].copy(),
            p1_out=self.p1_out[i].copy(), p2_out=self.p2_out[i].copy(),
            n_primary=self.n_primary[i].copy(),
        )

    def take(self, index) -> "EventBatch":
        """Sub-batch by boolean mask or index array."""
        return EventBatch(*(getattr(self, f)[index] for f in _ALL_FIELDS))

    def sorted_by_id(self) -> "EventBatch":
        return self.take(np.argsort(self.event_id, kind="stable"))


_ALL_FIELDS = ("event_id", "channel") + _SCALAR_FIELDS + _VECTOR_FIELDS


def empty_batch() -> EventBatch:
    return EventBatch(
        event_id=np.empty(0, dtype=np.int64),
        channel=np.empty(0, dtype=np.int8),
        **{f: np.empty(0) for f in _SCALAR_FIELDS},
        **{f: np.empty((0, 3)) for f in _VECTOR_FIELDS},
    )


def concat_batches(batches) -> EventBatch:
    batches = list(batches)
    if not batches:
        return empty_batch()
    return EventBatch(*(np.concatenate([getattr(b, f) for b in batches])
                        for f in _ALL_FIELDS))


@dataclass
class Observables:
    """Per-event quantities derived from the stored momenta.

    theta1/theta2: analyzer polar scattering angles (deg); side1/side2:
    +1 left, -1 right, 0 undefined; phi1/phi2: quantization-axis azimuths
    in [0, 180); theta_corr: correlation angle |phi1 - phi2| folded;
    coplanarity: deviation of the primary normal from +y (deg).
    """

    theta1: np.ndarray
    theta2: np.ndarray
    side1: np.ndarray
    side2: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    theta_corr: np.ndarray
    coplanarity: np.ndarray


def derive_observables(batch: EventBatch) -> Observables:
    """Recompute analyzer-scattering observables from the event kinematics.

    Degenerate tracks (no measurable scattering plane) get side = 0 and are
    rejected by the defined-sides gate rather than raising here.
    """
    n = len(batch)
    if n == 0:
        z = np.empty(0)
        return Observables(z, z, np.empty(0, np.int8), np.empty(0, np.int8),
                           z.copy(), z.copy(), z.copy(), z.copy())

    out = {}
    for tag, p_in, p_out in (("1", batch.p1, batch.p1_out),
                             ("2", batch.p2, batch.p2_out)):
        cross = np.cross(p_in, p_out)
        norm = np.linalg.norm(cross, axis=1)
        ok = norm > geometry.EPS_PARALLEL
        theta = np.degrees(np.arctan2(norm, np.sum(p_in * p_out, axis=1)))
        normal = np.zeros_like(cross)
        normal[ok] = cross[ok] / norm[ok, np.newaxis]
        side = geometry.classify_sides(normal)
        side[~ok] = geometry.Side.UNDEFINED
        psi = np.zeros(n)
        psi[ok] = geometry.azimuth(p_in[ok], normal[ok])
        out[tag] = (theta, side, np.mod(psi, 180.0))

    theta1, side1, phi1 = out["1"]
    theta2, side2, phi2 = out["2"]
    return Observables(
        theta1=theta1, theta2=theta2, side1=side1, side2=side2,
        phi1=phi1, phi2=phi2,
        theta_corr=geometry.correlation_angle(phi1, phi2),
        coplanarity=geometry.coplanarity_deviation(batch.n_primary),
    )


def write_events(path, batch: EventBatch, *, seed: int, config_hash: str) -> None:
    """Write the JSONL event file (header line + one event per line)."""
    header = json.dumps(
        {"schema_version": EVENT_SCHEMA_VERSION, "seed": int(seed),
         "config_hash": config_hash, "n_events": len(batch)},
        sort_keys=True, separators=(",", ":"))
    names = [CHANNEL_NAMES[c] for c in batch.channel]
    columns = (batch.event_id, names, batch.t1, batch.t2, batch.E1, batch.E2,
               batch.E_sum, batch.eps_rel, batch.theta_pp,
               batch.p1[:, 0], batch.p1[:, 1], batch.p1[:, 2],
               batch.p2[:, 0], batch.p2[:, 1], batch.p2[:, 2],
               batch.p1_out[:, 0], batch.p1_out[:, 1], batch.p1_out[:, 2],
               batch.p2_out[:, 0], batch.p2_out[:, 1], batch.p2_out[:, 2],
               batch.n_primary[:, 0], batch.n_primary[:, 1], batch.n_primary[:, 2])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        fh.writelines(_LINE_FMT % row + "\n" for row in zip(*columns))


def read_events(path) -> tuple[EventBatch, dict]:
    """Parse a JSONL event file; returns (batch, header).

    Raises SchemaMismatch for a missing/incompatible header, unparseable
    lines, or rows missing fields.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise SchemaMismatch(f"{path}: empty event file (no header)")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise SchemaMismatch(f"{path}: header is not valid JSON") from exc
        if not isinstance(header, dict) or "schema_version" not in header:
            raise SchemaMismatch(f"{path}: header lacks schema_version")
        if header["schema_version"] != EVENT_SCHEMA_VERSION:
            raise SchemaMismatch(
                f"{path}: schema_version {header['schema_version']} "
                f"(supported: {EVENT_SCHEMA_VERSION})")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise SchemaMismatch(f"{path}:{lineno}: unparseable event line") from exc

    n = len(rows)
    batch = EventBatch(
        event_id=np.empty(n, dtype=np.int64),
        channel=np.empty(n, dtype=np.int8),
        **{f: np.empty(n) for f in _SCALAR_FIELDS},
        **{f: np.empty((n, 3)) for f in _VECTOR_FIELDS},
    )
    try:
        for i, row in enumerate(rows):
            batch.event_id[i] = row["event_id"]
            batch.channel[i] = CHANNEL_CODES[row["channel"]]
            for f in _SCALAR_FIELDS:
                getattr(batch, f)[i] = row[f]
            for f in _VECTOR_FIELDS:
                getattr(batch, f)[i] = row[f]
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaMismatch(f"{path}: event row {i + 2} malformed: {exc}") from exc
    return batch, header
