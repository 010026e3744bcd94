"""Vector kinematics of the double-scattering geometry.

All momenta are unit direction vectors (energies are carried separately).
Angles cross module boundaries in degrees; radians are internal only.

Conventions (fixed so that results are deterministic):
  * the spectrometer symmetry-plane normal is +y,
  * the azimuth phi of a scattering normal n around a track p is measured
    from x = normalize(y x p), increasing right-handedly about p,
  * scattering to the left/right is the sign of n . y.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np

from .errors import DegenerateTrack

# Degeneracy guard for cross products; unit-norm checks use 1e-12.
EPS_PARALLEL = 1e-9
EPS_SIDE = 1e-9
EPS_UNIT = 1e-12

Y_AXIS = np.array([0.0, 1.0, 0.0])


class Side(IntEnum):
    RIGHT = -1
    UNDEFINED = 0
    LEFT = 1


def normalize(v: np.ndarray) -> np.ndarray:
    """Return v scaled to unit norm along the last axis."""
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def is_unit(v: np.ndarray, tol: float = EPS_UNIT) -> bool:
    v = np.asarray(v, dtype=float)
    return bool(np.all(np.abs(np.linalg.norm(v, axis=-1) - 1.0) <= tol))


def scattering_normal(p_in: np.ndarray, p_out: np.ndarray) -> np.ndarray:
    """Unit normal of the scattering plane, normalize(p_in x p_out).

    Raises DegenerateTrack when the tracks are parallel or antiparallel
    within EPS_PARALLEL (the normal would be undefined).
    """
    p_in = np.asarray(p_in, dtype=float)
    p_out = np.asarray(p_out, dtype=float)
    n = np.cross(p_in, p_out)
    norm = np.linalg.norm(n, axis=-1)
    if np.any(norm < EPS_PARALLEL):
        raise DegenerateTrack("tracks (anti)parallel: scattering normal undefined")
    return n / norm[..., np.newaxis]


def opening_angle(p_in: np.ndarray, p_out: np.ndarray) -> np.ndarray:
    """Angle between two unit vectors in degrees, stable near 0 and 180."""
    p_in = np.asarray(p_in, dtype=float)
    p_out = np.asarray(p_out, dtype=float)
    s = np.linalg.norm(np.cross(p_in, p_out), axis=-1)
    c = np.sum(p_in * p_out, axis=-1)
    return np.degrees(np.arctan2(s, c))


def azimuth(p: np.ndarray, n: np.ndarray, y: np.ndarray = Y_AXIS) -> np.ndarray:
    """Azimuth of n around p, in degrees [0, 360).

    The reference direction is x = normalize(y x p); the angle increases
    right-handedly about p (counterclockwise when p points at the viewer).
    Raises DegenerateTrack if p is parallel to y.
    """
    p = np.asarray(p, dtype=float)
    n = np.asarray(n, dtype=float)
    y = np.asarray(y, dtype=float)
    x_ref = np.cross(y, p)
    norm = np.linalg.norm(x_ref, axis=-1)
    if np.any(norm < EPS_PARALLEL):
        raise DegenerateTrack("track parallel to the symmetry-plane normal")
    x_ref = x_ref / norm[..., np.newaxis]
    y_ref = np.cross(p, x_ref)
    phi = np.degrees(np.arctan2(np.sum(n * y_ref, axis=-1),
                                np.sum(n * x_ref, axis=-1)))
    return np.mod(phi, 360.0)


def correlation_angle(phi1, phi2):
    """Angle between two quantization directions, |phi1 - phi2| folded to [0, 180].

    Quantization directions are axes, so differences above 180 deg fold back
    (theta and 360 - theta label the same relative orientation).
    """
    d = np.abs(np.asarray(phi1, dtype=float) - np.asarray(phi2, dtype=float))
    d = np.mod(d, 360.0)
    return np.where(d > 180.0, 360.0 - d, d)[()]


def classify_side(n: np.ndarray, y: np.ndarray = Y_AXIS) -> Side:
    """Left/Right classification from the sign of n . y (Side.UNDEFINED within EPS_SIDE)."""
    proj = float(np.dot(np.asarray(n, dtype=float), np.asarray(y, dtype=float)))
    if proj > EPS_SIDE:
        return Side.LEFT
    if proj < -EPS_SIDE:
        return Side.RIGHT
    return Side.UNDEFINED


def classify_sides(n: np.ndarray, y: np.ndarray = Y_AXIS) -> np.ndarray:
    """Vectorized classify_side: int8 array of Side values for (N, 3) normals."""
    proj = np.asarray(n, dtype=float) @ np.asarray(y, dtype=float)
    out = np.zeros(proj.shape, dtype=np.int8)
    out[proj > EPS_SIDE] = Side.LEFT
    out[proj < -EPS_SIDE] = Side.RIGHT
    return out


def coplanarity_deviation(n_primary: np.ndarray, y: np.ndarray = Y_AXIS) -> np.ndarray:
    """Axis deviation arccos(|n . y|) in degrees; insensitive to the sign of n."""
    n_primary = np.asarray(n_primary, dtype=float)
    y = np.asarray(y, dtype=float)
    c = np.abs(np.sum(n_primary * y, axis=-1))
    return np.degrees(np.arccos(np.clip(c, -1.0, 1.0)))


def rotate_about(p: np.ndarray, axis: np.ndarray, angle_deg) -> np.ndarray:
    """Rotate unit vector(s) p about unit axis(es) orthogonal to p.

    Rodrigues' formula reduced to p' = p cos(a) + (axis x p) sin(a) because
    axis . p = 0 for scattering rotations.
    """
    a = np.radians(np.asarray(angle_deg, dtype=float))[..., np.newaxis]
    p = np.asarray(p, dtype=float)
    axis = np.asarray(axis, dtype=float)
    return p * np.cos(a) + np.cross(axis, p) * np.sin(a)


def normal_from_azimuth(p: np.ndarray, psi_deg, y: np.ndarray = Y_AXIS) -> np.ndarray:
    """Unit normal orthogonal to p at azimuth psi (degrees) in the frame of `azimuth`."""
    p = np.asarray(p, dtype=float)
    x_ref = normalize(np.cross(y, p))
    y_ref = np.cross(p, x_ref)
    psi = np.radians(np.asarray(psi_deg, dtype=float))[..., np.newaxis]
    return x_ref * np.cos(psi) + y_ref * np.sin(psi)
