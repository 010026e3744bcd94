"""Local-hidden-variable reference model.

Bell's deterministic sign model: a shared unit vector lambda fixes both
outcomes, s1 = sign(lambda . Q1) and s2 = -sign(lambda . Q2). It saturates
perfect anticorrelation at theta = 0 and obeys the CHSH bound, which makes
it the classical oracle for the analysis chain.
"""

from __future__ import annotations

import numpy as np


def sample_lambda(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform unit vector(s) on the sphere: normalized standard Gaussians."""
    n = 1 if size is None else size
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v[0] if size is None else v


def sign_model_outcomes(lam: np.ndarray, q1: np.ndarray, q2: np.ndarray):
    """Outcome pair (s1, s2) in {+1, -1}; dot products of exactly 0 resolve to +1.

    Accepts single vectors or (N, 3) arrays of hidden variables.
    """
    lam = np.asarray(lam, dtype=float)
    d1 = lam @ np.asarray(q1, dtype=float)
    d2 = lam @ np.asarray(q2, dtype=float)
    s1 = np.where(d1 >= 0.0, 1, -1)
    s2 = -np.where(d2 >= 0.0, 1, -1)
    if lam.ndim == 1:
        return int(s1), int(s2)
    return s1.astype(np.int8), s2.astype(np.int8)


def lhv_analytic_correlation(theta_deg):
    """Closed form of the sign model: E(theta) = 2 theta/180 - 1."""
    return 2.0 * np.asarray(theta_deg, dtype=float) / 180.0 - 1.0
