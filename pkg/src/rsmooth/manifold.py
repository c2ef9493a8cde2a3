"""Stiefel manifold St(n, r): tangent projection, retractions, feasibility.

Points and tangent vectors are plain ``numpy`` arrays of shape ``(n, r)``.
"""
from __future__ import annotations

import enum
import logging

import numpy as np

log = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-10
DRIFT_TOL = 1e-8


class DimensionError(ValueError):
    pass


class DegenerateStepError(ArithmeticError):
    pass


class RetractionKind(str, enum.Enum):
    POLAR = "polar"
    QR = "qr"


def _as_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {X.shape}")
    return X


def check_feasible(X):
    """Return ``||X^T X - I_r||_F``."""
    X = _as_matrix(X)
    return float(np.linalg.norm(X.T @ X - np.eye(X.shape[1])))


def project_tangent(X, U):
    """Orthogonal projection of ``U`` onto the tangent space at ``X``.

    ``P(U) = U - X (U^T X + X^T U) / 2``.
    """
    X = _as_matrix(X)
    U = _as_matrix(U)
    if U.shape != X.shape:
        raise DimensionError(f"shape mismatch: X {X.shape}, U {U.shape}")
    XtU = X.T @ U
    return U - X @ ((XtU + XtU.T) / 2.0)


def tangent_residual(X, eta):
    """``||X^T eta + eta^T X||_F``; zero iff ``eta`` is tangent at ``X``."""
    S = X.T @ eta
    return float(np.linalg.norm(S + S.T))


def polar_factor(Y):
    """Orthonormal polar factor ``U V^T`` of ``Y`` (thin SVD)."""
    U, _, Vt = np.linalg.svd(Y, full_matrices=False)
    return U @ Vt


def qr_factor(Y):
    # Sign-fixed thin QR so the result does not depend on the LAPACK sign convention.
    Q, R = np.linalg.qr(Y)
    d = np.diag(R)
    scale = np.max(np.abs(d)) if d.size else 0.0
    if scale == 0.0 or np.min(np.abs(d)) <= 1e-12 * max(scale, 1.0):
        raise DegenerateStepError("X + eta is numerically rank deficient; QR retraction undefined")
    return Q * np.sign(d)


def retract(X, eta, kind=RetractionKind.POLAR):
    """Map the tangent vector ``eta`` at ``X`` back onto the manifold."""
    X = _as_matrix(X)
    eta = np.asarray(eta, dtype=float).reshape(X.shape)
    kind = RetractionKind(kind)
    if not np.any(eta):
        return X.copy()
    Y = X + eta
    if kind is RetractionKind.POLAR:
        return polar_factor(Y)
    return qr_factor(Y)


def ensure_feasible(X, tol=DRIFT_TOL):
    """Re-orthonormalize ``X`` through its polar factor if it drifted past ``tol``."""
    res = check_feasible(X)
    if res > tol:
        log.warning("feasibility drift %.3e > %.1e; re-orthonormalizing", res, tol)
        return polar_factor(X)
    return X


class Stiefel:
    """The set of ``n x r`` matrices with orthonormal columns."""

    def __init__(self, n, r, retraction=RetractionKind.POLAR):
        if not (n >= r >= 1):
            raise DimensionError(f"need n >= r >= 1, got n={n}, r={r}")
        self.n = int(n)
        self.r = int(r)
        self.retraction = RetractionKind(retraction)

    @property
    def shape(self):
        return (self.n, self.r)

    def random_point(self, rng):
        return polar_factor(rng.standard_normal(self.shape))

    def random_tangent(self, X, rng, unit=True):
        if self.n == self.r == 1:
            raise DimensionError("St(1, 1) has a zero-dimensional tangent space")
        eta = project_tangent(X, rng.standard_normal(self.shape))
        if unit:
            eta /= np.linalg.norm(eta)
        return eta

    def proj(self, X, U):
        return project_tangent(X, U)

    def retr(self, X, eta):
        return retract(X, eta, self.retraction)

    def check(self, X, tol=FEASIBILITY_TOL):
        X = _as_matrix(X)
        if X.shape != self.shape:
            raise DimensionError(f"expected shape {self.shape}, got {X.shape}")
        res = check_feasible(X)
        if res > tol:
            raise ValueError(f"point is not on St({self.n},{self.r}): residual {res:.3e}")
        return X

    def __repr__(self):
        return f"Stiefel(n={self.n}, r={self.r}, retraction={self.retraction.value!r})"


def retraction_constants(manifold, rng, samples=1000, scales=(1e-2, 1e-1, 1.0, 3.0)):
    """Empirical ``alpha``, ``beta`` of the retraction bounds.

    ``||R_X(u) - X|| <= alpha ||u||`` and ``||R_X(u) - X - u|| <= beta ||u||^2``
    maximized over random points, unit tangents and the given step scales.
    """
    alpha = 0.0
    beta = 0.0
    for _ in range(samples):
        X = manifold.random_point(rng)
        eta = manifold.random_tangent(X, rng)
        for t in scales:
            u = t * eta
            Y = manifold.retr(X, u)
            alpha = max(alpha, np.linalg.norm(Y - X) / t)
            beta = max(beta, np.linalg.norm(Y - X - u) / t**2)
    return alpha, beta
