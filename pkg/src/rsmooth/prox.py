"""Weakly convex nonsmooth terms, proximal maps and Moreau envelopes."""
from __future__ import annotations

import math

import numpy as np

ENVELOPE_SLACK = 1e-10


class ParameterError(ValueError):
    pass


def soft_threshold(Y, t):
    Y = np.asarray(Y, dtype=float)
    return np.sign(Y) * np.maximum(np.abs(Y) - t, 0.0)


def prox_l1(Y, mu, lam):
    """Proximal map of ``lam * ||.||_1`` with parameter ``mu`` (entrywise soft-thresholding)."""
    if mu <= 0 or lam < 0:
        raise ParameterError(f"need mu > 0 and lam >= 0, got mu={mu}, lam={lam}")
    return soft_threshold(Y, mu * lam)


class WeaklyConvexFn:
    """A rho-weakly convex, Lipschitz function with a closed-form prox.

    Subclasses provide ``__call__``, ``prox`` and ``subdifferential_box``
    and set ``lipschitz`` and ``rho``.
    """

    lipschitz = 0.0
    rho = 0.0

    def __call__(self, Y):
        raise NotImplementedError

    def prox(self, Y, mu):
        raise NotImplementedError

    def subgradient(self, Y):
        """One element of the subdifferential at ``Y`` (the minimum-norm one)."""
        lo, hi = self.subdifferential_box(Y)
        return np.clip(0.0, lo, hi)

    def subdifferential_box(self, Y):
        """Entrywise bounds ``(lo, hi)`` of a box-shaped subdifferential at ``Y``."""
        raise NotImplementedError

    def envelope_lower_bound(self, radius):
        """Lower bound on ``h_mu(y)`` over ``||y|| <= radius`` for admissible ``mu``."""
        return 0.0

    def envelope_curvature(self, mu):
        """Lipschitz constant of the envelope gradient: ``max(1/mu, rho/(1 - rho mu))``."""
        self.check_mu(mu)
        if self.rho == 0:
            return 1.0 / mu
        return max(1.0 / mu, self.rho / (1.0 - self.rho * mu))

    def check_mu(self, mu):
        if not mu > 0:
            raise ParameterError(f"smoothing parameter must be positive, got {mu}")
        if self.rho > 0 and mu * self.rho >= 1.0:
            raise ParameterError(f"mu={mu} outside (0, 1/rho) with rho={self.rho}")


class L1Norm(WeaklyConvexFn):
    """``lam * sum |Y_ij|`` over arrays with ``size`` entries.

    The function is convex, so it is rho-weakly convex for every
    ``rho >= 0``; a positive ``rho`` may be declared to drive the
    ``(2 rho)^-1`` smoothing schedule. ``lipschitz`` is the Frobenius
    Lipschitz constant ``lam * sqrt(size)``.
    """

    def __init__(self, lam, size, rho=0.0):
        if lam < 0:
            raise ParameterError(f"lam must be nonnegative, got {lam}")
        if rho < 0:
            raise ParameterError(f"rho must be nonnegative, got {rho}")
        self.lam = float(lam)
        self.size = int(size)
        self.rho = float(rho)
        self.lipschitz = self.lam * math.sqrt(self.size)

    def __call__(self, Y):
        return self.lam * float(np.sum(np.abs(Y)))

    def prox(self, Y, mu):
        self.check_mu(mu)
        return soft_threshold(Y, mu * self.lam)

    def subdifferential_box(self, Y):
        Y = np.asarray(Y, dtype=float)
        s = np.sign(Y)
        lo = np.where(Y == 0, -self.lam, self.lam * s)
        hi = np.where(Y == 0, self.lam, self.lam * s)
        return lo, hi

    def __repr__(self):
        return f"L1Norm(lam={self.lam}, size={self.size}, rho={self.rho})"


class ShiftedL1(WeaklyConvexFn):
    """``lam ||Y||_1 - (rho/2) ||Y||_F^2``: genuinely rho-weakly convex.

    The quadratic is unbounded, so ``lipschitz`` is the constant valid on
    the ball of the given ``radius`` together with the prox images of its
    points whenever ``rho * mu <= 1/2``. On the Stiefel manifold with
    ``A = I`` the shift is the constant ``-(rho/2) r``, so the minimizers
    coincide with those of the plain l1 problem.
    """

    def __init__(self, lam, size, rho, radius):
        if lam < 0 or rho <= 0 or radius <= 0:
            raise ParameterError("need lam >= 0, rho > 0, radius > 0")
        self.lam = float(lam)
        self.size = int(size)
        self.rho = float(rho)
        self.radius = float(radius)
        self.lipschitz = self.lam * math.sqrt(self.size) + 2.0 * self.rho * self.radius

    def __call__(self, Y):
        Y = np.asarray(Y, dtype=float)
        return self.lam * float(np.sum(np.abs(Y))) - 0.5 * self.rho * float(np.sum(Y * Y))

    def prox(self, Y, mu):
        self.check_mu(mu)
        return soft_threshold(Y, mu * self.lam) / (1.0 - self.rho * mu)

    def subdifferential_box(self, Y):
        Y = np.asarray(Y, dtype=float)
        s = np.sign(Y)
        lo = np.where(Y == 0, -self.lam, self.lam * s) - self.rho * Y
        hi = np.where(Y == 0, self.lam, self.lam * s) - self.rho * Y
        return lo, hi

    def envelope_lower_bound(self, radius):
        # min_z -(rho/2)|z|^2 + |z-y|^2/(2 mu) = -rho |y|^2 / (2 (1 - rho mu)) >= -rho |y|^2
        return -self.rho * radius**2

    def __repr__(self):
        return f"ShiftedL1(lam={self.lam}, size={self.size}, rho={self.rho}, radius={self.radius})"


class Zero(WeaklyConvexFn):
    """``h = 0``; the smooth special case."""

    def __call__(self, Y):
        return 0.0

    def prox(self, Y, mu):
        self.check_mu(mu)
        return np.array(Y, dtype=float, copy=True)

    def subdifferential_box(self, Y):
        z = np.zeros_like(np.asarray(Y, dtype=float))
        return z, z

    def envelope_curvature(self, mu):
        return 0.0


def moreau_value(h, Y, mu, Z=None):
    """``h_mu(Y) = h(Z) + ||Z - Y||^2 / (2 mu)`` with ``Z = prox_{mu h}(Y)``.

    Pass a precomputed ``Z`` to avoid a second prox evaluation.
    """
    if Z is None:
        Z = h.prox(Y, mu)
    else:
        h.check_mu(mu)
    D = np.asarray(Z) - np.asarray(Y)
    return h(Z) + float(np.sum(D * D)) / (2.0 * mu)


def moreau_grad(h, Y, mu, Z=None):
    """``(Y - prox_{mu h}(Y)) / mu``."""
    if Z is None:
        Z = h.prox(Y, mu)
    else:
        h.check_mu(mu)
    return (np.asarray(Y, dtype=float) - Z) / mu


def envelope_ordering_gap(h, Y, mu1, mu2):
    """Right side minus left side of ``h_mu2 <= h_mu1 + (mu1-mu2)/(2 mu2) mu1 l_h^2``."""
    if not (0 < mu2 <= mu1):
        raise ParameterError(f"need 0 < mu2 <= mu1, got mu1={mu1}, mu2={mu2}")
    h.check_mu(mu1)
    lhs = moreau_value(h, Y, mu2)
    rhs = moreau_value(h, Y, mu1) + 0.5 * (mu1 - mu2) / mu2 * mu1 * h.lipschitz**2
    return rhs - lhs


def check_envelope_ordering(h, Y, mu1, mu2, slack=ENVELOPE_SLACK):
    return envelope_ordering_gap(h, Y, mu1, mu2) >= -slack
