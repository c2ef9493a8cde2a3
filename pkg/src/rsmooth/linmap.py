"""Linear maps ``A`` with adjoint, spectral estimates and the pseudo-inverse correction."""
from __future__ import annotations

import numpy as np

POWER_TOL = 1e-8
POWER_MAXITER = 10_000
PINV_CUTOFF = 1e-12
SURJECTIVE_CUTOFF = 1e-10


class EstimationError(RuntimeError):
    def __init__(self, message, last_iterate=None, last_value=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.last_value = last_value


class SurjectivityError(ValueError):
    pass


def power_iteration(matvec, dim, tol=POWER_TOL, max_iter=POWER_MAXITER, seed=0):
    """Largest eigenvalue of a symmetric PSD operator given by ``matvec``.

    Stops when the Rayleigh quotient changes by less than ``tol`` relative.
    Returns ``(value, vector)``.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, v
        v = w / nw
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new, v
        lam = lam_new
    raise EstimationError(f"power iteration did not converge in {max_iter} steps", v, lam)


def spectral_norm_sym(M, **kw):
    """``||M||_2`` for symmetric PSD ``M`` by power iteration."""
    M = np.asarray(M, dtype=float)
    lam, _ = power_iteration(lambda v: M @ v, M.shape[0], **kw)
    return lam


class LinearMap:
    """Either the identity on ``R^dim`` or a dense ``m x n`` matrix.

    Operands may be vectors or ``n x r`` matrices; a dense map acts on
    the leading axis (``A X``).
    """

    def __init__(self, matrix=None, dim=None):
        if matrix is None:
            self.kind = "identity"
            self.matrix = None
            self.dim = dim
        else:
            M = np.array(matrix, dtype=float)
            if M.ndim != 2:
                raise ValueError("dense map needs a 2-d matrix")
            self.kind = "dense"
            self.matrix = M
            self.dim = M.shape[1]
        self._norm = None
        self._svd = None

    @classmethod
    def identity(cls, dim=None):
        return cls(dim=dim)

    @classmethod
    def dense(cls, matrix):
        return cls(matrix=matrix)

    @property
    def is_identity(self):
        return self.kind == "identity"

    def _check(self, x, n_expected):
        if n_expected is not None and np.shape(x)[0] != n_expected:
            raise ValueError(f"shape mismatch: operand has leading dim {np.shape(x)[0]}, expected {n_expected}")

    def apply(self, x):
        if self.is_identity:
            self._check(x, self.dim)
            return x
        self._check(x, self.matrix.shape[1])
        return self.matrix @ x

    def adjoint(self, y):
        if self.is_identity:
            self._check(y, self.dim)
            return y
        self._check(y, self.matrix.shape[0])
        return self.matrix.T @ y

    __call__ = apply

    def op_norm(self):
        """Spectral norm, cached. Power iteration on ``A^T A``."""
        if self._norm is None:
            if self.is_identity:
                self._norm = 1.0
            else:
                M = self.matrix
                if M.shape[0] >= M.shape[1]:
                    lam, _ = power_iteration(lambda v: M.T @ (M @ v), M.shape[1])
                else:
                    lam, _ = power_iteration(lambda v: M @ (M.T @ v), M.shape[0])
                self._norm = float(np.sqrt(max(lam, 0.0)))
        return self._norm

    def set_norm_estimate(self, value):
        self._norm = float(value)

    def _thin_svd(self):
        if self._svd is None:
            self._svd = np.linalg.svd(self.matrix, full_matrices=False)
        return self._svd

    def sigma_min(self):
        """Smallest retained singular value; raises unless the map is surjective."""
        if self.is_identity:
            return 1.0
        _, s, _ = self._thin_svd()
        m = self.matrix.shape[0]
        smax = s[0] if s.size else 0.0
        if s.size < m or smax == 0.0 or s[m - 1] <= SURJECTIVE_CUTOFF * smax:
            raise SurjectivityError("dense map is not surjective (rank < number of rows)")
        return float(s[m - 1])

    @property
    def is_surjective(self):
        try:
            self.sigma_min()
        except SurjectivityError:
            return False
        return True

    def pinv_apply(self, y):
        """``A^dagger y`` through the thin SVD, tiny singular values dropped."""
        if self.is_identity:
            return y
        U, s, Vt = self._thin_svd()
        keep = s > PINV_CUTOFF * s[0]
        coef = (U[:, keep].T @ y) / (s[keep][:, None] if np.ndim(y) == 2 else s[keep])
        return Vt[keep].T @ coef


def correct_point(A, x, z):
    """``x - A^dagger (A x - z)``: the point nearest ``x`` whose image is ``z``."""
    if A.is_identity:
        return np.array(z, dtype=float, copy=True)
    A.sigma_min()
    return x - A.pinv_apply(A.apply(x) - z)


def adjoint_mismatch(A, rng, probes=100, r=1):
    """Worst ``|<Ax, y> - <x, A^T y>|`` relative to ``||x|| ||y||`` over random probes."""
    n = A.dim if A.dim is not None else 8
    m = n if A.is_identity else A.matrix.shape[0]
    worst = 0.0
    for _ in range(probes):
        x = rng.standard_normal((n, r))
        y = rng.standard_normal((m, r))
        lhs = float(np.sum(A.apply(x) * y))
        rhs = float(np.sum(x * A.adjoint(y)))
        worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(x) * np.linalg.norm(y)))
    return worst
