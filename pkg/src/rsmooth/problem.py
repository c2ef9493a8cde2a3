"""Composite problems ``min f(X) + h(A X)`` on St(n, r) and their smoothed versions.

Two concrete instances are provided: sparse PCA (``f = -tr(X^T B^T B X)``)
and compressed modes (``f = tr(X^T H X)``), both with an l1 penalty.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .linmap import LinearMap, spectral_norm_sym
from .manifold import DimensionError, Stiefel, project_tangent
from .prox import L1Norm, ParameterError, WeaklyConvexFn, Zero, moreau_value


class IntegrityError(ValueError):
    pass


# -- sparse PCA ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpcaInstance:
    B: np.ndarray
    lam: float
    r: int
    seed: int | None = None

    @property
    def m(self):
        return self.B.shape[0]

    @property
    def n(self):
        return self.B.shape[1]

    @cached_property
    def gram(self):
        return self.B.T @ self.B

    @cached_property
    def gram_norm(self):
        return spectral_norm_sym(self.gram)


def spca_generate(m, n, r, lam, seed):
    """Gaussian data with centered, unit-norm columns."""
    if min(m, n, r) < 1 or r > n:
        raise DimensionError(f"need m, n, r >= 1 and r <= n, got {(m, n, r)}")
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((m, n))
    B -= B.mean(axis=0)
    B /= np.linalg.norm(B, axis=0)
    return SpcaInstance(B=B, lam=float(lam), r=int(r), seed=seed)


def partition(m, P):
    """Contiguous row blocks ``[(start, stop), ...]``; sizes differ by at most one."""
    if not 1 <= P <= m:
        raise ParameterError(f"batch count must be in [1, {m}], got {P}")
    edges = np.linspace(0, m, P + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def spca_f_value(inst, X):
    return -float(np.sum(X * (inst.gram @ X)))


def spca_f_grad(inst, X):
    if X.shape[0] != inst.n:
        raise DimensionError(f"X has {X.shape[0]} rows, data has {inst.n} columns")
    return -2.0 * (inst.gram @ X)


def spca_f_grad_batch(inst, X, p, P, blocks=None):
    """Unbiased minibatch gradient from row block ``p`` of ``P``.

    Block ``p`` is drawn with probability ``m_p / m``; the estimator is
    rescaled by ``m / m_p`` so its expectation is the full gradient.
    ``blocks`` may pass a precomputed ``partition(m, P)``.
    """
    if not 0 <= p < P:
        raise ParameterError(f"batch index {p} outside [0, {P})")
    a, b = (blocks or partition(inst.m, P))[p]
    Bp = inst.B[a:b]
    return (-2.0 * inst.m / (b - a)) * (Bp.T @ (Bp @ X))


# -- compressed modes ---------------------------------------------------------


def cm_build_h(n, L=50.0):
    """Dirichlet finite-difference discretization of ``-1/2 d^2/dx^2`` on ``[0, L]``.

    ``n`` interior nodes, spacing ``L / (n + 1)``.
    """
    if n < 3:
        raise DimensionError(f"need n >= 3 nodes, got {n}")
    d = L / (n + 1)
    H = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    return H / (2.0 * d * d)


@dataclass(frozen=True, eq=False)
class CmInstance:
    H: np.ndarray
    lam: float
    r: int
    L: float = 50.0

    @property
    def n(self):
        return self.H.shape[0]

    @cached_property
    def h_norm(self):
        # closed-form top eigenvalue of the Dirichlet stencil; its clustered top
        # spectrum makes power iteration stall below the true value
        n = self.n
        d = self.L / (n + 1)
        return (1.0 - math.cos(n * math.pi / (n + 1))) / (d * d)


def cm_generate(n, r, lam, L=50.0):
    if r > n:
        raise DimensionError(f"need r <= n, got r={r}, n={n}")
    return CmInstance(H=cm_build_h(n, L), lam=float(lam), r=int(r), L=float(L))


# -- smoothed problem ---------------------------------------------------------


class Evaluation(NamedTuple):
    grad: np.ndarray          # Riemannian gradient of F_k (or its stochastic estimate)
    egrad: np.ndarray         # Euclidean gradient
    prox: np.ndarray          # prox_{mu h}(A X)
    prox_residual: float      # ||A X - prox||


@dataclass(eq=False)
class SmoothedProblem:
    """``f + h(A .)`` on St(n, r) with full and minibatch gradients of ``f``.

    ``batch_probs[p]`` is the sampling probability of block ``p``; the batch
    gradients are unbiased under that distribution.
    """

    name: str
    n: int
    r: int
    f_value: Callable
    f_grad: Callable
    f_grad_batch: Callable
    h: WeaklyConvexFn
    A: LinearMap
    lipschitz_grad: float
    f_lower: float
    batch_probs: np.ndarray = field(default_factory=lambda: np.ones(1))
    sigma2_fn: Callable | None = None
    instance: object = None

    @property
    def P(self):
        return len(self.batch_probs)

    @property
    def manifold(self):
        return Stiefel(self.n, self.r)

    @cached_property
    def sigma2(self):
        """Upper bound on ``E ||grad f(X, xi) - grad f(X)||^2`` over the manifold."""
        if self.P == 1:
            return 0.0
        return float(self.sigma2_fn())

    def objective(self, X):
        """The nonsmooth objective ``f(X) + h(A X)``."""
        return self.f_value(X) + self.h(self.A.apply(X))

    def lower_bound(self):
        """A lower bound on ``F_k(X)`` over the manifold, valid for every admissible ``mu``."""
        radius = self.A.op_norm() * math.sqrt(self.r)
        return self.f_lower + self.h.envelope_lower_bound(radius)

    def evaluate(self, X, mu, batch=None):
        Y = self.A.apply(X)
        Z = self.h.prox(Y, mu)
        D = Y - Z
        g = self.f_grad(X) if batch is None else self.f_grad_batch(X, batch)
        eg = g + self.A.adjoint(D) / mu
        return Evaluation(project_tangent(X, eg), eg, Z, float(np.linalg.norm(D)))

    def smoothed_value(self, X, mu, Z=None):
        Y = self.A.apply(X)
        return self.f_value(X) + moreau_value(self.h, Y, mu, Z)


def smoothed_value(prob, X, mu):
    """``F_k(X) = f(X) + h_mu(A X)``."""
    return prob.smoothed_value(X, mu)


def riemannian_grad_fk(prob, X, mu):
    return prob.evaluate(X, mu).grad


def riemannian_grad_fk_batch(prob, X, mu, p):
    return prob.evaluate(X, mu, batch=p).grad


def smoothness_constant(prob, mu, G, alpha=1.0, beta=1.0, lipschitz_grad=None):
    """Retraction-smoothness constant of ``F_k``.

    ``alpha^2 l_f + alpha^2 ||A||^2 max(1/mu, rho/(1 - rho mu)) + 2 G beta``,
    which is ``alpha^2 l_f + alpha^2 ||A||^2 / mu + 2 G beta`` when ``rho mu < 1/2``.
    The curvature term comes from ``h.envelope_curvature`` and vanishes for ``h = 0``.
    """
    lf = prob.lipschitz_grad if lipschitz_grad is None else lipschitz_grad
    if mu <= 0 or alpha <= 0 or beta < 0 or G < 0 or lf < 0:
        raise ParameterError(f"invalid constants mu={mu}, alpha={alpha}, beta={beta}, G={G}, l_f={lf}")
    curv = prob.h.envelope_curvature(mu)
    return alpha**2 * lf + alpha**2 * prob.A.op_norm() ** 2 * curv + 2.0 * G * beta


def estimate_G(prob, mu, samples=100, seed=0, safety=2.0):
    """``safety`` times the largest ``||grad F_k(X)||`` (Euclidean) at random feasible points."""
    rng = np.random.default_rng(seed)
    M = prob.manifold
    worst = 0.0
    for _ in range(samples):
        X = M.random_point(rng)
        worst = max(worst, float(np.linalg.norm(prob.evaluate(X, mu).egrad)))
    return safety * worst


def default_h(lam, size, rho=0.0):
    """``lam ||.||_1``, or the exact zero function when ``lam = 0``."""
    return Zero() if lam == 0 else L1Norm(lam, size, rho)


def spca_problem(inst, batches=1, h=None):
    """Wrap an SPCA instance; ``h`` defaults to ``inst.lam * ||.||_1`` (``Zero`` when ``lam = 0``)."""
    n, r = inst.n, inst.r
    blocks = partition(inst.m, batches)
    probs = np.array([(b - a) / inst.m for a, b in blocks])
    if h is None:
        h = default_h(inst.lam, n * r)

    def grad_batch(X, p):
        return spca_f_grad_batch(inst, X, p, batches, blocks)

    def sigma2():
        C = inst.gram
        total = 0.0
        for (a, b), q in zip(blocks, probs):
            Bp = inst.B[a:b]
            dev = (Bp.T @ Bp) / q - C
            total += q * np.max(np.abs(np.linalg.eigvalsh(dev))) ** 2
        # ||2 M X||_F <= 2 ||M||_2 ||X||_F and ||X||_F^2 = r on the manifold
        return 4.0 * r * total

    return SmoothedProblem(
        name="spca",
        n=n,
        r=r,
        f_value=lambda X: spca_f_value(inst, X),
        f_grad=lambda X: spca_f_grad(inst, X),
        f_grad_batch=grad_batch,
        h=h,
        A=LinearMap.identity(n),
        lipschitz_grad=2.0 * inst.gram_norm,
        f_lower=-r * inst.gram_norm,
        batch_probs=probs,
        sigma2_fn=sigma2,
        instance=inst,
    )


def cm_problem(inst, h=None):
    n, r = inst.n, inst.r
    H = inst.H
    if h is None:
        h = default_h(inst.lam, n * r)
    return SmoothedProblem(
        name="cm",
        n=n,
        r=r,
        f_value=lambda X: float(np.sum(X * (H @ X))),
        f_grad=lambda X: 2.0 * (H @ X),
        f_grad_batch=lambda X, p: 2.0 * (H @ X),
        h=h,
        A=LinearMap.identity(n),
        lipschitz_grad=2.0 * inst.h_norm,
        f_lower=0.0,
        instance=inst,
    )


# -- instance export / import -------------------------------------------------


def _matrix_of(inst):
    return inst.B if isinstance(inst, SpcaInstance) else inst.H


def instance_hash(inst):
    M = np.ascontiguousarray(_matrix_of(inst), dtype="<f8")
    return hashlib.sha256(M.tobytes()).hexdigest()


def instance_meta(inst):
    M = _matrix_of(inst)
    if isinstance(inst, SpcaInstance):
        meta = {"kind": "spca", "m": inst.m, "n": inst.n, "r": inst.r, "lam": inst.lam, "seed": inst.seed}
    else:
        meta = {"kind": "cm", "m": inst.n, "n": inst.n, "r": inst.r, "lam": inst.lam, "seed": None, "L": inst.L}
    meta.update(shape=list(M.shape), dtype="<f8", sha256=instance_hash(inst))
    return meta


def save_instance(inst, directory, stem):
    """Write ``stem.bin`` (raw little-endian float64, row-major) and ``stem.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    M = np.ascontiguousarray(_matrix_of(inst), dtype="<f8")
    (directory / f"{stem}.bin").write_bytes(M.tobytes())
    meta = instance_meta(inst)
    meta["data"] = f"{stem}.bin"
    (directory / f"{stem}.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return directory / f"{stem}.json"


def load_instance(sidecar):
    sidecar = Path(sidecar)
    meta = json.loads(sidecar.read_text())
    raw = (sidecar.parent / meta["data"]).read_bytes()
    if hashlib.sha256(raw).hexdigest() != meta["sha256"]:
        raise IntegrityError(f"matrix dump {meta['data']} does not match the hash in {sidecar.name}")
    M = np.frombuffer(raw, dtype="<f8").reshape(meta["shape"]).astype(float)
    if meta["kind"] == "spca":
        if M.shape != (meta["m"], meta["n"]):
            raise IntegrityError("sidecar dimensions do not match the dump")
        return SpcaInstance(B=M, lam=meta["lam"], r=meta["r"], seed=meta["seed"])
    if M.shape != (meta["n"], meta["n"]):
        raise IntegrityError("sidecar dimensions do not match the dump")
    return CmInstance(H=M, lam=meta["lam"], r=meta["r"], L=meta["L"])
