"""Riemannian smoothing gradient methods and the subgradient baseline.

``solve_rsg``          fixed-schedule smoothing gradient descent
``solve_rsg_epochs``   the same iteration, terminated by per-epoch residual tracking
``solve_rssg``         stochastic variant returning a randomly indexed iterate
``solve_rssg_epochs``  stochastic variant with one random output per epoch
``solve_rsub``         Riemannian subgradient method

Smoothing parameters follow ``mu_k = mu0 * k^(-1/3)`` (deterministic) or
``mu0 * k^(-1/5)`` (stochastic), with ``mu0 = 1/(2 rho)`` when ``h`` is
declared ``rho``-weakly convex with ``rho > 0``.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .linmap import correct_point
from .manifold import RetractionKind, ensure_feasible, project_tangent, retract
from .problem import estimate_G, smoothness_constant
from .trace import BEAT_REFERENCE, MAX_ITERS, TOLERANCE, RunRecord

log = logging.getLogger(__name__)

ALGORITHMS = ("rsg", "rsg-epochs", "rssg", "rssg-epochs", "rsub")
DETERMINISTIC_EXPONENT = 1.0 / 3.0
STOCHASTIC_EXPONENT = 1.0 / 5.0
DESCENT_SLACK = 1e-10
REFERENCE_MARGIN = 1e-10
DEFAULT_MU0 = 0.1


class ConfigurationError(ValueError):
    pass


class StepsizeError(ValueError):
    pass


class NumericFailure(FloatingPointError):
    def __init__(self, message, record):
        super().__init__(message)
        self.record = record


class DescentViolation(AssertionError):
    def __init__(self, message, record):
        super().__init__(message)
        self.record = record


@dataclass
class ScheduleConfig:
    """Smoothing and step-size configuration.

    ``step_mode="theory"`` uses ``gamma_k = 1/l_k`` (deterministic) or
    ``omega / l_k^3`` (stochastic). ``"practical"`` uses
    ``c k^(-1/3)`` / ``c k^(-3/5)`` with ``c = step_scale`` or, if unset,
    one backtracking pass at ``k = 1`` starting from ``step_init`` (default
    ``1 / (l_f + ||A||^2 / mu_1)``, the Euclidean smoothness of ``F_1``).
    The reported ``l_k`` is then the formula value rescaled so that
    ``gamma_1 l_1 = 1``.
    """

    mu0: float | None = None
    step_mode: str = "practical"
    step_scale: float | None = None
    step_init: float | None = None
    alpha: float = 1.0
    beta: float = 1.0
    G: float | None = None
    lipschitz_grad: float | None = None
    lower_bound: float | None = None
    retraction: str = "polar"
    check_descent: bool | None = None
    corrected: bool = False
    monitor: bool = True
    G_samples: int = 100
    G_seed: int = 0

    def __post_init__(self):
        if self.step_mode not in ("theory", "practical"):
            raise ConfigurationError(f"step_mode must be 'theory' or 'practical', got {self.step_mode!r}")
        if self.mu0 is not None and not self.mu0 > 0:
            raise ConfigurationError(f"mu0 must be positive, got {self.mu0}")
        if self.step_scale is not None and not self.step_scale > 0:
            raise ConfigurationError(f"step_scale must be positive, got {self.step_scale}")
        RetractionKind(self.retraction)


@dataclass
class StopRule:
    tol: float | None = None
    max_iters: int = 1000
    reference_objective: float | None = None

    def resolved_tol(self, prob):
        return 1e-8 * prob.n * prob.r if self.tol is None else self.tol

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0:
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass
class TheoryConstants:
    omega1: float
    omega2: float
    omega3: float
    omega4: float
    omega: float
    rho: float
    lipschitz_h: float
    G: float
    F1: float
    F_lower: float

    def rate_bound(self, K):
        """``2 sqrt(omega1 omega2) / K^(1/3)``: bound on the running-min gradient norm."""
        return 2.0 * math.sqrt(self.omega1 * self.omega2) / np.cbrt(K)

    def prox_bound(self, k, exponent=DETERMINISTIC_EXPONENT):
        return self.lipschitz_h / (2.0 * self.rho) * k ** (-exponent)

    def epoch_budget(self, eps):
        """Iteration count by which the epoch method must have terminated."""
        a = 8.0 * math.sqrt(self.omega1**3 * self.omega2**3)
        b = (2.0 * self.rho) ** -3 * self.lipschitz_h**3
        return 2.0 * max(a, b) / eps**3

    def stochastic_bound(self, K, sigma2):
        """``B_K`` bounding ``E ||grad F_R(x^R)||^2`` under ``gamma_k = omega / l_k^3``."""
        w1, w2, w4 = self.omega1, self.omega2, self.omega4
        return (w2 * w1**4 * w4**-3 + 2.0 * sigma2 * w1**2 * w4**-2 * math.log(3 * K)) * K ** -0.4


class _Clock:
    """Accumulates solver time; instrumentation runs between ``pause`` and ``resume``."""

    def __init__(self):
        self.total = 0.0
        self._t = None

    def resume(self):
        self._t = time.perf_counter()

    def pause(self):
        self.total += time.perf_counter() - self._t
        self._t = None
        return self.total


def gradient_step(X, grad, gamma, kind=RetractionKind.POLAR):
    """``R_X(-gamma grad)``."""
    return retract(X, -gamma * grad, kind)


def calibrate_step(prob, X, mu, c0=1.0, kind=RetractionKind.POLAR, max_halvings=60):
    """Largest ``c0 / 2^j`` with ``F(R_X(-c g)) <= F(X) - (c/2) ||g||^2`` at ``X``."""
    ev = prob.evaluate(X, mu)
    g2 = float(np.sum(ev.grad**2))
    if g2 == 0.0:
        return c0
    F0 = prob.smoothed_value(X, mu, ev.prox)
    c = c0
    for _ in range(max_halvings):
        if prob.smoothed_value(gradient_step(X, ev.grad, c, kind), mu) <= F0 - 0.5 * c * g2:
            return c
        c *= 0.5
    raise StepsizeError("backtracking failed to find a descent step")


def resolve_mu0(prob, cfg):
    rho = prob.h.rho
    if cfg.mu0 is not None:
        if cfg.step_mode == "theory" and rho > 0 and not math.isclose(cfg.mu0, 0.5 / rho):
            raise ConfigurationError("theory mode with rho > 0 fixes mu0 = 1/(2 rho)")
        return cfg.mu0
    return 0.5 / rho if rho > 0 else DEFAULT_MU0


def theory_constants(prob, cfg, x1, G=None):
    """Constants ``omega1..omega4`` and ``omega = 2 omega4^3 / omega1``.

    ``F*`` is replaced by ``cfg.lower_bound`` or the problem's own lower bound.
    """
    rho = prob.h.rho
    if rho <= 0:
        raise ConfigurationError("theory constants need rho > 0; use step_mode='practical' for convex h")
    mu1 = 0.5 / rho
    if G is None:
        G = cfg.G if cfg.G is not None else estimate_G(prob, mu1, cfg.G_samples, cfg.G_seed)
    lf = prob.lipschitz_grad if cfg.lipschitz_grad is None else cfg.lipschitz_grad
    a2 = cfg.alpha**2
    nA2 = prob.A.op_norm() ** 2
    lh = prob.h.lipschitz
    F_lower = prob.lower_bound() if cfg.lower_bound is None else cfg.lower_bound
    F1 = prob.smoothed_value(x1, mu1)
    w1 = a2 * lf + 2.0 * G * cfg.beta + 2.0 * rho * a2 * nA2
    w2 = F1 - F_lower + lh**2 / (2.0 * rho)
    if prob.A.is_surjective:
        w3 = (lf / prob.A.sigma_min() * (2.0 * rho) ** -1.5 * lh) ** 2 / (a2 * nA2)
    else:
        w3 = math.inf
    w4 = 2.0 * rho * a2 * nA2
    return TheoryConstants(w1, w2, w3, w4, 2.0 * w4**3 / w1, rho, lh, G, F1, F_lower)


class Schedule:
    """Resolved ``mu_k``, ``l_k`` and ``gamma_k`` for one run."""

    def __init__(self, prob, cfg, x1, stochastic):
        self.prob = prob
        self.cfg = cfg
        self.stochastic = stochastic
        self.exponent = STOCHASTIC_EXPONENT if stochastic else DETERMINISTIC_EXPONENT
        self.mu0 = resolve_mu0(prob, cfg)
        self.theory = cfg.step_mode == "theory"
        self.G = cfg.G if cfg.G is not None else estimate_G(prob, self.mu(1), cfg.G_samples, cfg.G_seed)
        self.lf = prob.lipschitz_grad if cfg.lipschitz_grad is None else cfg.lipschitz_grad
        self.constants = None
        self.ell_scale = 1.0
        self.c = None
        if self.theory:
            if stochastic:
                self.constants = theory_constants(prob, cfg, x1, self.G)
        else:
            kind = RetractionKind(cfg.retraction)
            c0 = cfg.step_init
            if c0 is None:
                c0 = 1.0 / smoothness_constant(prob, self.mu(1), 0.0, 1.0, 0.0, self.lf)
            self.c = cfg.step_scale or calibrate_step(prob, x1, self.mu(1), c0, kind)
            self.ell_scale = 1.0 / (self.c * self._ell_formula(1))

    def mu(self, k):
        return self.mu0 * k ** (-self.exponent)

    def _ell_formula(self, k):
        cfg = self.cfg
        return smoothness_constant(self.prob, self.mu(k), self.G, cfg.alpha, cfg.beta, self.lf)

    def ell(self, k):
        return self.ell_scale * self._ell_formula(k)

    def gamma(self, k):
        if self.theory:
            if self.stochastic:
                return self.constants.omega / self.ell(k) ** 3
            return 1.0 / self.ell(k)
        return self.c * k ** (-0.6 if self.stochastic else -self.exponent)

    def describe(self):
        out = {
            "mu0": self.mu0,
            "exponent": self.exponent,
            "step_mode": self.cfg.step_mode,
            "step_scale": self.c,
            "G": self.G,
            "lipschitz_grad": self.lf,
            "alpha": self.cfg.alpha,
            "beta": self.cfg.beta,
            "rho": self.prob.h.rho,
            "lipschitz_h": self.prob.h.lipschitz,
            "op_norm_A": self.prob.A.op_norm(),
        }
        if self.constants is not None:
            out["theory"] = asdict(self.constants)
        return out


def output_weights(gammas, ells):
    """Normalized ``(2 gamma_k - l_k gamma_k^2)`` output-index probabilities."""
    gammas = np.asarray(gammas, dtype=float)
    ells = np.asarray(ells, dtype=float)
    if np.any(gammas * ells >= 2.0):
        raise StepsizeError("stepsizes must satisfy gamma_k < 2 / l_k")
    w = 2.0 * gammas - ells * gammas**2
    if np.any(w <= 0):
        raise StepsizeError("nonpositive output-index weight")
    return w / w.sum()


def sample_output_index(probs, rng, first=1):
    """Draw ``R`` with ``P(R = first + i) = probs[i]``."""
    return first + int(rng.choice(len(probs), p=probs))


def stationarity_residuals(prob, X, mu):
    """``(||grad F_k(X)||, ||A X - prox||, ||X - x_hat||)``; the last is ``None`` unless ``A`` is surjective."""
    ev = prob.evaluate(X, mu)
    corrected = None
    if prob.A.is_surjective:
        corrected = float(np.linalg.norm(X - correct_point(prob.A, X, ev.prox)))
    return float(np.linalg.norm(ev.grad)), ev.prox_residual, corrected


def _finite(rec, *values):
    if not all(math.isfinite(v) if isinstance(v, float) else np.isfinite(v).all() for v in values):
        raise NumericFailure(f"non-finite value at iteration {rec.iterations}", rec)


def _prepare(prob, x1, cfg, stop):
    cfg = cfg or ScheduleConfig()
    stop = stop or StopRule()
    X = prob.manifold.check(np.array(x1, dtype=float))
    return X, cfg, stop


def _record_row(rec, prob, k, mu, gamma, ell, X, ev, seconds):
    F_k = prob.smoothed_value(X, mu, ev.prox)
    phi = prob.objective(X)
    gnorm = float(np.linalg.norm(ev.grad))
    rec.add(k, mu, gamma, ell, gnorm, ev.prox_residual, F_k, phi, seconds)
    return gnorm, F_k, phi


class _DescentMonitor:
    def __init__(self, prob, rec, strict):
        self.prob = prob
        self.rec = rec
        self.strict = strict
        self.violations = 0
        self.worst = -math.inf

    def check(self, k, X_new, mu, F_k, gamma, gnorm):
        gap = self.prob.smoothed_value(X_new, mu) - (F_k - 0.5 * gamma * gnorm**2)
        self.worst = max(self.worst, gap)
        if gap > DESCENT_SLACK:
            self.violations += 1
            if self.strict:
                raise DescentViolation(f"descent inequality violated at k={k} by {gap:.3e}", self.rec)

    def report(self):
        self.rec.info["descent_violations"] = self.violations
        self.rec.info["descent_worst_gap"] = self.worst if self.worst > -math.inf else None


def solve_rsg(prob, x1, cfg=None, stop=None):
    """Riemannian smoothing gradient method.

    ``x^{k+1} = R_{x^k}(-gamma_k grad F_k(x^k))`` until
    ``max(||grad F_k||, ||A x - prox||) <= tol``, the reference objective is
    beaten, or ``max_iters`` iterates have been evaluated.
    """
    X, cfg, stop = _prepare(prob, x1, cfg, stop)
    kind = RetractionKind(cfg.retraction)
    clock = _Clock()
    clock.resume()
    sched = Schedule(prob, cfg, X, stochastic=False)
    rec = RunRecord("rsg", info={"schedule": sched.describe()})
    tol = stop.resolved_tol(prob)
    ref = stop.reference_objective
    check = sched.theory if cfg.check_descent is None else cfg.check_descent
    monitor = _DescentMonitor(prob, rec, strict=sched.theory)
    for k in range(1, stop.max_iters + 1):
        mu = sched.mu(k)
        ev = prob.evaluate(X, mu)
        gamma = sched.gamma(k)
        t = clock.pause()
        gnorm, F_k, phi = _record_row(rec, prob, k, mu, gamma, sched.ell(k), X, ev, t)
        _finite(rec, gnorm, F_k)
        if max(gnorm, ev.prox_residual) <= tol:
            rec.stop_reason = TOLERANCE
            break
        if ref is not None and phi <= ref - REFERENCE_MARGIN:
            rec.stop_reason = BEAT_REFERENCE
            break
        if k == stop.max_iters:
            rec.stop_reason = MAX_ITERS
            break
        clock.resume()
        X_new = ensure_feasible(gradient_step(X, ev.grad, gamma, kind))
        clock.pause()
        _finite(rec, X_new)
        if check:
            monitor.check(k, X_new, mu, F_k, gamma, gnorm)
        clock.resume()
        X = X_new
    monitor.report()
    rec.x = X
    rec.total_time = clock.total
    return rec


def solve_rsg_epochs(prob, x1, cfg=None, eps=None, stop=None):
    """Smoothing gradient method with doubling epochs ``[2^l, 2^(l+1))``.

    Within each epoch the smallest ``||grad F_{k+1}(x^{k+1})||`` seen so far
    is tracked as ``S_l``; the run stops at the first new minimum with
    ``S_l <= eps`` and prox residual (or, with ``cfg.corrected``, the
    distance ``||x - x_hat||``) at most ``eps``.
    """
    X, cfg, stop = _prepare(prob, x1, cfg, stop)
    if eps is None:
        eps = stop.resolved_tol(prob)
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    kind = RetractionKind(cfg.retraction)
    clock = _Clock()
    clock.resume()
    sched = Schedule(prob, cfg, X, stochastic=False)
    rec = RunRecord("rsg-epochs", info={"schedule": sched.describe(), "eps": eps})
    ref = stop.reference_objective
    check = sched.theory if cfg.check_descent is None else cfg.check_descent
    monitor = _DescentMonitor(prob, rec, strict=sched.theory)

    mu = sched.mu(1)
    ev = prob.evaluate(X, mu)
    t = clock.pause()
    gnorm, F_k, phi = _record_row(rec, prob, 1, mu, sched.gamma(1), sched.ell(1), X, ev, t)
    _finite(rec, gnorm, F_k)
    clock.resume()
    l = 0
    done = False
    while not done:
        S, k_l = math.inf, 2**l
        epoch = {"l": l, "start": 2**l, "end": 2 ** (l + 1) - 1}
        for k in range(2**l, 2 ** (l + 1)):
            gamma = sched.gamma(k)
            X_new = ensure_feasible(gradient_step(X, ev.grad, gamma, kind))
            if check:
                clock.pause()
                monitor.check(k, X_new, mu, F_k, gamma, gnorm)
                clock.resume()
            X = X_new
            mu = sched.mu(k + 1)
            ev = prob.evaluate(X, mu)
            t = clock.pause()
            gnorm, F_k, phi = _record_row(rec, prob, k + 1, mu, sched.gamma(k + 1), sched.ell(k + 1), X, ev, t)
            _finite(rec, gnorm, F_k, X)
            clock.resume()
            if gnorm <= S:
                S, k_l = gnorm, k + 1
                if cfg.corrected:
                    resid = float(np.linalg.norm(X - correct_point(prob.A, X, ev.prox)))
                else:
                    resid = ev.prox_residual
                if S <= eps and resid <= eps:
                    rec.stop_reason = TOLERANCE
                    done = True
            if not done and ref is not None and phi <= ref - REFERENCE_MARGIN:
                rec.stop_reason = BEAT_REFERENCE
                done = True
            if not done and k + 1 >= stop.max_iters:
                rec.stop_reason = MAX_ITERS
                done = True
            if done:
                break
        epoch.update(S=S, k_l=k_l, last=k + 1)
        rec.epochs.append(epoch)
        l += 1
    clock.pause()
    monitor.report()
    rec.x = X
    rec.total_time = clock.total
    return rec


class _BatchSampler:
    def __init__(self, probs, rng):
        self.probs = np.asarray(probs, dtype=float)
        self.rng = rng
        self.uniform = bool(np.all(self.probs == self.probs[0]))

    def __call__(self):
        P = len(self.probs)
        if P == 1:
            return 0
        if self.uniform:
            return int(self.rng.integers(P))
        return int(self.rng.choice(P, p=self.probs))


def _streams(seed):
    batch_ss, out_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(batch_ss), np.random.default_rng(out_ss)


def _stochastic_block(prob, sched, rec, clock, X, ks, sampler, keep, tol, ref, kind, monitor):
    """Run iterations ``ks``; return ``(X_next, kept iterate or None, early stop index or None)``."""
    kept = None
    for k in ks:
        mu = sched.mu(k)
        gamma = sched.gamma(k)
        p = sampler()
        ev = prob.evaluate(X, mu, batch=p)
        t = clock.pause()
        if monitor:
            full = prob.evaluate(X, mu)
            gnorm, F_k, phi = _record_row(rec, prob, k, mu, gamma, sched.ell(k), X, full, t)
            _finite(rec, gnorm, F_k)
            if max(gnorm, full.prox_residual) <= tol:
                rec.stop_reason = TOLERANCE
                return X, X, k
            if ref is not None and phi <= ref - REFERENCE_MARGIN:
                rec.stop_reason = BEAT_REFERENCE
                return X, X, k
        else:
            rec.add(k, mu, gamma, sched.ell(k), float(np.linalg.norm(ev.grad)), ev.prox_residual,
                    math.nan, math.nan, t)
            _finite(rec, ev.grad)
        if k == keep:
            kept = X
        clock.resume()
        X = ensure_feasible(gradient_step(X, ev.grad, gamma, kind))
    return X, kept, None


def solve_rssg(prob, x1, cfg=None, K=1000, seed=0, stop=None):
    """Riemannian smoothing stochastic gradient method.

    Runs ``K`` minibatch steps and returns ``x^R`` with
    ``P(R = k) ~ 2 gamma_k - l_k gamma_k^2``. Batch indices and ``R`` come
    from two independent streams spawned from ``seed``, so runs with
    different ``K`` share their trajectory prefix.
    """
    X, cfg, stop = _prepare(prob, x1, cfg, stop)
    kind = RetractionKind(cfg.retraction)
    batch_rng, out_rng = _streams(seed)
    clock = _Clock()
    clock.resume()
    sched = Schedule(prob, cfg, X, stochastic=True)
    ks = np.arange(1, K + 1)
    gammas = np.array([sched.gamma(k) for k in ks])
    ells = np.array([sched.ell(k) for k in ks])
    probs = output_weights(gammas, ells)
    R = sample_output_index(probs, out_rng)
    rec = RunRecord("rssg", weights=probs, info={"schedule": sched.describe(), "seed": seed, "K": K})
    X, kept, early = _stochastic_block(prob, sched, rec, clock, X, range(1, K + 1), _BatchSampler(prob.batch_probs, batch_rng),
                                       R, stop.resolved_tol(prob), stop.reference_objective, kind, cfg.monitor)
    clock.pause()
    if early is None:
        rec.stop_reason = MAX_ITERS
        rec.sampled_index = R
    else:
        rec.sampled_index = early
    rec.x = kept
    rec.total_time = clock.total
    return rec


def solve_rssg_epochs(prob, x1, cfg=None, L_max=5, seed=0, stop=None):
    """Stochastic smoothing method over epochs ``l = 0..L_max``.

    Epoch ``l`` covers ``k = 2^l .. 2^(l+1)-1`` and draws one output index
    ``R_l`` from that epoch's weights; the returned iterate is the last
    epoch's ``x^(R_l)``. Stationarity residuals at every ``x^(R_l)`` are
    stored in ``record.epochs``.
    """
    X, cfg, stop = _prepare(prob, x1, cfg, stop)
    kind = RetractionKind(cfg.retraction)
    batch_rng, out_rng = _streams(seed)
    sampler = _BatchSampler(prob.batch_probs, batch_rng)
    clock = _Clock()
    clock.resume()
    sched = Schedule(prob, cfg, X, stochastic=True)
    rec = RunRecord("rssg-epochs", weights=[], info={"schedule": sched.describe(), "seed": seed, "L_max": L_max})
    tol = stop.resolved_tol(prob)
    out = None
    for l in range(L_max + 1):
        ks = np.arange(2**l, 2 ** (l + 1))
        probs = output_weights([sched.gamma(k) for k in ks], [sched.ell(k) for k in ks])
        R = sample_output_index(probs, out_rng, first=2**l)
        rec.weights.append(probs)
        X, kept, early = _stochastic_block(prob, sched, rec, clock, X, ks, sampler, R, tol,
                                           stop.reference_objective, kind, cfg.monitor)
        if early is not None:
            R = early
        clock.pause()
        g, pr, corr = stationarity_residuals(prob, kept, sched.mu(R))
        rec.epochs.append({"l": l, "start": int(ks[0]), "end": int(ks[-1]), "R": R,
                           "weight_sum": float(probs.sum()), "grad_norm": g,
                           "prox_residual": pr, "corrected_residual": corr})
        clock.resume()
        out, rec.sampled_index = kept, R
        if early is not None:
            break
    clock.pause()
    if rec.stop_reason is None:
        rec.stop_reason = MAX_ITERS
    rec.x = out
    rec.total_time = clock.total
    return rec


def solve_rsub(prob, x1, stepsizes=None, stop=None, retraction="polar"):
    """Riemannian subgradient method ``x^{k+1} = R(x^k, -gamma_k P_T(grad f + A^T s))``.

    ``s`` is the minimum-norm subgradient of ``h`` at ``A x`` (``lam sign(y)``,
    zero where ``y = 0`` for l1). Default steps ``gamma_k = 1/(l_f sqrt(k))``.
    Stops once ``phi(x^k) <= F_M + 1e-10`` or after ``max_iters`` iterates
    (default 10000).
    """
    stop = stop or StopRule(max_iters=10_000)
    X, _, stop = _prepare(prob, x1, None, stop)
    kind = RetractionKind(retraction)
    if stepsizes is None:
        c = 1.0 / prob.lipschitz_grad

        def stepsizes(k):
            return c / math.sqrt(k)

    clock = _Clock()
    clock.resume()
    rec = RunRecord("rsub")
    ref = stop.reference_objective
    for k in range(1, stop.max_iters + 1):
        sub = prob.f_grad(X) + prob.A.adjoint(prob.h.subgradient(prob.A.apply(X)))
        g = project_tangent(X, sub)
        gamma = stepsizes(k)
        t = clock.pause()
        phi = prob.objective(X)
        gnorm = float(np.linalg.norm(g))
        rec.add(k, math.nan, gamma, math.nan, gnorm, math.nan, phi, phi, t)
        _finite(rec, gnorm, phi)
        if ref is not None and phi <= ref + REFERENCE_MARGIN:
            rec.stop_reason = BEAT_REFERENCE
            break
        if k == stop.max_iters:
            rec.stop_reason = MAX_ITERS
            break
        clock.resume()
        X = ensure_feasible(gradient_step(X, g, gamma, kind))
    rec.x = X
    rec.total_time = clock.total
    return rec


def solve(algorithm, prob, x1, cfg=None, stop=None, seed=0):
    """Dispatch by name; stochastic methods use ``stop.max_iters`` as their iteration budget."""
    stop = stop or StopRule()
    if algorithm == "rsg":
        return solve_rsg(prob, x1, cfg, stop)
    if algorithm == "rsg-epochs":
        return solve_rsg_epochs(prob, x1, cfg, None, stop)
    if algorithm == "rssg":
        return solve_rssg(prob, x1, cfg, stop.max_iters, seed, stop)
    if algorithm == "rssg-epochs":
        L_max = max(0, int(math.floor(math.log2(stop.max_iters + 1))) - 1)
        return solve_rssg_epochs(prob, x1, cfg, L_max, seed, stop)
    if algorithm == "rsub":
        return solve_rsub(prob, x1, stop=stop, retraction=(cfg or ScheduleConfig()).retraction)
    raise ConfigurationError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
