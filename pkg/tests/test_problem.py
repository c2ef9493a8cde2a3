import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsmooth.manifold import DimensionError, Stiefel, project_tangent, retract
from rsmooth.prox import L1Norm, ParameterError, Zero
from rsmooth.problem import (
    IntegrityError,
    SpcaInstance,
    cm_build_h,
    cm_generate,
    cm_problem,
    estimate_G,
    instance_hash,
    load_instance,
    partition,
    riemannian_grad_fk,
    riemannian_grad_fk_batch,
    save_instance,
    smoothed_value,
    smoothness_constant,
    spca_f_grad,
    spca_f_grad_batch,
    spca_f_value,
    spca_generate,
    spca_problem,
)


@given(st.integers(1, 40), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_spca_generate_invariants(m, n, seed):
    inst = spca_generate(m + 1, n, 1, 0.3, seed)
    assert np.max(np.abs(inst.B.mean(axis=0))) <= 1e-12
    assert np.max(np.abs(np.linalg.norm(inst.B, axis=0) - 1.0)) <= 1e-12


def test_spca_generate_deterministic_and_fast():
    a = spca_generate(50, 7, 2, 0.4, 11)
    b = spca_generate(50, 7, 2, 0.4, 11)
    assert a.B.tobytes() == b.B.tobytes()
    t = time.perf_counter()
    spca_generate(5000, 200, 10, 0.4, 0)
    assert time.perf_counter() - t < 1.0
    with pytest.raises(DimensionError):
        spca_generate(10, 3, 4, 0.1, 0)


def test_spca_grad_identity_data():
    inst = SpcaInstance(B=np.eye(4), lam=0.1, r=2)
    X = np.eye(4, 2)
    assert np.array_equal(spca_f_grad(inst, X), -2.0 * X)


def test_spca_grad_finite_differences(spca_toy):
    rng = np.random.default_rng(0)
    X = Stiefel(50, 5).random_point(rng)
    D = rng.standard_normal(X.shape)
    eps = 1e-6
    fd = (spca_f_value(spca_toy, X + eps * D) - spca_f_value(spca_toy, X - eps * D)) / (2 * eps)
    an = float(np.sum(spca_f_grad(spca_toy, X) * D))
    assert abs(fd - an) <= 1e-5 * abs(an)


@pytest.mark.parametrize("m,P", [(40, 1), (40, 8), (43, 5), (12, 12)])
def test_batch_gradients_unbiased(m, P):
    inst = spca_generate(m, 6, 2, 0.2, 3)
    prob = spca_problem(inst, batches=P)
    X = Stiefel(6, 2).random_point(np.random.default_rng(1))
    mean = sum(q * spca_f_grad_batch(inst, X, p, P) for p, q in enumerate(prob.batch_probs))
    full = spca_f_grad(inst, X)
    assert np.max(np.abs(mean - full)) <= 1e-12 * max(1.0, np.max(np.abs(full)))
    assert prob.batch_probs.sum() == pytest.approx(1.0, abs=1e-15)
    # the Riemannian batch gradients average to the Riemannian gradient too
    mu = 0.1
    rmean = sum(q * riemannian_grad_fk_batch(prob, X, mu, p) for p, q in enumerate(prob.batch_probs))
    assert np.allclose(rmean, riemannian_grad_fk(prob, X, mu), atol=1e-12)


def test_single_batch_is_full_gradient():
    inst = spca_generate(30, 5, 2, 0.2, 0)
    X = np.eye(5, 2)
    assert np.allclose(spca_f_grad_batch(inst, X, 0, 1), spca_f_grad(inst, X), atol=1e-14)
    with pytest.raises(ParameterError):
        spca_f_grad_batch(inst, X, 1, 1)


def test_partition_blocks():
    blocks = partition(10, 3)
    assert blocks[0][0] == 0 and blocks[-1][1] == 10
    sizes = [b - a for a, b in blocks]
    assert max(sizes) - min(sizes) <= 1
    assert all(blocks[i][1] == blocks[i + 1][0] for i in range(2))
    with pytest.raises(ParameterError):
        partition(3, 4)


def test_batch_variance_within_sigma2():
    inst = spca_generate(200, 20, 4, 0.3, 5)
    prob = spca_problem(inst, batches=10)
    rng = np.random.default_rng(2)
    full = spca_f_grad(inst, np.eye(20, 4))
    assert prob.sigma2 > 0
    for _ in range(20):
        X = Stiefel(20, 4).random_point(rng)
        full = spca_f_grad(inst, X)
        var = sum(q * np.sum((spca_f_grad_batch(inst, X, p, 10) - full) ** 2)
                  for p, q in enumerate(prob.batch_probs))
        assert var <= prob.sigma2


def test_cm_h_stencil():
    H = cm_build_h(3, L=4.0)
    assert np.allclose(H, 0.5 * np.array([[2, -1, 0], [-1, 2, -1], [0, -1, 2]]))
    H = cm_build_h(64)
    assert np.array_equal(H, H.T)
    assert np.linalg.eigvalsh(H)[0] > 0
    with pytest.raises(DimensionError):
        cm_build_h(2)


def test_smoothed_value_parts():
    inst = spca_generate(20, 4, 1, 0.5, 1)
    prob = spca_problem(inst)
    X = np.array([[0.5], [0.5], [-0.5], [0.5]])
    mu = 0.2
    Z = np.sign(X) * np.maximum(np.abs(X) - mu * 0.5, 0)
    hand = -float(np.sum(X * (inst.B.T @ inst.B @ X))) + 0.5 * np.abs(Z).sum() + np.sum((Z - X) ** 2) / (2 * mu)
    assert smoothed_value(prob, X, mu) == pytest.approx(hand, rel=1e-13)
    assert smoothed_value(prob, X, mu) <= prob.objective(X)
    prob0 = spca_problem(inst, h=Zero())
    assert smoothed_value(prob0, X, mu) == pytest.approx(spca_f_value(inst, X), rel=1e-14)


def test_gradient_zero_h_is_projected_euclidean(spca_toy):
    prob = spca_problem(spca_toy, h=Zero())
    X = Stiefel(50, 5).random_point(np.random.default_rng(3))
    assert np.allclose(riemannian_grad_fk(prob, X, 0.1), project_tangent(X, spca_f_grad(spca_toy, X)), atol=1e-13)


def test_gradient_identity_map_prox_term(spca_toy):
    prob = spca_problem(spca_toy)
    X = Stiefel(50, 5).random_point(np.random.default_rng(4))
    mu = 0.05
    Z = np.sign(X) * np.maximum(np.abs(X) - mu * spca_toy.lam, 0)
    expected = project_tangent(X, spca_f_grad(spca_toy, X) + (X - Z) / mu)
    assert np.allclose(riemannian_grad_fk(prob, X, mu), expected, atol=1e-12)


def _curve_check(prob, seed, mu):
    rng = np.random.default_rng(seed)
    M = prob.manifold
    X = M.random_point(rng)
    eta = M.random_tangent(X, rng)
    t = 1e-6
    fd = (prob.smoothed_value(retract(X, t * eta), mu) - prob.smoothed_value(retract(X, -t * eta), mu)) / (2 * t)
    an = float(np.sum(riemannian_grad_fk(prob, X, mu) * eta))
    return abs(fd - an) / max(abs(an), 1e-8)


@pytest.mark.parametrize("which", ["spca", "cm"])
def test_gradient_matches_curve_derivative(which, cm_small):
    prob = spca_problem(spca_generate(100, 20, 3, 0.4, 0)) if which == "spca" else cm_small
    errs = [_curve_check(prob, s, 0.1) for s in range(20)]
    assert max(errs) <= 1e-4


def test_smoothness_constant_formula(spca_toy_problem):
    class _Stub:
        lipschitz_grad = 2.0
        h = L1Norm(1.0, 4)

        class A:
            @staticmethod
            def op_norm():
                return 1.0

    assert smoothness_constant(_Stub, 0.5, G=123.0, alpha=1.0, beta=0.0) == pytest.approx(4.0)
    a = smoothness_constant(_Stub, 0.5, G=0.0, beta=0.0) - 2.0
    b = smoothness_constant(_Stub, 0.25, G=0.0, beta=0.0) - 2.0
    assert b == pytest.approx(2 * a)
    with pytest.raises(ParameterError):
        smoothness_constant(_Stub, -1.0, G=1.0)
    with pytest.raises(ParameterError):
        smoothness_constant(_Stub, 0.5, G=-1.0)


def test_spca_lipschitz_matches_eigensolver(spca_toy, spca_toy_problem):
    assert spca_toy_problem.lipschitz_grad == pytest.approx(2 * np.linalg.eigvalsh(spca_toy.gram)[-1], rel=1e-7)


def test_objective_lower_bounds(spca_toy_problem, cm_small):
    rng = np.random.default_rng(5)
    for prob in (spca_toy_problem, cm_small):
        lb = prob.lower_bound()
        for _ in range(50):
            X = prob.manifold.random_point(rng)
            assert prob.objective(X) >= lb
            assert prob.smoothed_value(X, 0.1) >= lb
    assert cm_small.lower_bound() == 0.0


def test_estimate_G(cm_small):
    g1 = estimate_G(cm_small, 0.1, samples=20, seed=0)
    assert g1 == estimate_G(cm_small, 0.1, samples=20, seed=0)
    assert g1 > 0


def test_instance_roundtrip(tmp_path):
    inst = spca_generate(30, 6, 2, 0.4, 9)
    sidecar = save_instance(inst, tmp_path, "a")
    back = load_instance(sidecar)
    assert back.B.tobytes() == inst.B.tobytes()
    assert (back.lam, back.r, back.seed) == (0.4, 2, 9)
    assert instance_hash(back) == instance_hash(inst)
    cm = cm_generate(8, 2, 0.1)
    assert np.array_equal(load_instance(save_instance(cm, tmp_path, "c")).H, cm.H)


def test_corrupted_dump_detected(tmp_path):
    inst = spca_generate(30, 6, 2, 0.4, 9)
    sidecar = save_instance(inst, tmp_path, "a")
    raw = bytearray((tmp_path / "a.bin").read_bytes())
    raw[17] ^= 1
    (tmp_path / "a.bin").write_bytes(bytes(raw))
    with pytest.raises(IntegrityError):
        load_instance(sidecar)


@pytest.mark.parametrize("n,L", [(3, 4.0), (16, 10.0), (200, 50.0)])
def test_cm_lipschitz_matches_eigensolver(n, L):
    prob = cm_problem(cm_generate(n, 2, 0.0, L=L))
    assert prob.lipschitz_grad == pytest.approx(2 * np.linalg.eigvalsh(prob.instance.H)[-1], rel=1e-12)
