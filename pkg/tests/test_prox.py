import numpy as np
import pytest

from pnpmri.core import SamplingMask, SensitivityMaps
from pnpmri.exceptions import DimensionMismatchError
from pnpmri.operators import EncodingOperator
from pnpmri.prox import CgConfig, cg_solve, normal_apply, prox, prox_objective

from .conftest import dense_matrix, random_image, random_maps, random_operator, row_mask


def _unit_op(n=8):
    return EncodingOperator(SensitivityMaps.uniform(n, n), SamplingMask.full(n, n))


def _instance(rng, n=8, coils=2, factor=2):
    op = EncodingOperator(random_maps(rng, coils, n, n), row_mask(n, n, factor))
    d = op.forward_array(random_image(rng, n, n))
    return op, d, random_image(rng, n, n)


def test_tiny_lambda_returns_input(rng):
    op, d, xt = _instance(rng)
    res = prox(op, d, xt, 1e-12)
    np.testing.assert_allclose(res.z, xt, atol=1e-8)


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
def test_closed_form_unit_coil(rng, lam):
    op = _unit_op()
    d = op.forward_array(random_image(rng, 8, 8))
    xt = random_image(rng, 8, 8)
    z = prox(op, d, xt, lam).z
    expected = (xt + lam * op.adjoint(d)) / (1 + lam)
    np.testing.assert_allclose(z, expected, atol=1e-8)


def test_matches_dense_solve(rng):
    op, d, xt = _instance(rng)
    lam = 5.0
    A = dense_matrix(lambda z: normal_apply(op, lam, z), (8, 8))
    rhs = xt + lam * op.adjoint(d)
    direct = np.linalg.solve(A, rhs.ravel()).reshape(8, 8)
    res = prox(op, d, xt, lam)
    assert res.converged
    assert np.linalg.norm(res.z - direct) <= 1e-7 * np.linalg.norm(direct)


def test_optimality_residual_within_tolerance(rng):
    op, d, xt = _instance(rng, n=16, coils=4, factor=4)
    lam = 2.0
    cfg = CgConfig(tol=1e-9)
    res = prox(op, d, xt, lam, cfg)
    rhs = xt + lam * op.adjoint(d)
    rel = np.linalg.norm(normal_apply(op, lam, res.z) - rhs) / np.linalg.norm(rhs)
    assert res.converged
    assert rel <= 1e-9
    assert res.final_relative_residual <= 1e-9


def test_objective_not_above_start(rng):
    for _ in range(10):
        op, d, xt = _instance(rng)
        lam = float(rng.uniform(0.1, 10))
        z = prox(op, d, xt, lam).z
        assert prox_objective(op, d, xt, lam, z) <= prox_objective(op, d, xt, lam, xt)


class TestNormalApply:
    def test_zero(self, rng):
        op = random_operator(rng, 2, 8, 8)
        assert not normal_apply(op, 3.0, np.zeros((8, 8), complex)).any()

    def test_unit_coil(self, rng):
        z = random_image(rng, 8, 8)
        np.testing.assert_allclose(normal_apply(_unit_op(), 2.5, z), 3.5 * z, atol=1e-12)

    def test_hermitian(self, rng):
        op = random_operator(rng, 3, 8, 8)
        z1, z2 = random_image(rng, 8, 8), random_image(rng, 8, 8)
        a = np.vdot(normal_apply(op, 1.5, z1), z2)
        b = np.vdot(z1, normal_apply(op, 1.5, z2))
        assert abs(a - b) <= 1e-10 * abs(a)


class TestCg:
    def test_identity_one_step(self, rng):
        rhs = random_image(rng, 8, 8)
        res = cg_solve(lambda v: v, rhs)
        assert res.iterations_used == 1
        np.testing.assert_allclose(res.z, rhs, atol=1e-14)

    def test_scaled_identity(self, rng):
        rhs = random_image(rng, 8, 8)
        res = cg_solve(lambda v: 2 * v, rhs)
        assert res.iterations_used == 1
        np.testing.assert_allclose(res.z, rhs / 2, atol=1e-14)

    def test_dense_oracle(self, rng):
        op = random_operator(rng, 2, 8, 8)
        A = dense_matrix(lambda z: normal_apply(op, 1.0, z), (8, 8))
        rhs = random_image(rng, 8, 8)
        res = cg_solve(lambda z: normal_apply(op, 1.0, z), rhs)
        direct = np.linalg.solve(A, rhs.ravel()).reshape(8, 8)
        assert np.linalg.norm(res.z - direct) <= 1e-7 * np.linalg.norm(direct)

    def test_zero_rhs(self):
        res = cg_solve(lambda v: v, np.zeros((4, 4)))
        assert res.converged and res.iterations_used == 0
        assert not res.z.any()

    def test_residuals_nonincreasing(self, rng):
        for _ in range(20):
            op, d, xt = _instance(rng, n=16, coils=4, factor=4)
            res = prox(op, d, xt, float(rng.uniform(0.1, 20)), CgConfig(tol=1e-12))
            h = np.asarray(res.residual_history)
            assert np.all(np.diff(h) <= 0), h

    def test_nonconvergence_is_flagged(self, rng):
        op, d, xt = _instance(rng, n=16, coils=4, factor=4)
        res = prox(op, d, xt, 10.0, CgConfig(tol=1e-14, max_iters=1))
        assert not res.converged
        assert res.iterations_used == 1
        assert res.final_relative_residual > 1e-14

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            CgConfig(tol=0)
        with pytest.raises(ValueError):
            CgConfig(max_iters=0)


def test_prox_rejects_bad_input(rng):
    op, d, xt = _instance(rng)
    with pytest.raises(ValueError):
        prox(op, d, xt, 0.0)
    with pytest.raises(DimensionMismatchError):
        prox(op, d, np.zeros((8, 9)), 1.0)
