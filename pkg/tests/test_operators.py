import numpy as np
import pytest

from pnpmri.core import KSpaceData, SamplingMask, SensitivityMaps
from pnpmri.exceptions import DimensionMismatchError
from pnpmri.metrics import psnr
from pnpmri.operators import (
    EncodingOperator,
    adjoint,
    dft2_centered,
    forward,
    idft2_centered,
    zero_filled_recon,
)
from pnpmri.simulate import PhantomSpec, make_mask, make_phantom, make_sensitivity_maps

from .conftest import dense_matrix, random_image, random_maps, random_mask, random_operator


def _unit_op(n=8):
    return EncodingOperator(SensitivityMaps.uniform(n, n), SamplingMask.full(n, n))


class TestDft:
    def test_centered_impulse_is_flat(self):
        x = np.zeros((8, 8))
        x[4, 4] = 1
        np.testing.assert_allclose(np.abs(dft2_centered(x)), 1 / 8, atol=1e-15)

    def test_constant_maps_to_center(self):
        k = dft2_centered(np.ones((8, 8)))
        expected = np.zeros((8, 8))
        expected[4, 4] = 8
        np.testing.assert_allclose(k, expected, atol=1e-12)

    def test_center_sample_maps_to_constant(self):
        k = np.zeros((8, 8), dtype=complex)
        k[4, 4] = 8
        np.testing.assert_allclose(idft2_centered(k), np.ones((8, 8)), atol=1e-12)

    @pytest.mark.parametrize("shape", [(16, 16), (7, 9), (8, 5)])
    def test_parseval_and_inverse(self, rng, shape):
        x = random_image(rng, *shape)
        k = dft2_centered(x)
        assert abs(np.linalg.norm(k) - np.linalg.norm(x)) <= 1e-12 * np.linalg.norm(x)
        back = idft2_centered(k)
        assert np.linalg.norm(back - x) <= 1e-12 * np.linalg.norm(x)

    def test_zeros(self):
        assert not idft2_centered(np.zeros((8, 8))).any()


class TestEncoding:
    def test_unit_operator_reduces_to_dft(self, rng):
        op = _unit_op()
        x = random_image(rng, 8, 8)
        np.testing.assert_allclose(op.forward_array(x)[0], dft2_centered(x), atol=1e-14)
        d = random_image(rng, 8, 8)[None]
        np.testing.assert_allclose(op.adjoint(d), idft2_centered(d[0]), atol=1e-14)

    def test_empty_mask_annihilates(self, rng):
        mask = SamplingMask(np.zeros((8, 8), bool), 0, 0, "uniform-2d")
        op = EncodingOperator(random_maps(rng, 2, 8, 8), mask)
        assert not op.forward_array(random_image(rng, 8, 8)).any()

    def test_forward_returns_kspace_with_zero_holes(self, rng):
        op = random_operator(rng, 3, 8, 8)
        d = forward(op, random_image(rng, 8, 8))
        assert isinstance(d, KSpaceData)
        assert not d.values[:, ~op.mask.kept].any()

    def test_matches_dense_matrix(self, rng):
        op = random_operator(rng, 3, 8, 8)
        E = dense_matrix(op.forward_array, (8, 8))
        assert E.shape == (3 * 64, 64)
        x = random_image(rng, 8, 8)
        np.testing.assert_allclose(E @ x.ravel(), op.forward_array(x).ravel(), atol=1e-12)
        d = op.forward_array(random_image(rng, 8, 8))
        np.testing.assert_allclose(E.conj().T @ d.ravel(), op.adjoint(d).ravel(), atol=1e-12)

    def test_adjoint_identity(self, rng):
        op = random_operator(rng, 2, 8, 8)
        x = random_image(rng, 8, 8)
        d = np.stack([random_image(rng, 8, 8) for _ in range(2)])
        lhs = np.vdot(d, op.forward_array(x))
        rhs = np.vdot(op.adjoint(d), x)
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)

    def test_unitary_with_full_mask(self, rng):
        op = _unit_op(16)
        x = random_image(rng, 16, 16)
        np.testing.assert_allclose(op.normal(x), x, atol=1e-10)

    def test_mask_idempotent(self, rng):
        op = random_operator(rng, 2, 8, 8)
        k = op.forward_array(random_image(rng, 8, 8))
        again = np.where(op.mask.kept, k, 0)
        np.testing.assert_array_equal(again, k)

    def test_zero_data(self, rng):
        op = random_operator(rng, 2, 8, 8)
        assert not adjoint(op, np.zeros((2, 8, 8))).any()

    def test_dimension_errors(self, rng):
        with pytest.raises(DimensionMismatchError):
            EncodingOperator(random_maps(rng, 1, 8, 8), random_mask(rng, 8, 9))
        op = random_operator(rng, 2, 8, 8)
        with pytest.raises(DimensionMismatchError):
            op.forward(np.zeros((8, 9)))
        with pytest.raises(DimensionMismatchError):
            op.adjoint(np.zeros((3, 8, 8)))


def test_zero_filled_inverts_full_sampling(rng):
    op = _unit_op(16)
    x = random_image(rng, 16, 16)
    np.testing.assert_allclose(zero_filled_recon(op, op.forward(x)), x, atol=1e-10)


def test_undersampling_lowers_psnr():
    x = make_phantom(PhantomSpec(rows=128, cols=128))
    maps = make_sensitivity_maps(4, 128, 128)
    full = EncodingOperator(maps, make_mask(128, 128, 1))
    under = EncodingOperator(maps, make_mask(128, 128, 4, acs=24))
    ref = np.abs(x)
    p_full = psnr(ref, np.abs(zero_filled_recon(full, full.forward(x))))
    p_under = psnr(ref, np.abs(zero_filled_recon(under, under.forward(x))))
    assert p_under < p_full
    assert p_under < 40
