"""Multi-coil Cartesian encoding operator and the centred unitary DFT."""

from dataclasses import dataclass

import numpy as np

from .core import KSpaceData, SamplingMask, SensitivityMaps
from .exceptions import DimensionMismatchError
from .validation import check_image

_AXES = (-2, -1)


def dft2_centered(x):
    """Unitary 2-D DFT with the DC term at index ``n // 2`` on both axes.

    Works on any array whose last two axes are the image grid.
    """
    x = np.asarray(x, dtype=np.complex128)
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(x, axes=_AXES), norm="ortho"), axes=_AXES)


def idft2_centered(k):
    """Exact inverse of :func:`dft2_centered`."""
    k = np.asarray(k, dtype=np.complex128)
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(k, axes=_AXES), norm="ortho"), axes=_AXES)


@dataclass(frozen=True)
class EncodingOperator:
    """``E = P F S``: coil weighting, centred DFT, then masking.

    Examples
    --------
    >>> op = EncodingOperator(SensitivityMaps.uniform(4, 4), SamplingMask.full(4, 4))
    >>> np.allclose(op.adjoint(op.forward(np.eye(4))), np.eye(4))
    True
    """

    maps: SensitivityMaps
    mask: SamplingMask

    def __post_init__(self):
        if self.maps.shape != self.mask.shape:
            raise DimensionMismatchError(
                f"maps grid {self.maps.shape} does not match mask {self.mask.shape}"
            )

    @property
    def shape(self):
        return self.mask.shape

    @property
    def num_coils(self):
        return self.maps.num_coils

    def forward_array(self, x):
        """Apply ``E`` and return the raw ``(coils, rows, cols)`` array."""
        k = dft2_centered(self.maps.values * x)
        k[:, ~self.mask.kept] = 0
        return k

    def adjoint_array(self, d):
        """Apply ``E^H`` to a raw ``(coils, rows, cols)`` array."""
        d = np.where(self.mask.kept, d, 0)
        return np.sum(np.conj(self.maps.values) * idft2_centered(d), axis=0)

    def forward(self, x):
        x = check_image(x)
        if x.shape != self.shape:
            raise DimensionMismatchError(f"image shape {x.shape} does not match operator {self.shape}")
        return KSpaceData(self.forward_array(x), self.mask)

    def adjoint(self, d):
        values = d.values if isinstance(d, KSpaceData) else np.asarray(d, dtype=np.complex128)
        if values.shape != (self.num_coils, *self.shape):
            raise DimensionMismatchError(
                f"k-space shape {values.shape} does not match operator "
                f"{(self.num_coils, *self.shape)}"
            )
        return self.adjoint_array(values)

    def normal(self, x):
        """``E^H E x``."""
        return self.adjoint_array(self.forward_array(x))


def forward(op, x):
    return op.forward(x)


def adjoint(op, d):
    return op.adjoint(d)


def zero_filled_recon(op, d):
    """``E^H d``: the aliased baseline and the ADMM initializer."""
    return op.adjoint(d)
