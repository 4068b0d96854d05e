"""Domain types shared by every module.

Images are plain complex128 arrays of shape ``(rows, cols)`` and the
two-channel network representation is a float64 array of shape
``(2, rows, cols)``.  Multi-coil arrays are coil-outermost:
``(coils, rows, cols)``, row-major.  Axis 0 is the phase-encode axis
undersampled by 1-D patterns; axis 1 is the readout axis.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError
from .validation import check_channels, check_image, readonly

SUPPORT_THRESHOLD = 1e-8
PATTERN_KINDS = ("uniform-1d", "uniform-2d", "full")


def image_to_channels(x):
    """Split a complex image into a ``(2, rows, cols)`` real/imaginary stack."""
    x = check_image(x)
    return np.stack([x.real, x.imag]).astype(np.float64)


def channels_to_image(t):
    """Inverse of :func:`image_to_channels`."""
    t = check_channels(t)
    out = np.empty(t.shape[1:], dtype=np.complex128)
    out.real = t[0]
    out.imag = t[1]
    return out


def centered_block(n, width):
    """Slice of length ``width`` centred on index ``n // 2``."""
    start = n // 2 - width // 2
    return slice(start, start + width)


@dataclass(frozen=True)
class SamplingMask:
    """Binary Cartesian sampling pattern with a fully sampled central block.

    ``factors`` holds the lattice spacing along (rows, cols); the lattice
    contains every index ``i`` with ``(i - n // 2) % R == 0`` so the DC line
    is always acquired.
    """

    kept: np.ndarray
    acs_rows: int
    acs_cols: int
    pattern_kind: str
    factors: tuple = (1, 1)

    def __post_init__(self):
        kept = np.asarray(self.kept, dtype=bool)
        if kept.ndim != 2 or kept.size == 0:
            raise ValueError(f"mask must be a non-empty 2-D array, got shape {kept.shape}")
        if self.pattern_kind not in PATTERN_KINDS:
            raise ValueError(f"unknown pattern kind {self.pattern_kind!r}")
        rows, cols = kept.shape
        if not (0 <= self.acs_rows <= rows and 0 <= self.acs_cols <= cols):
            raise ValueError("ACS block larger than the grid")
        if self.acs_rows and self.acs_cols and not kept[self.acs_slices].all():
            raise ValueError("ACS block locations must all be kept")
        object.__setattr__(self, "kept", readonly(kept.copy()))
        object.__setattr__(self, "factors", tuple(int(f) for f in self.factors))

    @property
    def shape(self):
        return self.kept.shape

    @property
    def rows(self):
        return self.kept.shape[0]

    @property
    def cols(self):
        return self.kept.shape[1]

    @property
    def acs_slices(self):
        return (centered_block(self.rows, self.acs_rows), centered_block(self.cols, self.acs_cols))

    def acceleration(self):
        """``rows * cols / kept``; infinite for an empty mask."""
        count = np.count_nonzero(self.kept)
        return self.kept.size / count if count else float("inf")

    def lattice_rows(self):
        return (np.arange(self.rows) - self.rows // 2) % self.factors[0] == 0

    def lattice_cols(self):
        return (np.arange(self.cols) - self.cols // 2) % self.factors[1] == 0

    def describe(self):
        """JSON-friendly summary used in file headers and reports."""
        return {
            "pattern": self.pattern_kind,
            "factors": list(self.factors),
            "acs_rows": self.acs_rows,
            "acs_cols": self.acs_cols,
            "acceleration": self.acceleration(),
        }

    @classmethod
    def full(cls, rows, cols):
        return cls(np.ones((rows, cols), dtype=bool), rows, cols, "full", (1, 1))


@dataclass(frozen=True)
class SensitivityMaps:
    """Per-coil complex profiles normalized so that sum_l |S_l|^2 == 1 on support."""

    values: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        support = np.asarray(self.support, dtype=bool)
        if values.ndim != 3:
            raise ValueError(f"maps must have shape (coils, rows, cols), got {values.shape}")
        if support.shape != values.shape[1:]:
            raise DimensionMismatchError(
                f"support shape {support.shape} does not match maps {values.shape[1:]}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("maps contain NaN or Inf")
        energy = np.sum(np.abs(values) ** 2, axis=0)
        if np.any(np.abs(energy[support] - 1.0) > 1e-6):
            raise ValueError("maps are not normalized on their support")
        if np.any(values[:, ~support] != 0):
            raise ValueError("maps must vanish off support")
        object.__setattr__(self, "values", readonly(values.copy()))
        object.__setattr__(self, "support", readonly(support.copy()))

    @property
    def num_coils(self):
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape[1:]

    @classmethod
    def from_raw(cls, raw):
        """Normalize raw profiles; pixels with total energy <= 1e-8 leave the support."""
        raw = np.asarray(raw, dtype=np.complex128)
        if raw.ndim == 2:
            raw = raw[None]
        energy = np.sum(np.abs(raw) ** 2, axis=0)
        support = energy > SUPPORT_THRESHOLD
        values = np.zeros_like(raw)
        values[:, support] = raw[:, support] / np.sqrt(energy[support])
        return cls(values, support)

    @classmethod
    def uniform(cls, rows, cols):
        """A single coil with unit sensitivity everywhere."""
        return cls(np.ones((1, rows, cols), dtype=np.complex128), np.ones((rows, cols), bool))


@dataclass(frozen=True)
class KSpaceData:
    """Multi-coil k-space samples together with the mask that produced them."""

    values: np.ndarray
    mask: SamplingMask

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim == 2:
            values = values[None]
        if values.ndim != 3:
            raise ValueError(f"k-space must have shape (coils, rows, cols), got {values.shape}")
        if values.shape[1:] != self.mask.shape:
            raise DimensionMismatchError(
                f"k-space grid {values.shape[1:]} does not match mask {self.mask.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("k-space contains NaN or Inf")
        if np.any(values[:, ~self.mask.kept] != 0):
            raise ValueError("unsampled k-space locations must be exactly zero")
        object.__setattr__(self, "values", readonly(values.copy()))

    @property
    def num_coils(self):
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape[1:]

    def acs_block(self):
        """The fully sampled central block, shape ``(coils, acs_rows, acs_cols)``."""
        rs, cs = self.mask.acs_slices
        return self.values[:, rs, cs]

    def scaled(self, alpha):
        return KSpaceData(alpha * self.values, self.mask)
