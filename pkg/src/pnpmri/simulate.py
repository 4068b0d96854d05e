"""Synthetic phantoms, coil profiles, sampling masks and noisy acquisitions."""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation, binary_fill_holes

from .core import (
    SUPPORT_THRESHOLD,
    KSpaceData,
    SamplingMask,
    SensitivityMaps,
    centered_block,
)
from .exceptions import InsufficientAcsError
from .operators import EncodingOperator, idft2_centered
from .validation import check_image, check_positive, check_positive_int

# Modified (Toft) Shepp-Logan head: intensity, semi-axis a, semi-axis b,
# centre x, centre y, rotation in degrees.  Intensities stay in [0, 1].
SHEPP_LOGAN_ELLIPSES = np.array(
    [
        [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
        [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
        [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
        [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
        [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
        [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
        [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
        [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
        [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
        [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
    ]
)

PHANTOM_KINDS = ("shepp-logan", "random-ellipses")


@dataclass(frozen=True)
class PhantomSpec:
    """Phantom recipe.

    ``jitter`` > 0 turns ``shepp-logan`` into a seeded family: every
    ellipse is perturbed in position, size, angle and (for the inner
    structures) intensity, and the whole head is randomly scaled/rotated.
    """

    kind: str = "shepp-logan"
    rows: int = 128
    cols: int = 128
    num_ellipses: int = 10
    rng_seed: int = 0
    jitter: float = 0.0

    def __post_init__(self):
        if self.kind not in PHANTOM_KINDS:
            raise ValueError(f"unknown phantom kind {self.kind!r}; expected one of {PHANTOM_KINDS}")
        check_positive_int(self.rows, "rows", minimum=16)
        check_positive_int(self.cols, "cols", minimum=16)
        check_positive_int(self.num_ellipses, "num_ellipses", minimum=0)
        check_positive(self.jitter, "jitter", strict=False)


@dataclass(frozen=True)
class NoiseModel:
    """Circular complex Gaussian noise, ``E|n|^2 = sigma^2`` per sample."""

    sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        check_positive(self.sigma, "sigma", strict=False)


def _grid(rows, cols):
    # y points up, x to the right, both spanning roughly [-1, 1].
    y = ((rows - 1) / 2 - np.arange(rows)) / (rows / 2)
    x = (np.arange(cols) - (cols - 1) / 2) / (cols / 2)
    return np.meshgrid(x, y)


def rasterize_ellipses(ellipses, rows, cols):
    """Sum of filled ellipses given as rows of (A, a, b, x0, y0, phi_deg)."""
    xx, yy = _grid(rows, cols)
    img = np.zeros((rows, cols))
    for amp, a, b, x0, y0, phi in np.asarray(ellipses, dtype=float).reshape(-1, 6):
        t = np.deg2rad(phi)
        c, s = np.cos(t), np.sin(t)
        xr = (xx - x0) * c + (yy - y0) * s
        yr = -(xx - x0) * s + (yy - y0) * c
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += amp
    return img


def _jittered_shepp_logan(rng, jitter):
    e = SHEPP_LOGAN_ELLIPSES.copy()
    n = len(e)
    # skull and brain shells share one aspect change so they stay nested
    e[:2, 1:3] *= 1 + jitter * rng.uniform(-0.1, 0.1, size=2)
    e[2:, 1:3] *= 1 + jitter * rng.uniform(-0.3, 0.3, size=(n - 2, 2))
    e[2:, 3:5] += jitter * rng.uniform(-0.05, 0.05, size=(n - 2, 2))
    e[2:, 5] += jitter * rng.uniform(-15, 15, size=n - 2)
    e[2:, 0] *= 1 + jitter * rng.uniform(-0.5, 0.5, size=n - 2)
    scale = 1 + jitter * rng.uniform(-0.15, 0.05)
    theta = np.deg2rad(jitter * rng.uniform(-20, 20))
    c, s = np.cos(theta), np.sin(theta)
    x0, y0 = e[:, 3].copy(), e[:, 4].copy()
    e[:, 3] = scale * (c * x0 - s * y0)
    e[:, 4] = scale * (s * x0 + c * y0)
    e[:, 1:3] *= scale
    e[:, 5] += np.rad2deg(theta)
    return e


def make_phantom(spec):
    """Real-valued phantom with intensities in [0, 1], returned as complex128."""
    rng = np.random.default_rng(spec.rng_seed)
    if spec.kind == "shepp-logan":
        if spec.jitter > 0:
            ellipses = _jittered_shepp_logan(rng, spec.jitter)
        else:
            ellipses = SHEPP_LOGAN_ELLIPSES
        img = rasterize_ellipses(ellipses, spec.rows, spec.cols)
    else:
        k = spec.num_ellipses
        ellipses = np.column_stack(
            [
                rng.uniform(0.1, 0.5, k),
                rng.uniform(0.05, 0.5, k),
                rng.uniform(0.05, 0.5, k),
                rng.uniform(-0.5, 0.5, k),
                rng.uniform(-0.5, 0.5, k),
                rng.uniform(0, 180, k),
            ]
        )
        img = rasterize_ellipses(ellipses, spec.rows, spec.cols)
        peak = img.max(initial=0.0)
        if peak > 1:
            img /= peak
    return np.clip(img, 0.0, 1.0).astype(np.complex128)


def make_sensitivity_maps(num_coils, rows, cols, rng_seed=0, width=0.6, support=None):
    """Smooth synthetic coil profiles, normalized to unit root-sum-of-squares.

    Coil ``l`` has a Gaussian magnitude bump centred on the unit circle at
    angle ``2 pi l / L`` and a random linear phase ramp.  An optional boolean
    ``support`` crops the profiles to an object region, as calibrated maps
    usually are.
    """
    check_positive_int(num_coils, "num_coils")
    rng = np.random.default_rng(rng_seed)
    xx, yy = _grid(rows, cols)
    raw = np.empty((num_coils, rows, cols), dtype=np.complex128)
    for coil in range(num_coils):
        angle = 2 * np.pi * coil / num_coils
        cx, cy = np.cos(angle), np.sin(angle)
        mag = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * width**2))
        gx, gy = rng.uniform(-np.pi / 4, np.pi / 4, size=2)
        offset = rng.uniform(-np.pi, np.pi)
        raw[coil] = mag * np.exp(1j * (gx * xx + gy * yy + offset))
    if support is not None:
        raw[:, ~np.asarray(support, dtype=bool)] = 0
    return SensitivityMaps.from_raw(raw)


def object_support(x, margin=3):
    """Filled non-zero region of ``|x|`` grown by ``margin`` pixels."""
    inside = binary_fill_holes(np.abs(x) > 0)
    if margin > 0 and inside.any():
        inside = binary_dilation(inside, iterations=margin)
    return inside


def _lattice(n, factor):
    return (np.arange(n) - n // 2) % factor == 0


def make_mask(rows, cols, factors, acs=24):
    """Uniform Cartesian undersampling with a fully sampled centre.

    Parameters
    ----------
    rows, cols : int
        Grid size.
    factors : int or (int, int)
        An integer ``R`` keeps every R-th row (phase-encode line); a pair
        ``(R, R')`` keeps the lattice of every R-th row and R'-th column.
    acs : int
        Width of the central calibration block (rows for 1-D patterns,
        a square block for 2-D patterns).
    """
    if np.ndim(factors) == 0:
        fr, fc = int(factors), 1
        two_d = False
    else:
        fr, fc = (int(f) for f in factors)
        two_d = fc > 1
    if fr < 1 or fc < 1:
        raise ValueError(f"acceleration factors must be >= 1, got {(fr, fc)}")
    if fr > rows or fc > cols:
        raise ValueError(f"acceleration {(fr, fc)} exceeds grid {(rows, cols)}")
    if acs < 0 or acs > rows or (two_d and acs > cols):
        raise ValueError(f"ACS width {acs} does not fit the {rows}x{cols} grid")
    if fr == 1 and fc == 1:
        return SamplingMask.full(rows, cols)
    if two_d:
        kept = _lattice(rows, fr)[:, None] & _lattice(cols, fc)[None, :]
        acs_rows, acs_cols, kind = acs, acs, "uniform-2d"
    else:
        kept = np.repeat(_lattice(rows, fr)[:, None], cols, axis=1)
        acs_rows, acs_cols, kind = acs, cols, "uniform-1d"
    kept[centered_block(rows, acs_rows), centered_block(cols, acs_cols)] = True
    return SamplingMask(kept, acs_rows, acs_cols, kind, (fr, fc))


def simulate_acquisition(x, maps, mask, noise=NoiseModel()):
    """``d = P F S x + P n`` with seeded complex Gaussian noise."""
    x = check_image(x)
    op = EncodingOperator(maps, mask)
    d = op.forward_array(x)
    if noise.sigma > 0:
        rng = np.random.default_rng(noise.rng_seed)
        n = rng.standard_normal((2, *d.shape))
        d += (noise.sigma / np.sqrt(2)) * (n[0] + 1j * n[1])
        d[:, ~mask.kept] = 0
    return KSpaceData(d, mask)


def _hann(n):
    return np.hanning(n + 2)[1:-1]


def estimate_maps_lowres(d):
    """Sensitivities from the Hann-windowed ACS block.

    Each coil's calibration block is windowed, zero-padded to the full grid
    and inverse transformed; the low-resolution coil images are divided by
    their root-sum-of-squares.
    """
    acs = d.acs_block()
    if acs.shape[1] == 0 or acs.shape[2] == 0:
        raise InsufficientAcsError("k-space carries no calibration block")
    window = _hann(acs.shape[1])[:, None] * _hann(acs.shape[2])[None, :]
    padded = np.zeros_like(d.values)
    rs, cs = d.mask.acs_slices
    padded[:, rs, cs] = acs * window
    low = idft2_centered(padded)
    rss = np.sqrt(np.sum(np.abs(low) ** 2, axis=0))
    support = rss >= SUPPORT_THRESHOLD
    if not support.any():
        raise InsufficientAcsError("calibration block carries no signal")
    values = np.zeros_like(low)
    values[:, support] = low[:, support] / rss[support]
    return SensitivityMaps(values, support)
