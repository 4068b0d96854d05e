"""GRAPPA k-space interpolation calibrated on the central ACS block.

Kernels act along one undersampled axis at a time.  For a missing line at
offset ``delta`` (``1 <= delta < R``) past an acquired lattice line ``y0``,
the sources are the lattice lines ``y0 + R*j`` for ``num_source_lines``
consecutive ``j`` around the target and ``kernel_readout_width`` readout
neighbours, across all coils.  Separable 2-D patterns run one pass along
rows (on the acquired column sub-lattice) followed by one pass along
columns.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import KSpaceData, SamplingMask
from .exceptions import GeometryError, InsufficientAcsError
from .operators import idft2_centered
from .validation import check_positive, check_positive_int

CALIBRATION_SHIFTS = ("all", "lattice")


@dataclass(frozen=True)
class GrappaKernelGeometry:
    """Kernel shape.

    ``acceleration`` is checked against the mask when given and inferred
    from it otherwise.  ``calibration_shifts="lattice"`` fits only on ACS
    windows aligned with the acquisition lattice; ``"all"`` slides over
    every ACS position.
    """

    num_source_lines: int = 4
    kernel_readout_width: int = 5
    acceleration: int = None
    calibration_shifts: str = "all"

    def __post_init__(self):
        check_positive_int(self.num_source_lines, "num_source_lines", minimum=2)
        check_positive_int(self.kernel_readout_width, "kernel_readout_width")
        if self.kernel_readout_width % 2 == 0:
            raise ValueError("kernel_readout_width must be odd")
        if self.acceleration is not None:
            check_positive_int(self.acceleration, "acceleration")
        if self.calibration_shifts not in CALIBRATION_SHIFTS:
            raise ValueError(f"calibration_shifts must be one of {CALIBRATION_SHIFTS}")

    def source_offsets(self):
        """Lattice-line offsets ``j`` (in units of R) relative to ``y0``."""
        lo = -((self.num_source_lines - 1) // 2)
        return np.arange(lo, lo + self.num_source_lines)

    @property
    def half_width(self):
        return self.kernel_readout_width // 2

    def num_unknowns(self, num_coils):
        return num_coils * self.num_source_lines * self.kernel_readout_width


@dataclass(frozen=True)
class GrappaWeights:
    """Calibrated kernels for each pass.

    ``kernels[axis]`` has shape ``(R - 1, L_target, L_source, num_source_lines,
    kernel_readout_width)`` and ``factors[axis]`` the matching R.
    """

    geometry: GrappaKernelGeometry
    kernels: dict = field(default_factory=dict)
    factors: dict = field(default_factory=dict)


def _source_windows(data, y0s, factor, geom, xs):
    """Stack sources as ``(len(y0s), len(xs), L * Ns * W)`` rows of a design matrix."""
    num_rows = data.shape[1]
    pieces = []
    for j in geom.source_offsets():
        rows = (y0s + factor * j) % num_rows
        sub = data[:, rows, :]
        for dx in range(-geom.half_width, geom.half_width + 1):
            pieces.append(np.take(sub, xs + dx, axis=2, mode="wrap"))
    # pieces ordered (j, dx); reorder to (coil, j, dx)
    stacked = np.stack(pieces, axis=1)  # (L, Ns*W, Y, X)
    L = data.shape[0]
    stacked = stacked.reshape(L * geom.num_source_lines * geom.kernel_readout_width, len(y0s), len(xs))
    return stacked.transpose(1, 2, 0)


def calibrate_axis0(acs, factor, geom, tikhonov, lattice=None):
    """Fit kernels along axis 0 of a fully sampled ``(L, rows, cols)`` block.

    Parameters
    ----------
    acs : ndarray
        Calibration data.
    factor : int
        Lattice spacing R along axis 0.
    geom : GrappaKernelGeometry
    tikhonov : float
        Ridge weight, scaled by ``trace(A^H A) / unknowns``.
    lattice : ndarray of bool, optional
        Rows of ``acs`` lying on the acquisition lattice; with
        ``calibration_shifts="lattice"`` only windows starting there are used.

    Returns
    -------
    ndarray, shape (R - 1, L, L, Ns, W)
    """
    L, ay, ax = acs.shape
    offsets = geom.source_offsets()
    hw = geom.half_width
    y0s = np.arange(-factor * offsets[0], ay - factor * offsets[-1])
    if geom.calibration_shifts == "lattice" and lattice is not None:
        y0s = y0s[np.asarray(lattice, dtype=bool)[y0s]]
    xs = np.arange(hw, ax - hw)
    unknowns = geom.num_unknowns(L)
    if len(y0s) * len(xs) < unknowns:
        raise InsufficientAcsError(
            f"ACS block {ay}x{ax} yields {max(len(y0s), 0) * max(len(xs), 0)} calibration "
            f"equations for {unknowns} unknowns; enlarge the ACS region"
        )
    A = _source_windows(acs, y0s, factor, geom, xs).reshape(-1, unknowns)
    kernels = np.empty((factor - 1, L, unknowns), dtype=np.complex128)
    gram = A.conj().T @ A if tikhonov > 0 else None
    for delta in range(1, factor):
        b = acs[:, y0s + delta][:, :, xs].reshape(L, -1).T
        if tikhonov > 0:
            ridge = tikhonov * np.trace(gram).real / unknowns
            w = np.linalg.solve(gram + ridge * np.eye(unknowns), A.conj().T @ b)
        else:
            w = np.linalg.lstsq(A, b, rcond=None)[0]
        kernels[delta - 1] = w.T
    return kernels.reshape(factor - 1, L, L, geom.num_source_lines, geom.kernel_readout_width)


def apply_axis0(data, lattice, factor, kernels, geom):
    """Fill every non-lattice row of ``(L, rows, cols)`` k-space.

    Source lines wrap circularly in both directions.
    """
    L, ny, nx = data.shape
    if ny % factor:
        raise GeometryError(f"{ny} phase-encode lines are not a multiple of R={factor}")
    center = ny // 2
    out = np.array(data, dtype=np.complex128)
    xs = np.arange(nx)
    for delta in range(1, factor):
        targets = np.flatnonzero(((np.arange(ny) - center) % factor == delta) & ~lattice)
        if targets.size == 0:
            continue
        src = _source_windows(data, targets - delta, factor, geom, xs)
        w = kernels[delta - 1].reshape(L, -1)
        out[:, targets, :] = np.einsum("yxq,tq->tyx", src, w)
    return out


def coil_combine_rss(images):
    """Pixel-wise root-sum-of-squares over the coil axis."""
    images = np.asarray(images)
    if images.ndim == 2:
        images = images[None]
    return np.sqrt(np.sum(np.abs(images) ** 2, axis=0))


def _check_factor(mask, geom, axis):
    factor = mask.factors[axis]
    if axis == 0 and geom.acceleration is not None and geom.acceleration != factor:
        raise GeometryError(
            f"kernel geometry expects R={geom.acceleration} but the mask has R={factor}"
        )
    return factor


def grappa_calibrate(d, geom=GrappaKernelGeometry(), tikhonov=1e-4):
    """Calibrate kernels for every undersampled axis of ``d``'s mask."""
    check_positive(tikhonov, "tikhonov", strict=False)
    mask = d.mask
    if mask.pattern_kind not in ("uniform-1d", "uniform-2d", "full"):
        raise GeometryError(f"GRAPPA needs a uniform mask, got {mask.pattern_kind}")
    weights = GrappaWeights(geom)
    if mask.pattern_kind == "full":
        return weights
    acs = d.acs_block()
    rs, cs = mask.acs_slices
    acs_row_idx = np.arange(mask.rows)[rs]
    acs_col_idx = np.arange(mask.cols)[cs]
    fr = _check_factor(mask, geom, 0)
    fc = mask.factors[1]
    if fr > 1:
        col_sel = mask.lattice_cols()[acs_col_idx]
        weights.kernels[0] = calibrate_axis0(
            acs[:, :, col_sel], fr, geom, tikhonov, mask.lattice_rows()[acs_row_idx]
        )
        weights.factors[0] = fr
    if fc > 1:
        weights.kernels[1] = calibrate_axis0(
            acs.transpose(0, 2, 1), fc, geom, tikhonov, mask.lattice_cols()[acs_col_idx]
        )
        weights.factors[1] = fc
    return weights


def grappa_apply(d, weights):
    """Interpolate missing samples; acquired samples are copied back unchanged.

    Returns k-space on a full mask.
    """
    mask = d.mask
    geom = weights.geometry
    values = np.array(d.values)
    if 0 in weights.kernels:
        if mask.factors[0] != weights.factors[0]:
            raise GeometryError("mask row factor does not match the calibrated kernels")
        cols = mask.lattice_cols()
        values[:, :, cols] = apply_axis0(
            values[:, :, cols], mask.lattice_rows(), weights.factors[0], weights.kernels[0], geom
        )
    if 1 in weights.kernels:
        if mask.factors[1] != weights.factors[1]:
            raise GeometryError("mask column factor does not match the calibrated kernels")
        values = apply_axis0(
            values.transpose(0, 2, 1), mask.lattice_cols(), weights.factors[1], weights.kernels[1], geom
        ).transpose(0, 2, 1)
    elif mask.pattern_kind != "full" and not weights.kernels:
        raise GeometryError("no kernels calibrated for an undersampled mask")
    values[:, mask.kept] = d.values[:, mask.kept]
    return KSpaceData(values, SamplingMask.full(*mask.shape))


def grappa_reconstruct(d, geom=GrappaKernelGeometry(), tikhonov=1e-4):
    """Calibrate, fill k-space, inverse transform each coil and combine by RSS."""
    if d.mask.pattern_kind == "full":
        return coil_combine_rss(idft2_centered(d.values))
    filled = grappa_apply(d, grappa_calibrate(d, geom, tikhonov))
    return coil_combine_rss(idft2_centered(filled.values))


class GrappaReconstructor(TransformerMixin, BaseEstimator):
    """GRAPPA as an estimator.

    ``fit`` calibrates on the ACS block of a :class:`KSpaceData`,
    ``transform`` fills missing k-space and ``predict`` returns the
    root-sum-of-squares magnitude image.
    """

    def __init__(self, num_source_lines=4, kernel_readout_width=5, tikhonov=1e-4,
                 calibration_shifts="all"):
        self.num_source_lines = num_source_lines
        self.kernel_readout_width = kernel_readout_width
        self.tikhonov = tikhonov
        self.calibration_shifts = calibration_shifts

    @property
    def geometry(self):
        return GrappaKernelGeometry(
            num_source_lines=self.num_source_lines,
            kernel_readout_width=self.kernel_readout_width,
            calibration_shifts=self.calibration_shifts,
        )

    def fit(self, X, y=None):
        self.weights_ = grappa_calibrate(X, self.geometry, self.tikhonov)
        self.mask_factors_ = X.mask.factors
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        if X.mask.pattern_kind == "full":
            return X
        return grappa_apply(X, self.weights_)

    def predict(self, X):
        return coil_combine_rss(idft2_centered(self.transform(X).values))


__all__ = [
    "GrappaKernelGeometry",
    "GrappaReconstructor",
    "GrappaWeights",
    "coil_combine_rss",
    "grappa_apply",
    "grappa_calibrate",
    "grappa_reconstruct",
]
