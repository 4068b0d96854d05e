"""PSNR and SSIM on magnitude images."""

from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import correlate

from .validation import check_same_shape

PSNR_CAP_DB = 300.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
K1, K2 = 0.01, 0.03
REPORT_SCHEMA_VERSION = 1


def _magnitudes(reference, test):
    reference = np.abs(np.asarray(reference))
    test = np.abs(np.asarray(test))
    check_same_shape(reference, test)
    return reference.astype(np.float64), test.astype(np.float64)


def _dynamic_range(reference, test, mode):
    if mode == "reference":
        return float(reference.max())
    if mode == "pair":
        return float(max(reference.max(), test.max()))
    raise ValueError(f"unknown dynamic range mode {mode!r}")


def psnr(reference, test, support=None, data_range="reference"):
    """Peak signal-to-noise ratio in dB, peak = max of the reference.

    Identical inputs return :data:`PSNR_CAP_DB`.  ``support`` restricts the
    mean squared error to a boolean pixel mask.
    """
    reference, test = _magnitudes(reference, test)
    if support is not None:
        support = np.asarray(support, dtype=bool)
        check_same_shape(reference, support, ("image", "support"))
        reference, test = reference[support], test[support]
    mse = np.mean((reference - test) ** 2)
    if mse == 0:
        return PSNR_CAP_DB
    peak = _dynamic_range(reference, test, data_range)
    return float(min(10 * np.log10(peak**2 / mse), PSNR_CAP_DB))


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-0.5 * (r / sigma) ** 2)
    w = np.outer(g, g)
    return w / w.sum()


def ssim_map(reference, test, data_range="reference"):
    """Per-pixel SSIM with an 11x11 Gaussian window (reflect boundary)."""
    reference, test = _magnitudes(reference, test)
    peak = _dynamic_range(reference, test, data_range)
    if peak <= 0:
        peak = 1.0
    c1 = (K1 * peak) ** 2
    c2 = (K2 * peak) ** 2
    w = gaussian_window()

    def blur(img):
        return correlate(img, w, mode="reflect")

    mu_x, mu_y = blur(reference), blur(test)
    sxx = blur(reference * reference) - mu_x * mu_x
    syy = blur(test * test) - mu_y * mu_y
    sxy = blur(reference * test) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
    return num / den


def ssim(reference, test, support=None, data_range="reference"):
    """Mean SSIM, optionally over a boolean support mask.

    With a support both images are zeroed outside it first, so windows that
    straddle the boundary see identical off-support content.
    ``data_range="pair"`` takes the dynamic range from both images, which
    makes the index symmetric in its arguments.
    """
    if support is None:
        return float(np.mean(ssim_map(reference, test, data_range)))
    reference, test = _magnitudes(reference, test)
    support = np.asarray(support, dtype=bool)
    check_same_shape(reference, support, ("image", "support"))
    m = ssim_map(reference * support, test * support, data_range)
    return float(np.mean(m[support]))


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    identical: bool
    method: str = ""
    mask: str = ""
    lam: float = None
    iterations: int = None

    def to_dict(self):
        doc = {"schema_version": REPORT_SCHEMA_VERSION}
        doc.update(asdict(self))
        return doc


def evaluate(reference, test, support=None, **annotations):
    value = psnr(reference, test, support)
    identical = bool(np.array_equal(np.abs(reference), np.abs(test)))
    return MetricReport(
        psnr_db=value,
        ssim=ssim(reference, test, support),
        identical=identical,
        **annotations,
    )
