"""Parallel MRI reconstruction with a learned plug-and-play prior.

Multi-coil Cartesian forward model, a conjugate-gradient proximal step,
ADMM plug-and-play iterations around a small numpy U-Net denoiser, a
GRAPPA baseline, synthetic phantoms and PSNR/SSIM evaluation.
"""

from .core import KSpaceData, SamplingMask, SensitivityMaps, channels_to_image, image_to_channels
from .denoiser import CnnDenoiser, GaussianDenoiser, IdentityDenoiser, denoise_complex
from .exceptions import (
    DimensionMismatchError,
    EmptyDatasetError,
    GeometryError,
    InsufficientAcsError,
)
from .grappa import GrappaKernelGeometry, GrappaReconstructor, grappa_reconstruct
from .metrics import MetricReport, evaluate, psnr, ssim
from .operators import EncodingOperator, dft2_centered, idft2_centered, zero_filled_recon
from .pnp_admm import PnPReconstructor, PnpConfig, pnp_reconstruct, pnp_step
from .prox import CgConfig, ProxResult, cg_solve, prox
from .simulate import (
    NoiseModel,
    PhantomSpec,
    estimate_maps_lowres,
    make_mask,
    make_phantom,
    make_sensitivity_maps,
    simulate_acquisition,
)

__version__ = "0.1.0"

__all__ = [
    "CgConfig",
    "CnnDenoiser",
    "DimensionMismatchError",
    "EmptyDatasetError",
    "EncodingOperator",
    "GaussianDenoiser",
    "GeometryError",
    "GrappaKernelGeometry",
    "GrappaReconstructor",
    "IdentityDenoiser",
    "InsufficientAcsError",
    "KSpaceData",
    "MetricReport",
    "NoiseModel",
    "PhantomSpec",
    "PnPReconstructor",
    "PnpConfig",
    "ProxResult",
    "SamplingMask",
    "SensitivityMaps",
    "cg_solve",
    "channels_to_image",
    "denoise_complex",
    "dft2_centered",
    "estimate_maps_lowres",
    "evaluate",
    "grappa_reconstruct",
    "idft2_centered",
    "image_to_channels",
    "make_mask",
    "make_phantom",
    "make_sensitivity_maps",
    "pnp_reconstruct",
    "pnp_step",
    "prox",
    "psnr",
    "simulate_acquisition",
    "ssim",
    "zero_filled_recon",
]
