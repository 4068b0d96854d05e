from .adam import AdamConfig, AdamState, adam_step
from .checkpoint import load_weights, save_weights
from .cnn import (
    CnnArchitecture,
    CnnWeights,
    cnn_backward,
    cnn_forward,
    loss_and_gradients,
    mse_loss,
)
from .estimators import (
    CnnDenoiser,
    GaussianDenoiser,
    IdentityDenoiser,
    denoise_complex,
    gaussian_kernel,
)
from .training import TrainingLog, TrainingPair, train_denoiser

__all__ = [
    "AdamConfig",
    "AdamState",
    "CnnArchitecture",
    "CnnDenoiser",
    "CnnWeights",
    "GaussianDenoiser",
    "IdentityDenoiser",
    "TrainingLog",
    "TrainingPair",
    "adam_step",
    "cnn_backward",
    "cnn_forward",
    "denoise_complex",
    "gaussian_kernel",
    "load_weights",
    "loss_and_gradients",
    "mse_loss",
    "save_weights",
    "train_denoiser",
]
