"""Denoisers exposed as scikit-learn transformers.

Every denoiser maps a stack of two-channel images ``(n, 2, rows, cols)`` to
a stack of the same shape via ``transform``.  :func:`denoise_complex` adapts
any of them to complex images with magnitude normalization.
"""

import numpy as np
from scipy.ndimage import correlate1d
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..core import channels_to_image, image_to_channels
from ..validation import check_channel_batch, check_image, check_positive
from .adam import AdamConfig
from .cnn import CnnArchitecture, CnnWeights, cnn_forward
from .training import TrainingPair, train_denoiser

SCALE_FLOOR = 1e-12


class IdentityDenoiser(TransformerMixin, BaseEstimator):
    """Returns its input unchanged."""

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        return check_channel_batch(X).copy()


def gaussian_kernel(sigma):
    """Normalized 1-D Gaussian taps on ``[-ceil(3 sigma), ceil(3 sigma)]``."""
    radius = int(np.ceil(3 * sigma))
    taps = np.exp(-0.5 * (np.arange(-radius, radius + 1) / sigma) ** 2)
    return taps / taps.sum()


class GaussianDenoiser(TransformerMixin, BaseEstimator):
    """Separable Gaussian blur applied to each channel (reflect boundary)."""

    def __init__(self, sigma=1.0):
        self.sigma = sigma

    def fit(self, X=None, y=None):
        check_positive(self.sigma, "sigma")
        return self

    def transform(self, X):
        X = check_channel_batch(X)
        taps = gaussian_kernel(check_positive(self.sigma, "sigma"))
        out = correlate1d(X, taps, axis=2, mode="reflect")
        return correlate1d(out, taps, axis=3, mode="reflect")


class CnnDenoiser(TransformerMixin, BaseEstimator):
    """Encoder-decoder CNN trained with MSE under ADAM.

    Parameters
    ----------
    num_levels, base_filters, kernel_size, skip_connections, residual
        Network shape, see :class:`CnnArchitecture`.
    learning_rate, epochs, batch_size, patch_size, random_state
        Training settings, see :class:`AdamConfig`.

    Attributes
    ----------
    weights_ : CnnWeights
    loss_curve_ : list of float
        Mean minibatch loss per epoch.
    initial_loss_, final_loss_ : float
        Full training-set MSE before and after fitting.
    """

    def __init__(
        self,
        num_levels=2,
        base_filters=16,
        kernel_size=3,
        skip_connections=True,
        residual=False,
        learning_rate=1e-3,
        epochs=10,
        batch_size=8,
        patch_size=0,
        random_state=0,
    ):
        self.num_levels = num_levels
        self.base_filters = base_filters
        self.kernel_size = kernel_size
        self.skip_connections = skip_connections
        self.residual = residual
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.patch_size = patch_size
        self.random_state = random_state

    @property
    def architecture(self):
        return CnnArchitecture(
            num_levels=self.num_levels,
            base_filters=self.base_filters,
            kernel_size=self.kernel_size,
            skip_connections=self.skip_connections,
            residual=self.residual,
        )

    @property
    def adam_config(self):
        return AdamConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            patch_size=self.patch_size,
            rng_seed=self.random_state,
        )

    def fit(self, X, y):
        """Train on noisy inputs ``X`` and clean targets ``y``, both ``(n, 2, r, c)``."""
        X = check_channel_batch(X, "X")
        y = check_channel_batch(y, "y")
        if X.shape != y.shape:
            raise ValueError(f"X {X.shape} and y {y.shape} differ in shape")
        pairs = [TrainingPair(a, b) for a, b in zip(X, y)]
        self.weights_, log = train_denoiser(pairs, self.architecture, self.adam_config)
        self.loss_curve_ = log.epoch_losses
        self.initial_loss_ = log.initial_loss
        self.final_loss_ = log.final_loss
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        return cnn_forward(self.weights_, self.weights_.arch, check_channel_batch(X))

    @classmethod
    def from_weights(cls, weights, **params):
        """Wrap already trained weights (e.g. loaded from a checkpoint)."""
        arch = weights.arch
        est = cls(
            num_levels=arch.num_levels,
            base_filters=arch.base_filters,
            kernel_size=arch.kernel_size,
            skip_connections=arch.skip_connections,
            residual=arch.residual,
            **params,
        )
        est.weights_ = weights
        return est


def denoise_complex(denoiser, x):
    """Run a two-channel denoiser on a complex image.

    The image is divided by ``s = max(max|x|, 1e-12)`` before the network
    and the output multiplied back by ``s``, which makes the wrapper
    positively homogeneous whatever the wrapped denoiser does.
    """
    x = check_image(x)
    peak = np.max(np.abs(x))
    if peak == 0:
        return np.zeros_like(x)
    scale = max(peak, SCALE_FLOOR)
    out = denoiser.transform(image_to_channels(x / scale)[None])[0]
    return channels_to_image(out) * scale


__all__ = [
    "CnnDenoiser",
    "GaussianDenoiser",
    "IdentityDenoiser",
    "CnnWeights",
    "denoise_complex",
    "gaussian_kernel",
]
