"""Minibatch MSE training of the encoder-decoder network."""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import EmptyDatasetError
from ..validation import check_channels
from .adam import AdamConfig, AdamState, adam_step
from .cnn import CnnArchitecture, CnnWeights, cnn_forward, loss_and_gradients, mse_loss

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingPair:
    noisy: np.ndarray
    clean: np.ndarray

    def __post_init__(self):
        noisy = check_channels(self.noisy, "noisy")
        clean = check_channels(self.clean, "clean")
        if noisy.shape != clean.shape:
            raise ValueError(f"noisy {noisy.shape} and clean {clean.shape} differ in shape")
        object.__setattr__(self, "noisy", noisy)
        object.__setattr__(self, "clean", clean)


@dataclass
class TrainingLog:
    initial_loss: float
    final_loss: float
    epoch_losses: list = field(default_factory=list)


def dataset_loss(weights, arch, noisy, clean, batch_size=16):
    """Mean squared error over a whole stack, evaluated in batches."""
    total = 0.0
    for start in range(0, len(noisy), batch_size):
        pred = cnn_forward(weights, arch, noisy[start : start + batch_size])
        total += np.sum((pred - clean[start : start + batch_size]) ** 2)
    return float(total / noisy.size)


def _stack(dataset):
    if len(dataset) == 0:
        raise EmptyDatasetError("training set is empty")
    pairs = [p if isinstance(p, TrainingPair) else TrainingPair(*p) for p in dataset]
    shapes = {p.noisy.shape for p in pairs}
    if len(shapes) != 1:
        raise ValueError(f"training pairs must share one shape, got {sorted(shapes)}")
    return np.stack([p.noisy for p in pairs]), np.stack([p.clean for p in pairs])


def _crop(noisy, clean, size, rng):
    rows, cols = noisy.shape[-2:]
    r = rng.integers(0, rows - size + 1, size=len(noisy))
    c = rng.integers(0, cols - size + 1, size=len(noisy))
    xs = np.stack([n[:, i : i + size, j : j + size] for n, i, j in zip(noisy, r, c)])
    ys = np.stack([n[:, i : i + size, j : j + size] for n, i, j in zip(clean, r, c)])
    return xs, ys


def train_denoiser(dataset, arch=CnnArchitecture(), cfg=AdamConfig(), weights=None):
    """Fit the network to ``(noisy, clean)`` pairs by minibatch ADAM.

    The seed drives both the initialization and the per-epoch shuffles, so
    identical inputs give bit-identical weights.

    Returns
    -------
    weights : CnnWeights
    log : TrainingLog
        Full-dataset MSE before and after training plus the mean minibatch
        loss of every epoch.
    """
    noisy, clean = _stack(dataset)
    init_seed, shuffle_seed = np.random.SeedSequence(cfg.rng_seed).spawn(2)
    if weights is None:
        weights = CnnWeights.initialize(arch, np.random.default_rng(init_seed))
    else:
        weights = weights.copy()
    rng = np.random.default_rng(shuffle_seed)
    size = cfg.patch_size
    if size:
        if size > min(noisy.shape[-2:]) or size % arch.multiple:
            raise ValueError(f"patch_size {size} must fit the images and divide by {arch.multiple}")
    elif any(n % arch.multiple for n in noisy.shape[-2:]):
        raise ValueError(f"image sizes must be multiples of {arch.multiple}; set patch_size")

    initial = dataset_loss(weights, arch, noisy, clean)
    state = AdamState.zeros_like(weights.params)
    params = weights.params
    epoch_losses = []
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(noisy))
        batch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = noisy[idx], clean[idx]
            if size:
                xb, yb = _crop(xb, yb, size, rng)
            loss, grads = loss_and_gradients(CnnWeights(arch, params), arch, xb, yb)
            step += 1
            params, state = adam_step(params, grads, state, cfg, step)
            batch_losses.append(loss)
        epoch_losses.append(float(np.mean(batch_losses)))
        log.info("epoch %d/%d  loss %.6g", epoch + 1, cfg.epochs, epoch_losses[-1])
    weights = CnnWeights(arch, params)
    final = dataset_loss(weights, arch, noisy, clean) if cfg.epochs else initial
    return weights, TrainingLog(initial, final, epoch_losses)


__all__ = ["TrainingPair", "TrainingLog", "train_denoiser", "dataset_loss", "mse_loss"]
