"""ADAM with bias correction, written against plain lists of arrays."""

from dataclasses import dataclass

import numpy as np

from ..validation import check_positive, check_positive_int


@dataclass(frozen=True)
class AdamConfig:
    """Optimizer and training-loop settings.

    ``patch_size`` > 0 trains on random square crops (same location in
    input and target) instead of whole images.
    """

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 10
    batch_size: int = 8
    rng_seed: int = 0
    patch_size: int = 0

    def __post_init__(self):
        check_positive(self.learning_rate, "learning_rate")
        check_positive(self.epsilon, "epsilon")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        check_positive_int(self.epochs, "epochs", minimum=0)
        check_positive_int(self.batch_size, "batch_size")
        check_positive_int(self.patch_size, "patch_size", minimum=0)


@dataclass
class AdamState:
    first: list
    second: list
    step: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params, grads, state, cfg, step):
    """One bias-corrected ADAM update; returns new params and state."""
    if step < 1:
        raise ValueError(f"step index must be >= 1, got {step}")
    c1 = 1.0 - cfg.beta1**step
    c2 = 1.0 - cfg.beta2**step
    new_params, first, second = [], [], []
    for p, g, m, v in zip(params, grads, state.first, state.second):
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        new_params.append(p - cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.epsilon))
        first.append(m)
        second.append(v)
    return new_params, AdamState(first, second, step)
