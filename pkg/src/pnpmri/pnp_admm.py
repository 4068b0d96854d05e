"""ADMM plug-and-play reconstruction with a pluggable denoiser.

Starting from ``x0 = E^H d`` and ``u0 = 0`` each iteration runs

    a = prox(d, S, x - u; lam)        data consistency (CG)
    x = denoise(a + u)                learned or fixed prior
    u = u + (a - x)                   scaled dual update
"""

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, clone

from .core import KSpaceData
from .denoiser.estimators import CnnDenoiser, IdentityDenoiser, denoise_complex
from .exceptions import DimensionMismatchError
from .metrics import psnr
from .operators import EncodingOperator, zero_filled_recon
from .prox import CgConfig, prox
from .validation import check_positive, check_positive_int

HISTORY_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PnpConfig:
    """Iteration settings.

    ``early_exit_tol`` stops once ``||x_i - x_{i-1}|| / ||x_{i-1}||`` drops
    below it; ``None`` (the default) always runs ``num_iterations`` steps.
    """

    lam: float = 1.0
    num_iterations: int = 10
    cg: CgConfig = field(default_factory=CgConfig)
    record_history: bool = True
    early_exit_tol: float = None

    def __post_init__(self):
        check_positive(self.lam, "lambda")
        check_positive_int(self.num_iterations, "num_iterations", minimum=0)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    primal_gap: float
    prox_residual: float
    prox_iterations: int
    prox_converged: bool
    data_residual: float
    psnr: float = None

    def to_dict(self):
        return {
            "iteration": self.iteration,
            "primal_gap": self.primal_gap,
            "prox_residual": self.prox_residual,
            "prox_iterations": self.prox_iterations,
            "prox_converged": self.prox_converged,
            "data_residual": self.data_residual,
            "psnr": self.psnr,
        }


@dataclass(frozen=True)
class AdmmState:
    x: np.ndarray
    a: np.ndarray
    u: np.ndarray
    iteration: int = 0
    history: tuple = ()

    @property
    def nonconverged_steps(self):
        return sum(not r.prox_converged for r in self.history)


def initial_state(op, d):
    x0 = zero_filled_recon(op, d)
    return AdmmState(x=x0, a=x0.copy(), u=np.zeros_like(x0), iteration=0)


def pnp_step(state, op, d, denoiser, cfg=PnpConfig(), reference=None):
    """Advance one ADMM iteration; returns a new state."""
    result = prox(op, d, state.x - state.u, cfg.lam, cfg.cg)
    a = result.z
    x = denoise_complex(denoiser, a + state.u)
    u = state.u + (a - x)
    history = state.history
    if cfg.record_history:
        d_values = d.values if isinstance(d, KSpaceData) else d
        psnr_value = None
        if reference is not None:
            psnr_value = psnr(np.abs(reference), np.abs(x))
        record = IterationRecord(
            iteration=state.iteration + 1,
            primal_gap=float(np.linalg.norm(a - x)),
            prox_residual=result.final_relative_residual,
            prox_iterations=result.iterations_used,
            prox_converged=result.converged,
            data_residual=float(np.linalg.norm(op.forward_array(x) - d_values)),
            psnr=psnr_value,
        )
        history = history + (record,)
    return AdmmState(x=x, a=a, u=u, iteration=state.iteration + 1, history=history)


def pnp_reconstruct(op, d, denoiser, cfg=PnpConfig(), reference=None):
    """Run the full iteration and return ``(x_N, history)``.

    ``N = 0`` returns the zero-filled image ``E^H d``.
    """
    if d.shape != op.shape:
        raise DimensionMismatchError(f"k-space grid {d.shape} does not match operator {op.shape}")
    state = initial_state(op, d)
    for _ in range(cfg.num_iterations):
        previous = state.x
        state = pnp_step(state, op, d, denoiser, cfg, reference)
        if cfg.early_exit_tol is not None:
            denom = np.linalg.norm(previous)
            if denom > 0 and np.linalg.norm(state.x - previous) / denom < cfg.early_exit_tol:
                break
    return state.x, list(state.history)


def history_to_json(history, **annotations):
    """One JSON document describing a run (stable key order)."""
    doc = {"schema_version": HISTORY_SCHEMA_VERSION}
    doc.update(annotations)
    doc["iterations"] = [r.to_dict() for r in history]
    return json.dumps(doc, indent=2)


class PnPReconstructor(BaseEstimator):
    """Plug-and-play ADMM reconstruction as an estimator.

    ``fit`` trains a clone of ``denoiser`` on two-channel (noisy, clean)
    stacks; fixed denoisers are simply cloned.  ``predict`` reconstructs an
    image from k-space and coil sensitivities.

    Parameters
    ----------
    denoiser : transformer, default=IdentityDenoiser()
        Any object with ``transform`` on ``(n, 2, rows, cols)`` stacks.
    lam : float
        Data-consistency weight of the proximal step.
    n_iter : int
        Number of ADMM iterations.
    cg_tol, cg_max_iter
        Inner conjugate-gradient settings.
    early_exit_tol : float or None
        Optional relative-change stopping rule.
    """

    def __init__(
        self,
        denoiser=None,
        lam=1.0,
        n_iter=10,
        cg_tol=1e-8,
        cg_max_iter=200,
        early_exit_tol=None,
    ):
        self.denoiser = denoiser
        self.lam = lam
        self.n_iter = n_iter
        self.cg_tol = cg_tol
        self.cg_max_iter = cg_max_iter
        self.early_exit_tol = early_exit_tol

    def _config(self):
        return PnpConfig(
            lam=self.lam,
            num_iterations=self.n_iter,
            cg=CgConfig(self.cg_tol, self.cg_max_iter),
            early_exit_tol=self.early_exit_tol,
        )

    def fit(self, X=None, y=None):
        den = IdentityDenoiser() if self.denoiser is None else self.denoiser
        if X is None:
            self.denoiser_ = den
        else:
            self.denoiser_ = clone(den).fit(X, y)
        return self

    def predict(self, kspace, maps, reference=None):
        den = getattr(self, "denoiser_", None)
        if den is None:
            den = IdentityDenoiser() if self.denoiser is None else self.denoiser
            if isinstance(den, CnnDenoiser) and not hasattr(den, "weights_"):
                raise ValueError("the CNN denoiser has not been trained; call fit first")
        op = EncodingOperator(maps, kspace.mask)
        x, history = pnp_reconstruct(op, kspace, den, self._config(), reference)
        self.history_ = history
        return x
