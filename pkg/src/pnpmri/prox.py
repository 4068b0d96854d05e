"""Data-consistency proximal step solved with conjugate gradients.

The step returns ``argmin_z 1/2 ||z - x_tilde||^2 + lam/2 ||E z - d||^2``,
i.e. the solution of ``(I + lam E^H E) z = x_tilde + lam E^H d``.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import KSpaceData
from .exceptions import DimensionMismatchError
from .validation import check_image, check_positive, check_positive_int


@dataclass(frozen=True)
class CgConfig:
    tol: float = 1e-8
    max_iters: int = 200

    def __post_init__(self):
        check_positive(self.tol, "tol")
        check_positive_int(self.max_iters, "max_iters")


@dataclass(frozen=True)
class ProxResult:
    """Outcome of a CG solve.

    ``converged`` is False when ``max_iters`` was reached with the relative
    residual still above tolerance; the iterate is returned regardless.
    """

    z: np.ndarray
    iterations_used: int
    final_relative_residual: float
    converged: bool
    residual_history: list = field(default_factory=list)


def _inner(a, b):
    return np.vdot(a, b)


def cg_solve(apply, rhs, cfg=CgConfig(), x0=None):
    """Conjugate gradients for a Hermitian positive definite map ``apply``.

    Parameters
    ----------
    apply : callable
        Linear map acting on arrays shaped like ``rhs``.
    rhs : ndarray
        Right-hand side.
    cfg : CgConfig
        Relative residual tolerance and iteration cap.
    x0 : ndarray, optional
        Initial guess (zero when omitted).

    Returns
    -------
    ProxResult
        Solution, iteration count, final ``||r|| / ||rhs||`` and the
        per-iteration relative residuals (entry 0 is the initial residual).
    """
    rhs = np.asarray(rhs, dtype=np.complex128)
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0:
        return ProxResult(np.zeros_like(rhs), 0, 0.0, True, [0.0])
    if x0 is None:
        x = np.zeros_like(rhs)
        r = rhs.copy()
    else:
        x = np.array(x0, dtype=np.complex128)
        r = rhs - apply(x)
    p = r.copy()
    rr = _inner(r, r).real
    history = [np.sqrt(rr) / rhs_norm]
    it = 0
    while history[-1] > cfg.tol and it < cfg.max_iters:
        ap = apply(p)
        alpha = rr / _inner(p, ap).real
        x += alpha * p
        r -= alpha * ap
        rr_new = _inner(r, r).real
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
        history.append(np.sqrt(rr) / rhs_norm)
    return ProxResult(x, it, float(history[-1]), bool(history[-1] <= cfg.tol), history)


def normal_apply(op, lam, z):
    """``z + lam * E^H E z``."""
    return z + lam * op.normal(z)


def prox(op, d, x_tilde, lam, cfg=CgConfig()):
    """Solve the data-consistency subproblem, warm-started at ``x_tilde``."""
    lam = check_positive(lam, "lambda")
    x_tilde = check_image(x_tilde, "x_tilde")
    if x_tilde.shape != op.shape:
        raise DimensionMismatchError(f"x_tilde shape {x_tilde.shape} does not match {op.shape}")
    d_values = d.values if isinstance(d, KSpaceData) else np.asarray(d)
    rhs = x_tilde + lam * op.adjoint(d_values)
    return cg_solve(lambda z: normal_apply(op, lam, z), rhs, cfg, x0=x_tilde)


def prox_objective(op, d, x_tilde, lam, z):
    """Value of the subproblem objective at ``z``."""
    d_values = d.values if isinstance(d, KSpaceData) else np.asarray(d)
    data = op.forward_array(z) - d_values
    return 0.5 * np.linalg.norm(z - x_tilde) ** 2 + 0.5 * lam * np.linalg.norm(data) ** 2
