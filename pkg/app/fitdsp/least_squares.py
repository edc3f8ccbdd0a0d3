"""Box-bounded Levenberg-Marquardt with a central-difference Jacobian."""
from __future__ import annotations

import dataclasses
import logging
from typing import Callable, Optional, Sequence

import numpy as np
import numpy.typing as npt

from app.errors import DomainError
from app.timeseries import TimeSeries

logger = logging.getLogger(__name__)

Model = Callable[[npt.NDArray[np.float64], npt.NDArray[np.float64]], npt.NDArray[np.float64]]
Bounds = Sequence[tuple[float, float]]

MAX_ITERATIONS = 500
RELATIVE_COST_TOL = 1e-10
# both measured against the data energy sum y^2, so the stopping rules do not
# depend on the amplitude of the signal
GRADIENT_TOL = 1e-8
COST_FLOOR = 1e-24

_LAMBDA_INIT = 1e-3
_LAMBDA_MAX = 1e16
_JACOBIAN_STEP = 6e-6


@dataclasses.dataclass(frozen=True)
class FitResult:
    params: npt.NDArray[np.float64]
    param_errors: npt.NDArray[np.float64]
    residual_norm: float
    converged: bool
    iterations: int
    covariance: Optional[npt.NDArray[np.float64]] = None

    def __getitem__(self, i: int) -> float:
        return float(self.params[i])


def _bounds_arrays(bounds: Optional[Bounds], size: int) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    if bounds is None:
        return np.full(size, -np.inf), np.full(size, np.inf)
    if len(bounds) != size:
        raise DomainError(f"{len(bounds)} bounds given for {size} parameters")
    lower = np.array([b[0] for b in bounds], dtype=float)
    upper = np.array([b[1] for b in bounds], dtype=float)
    if np.any(lower > upper):
        raise DomainError("lower bound above upper bound")
    return lower, upper


def _jacobian(residual, p, lower, upper, r0):
    jac = np.empty((r0.size, p.size))
    for i in range(p.size):
        h = _JACOBIAN_STEP * max(abs(p[i]), 1.0)
        hi = p.copy()
        lo = p.copy()
        hi[i] = min(p[i] + h, upper[i])
        lo[i] = max(p[i] - h, lower[i])
        span = hi[i] - lo[i]
        if span == 0:
            jac[:, i] = 0.0
            continue
        jac[:, i] = (residual(hi) - residual(lo)) / span
    return jac


def _projected_gradient(grad, p, lower, upper):
    pg = grad.copy()
    pg[(p <= lower) & (grad > 0)] = 0.0
    pg[(p >= upper) & (grad < 0)] = 0.0
    return pg


def levenberg_marquardt(
    model: Model,
    data: TimeSeries,
    init: npt.ArrayLike,
    bounds: Optional[Bounds] = None,
    max_iterations: int = MAX_ITERATIONS,
) -> FitResult:
    """Minimise sum (model(p, t) - y)^2 subject to lower <= p <= upper.

    Bounds are enforced by projecting every trial step back into the box.
    Damping starts at 1e-3 and moves by x10 / /10 on rejected / accepted
    steps. Converged means one of: relative cost change below 1e-10, a
    projected gradient below 1e-8 * sum(y^2), or a cost below
    1e-24 * sum(y^2). Exhausting max_iterations, or damping that runs away
    because no step lowers the cost, returns the best parameters with
    converged=False.
    """
    p = np.asarray(init, dtype=float).copy()
    lower, upper = _bounds_arrays(bounds, p.size)
    if np.any(p < lower) or np.any(p > upper):
        raise DomainError("initial parameters outside bounds")
    t = data.t
    y = data.values
    if y.size < p.size:
        raise DomainError(f"{y.size} data points cannot fix {p.size} parameters")

    def residual(q):
        return np.asarray(model(q, t), dtype=float) - y

    energy = float(y @ y)
    scale = energy if energy > 0 else 1.0
    grad_tol = GRADIENT_TOL * scale
    cost_floor = 0.5 * COST_FLOOR * scale

    r = residual(p)
    cost = 0.5 * float(r @ r)
    jac = _jacobian(residual, p, lower, upper, r)
    lam = _LAMBDA_INIT
    converged = False
    iterations = 0

    while iterations < max_iterations:
        if cost <= cost_floor:
            converged = True
            break
        grad = jac.T @ r
        if np.abs(_projected_gradient(grad, p, lower, upper)).max(initial=0.0) < grad_tol:
            converged = True
            break
        iterations += 1
        normal = jac.T @ jac
        diag = np.diag(normal).copy()
        diag = np.maximum(diag, 1e-12 * max(diag.max(initial=0.0), 1e-300))
        try:
            step = np.linalg.solve(normal + lam * np.diag(diag), -grad)
        except np.linalg.LinAlgError:
            step = -np.linalg.pinv(normal + lam * np.diag(diag)) @ grad
        trial = np.clip(p + step, lower, upper)
        r_trial = residual(trial)
        cost_trial = 0.5 * float(r_trial @ r_trial)
        if np.isfinite(cost_trial) and cost_trial < cost:
            rel = (cost - cost_trial) / max(cost, 1e-300)
            p, r, cost = trial, r_trial, cost_trial
            lam = max(lam / 10.0, 1e-15)
            if rel < RELATIVE_COST_TOL:
                converged = True
                break
            jac = _jacobian(residual, p, lower, upper, r)
        else:
            lam *= 10.0
            if lam > _LAMBDA_MAX:
                logger.debug("[fit] damping overflow at iteration %d", iterations)
                break

    dof = y.size - p.size
    s2 = 2.0 * cost / dof if dof > 0 else 0.0
    cov = np.linalg.pinv(jac.T @ jac) * s2
    errors = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    if not converged:
        logger.warning("[fit] no convergence after %d iterations (cost %.3e)", iterations, cost)
    return FitResult(
        params=p,
        param_errors=errors,
        residual_norm=float(np.sqrt(2.0 * cost)),
        converged=converged,
        iterations=iterations,
        covariance=cov,
    )
