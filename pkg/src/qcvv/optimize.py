"""Damped least-squares (Levenberg-Marquardt) minimizer.

Written for model-fitting objectives whose Jacobians are rank deficient
along gauge directions: the Marquardt diagonal damping keeps the normal
equations well posed without any explicit gauge fixing.  Only improving
steps are accepted, so the cost history is non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    grad_inf: float
    n_iter: int
    converged: bool
    message: str
    cost_history: list[float] = field(default_factory=list)


def levenberg_marquardt(residual_fn, jacobian_fn, x0, max_iter: int = 200,
                        gtol: float = 1e-8, ftol: float = 1e-10,
                        xtol: float = 1e-12, init_damping: float = 1e-3) -> LMResult:
    """Minimize 0.5*||r(x)||^2 given residual and Jacobian callables.

    gtol bounds the infinity norm of J^T r scaled by max(1, initial cost);
    ftol is a relative cost-decrease threshold; xtol a relative step size.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(residual_fn(x), dtype=float)
    cost = 0.5 * float(r @ r)
    history = [cost]
    lam = init_damping
    scale = max(1.0, cost)
    message = "max iterations reached"
    converged = False
    grad_inf = np.inf
    n_iter = 0

    for n_iter in range(1, max_iter + 1):
        jac = np.asarray(jacobian_fn(x), dtype=float)
        grad = jac.T @ r
        grad_inf = float(np.max(np.abs(grad))) if grad.size else 0.0
        if grad_inf <= gtol * scale:
            converged, message = True, "gradient tolerance reached"
            break
        a = jac.T @ jac
        diag = np.diag(a).copy()
        floor = 1e-12 * (diag.max() if diag.size and diag.max() > 0 else 1.0)
        diag = np.maximum(diag, floor)
        accepted = False
        for _ in range(40):
            try:
                step = np.linalg.solve(a + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                step, *_ = np.linalg.lstsq(a + lam * np.diag(diag), -grad, rcond=None)
            x_new = x + step
            r_new = np.asarray(residual_fn(x_new), dtype=float)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                rel_drop = (cost - cost_new) / max(cost, 1e-300)
                step_rel = np.linalg.norm(step) / max(np.linalg.norm(x), 1.0)
                x, r, cost = x_new, r_new, cost_new
                history.append(cost)
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if rel_drop < ftol:
                    converged, message = True, "cost tolerance reached"
                if step_rel < xtol:
                    converged, message = True, "step tolerance reached"
                break
            lam *= 4.0
            if lam > 1e16:
                break
        if not accepted:
            converged, message = True, "no improving step found (stationary)"
            break
        if converged:
            break

    return LMResult(x=x, cost=cost, grad_inf=grad_inf, n_iter=n_iter,
                    converged=converged, message=message, cost_history=history)
