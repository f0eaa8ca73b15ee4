"""Gauge optimization: pick the physically-equivalent frame nearest a target.

Minimizes  sum_g w_g ||S^-1 G_g S - T_g||_F^2
         + w_spam (||S^-1 rho - rho_T||^2 + ||E^T S - E_T^T||^2)

over trace-preserving invertible S (first row pinned), seeded at the
identity, using the same damped least-squares engine as the model
fitters.  All of the model's operators must support gauge transforms.
"""

from __future__ import annotations

import numpy as np

from .models import GateSetModel, gauge_transform
from .ops import OpTransformError
from .optimize import levenberg_marquardt


class GaugeOptimizationError(ValueError):
    pass


def _check_transformable(model: GateSetModel):
    items = list(model.gates.items())
    if model.idle is not None:
        items.append(("(idle)", model.idle))
    for name, op in items:
        if not getattr(op, "kind", "") in ("full-TP", "CPTP"):
            raise OpTransformError(
                f"operator {name} (kind {op.kind}) cannot be gauge-transformed; "
                "gauge optimization requires transformable operators")
        if op.dim != model.dim:
            raise OpTransformError(f"operator {name} is embedded on a line subset; "
                                   "gauge optimization needs full-width operators")


def gauge_optimize(model: GateSetModel, target: GateSetModel,
                   gate_weight: float = 1.0, spam_weight: float = 0.1,
                   max_iter: int = 300, max_restarts: int = 4,
                   seed: int = 0) -> GateSetModel:
    """Return gauge_transform(model, S*) with S* a local minimizer."""
    _check_transformable(model)
    dim = model.dim
    if set(model.gates) != set(target.gates):
        raise GaugeOptimizationError("model and target have different gate labels")

    gate_items = sorted(model.gates, key=lambda l: (l.name, tuple(map(str, l.targets))))
    g_mats = [model.gates[l].dense() for l in gate_items]
    t_mats = [target.gates[l].dense() for l in gate_items]
    if model.idle is not None and target.idle is not None:
        g_mats.append(model.idle.dense())
        t_mats.append(target.idle.dense())
    rho = model.spam.dense_prep()
    rho_t = target.spam.dense_prep()
    eff = model.spam.dense_effects()
    eff_t = target.spam.dense_effects()
    wg = np.sqrt(gate_weight)
    ws = np.sqrt(spam_weight)

    n_free = dim * (dim - 1)

    def build_s(x):
        s = np.empty((dim, dim))
        s[0] = 0.0
        s[0, 0] = 1.0
        s[1:] = x.reshape(dim - 1, dim)
        return s

    x0 = np.eye(dim)[1:].ravel()
    n_res = len(g_mats) * dim * dim + dim + eff.size

    def residuals(x):
        s = build_s(x)
        try:
            s_inv = np.linalg.inv(s)
        except np.linalg.LinAlgError:
            return np.full(n_res, 1e6)
        parts = [wg * (s_inv @ g @ s - t).ravel() for g, t in zip(g_mats, t_mats)]
        parts.append(ws * (s_inv @ rho - rho_t))
        parts.append(ws * (eff @ s - eff_t).ravel())
        return np.concatenate(parts)

    def jacobian(x):
        s = build_s(x)
        try:
            s_inv = np.linalg.inv(s)
        except np.linalg.LinAlgError:
            return np.zeros((n_res, n_free))
        jac = np.empty((n_res, n_free))
        col = 0
        rs = [s_inv @ g @ s for g in g_mats]
        rho_p = s_inv @ rho
        for a in range(1, dim):
            for b in range(dim):
                chunks = []
                for g, r in zip(g_mats, rs):
                    dr = np.outer(s_inv @ g[:, a], np.eye(dim)[b]) \
                        - np.outer(s_inv[:, a], r[b, :])
                    chunks.append(wg * dr.ravel())
                drho = -s_inv[:, a] * rho_p[b]
                chunks.append(ws * drho)
                de = np.zeros((eff.shape[0], dim))
                de[:, b] = eff[:, a]
                chunks.append(ws * de.ravel())
                jac[:, col] = np.concatenate(chunks)
                col += 1
        return jac

    rng = np.random.default_rng(seed)
    best = None
    x_start = x0
    for attempt in range(max_restarts + 1):
        res = levenberg_marquardt(residuals, jacobian, x_start, max_iter=max_iter,
                                  gtol=1e-12, ftol=1e-14)
        if best is None or res.cost < best.cost:
            best = res
        if best.cost <= 1e-16 * max(1.0, np.sum(np.square(residuals(x0)))):
            break
        x_start = x0 + rng.normal(scale=0.05 * (attempt + 1), size=n_free)
    s_star = build_s(best.x)
    if abs(np.linalg.det(s_star)) < 1e-12:
        raise GaugeOptimizationError("gauge optimization ended at a singular frame")
    return gauge_transform(model, s_star)
