"""Likelihood, chi-square, and Wilks statistics for model-vs-data tests.

Probabilities are clipped to a documented floor of 1e-6 inside the
likelihood only.  2*Delta(logL) compares a model's log likelihood with
the maximal model that reproduces every observed frequency; Wilks'
theorem standardizes it via k = sum_s (observed outcomes - 1) minus the
model's non-gauge parameter count.
"""

from __future__ import annotations

import numpy as np

from .evaltree import build_eval_tree
from .models import GateSetModel, num_nongauge_params
from .sim import bulk_probs_array

P_CLIP_FLOOR = 1e-6


class DegreesOfFreedomError(ValueError):
    pass


def _aligned(model: GateSetModel, ds, circuits):
    circuits = list(ds.circuits) if circuits is None else list(circuits)
    if tuple(ds.outcome_labels) != tuple(model.outcome_labels):
        raise ValueError(f"dataset outcomes {ds.outcome_labels} do not match model "
                         f"outcomes {model.outcome_labels}")
    counts = ds.counts_for(circuits)
    tree = build_eval_tree(circuits, mode="state")
    p = bulk_probs_array(model, tree)
    return circuits, counts, p


def logl(model: GateSetModel, ds, circuits=None) -> float:
    """sum over circuits and outcomes of N * log(clipped p)."""
    _, counts, p = _aligned(model, ds, circuits)
    pc = np.clip(p, P_CLIP_FLOOR, 1.0)
    return float(np.sum(counts * np.log(pc)))


def logl_max(ds, circuits=None) -> float:
    """Log likelihood of the frequency-matching maximal model."""
    circuits = list(ds.circuits) if circuits is None else list(circuits)
    counts = ds.counts_for(circuits)
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(totals > 0, counts / totals, 0.0)
        terms = np.where(counts > 0, counts * np.log(np.where(f > 0, f, 1.0)), 0.0)
    return float(terms.sum())


def two_delta_logl(model: GateSetModel, ds, circuits=None) -> float:
    return 2.0 * (logl_max(ds, circuits) - logl(model, ds, circuits))


def chi2(model: GateSetModel, ds, circuits=None) -> float:
    """sum N (p-f)^2 / (pc (1-pc)) with pc clipped into (0, 1)."""
    _, counts, p = _aligned(model, ds, circuits)
    totals = counts.sum(axis=1, keepdims=True)
    f = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 0.0)
    pc = np.clip(p, P_CLIP_FLOOR, 1.0 - P_CLIP_FLOOR)
    return float(np.sum(totals * (p - f) ** 2 / (pc * (1.0 - pc))))


def wilks_dof(model: GateSetModel, ds, circuits=None) -> int:
    """k = sum_s (outcomes observed in row s - 1) - nongauge params."""
    circuits = list(ds.circuits) if circuits is None else list(circuits)
    counts = ds.counts_for(circuits)
    observed = (counts > 0).sum(axis=1)
    k = int(np.sum(np.maximum(observed - 1, 0))) - num_nongauge_params(model)
    return k


def two_delta_logl_nsigma(model: GateSetModel, ds, circuits=None) -> float:
    """(2DeltaLogL - k) / sqrt(2k); raises if k <= 0."""
    k = wilks_dof(model, ds, circuits)
    if k <= 0:
        raise DegreesOfFreedomError(
            f"k = {k} <= 0: the data provide fewer outcome degrees of freedom than "
            "the model has non-gauge parameters; add circuits or samples")
    stat = two_delta_logl(model, ds, circuits)
    return float((stat - k) / np.sqrt(2.0 * k))


# ---------------------------------------------------------------------------
# residual vectors for the damped least-squares fitters

def freqs_and_totals(counts: np.ndarray):
    totals = counts.sum(axis=1, keepdims=True)
    f = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 0.0)
    return f, totals


def chi2_residuals(p: np.ndarray, f: np.ndarray, totals: np.ndarray):
    """Weighted residuals sqrt(N)(p-f)/sqrt(pc(1-pc)) and d(residual)/dp."""
    pc = np.clip(p, P_CLIP_FLOOR, 1.0 - P_CLIP_FLOOR)
    w = np.sqrt(totals) / np.sqrt(pc * (1.0 - pc))
    r = w * (p - f)
    # weight treated as locally constant (Gauss-Newton approximation)
    return r.ravel(), w


def logl_residuals(p: np.ndarray, f: np.ndarray, totals: np.ndarray,
                   taylor_cut: float = 1e-12):
    """Residuals r with sum r^2 = 2DeltaLogL (trace-preserving models).

    Per cell: r^2 = 2 N (f log(f/pc) + pc - f) >= 0, the Bregman
    divergence of x log x.  Near r = 0 a signed quadratic patch keeps the
    derivative finite.
    """
    pc = np.clip(p, P_CLIP_FLOOR, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        flogfp = np.where(f > 0, f * np.log(f / pc), 0.0)
    term = 2.0 * totals * (flogfp + pc - f)
    term = np.maximum(term, 0.0)
    r = np.sqrt(term)
    nmat = np.broadcast_to(totals, f.shape)
    drdp = np.empty_like(r)
    big = term > taylor_cut
    with np.errstate(divide="ignore", invalid="ignore"):
        drdp[big] = nmat[big] * (1.0 - f[big] / pc[big]) / r[big]
    small = ~big
    w = np.sqrt(nmat[small] / np.maximum(f[small], P_CLIP_FLOOR))
    r[small] = (pc[small] - f[small]) * w
    drdp[small] = w
    return r.ravel(), drdp
