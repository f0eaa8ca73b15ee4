"""Gate-quality metrics on transfer matrices."""

from __future__ import annotations

import numpy as np

from .basis import ptm_to_choi


def entanglement_infidelity(g: np.ndarray, ideal: np.ndarray) -> float:
    """1 - Tr(ideal^T g) / d^2 for an orthogonal (unitary-map) ideal."""
    g = np.asarray(g, dtype=float)
    ideal = np.asarray(ideal, dtype=float)
    if g.shape != ideal.shape or g.shape[0] != g.shape[1]:
        raise ValueError(f"shape mismatch: {g.shape} vs {ideal.shape}")
    d2 = g.shape[0]
    return 1.0 - float(np.trace(ideal.T @ g)) / d2


def process_trace_distance(g: np.ndarray, ideal: np.ndarray) -> float:
    """Half the trace norm of the Choi-matrix difference."""
    if g.shape != ideal.shape:
        raise ValueError(f"shape mismatch: {g.shape} vs {ideal.shape}")
    diff = ptm_to_choi(g) - ptm_to_choi(ideal)
    evals = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return 0.5 * float(np.sum(np.abs(evals)))


def frobenius_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))
