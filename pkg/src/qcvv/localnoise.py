"""Few-qubit models assembled from local gates on named lines.

Each gate's (1- or 2-line) transfer matrix is tensor-embedded at its
target lines during layer simulation, so noise added to a gate affects
only that gate's targets.  The dense representation limits models to
three lines.
"""

from __future__ import annotations

import numpy as np

from .circuits import GateLabel
from .gates import gate_num_lines, gate_ptm
from .models import GateSetModel, SpamPair
from .ops import FullTPOp, StaticOp

MAX_DENSE_LINES = 3


def _two_line_placements(n_qubits: int, geometry: str):
    if geometry == "line":
        return [(i, i + 1) for i in range(n_qubits - 1)]
    if geometry == "all":
        return [(i, j) for i in range(n_qubits) for j in range(n_qubits) if i != j]
    raise ValueError(f"unknown geometry {geometry!r}; choose 'line' or 'all'")


def build_localnoise_model(n_qubits: int, gate_names, availability=None,
                           geometry: str = "line",
                           parameterization: str = "static") -> GateSetModel:
    """Perfect n-qubit model with the named gates at every available
    placement.  ``availability`` maps a multi-line gate name to its list
    of target tuples; unlisted multi-line gates fall back to the geometry.
    """
    if n_qubits < 1 or n_qubits > MAX_DENSE_LINES:
        raise ValueError(
            f"dense local-noise models support 1..{MAX_DENSE_LINES} qubits, got {n_qubits}")
    availability = dict(availability or {})
    lines = tuple(range(n_qubits))
    make_op = StaticOp if parameterization == "static" else FullTPOp
    gates = {}
    for name in gate_names:
        width = gate_num_lines(name)
        ptm = gate_ptm(name)
        if width == 1:
            placements = [(q,) for q in lines]
        else:
            placements = [tuple(t) for t in
                          availability.get(name, _two_line_placements(n_qubits, geometry))]
        for targets in placements:
            bad = [t for t in targets if t not in lines]
            if bad:
                raise ValueError(f"gate {name} targets unavailable lines {bad}")
            gates[GateLabel(name, targets)] = make_op(ptm)
    idle = make_op(np.eye(4 ** n_qubits))
    spam = SpamPair.computational(n_qubits, static=(parameterization == "static"))
    return GateSetModel(lines, gates, spam, idle)
