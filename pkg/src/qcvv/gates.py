"""Built-in named gates and their transfer matrices.

Gate names follow the convention G<axis><angle>: e.g. Gxpi2 is a pi/2
X rotation, Gxmpi2 its inverse.  For two-qubit gates the first target is
the control line.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .basis import unitary_to_ptm


def _rot(pauli: np.ndarray, angle: float) -> np.ndarray:
    return np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * pauli


_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)

_CNOT = np.array(
    [[1, 0, 0, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1],
     [0, 0, 1, 0]], dtype=complex)

_CZ = np.diag([1, 1, 1, -1]).astype(complex)

GATE_UNITARIES: dict[str, np.ndarray] = {
    "Gxpi2": _rot(_SX, np.pi / 2),
    "Gxmpi2": _rot(_SX, -np.pi / 2),
    "Gypi2": _rot(_SY, np.pi / 2),
    "Gympi2": _rot(_SY, -np.pi / 2),
    "Gzpi2": _rot(_SZ, np.pi / 2),
    "Gzmpi2": _rot(_SZ, -np.pi / 2),
    "Gxpi": _rot(_SX, np.pi),
    "Gypi": _rot(_SY, np.pi),
    "Gzpi": _rot(_SZ, np.pi),
    "Gcnot": _CNOT,
    "Gcz": _CZ,
}


class UnknownGateError(KeyError):
    pass


@lru_cache(maxsize=None)
def gate_ptm(name: str) -> np.ndarray:
    """Transfer matrix of a built-in gate (read-only array)."""
    try:
        u = GATE_UNITARIES[name]
    except KeyError:
        known = ", ".join(sorted(GATE_UNITARIES))
        raise UnknownGateError(f"unknown gate name {name!r}; known gates: {known}") from None
    ptm = unitary_to_ptm(u)
    ptm.flags.writeable = False
    return ptm


def gate_num_lines(name: str) -> int:
    u = GATE_UNITARIES.get(name)
    if u is None:
        raise UnknownGateError(f"unknown gate name {name!r}")
    return round(np.log2(u.shape[0]))
