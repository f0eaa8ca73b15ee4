"""Normalized Pauli basis utilities for transfer-matrix representations.

All superoperators are real (4^n x 4^n) matrices in the normalized Pauli
basis: each basis element is a tensor product of I,X,Y,Z divided by
sqrt(2) per factor (Frobenius norm 1), ordered lexicographically with
line 0 as the most significant digit.  State preparations are column
vectors v[j] = Tr(B_j rho), effects are row vectors e[j] = Tr(B_j E),
and outcome probabilities are plain inner products e . R . v.

A map is trace preserving exactly when the first row of its transfer
matrix is (1, 0, ..., 0).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@lru_cache(maxsize=None)
def basis_matrices(n_qubits: int) -> np.ndarray:
    """All 4^n normalized Pauli tensor products, shape (4^n, 2^n, 2^n)."""
    mats = [np.array([[1.0 + 0j]])]
    for _ in range(n_qubits):
        mats = [np.kron(m, p / np.sqrt(2.0)) for m in mats for p in _PAULIS]
    return np.array(mats)


def num_lines_for_dim(dim: int) -> int:
    n = round(np.log(dim) / np.log(4))
    if 4 ** n != dim:
        raise ValueError(f"superoperator dimension {dim} is not a power of 4")
    return n


def unitary_to_ptm(u: np.ndarray) -> np.ndarray:
    """Transfer matrix R[i,j] = Tr(B_i U B_j U^dag) of a unitary map."""
    n = round(np.log2(u.shape[0]))
    basis = basis_matrices(n)
    conj = np.array([u @ b @ u.conj().T for b in basis])
    r = np.einsum("iab,jba->ij", basis, conj)
    return np.real(r)


def state_to_vec(rho: np.ndarray) -> np.ndarray:
    n = round(np.log2(rho.shape[0]))
    return np.real(np.einsum("iab,ba->i", basis_matrices(n), rho))


def effect_to_vec(e: np.ndarray) -> np.ndarray:
    return state_to_vec(e)


def vec_to_matrix(v: np.ndarray) -> np.ndarray:
    n = num_lines_for_dim(v.shape[0])
    return np.einsum("i,iab->ab", v, basis_matrices(n))


@lru_cache(maxsize=None)
def computational_prep_vec(n_qubits: int) -> np.ndarray:
    """|0...0><0...0| as a normalized-Pauli column vector."""
    rho = np.zeros((2 ** n_qubits, 2 ** n_qubits), dtype=complex)
    rho[0, 0] = 1.0
    return state_to_vec(rho)


@lru_cache(maxsize=None)
def computational_effect_vecs(n_qubits: int) -> np.ndarray:
    """Projectors onto each bit string, shape (2^n, 4^n), binary order."""
    vecs = []
    for k in range(2 ** n_qubits):
        e = np.zeros((2 ** n_qubits, 2 ** n_qubits), dtype=complex)
        e[k, k] = 1.0
        vecs.append(effect_to_vec(e))
    return np.array(vecs)


def outcome_labels(n_lines: int) -> tuple[str, ...]:
    """Fixed-width bit strings in binary order; char 0 is the first line."""
    return tuple(format(k, f"0{n_lines}b") for k in range(2 ** n_lines))


def identity_effect_vec(dim: int) -> np.ndarray:
    """Vector of the identity operator: (sqrt(d), 0, ..., 0)."""
    n = num_lines_for_dim(dim)
    v = np.zeros(dim)
    v[0] = np.sqrt(2.0 ** n)
    return v


def is_tp_ptm(r: np.ndarray, tol: float = 1e-9) -> bool:
    row = np.zeros(r.shape[1])
    row[0] = 1.0
    return bool(np.max(np.abs(r[0] - row)) <= tol)


@lru_cache(maxsize=None)
def _choi_basis_tensors(n_qubits: int) -> np.ndarray:
    """Tensors T[i,j] = B_j^T (x) B_i used in the PTM <-> Choi maps."""
    basis = basis_matrices(n_qubits)
    d2 = basis.shape[0]
    out = np.empty((d2, d2, basis.shape[1] ** 2, basis.shape[1] ** 2), dtype=complex)
    for i in range(d2):
        for j in range(d2):
            out[i, j] = np.kron(basis[j].T, basis[i])
    return out


def ptm_to_choi(r: np.ndarray) -> np.ndarray:
    """Choi matrix (input factor first, trace-out normalization I/d)."""
    n = num_lines_for_dim(r.shape[0])
    t = _choi_basis_tensors(n)
    return np.einsum("ij,ijab->ab", r, t) / (2.0 ** n)


def choi_to_ptm(j: np.ndarray) -> np.ndarray:
    n = round(np.log2(j.shape[0])) // 2
    t = _choi_basis_tensors(n)
    d = 2.0 ** n
    r = d * np.einsum("ijab,ab->ij", np.conj(t), j)
    return np.real(r)


def choi_eigenvalues(r: np.ndarray) -> np.ndarray:
    """Eigenvalues of the Choi matrix of a transfer matrix, ascending."""
    return np.linalg.eigvalsh(ptm_to_choi(r))


@lru_cache(maxsize=None)
def _embed_perm(targets: tuple[int, ...], n_lines: int) -> np.ndarray:
    """Permutation p with R_line[i,j] = (G (x) I)[p[i], p[j]].

    Maps a line-ordered basis index to the index in (targets, rest)
    grouped order, digits base 4.
    """
    rest = [k for k in range(n_lines) if k not in targets]
    order = list(targets) + rest
    dim = 4 ** n_lines
    perm = np.empty(dim, dtype=np.intp)
    for idx in range(dim):
        digits = []
        x = idx
        for _ in range(n_lines):
            digits.append(x % 4)
            x //= 4
        digits.reverse()  # digits[k] is line k's basis digit
        grouped = 0
        for pos in order:
            grouped = grouped * 4 + digits[pos]
        perm[idx] = grouped
    return perm


def embed_ptm(g: np.ndarray, target_positions: tuple[int, ...], n_lines: int) -> np.ndarray:
    """Embed a transfer matrix acting on the given line positions.

    Absent lines get the identity map.
    """
    t = len(target_positions)
    if g.shape[0] != 4 ** t:
        raise ValueError(f"operator dim {g.shape[0]} does not match {t} target lines")
    if t == n_lines and target_positions == tuple(range(n_lines)):
        return g
    big = np.kron(g, np.eye(4 ** (n_lines - t)))
    perm = _embed_perm(tuple(target_positions), n_lines)
    return big[np.ix_(perm, perm)]


def embed_adjoint_outer(u: np.ndarray, v: np.ndarray,
                        target_positions: tuple[int, ...], n_lines: int) -> np.ndarray:
    """Pull the outer product u v^T back through an embedding.

    Returns the local matrix T with T[r,c] = d p / d G[r,c] given that
    dp/dR_full = u v^T and R_full = embed(G).
    """
    t = len(target_positions)
    if t == n_lines and target_positions == tuple(range(n_lines)):
        return np.outer(u, v)
    perm = _embed_perm(tuple(target_positions), n_lines)
    dt, dr = 4 ** t, 4 ** (n_lines - t)
    ug = np.empty_like(u)
    vg = np.empty_like(v)
    ug[perm] = u
    vg[perm] = v
    ug = ug.reshape(dt, dr)
    vg = vg.reshape(dt, dr)
    return ug @ vg.T
