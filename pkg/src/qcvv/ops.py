"""Parameterized superoperators and SPAM vectors.

Every operator kind exposes the same small surface: a dense transfer
matrix, a flat real parameter vector, analytic (or internally
finite-differenced) derivatives of the dense matrix with respect to the
parameters, and an optional gauge-similarity transform.  Kinds:

* ``static``: fixed matrix, zero parameters.
* ``full-TP``: rows 1..d^2-1 free, first row pinned to (1,0,...,0).
* ``CPTP``: Choi-factor parameterization; complete positivity and trace
  preservation hold for every parameter vector by construction.
* ``depol-overrotation``: a two-parameter X(pi/2) gate (depolarization
  rate and over-rotation angle).
* ``fixed-depol-wrapper``: a fixed left-composed matrix around another
  operator.
"""

from __future__ import annotations

import numpy as np

from .basis import choi_to_ptm, num_lines_for_dim, ptm_to_choi


class OpTransformError(ValueError):
    """Raised when an operator kind cannot represent a gauge transform."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.flags.writeable = False
    return a


def _tp_row(dim: int) -> np.ndarray:
    row = np.zeros(dim)
    row[0] = 1.0
    return row


def enforce_tp_row(mat: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Pin the first row to (1,0,...,0); error if it is not close already."""
    dev = np.max(np.abs(mat[0] - _tp_row(mat.shape[1])))
    if dev > tol:
        raise ValueError(f"matrix is not trace preserving (first-row deviation {dev:.3g})")
    out = np.array(mat, dtype=float)
    out[0] = _tp_row(mat.shape[1])
    return out


class StaticOp:
    """Zero-parameter fixed superoperator."""

    kind = "static"

    def __init__(self, matrix: np.ndarray):
        self._mat = _frozen(matrix)
        self.dim = self._mat.shape[0]

    @property
    def num_params(self) -> int:
        return 0

    def dense(self) -> np.ndarray:
        return self._mat

    def to_vector(self) -> np.ndarray:
        return np.empty(0)

    def from_vector(self, v) -> None:
        if len(v):
            raise ValueError("static operator takes no parameters")

    def dparams(self) -> np.ndarray:
        return np.empty((0, self.dim, self.dim))

    def transformed(self, s, s_inv):
        raise OpTransformError("a static operator cannot be gauge-transformed")

    def copy(self) -> "StaticOp":
        return StaticOp(self._mat)


class FullTPOp:
    """Trace-preserving operator with all non-first-row entries free."""

    kind = "full-TP"

    def __init__(self, matrix: np.ndarray):
        mat = enforce_tp_row(np.asarray(matrix, dtype=float))
        self.dim = mat.shape[0]
        self._mat = mat

    @property
    def num_params(self) -> int:
        return self.dim * (self.dim - 1)

    def dense(self) -> np.ndarray:
        return self._mat

    def to_vector(self) -> np.ndarray:
        return self._mat[1:].ravel().copy()

    def from_vector(self, v) -> None:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} parameters, got {v.shape}")
        mat = np.empty((self.dim, self.dim))
        mat[0] = _tp_row(self.dim)
        mat[1:] = v.reshape(self.dim - 1, self.dim)
        self._mat = mat

    def dparams(self) -> np.ndarray:
        d = self.dim
        out = np.zeros((self.num_params, d, d))
        for k in range(self.num_params):
            out[k, 1 + k // d, k % d] = 1.0
        return out

    def transformed(self, s, s_inv) -> "FullTPOp":
        return FullTPOp(enforce_tp_row(s_inv @ self._mat @ s))

    def copy(self) -> "FullTPOp":
        return FullTPOp(self._mat)


def _tp_normalize_choi(j: np.ndarray, d: int) -> np.ndarray:
    """Rescale a PSD Choi candidate so the input-side trace-out is I/d."""
    dd = j.shape[0] // d
    b = np.trace(j.reshape(d, dd, d, dd), axis1=1, axis2=3)
    evals, evecs = np.linalg.eigh(b)
    evals = np.maximum(evals, 1e-14)
    b_isqrt = (evecs / np.sqrt(evals)) @ evecs.conj().T
    x = np.kron(b_isqrt, np.eye(dd))
    return x @ j @ x.conj().T / d


def _project_choi_cptp(j: np.ndarray, d: int, n_iter: int = 200, tol: float = 1e-12):
    """Alternating projections onto the CP cone and the TP affine subspace."""
    dd = j.shape[0] // d
    cur = j.copy()
    for _ in range(n_iter):
        evals, evecs = np.linalg.eigh((cur + cur.conj().T) / 2)
        clipped = (evecs * np.maximum(evals, 0.0)) @ evecs.conj().T
        delta = np.trace(clipped.reshape(d, dd, d, dd), axis1=1, axis2=3) - np.eye(d) / d
        nxt = clipped - np.kron(delta, np.eye(dd)) / dd
        if np.max(np.abs(nxt - cur)) < tol:
            cur = nxt
            break
        cur = nxt
    evals, evecs = np.linalg.eigh((cur + cur.conj().T) / 2)
    cur = (evecs * np.maximum(evals, 0.0)) @ evecs.conj().T
    return _tp_normalize_choi(cur, d), float(np.linalg.norm(cur - j))


def _choi_factor(j: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L L^dag = J (PSD J, possibly singular)."""
    evals, evecs = np.linalg.eigh((j + j.conj().T) / 2)
    evals = np.maximum(evals, 0.0)
    x = (evecs * np.sqrt(evals)) @ evecs.conj().T
    # X X^dag = J; an LQ decomposition of X gives a lower-triangular factor
    q, r = np.linalg.qr(x.conj().T)
    low = r.conj().T
    phases = np.exp(-1j * np.angle(np.diagonal(low)))
    return low * phases[np.newaxis, :]


class CPTPOp:
    """CPTP operator parameterized by its Choi-matrix Cholesky factor.

    Parameters are the real diagonal and the real/imaginary parts of the
    strictly-lower entries of a factor L; the map is dense(J) where
    J = normalize(L L^dag).  The interior of the CPTP set is reached
    smoothly and without constraints, at the cost of a d^2-dimensional
    scale redundancy that the fitters' damping absorbs.
    """

    kind = "CPTP"

    def __init__(self, params: np.ndarray, dim: int):
        self.dim = dim
        self._d = 2 ** num_lines_for_dim(dim)
        self.projection_distance = 0.0
        self.from_vector(params)

    @classmethod
    def from_dense(cls, matrix: np.ndarray, tol: float = 1e-10) -> "CPTPOp":
        matrix = np.asarray(matrix, dtype=float)
        dim = matrix.shape[0]
        d = 2 ** num_lines_for_dim(dim)
        j = ptm_to_choi(enforce_tp_row(matrix))
        j = (j + j.conj().T) / 2
        evals, evecs = np.linalg.eigh(j)
        if evals.min() < -tol:
            j, dist = _project_choi_cptp(j, d)
        else:
            if evals.min() < 0:
                j = (evecs * np.maximum(evals, 0.0)) @ evecs.conj().T
            j = _tp_normalize_choi(j, d)
            dist = 0.0
        op = cls(cls._params_from_choi(j, dim), dim)
        op.projection_distance = dist
        return op

    @staticmethod
    def num_params_for_dim(dim: int) -> int:
        return dim * dim

    @property
    def num_params(self) -> int:
        return self.dim * self.dim

    @staticmethod
    def _params_from_choi(j: np.ndarray, dim: int) -> np.ndarray:
        low = _choi_factor(j)
        params = np.empty(dim * dim)
        params[:dim] = np.real(np.diagonal(low))
        k = dim
        for r in range(1, dim):
            for c in range(r):
                params[k] = low[r, c].real
                params[k + 1] = low[r, c].imag
                k += 2
        return params

    def _factor(self) -> np.ndarray:
        dim = self.dim
        low = np.zeros((dim, dim), dtype=complex)
        np.fill_diagonal(low, self._params[:dim])
        k = dim
        for r in range(1, dim):
            for c in range(r):
                low[r, c] = self._params[k] + 1j * self._params[k + 1]
                k += 2
        return low

    def dense(self) -> np.ndarray:
        return self._mat

    def _rebuild(self) -> None:
        low = self._factor()
        j = low @ low.conj().T
        if np.trace(j).real < 1e-12:
            j = j + np.eye(j.shape[0]) * (1.0 / j.shape[0])
        j = _tp_normalize_choi(j, self._d)
        self._mat = _frozen(enforce_tp_row(choi_to_ptm(j), tol=1e-8))

    def to_vector(self) -> np.ndarray:
        return self._params.copy()

    def from_vector(self, v) -> None:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} parameters, got {v.shape}")
        self._params = v.copy()
        self._rebuild()

    def dparams(self) -> np.ndarray:
        # central finite differences on the local map; cheap and robust
        n = self.num_params
        out = np.empty((n, self.dim, self.dim))
        base = self._params
        saved = self._mat
        for k in range(n):
            h = 1e-6 * max(1.0, abs(base[k]))
            for sign in (1.0, -1.0):
                self._params = base.copy()
                self._params[k] += sign * h
                self._rebuild()
                if sign > 0:
                    plus = self._mat
                else:
                    minus = self._mat
            out[k] = (plus - minus) / (2 * h)
        self._params = base
        self._mat = saved
        return out

    def choi_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(ptm_to_choi(self._mat))

    def transformed(self, s, s_inv):
        # general similarity leaves the CPTP cone; represent exactly as full-TP
        return FullTPOp(enforce_tp_row(s_inv @ self._mat @ s))

    def copy(self) -> "CPTPOp":
        op = CPTPOp(self._params, self.dim)
        op.projection_distance = self.projection_distance
        return op


class DepolOverrotXpi2Op:
    """X(pi/2) gate with a depolarization rate and an over-rotation angle.

    With theta = (pi/2 + over_rotation)/2 and a = 1 - depol the transfer
    matrix is [[1,0,0,0],[0,a,0,0],[0,0,c,-b],[0,0,b,c]] where
    b = a*2*cos(theta)*sin(theta) and c = a*(sin(theta)^2 - cos(theta)^2).
    """

    kind = "depol-overrotation"

    def __init__(self, depol: float = 0.0, over_rotation: float = 0.0):
        self.dim = 4
        self.from_vector(np.array([depol, over_rotation], dtype=float))

    @property
    def num_params(self) -> int:
        return 2

    @property
    def depol(self) -> float:
        return self._params[0]

    @property
    def over_rotation(self) -> float:
        return self._params[1]

    def dense(self) -> np.ndarray:
        return self._mat

    def to_vector(self) -> np.ndarray:
        return self._params.copy()

    def from_vector(self, v) -> None:
        v = np.asarray(v, dtype=float)
        if v.shape != (2,):
            raise ValueError("depol-overrotation operator takes exactly 2 parameters")
        self._params = v.copy()
        depol, over = v
        theta = (np.pi / 2 + over) / 2
        a = 1.0 - depol
        b = a * 2 * np.cos(theta) * np.sin(theta)
        c = a * (np.sin(theta) ** 2 - np.cos(theta) ** 2)
        self._mat = _frozen(np.array([[1, 0, 0, 0],
                                      [0, a, 0, 0],
                                      [0, 0, c, -b],
                                      [0, 0, b, c]]))

    def dparams(self) -> np.ndarray:
        depol, over = self._params
        theta = (np.pi / 2 + over) / 2
        a = 1.0 - depol
        s2, c2 = np.sin(2 * theta), np.cos(2 * theta)
        d_depol = np.array([[0, 0, 0, 0],
                            [0, -1, 0, 0],
                            [0, 0, c2, s2],
                            [0, 0, -s2, c2]], dtype=float)
        d_over = np.array([[0, 0, 0, 0],
                           [0, 0, 0, 0],
                           [0, 0, a * s2, -a * c2],
                           [0, 0, a * c2, a * s2]], dtype=float)
        return np.array([d_depol, d_over])

    def transformed(self, s, s_inv):
        raise OpTransformError("a depol-overrotation operator cannot be gauge-transformed")

    def copy(self) -> "DepolOverrotXpi2Op":
        return DepolOverrotXpi2Op(*self._params)


class FixedDepolWrapperOp:
    """A fixed matrix left-composed around an inner parameterized operator."""

    kind = "fixed-depol-wrapper"

    def __init__(self, factor: np.ndarray, inner):
        if isinstance(inner, FixedDepolWrapperOp):
            factor = np.asarray(factor, dtype=float) @ inner.factor
            inner = inner.inner
        self.factor = _frozen(factor)
        self.inner = inner
        self.dim = self.factor.shape[0]
        if inner.dim != self.dim:
            raise ValueError("wrapper factor and inner operator dimensions differ")

    @property
    def num_params(self) -> int:
        return self.inner.num_params

    def dense(self) -> np.ndarray:
        return self.factor @ self.inner.dense()

    def to_vector(self) -> np.ndarray:
        return self.inner.to_vector()

    def from_vector(self, v) -> None:
        self.inner.from_vector(v)

    def dparams(self) -> np.ndarray:
        return np.einsum("ab,pbc->pac", self.factor, self.inner.dparams())

    def transformed(self, s, s_inv):
        raise OpTransformError("a fixed-depol wrapper cannot be gauge-transformed")

    def copy(self) -> "FixedDepolWrapperOp":
        return FixedDepolWrapperOp(self.factor, self.inner.copy())


def depolarizing_ptm(dim: int, rate: float) -> np.ndarray:
    """diag(1, 1-rate, ..., 1-rate) in the normalized Pauli basis."""
    d = np.full(dim, 1.0 - rate)
    d[0] = 1.0
    return np.diag(d)


def depolarize_op(op, rate: float):
    """Left-compose an operator with uniform depolarization, absorbing the
    factor into the operator's own kind where that is exact."""
    dmat = depolarizing_ptm(op.dim, rate)
    if isinstance(op, StaticOp):
        return StaticOp(dmat @ op.dense())
    if isinstance(op, FullTPOp):
        return FullTPOp(dmat @ op.dense())
    if isinstance(op, CPTPOp):
        return CPTPOp.from_dense(dmat @ op.dense())
    if isinstance(op, DepolOverrotXpi2Op):
        new_depol = 1.0 - (1.0 - rate) * (1.0 - op.depol)
        return DepolOverrotXpi2Op(new_depol, op.over_rotation)
    return FixedDepolWrapperOp(dmat, op.copy())


# ---------------------------------------------------------------------------
# SPAM vectors

class StaticVec:
    kind = "static"

    def __init__(self, vec: np.ndarray):
        self._vec = _frozen(vec)
        self.dim = self._vec.shape[0]

    @property
    def num_params(self) -> int:
        return 0

    def dense(self) -> np.ndarray:
        return self._vec

    def to_vector(self) -> np.ndarray:
        return np.empty(0)

    def from_vector(self, v) -> None:
        if len(v):
            raise ValueError("static vector takes no parameters")

    def dparams(self) -> np.ndarray:
        return np.empty((0, self.dim))

    def copy(self) -> "StaticVec":
        return StaticVec(self._vec)


class TPPrepVec:
    """Preparation vector with the unit-trace component pinned to 1/sqrt(d)."""

    kind = "full-TP"

    def __init__(self, vec: np.ndarray):
        vec = np.asarray(vec, dtype=float)
        self.dim = vec.shape[0]
        n = num_lines_for_dim(self.dim)
        self._first = 1.0 / np.sqrt(2.0 ** n)
        if abs(vec[0] - self._first) > 1e-6:
            raise ValueError(f"prep vector first component {vec[0]:.6g} != 1/sqrt(d)")
        self._vec = vec.copy()
        self._vec[0] = self._first

    @property
    def num_params(self) -> int:
        return self.dim - 1

    def dense(self) -> np.ndarray:
        return self._vec.copy()

    def to_vector(self) -> np.ndarray:
        return self._vec[1:].copy()

    def from_vector(self, v) -> None:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim - 1,):
            raise ValueError(f"expected {self.dim - 1} parameters")
        self._vec = np.concatenate([[self._first], v])

    def dparams(self) -> np.ndarray:
        out = np.zeros((self.dim - 1, self.dim))
        out[np.arange(self.dim - 1), np.arange(1, self.dim)] = 1.0
        return out

    def copy(self) -> "TPPrepVec":
        return TPPrepVec(self._vec)


class FullEffectVec:
    """Fully parameterized effect vector (all d^2 components free)."""

    kind = "full-TP"

    def __init__(self, vec: np.ndarray):
        self._vec = np.asarray(vec, dtype=float).copy()
        self.dim = self._vec.shape[0]

    @property
    def num_params(self) -> int:
        return self.dim

    def dense(self) -> np.ndarray:
        return self._vec.copy()

    def to_vector(self) -> np.ndarray:
        return self._vec.copy()

    def from_vector(self, v) -> None:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} parameters")
        self._vec = v.copy()

    def dparams(self) -> np.ndarray:
        return np.eye(self.dim)

    def copy(self) -> "FullEffectVec":
        return FullEffectVec(self._vec)
