"""Gate-set models: named operators plus SPAM with one flat parameter vector.

A model covers a fixed tuple of lines.  Its operators are keyed by gate
label; an explicit ``idle`` operator (when present) is the map applied by
an empty layer.  Lines absent from a non-empty layer get the identity.
The model's parameter vector is the concatenation of its elements'
vectors in a fixed order: prep, effects, idle, then gates sorted by
label.  Models have value semantics; fitting mutates a private copy
through ``from_vector``.
"""

from __future__ import annotations

import numpy as np

from .basis import (computational_effect_vecs, computational_prep_vec,
                    identity_effect_vec, outcome_labels)
from .circuits import GateLabel, line_sort_key
from .ops import (CPTPOp, FullEffectVec, FullTPOp, OpTransformError, StaticOp,
                  StaticVec, TPPrepVec, depolarize_op, depolarizing_ptm,
                  enforce_tp_row)

COMPLEMENT = "complement"


class SpamPair:
    """Preparation vector plus an effect for every outcome label.

    The effect listed as the complement is never parameterized; its dense
    vector is the identity-effect vector minus the other effects, so the
    effects always sum to a complete measurement.
    """

    def __init__(self, prep, effects, complement_label=None):
        self.prep = prep
        self.effects = dict(effects)
        self.labels = tuple(self.effects)
        if complement_label is None:
            complement_label = self.labels[-1]
        if complement_label not in self.effects:
            raise ValueError(f"complement label {complement_label!r} not among effects")
        self.complement_label = complement_label
        self.dim = prep.dim

    @classmethod
    def computational(cls, n_lines: int, static: bool = False) -> "SpamPair":
        prep_vec = computational_prep_vec(n_lines)
        effect_vecs = computational_effect_vecs(n_lines)
        labels = outcome_labels(n_lines)
        if static:
            prep = StaticVec(prep_vec)
            effects = {lbl: StaticVec(effect_vecs[k]) for k, lbl in enumerate(labels)}
        else:
            prep = TPPrepVec(prep_vec)
            effects = {}
            for k, lbl in enumerate(labels[:-1]):
                effects[lbl] = FullEffectVec(effect_vecs[k])
            effects[labels[-1]] = StaticVec(effect_vecs[-1])
        return cls(prep, effects, complement_label=labels[-1])

    def dense_prep(self) -> np.ndarray:
        return np.asarray(self.prep.dense(), dtype=float)

    def dense_effects(self) -> np.ndarray:
        """Effect rows in label order, complement filled in by completeness."""
        rows = np.empty((len(self.labels), self.dim))
        total = identity_effect_vec(self.dim)
        acc = np.zeros(self.dim)
        for k, lbl in enumerate(self.labels):
            if lbl != self.complement_label:
                rows[k] = self.effects[lbl].dense()
                acc += rows[k]
        ci = self.labels.index(self.complement_label)
        rows[ci] = total - acc
        return rows

    def param_elements(self):
        """(name, element) pairs in parameter order, complement omitted."""
        items = [("prep", self.prep)]
        for lbl in self.labels:
            if lbl != self.complement_label:
                items.append((f"effect:{lbl}", self.effects[lbl]))
        return items

    def copy(self) -> "SpamPair":
        return SpamPair(self.prep.copy(),
                        {l: e.copy() for l, e in self.effects.items()},
                        self.complement_label)


def _gate_sort_key(label: GateLabel):
    return (label.name, tuple(line_sort_key(t) for t in label.targets))


class GateSetModel:
    """Gates, idle, and SPAM over a fixed line tuple."""

    def __init__(self, lines, gates, spam: SpamPair, idle=None):
        self.lines = tuple(lines)
        self.gates = dict(gates)
        self.spam = spam
        self.idle = idle
        self.dim = 4 ** len(self.lines)
        if spam.dim != self.dim:
            raise ValueError("SPAM dimension does not match model lines")
        if idle is not None and idle.dim != self.dim:
            raise ValueError("idle operator dimension does not match model lines")
        for label, op in self.gates.items():
            if op.dim != 4 ** len(label.targets):
                raise ValueError(f"operator for {label} has dimension {op.dim}, "
                                 f"expected {4 ** len(label.targets)}")
            undeclared = set(label.targets) - set(self.lines)
            if undeclared:
                raise ValueError(f"gate {label} targets lines outside the model: {undeclared}")

    # -- parameter plumbing -------------------------------------------------

    def param_elements(self):
        items = self.spam.param_elements()
        if self.idle is not None:
            items.append(("idle", self.idle))
        for label in sorted(self.gates, key=_gate_sort_key):
            items.append((f"gate:{label}", self.gates[label]))
        return items

    def param_segments(self):
        """(name, element, slice) triples over the flat parameter vector."""
        segments = []
        k = 0
        for name, el in self.param_elements():
            n = el.num_params
            segments.append((name, el, slice(k, k + n)))
            k += n
        return segments

    @property
    def num_params(self) -> int:
        return sum(el.num_params for _, el in self.param_elements())

    def to_vector(self) -> np.ndarray:
        parts = [el.to_vector() for _, el in self.param_elements()]
        return np.concatenate(parts) if parts else np.empty(0)

    def from_vector(self, v) -> None:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} parameters, got {v.shape}")
        for _, el, sl in self.param_segments():
            el.from_vector(v[sl])

    # -- structure ----------------------------------------------------------

    @property
    def outcome_labels(self) -> tuple[str, ...]:
        return self.spam.labels

    def copy(self) -> "GateSetModel":
        return GateSetModel(self.lines,
                            {l: op.copy() for l, op in self.gates.items()},
                            self.spam.copy(),
                            None if self.idle is None else self.idle.copy())

    def probs(self, circuit):
        from .sim import probs
        return probs(self, circuit)

    def __repr__(self):
        gates = ", ".join(str(l) for l in sorted(self.gates, key=_gate_sort_key))
        return (f"GateSetModel(lines={self.lines}, gates=[{gates}], "
                f"num_params={self.num_params})")


# ---------------------------------------------------------------------------
# model-level operations

def depolarize(model: GateSetModel, op_noise: float = 0.0,
               spam_noise: float = 0.0) -> GateSetModel:
    """Left-compose every operator with uniform depolarization and shrink
    the SPAM vectors toward maximally mixed."""
    for rate, which in ((op_noise, "op_noise"), (spam_noise, "spam_noise")):
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"{which} must lie in [0, 1], got {rate}")
    gates = {l: depolarize_op(op, op_noise) for l, op in model.gates.items()}
    idle = None if model.idle is None else depolarize_op(model.idle, op_noise)
    dmat = depolarizing_ptm(model.dim, spam_noise)
    spam = model.spam.copy()
    spam.prep = _shrink_vec(spam.prep, dmat)
    for lbl in spam.labels:
        if lbl != spam.complement_label:
            spam.effects[lbl] = _shrink_vec(spam.effects[lbl], dmat)
    return GateSetModel(model.lines, gates, spam, idle)


def _shrink_vec(vec_el, dmat):
    new = dmat @ vec_el.dense()
    if isinstance(vec_el, TPPrepVec):
        return TPPrepVec(new)
    if isinstance(vec_el, FullEffectVec):
        return FullEffectVec(new)
    return StaticVec(new)


def replace_op(model: GateSetModel, label: GateLabel, op) -> GateSetModel:
    """Swap a single gate's operator (dimensions must match)."""
    if label not in model.gates:
        raise KeyError(f"model has no gate {label}")
    if op.dim != model.gates[label].dim:
        raise ValueError(f"replacement operator dimension {op.dim} != "
                         f"{model.gates[label].dim}")
    out = model.copy()
    out.gates[label] = op
    return out


_GATE_KINDS = ("full-TP", "CPTP", "static")


def _convert_op(op, kind: str):
    dense = op.dense()
    if kind == "full-TP":
        return FullTPOp(enforce_tp_row(dense, tol=1e-8))
    if kind == "CPTP":
        return CPTPOp.from_dense(dense)
    if kind == "static":
        return StaticOp(dense)
    raise ValueError(f"unsupported parameterization kind {kind!r}; "
                     f"choose one of {_GATE_KINDS}")


def set_parameterization(model: GateSetModel, kind: str) -> GateSetModel:
    """Re-express every operator in the given kind, preserving dense
    matrices wherever the kind can represent them exactly (CPTP projects
    non-CP matrices and records the projection distance on the operator).
    SPAM becomes full-TP vectors, or static when kind is static."""
    if kind not in _GATE_KINDS:
        raise ValueError(f"unsupported parameterization kind {kind!r}")
    gates = {l: _convert_op(op, kind) for l, op in model.gates.items()}
    idle = None if model.idle is None else _convert_op(model.idle, kind)
    spam = model.spam.copy()
    if kind == "static":
        spam.prep = StaticVec(spam.prep.dense())
        for lbl in spam.labels:
            spam.effects[lbl] = StaticVec(spam.effects[lbl].dense())
    else:
        spam.prep = TPPrepVec(spam.prep.dense())
        for lbl in spam.labels:
            if lbl != spam.complement_label:
                spam.effects[lbl] = FullEffectVec(spam.effects[lbl].dense())
    return GateSetModel(model.lines, gates, spam, idle)


def gauge_transform(model: GateSetModel, s: np.ndarray) -> GateSetModel:
    """Similarity-transform the whole model: G -> S^-1 G S, prep -> S^-1 prep,
    effects -> E^T S.  Outcome probabilities are exactly preserved.

    Raises OpTransformError if any operator kind cannot represent its
    transformed matrix (static and custom gates).
    """
    s = np.asarray(s, dtype=float)
    if s.shape != (model.dim, model.dim):
        raise ValueError(f"gauge matrix must be {model.dim}x{model.dim}")
    row = np.zeros(model.dim)
    row[0] = 1.0
    if np.max(np.abs(s[0] - row)) > 1e-9:
        raise ValueError("gauge matrix must be trace preserving (first row (1,0,...,0))")
    s = s.copy()
    s[0] = row
    try:
        s_inv = np.linalg.inv(s)
    except np.linalg.LinAlgError:
        raise ValueError("gauge matrix is singular") from None
    s_inv[0] = row
    gates = {}
    for label, op in model.gates.items():
        if op.dim != model.dim:
            raise OpTransformError(
                f"gate {label} acts on a subset of lines; gauge transforms of "
                f"embedded operators are not representable")
        gates[label] = op.transformed(s, s_inv)
    idle = None if model.idle is None else model.idle.transformed(s, s_inv)
    spam = model.spam.copy()
    spam.prep = _transform_prep(spam.prep, s_inv)
    for lbl in spam.labels:
        if lbl != spam.complement_label:
            spam.effects[lbl] = _transform_effect(spam.effects[lbl], s)
    return GateSetModel(model.lines, gates, spam, idle)


def _transform_prep(prep, s_inv):
    new = s_inv @ prep.dense()
    if isinstance(prep, TPPrepVec):
        new[0] = prep.dense()[0]
        return TPPrepVec(new)
    return StaticVec(new)


def _transform_effect(eff, s):
    new = s.T @ eff.dense()
    if isinstance(eff, FullEffectVec):
        return FullEffectVec(new)
    return StaticVec(new)


# ---------------------------------------------------------------------------
# gauge direction counting (degrees-of-freedom bookkeeping)

def tp_gauge_generators(dim: int) -> np.ndarray:
    """Basis of infinitesimal TP gauge directions (first row zero)."""
    gens = []
    for r in range(1, dim):
        for c in range(dim):
            e = np.zeros((dim, dim))
            e[r, c] = 1.0
            gens.append(e)
    return np.array(gens)


def _element_tangent(el):
    """Tangent basis of an element's dense representation, (n_params, ...)."""
    return el.dparams()


def num_nongauge_params(model: GateSetModel, tol_factor: float = 1e-7) -> int:
    """Parameter count minus the numerical rank of the gauge-direction
    Jacobian expressed in model-parameter space.

    Gauge directions whose dense-space motion cannot be represented by the
    model's parameterization (static or custom operators) do not reduce
    the count.
    """
    n_params = model.num_params
    if n_params == 0:
        return 0
    gens = tp_gauge_generators(model.dim)
    segments = model.param_segments()
    cols = []
    for e in gens:
        col = np.zeros(n_params)
        representable = True
        for name, el, sl in segments:
            if name == "prep":
                delta = -e @ el.dense()
            elif name.startswith("effect:"):
                delta = e.T @ el.dense()
            else:  # idle or gate
                if el.dim != model.dim:
                    representable = False
                    break
                m = el.dense()
                delta = m @ e - e @ m
                delta = delta.ravel()
            delta = np.asarray(delta).ravel()
            tangent = _element_tangent(el).reshape(el.num_params, -1)
            if el.num_params == 0:
                if np.linalg.norm(delta) > 1e-9:
                    representable = False
                    break
                continue
            coef, res, _, _ = np.linalg.lstsq(tangent.T, delta, rcond=None)
            resid = np.linalg.norm(tangent.T @ coef - delta)
            if resid > 1e-7 * max(1.0, np.linalg.norm(delta)):
                representable = False
                break
            col[sl] = coef
        if representable:
            cols.append(col)
    if not cols:
        return n_params
    jac = np.array(cols).T
    svals = np.linalg.svd(jac, compute_uv=False)
    rank = int(np.sum(svals > tol_factor * svals[0])) if svals[0] > 0 else 0
    return n_params - rank
