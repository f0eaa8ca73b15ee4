"""Linear-inversion tomography from fiducial-sandwich frequencies.

With measurement rows R[(i,o)] = E_o^T F_i and preparation columns
C[:,j] = F_j rho, the observed tables are A = R C and B_g = R G C, so a
rank-d^2 SVD A = U S V^T yields estimates S^-1 U^T B_g V = N^-1 G N in
the single shared frame N = C V.  The returned model is re-expressed in
an approximate target frame (N_hat = C_target V), which leaves it
gauge-equivalent to the data's generating gates while making it directly
comparable to, and a good seed near, the target.
"""

from __future__ import annotations

import numpy as np

from .circuits import Circuit, Layer, concat, empty_circuit, serialize_circuit
from .gstdesign import GstDesign, check_informational_completeness, operation_circuits
from .models import GateSetModel, SpamPair
from .ops import FullEffectVec, FullTPOp, StaticVec, TPPrepVec
from .sim import propagate_state


class LgstError(ValueError):
    pass


def _freq_rows(ds, circuits):
    counts = ds.counts_for(circuits)
    totals = counts.sum(axis=1, keepdims=True)
    if np.any(totals <= 0):
        k = int(np.argmax(totals <= 0))
        raise LgstError(f"no counts for circuit {serialize_circuit(circuits[k])}")
    return counts / totals


def run_lgst(design: GstDesign, ds, target: GateSetModel) -> GateSetModel:
    """Linear-inversion estimate of every operation in the target model."""
    prep_fids = design.prep_fiducials
    meas_fids = design.meas_fiducials
    empties = [k for k, f in enumerate(prep_fids) if f.depth == 0]
    if not empties or not any(f.depth == 0 for f in meas_fids):
        raise LgstError("LGST requires the empty circuit among both fiducial lists")
    j_empty = empties[0]
    check_informational_completeness(target, prep_fids, meas_fids)

    labels = target.outcome_labels
    n_out = len(labels)
    dim = target.dim
    n_m, n_p = len(meas_fids), len(prep_fids)

    def table_for(mid: Circuit) -> np.ndarray:
        """Stacked frequency table [(i,o), j] for F_j . mid . F_i."""
        out = np.empty((n_m * n_out, n_p))
        for j, fp in enumerate(prep_fids):
            for i, fm in enumerate(meas_fids):
                c = concat(concat(fp, mid), fm)
                if c not in ds:
                    raise LgstError(f"dataset is missing LGST circuit {serialize_circuit(c)}")
                row = ds.counts[ds.circuit_index(c)]
                tot = row.sum()
                if tot <= 0:
                    raise LgstError(f"no counts for circuit {serialize_circuit(c)}")
                out[i * n_out:(i + 1) * n_out, j] = row / tot
        return out

    nothing = empty_circuit(target.lines)
    a_tilde = table_for(nothing)
    u, s, vt = np.linalg.svd(a_tilde, full_matrices=False)
    if s[dim - 1] <= 1e-10 * s[0]:
        raise LgstError(f"fiducial Gram matrix is numerically singular "
                        f"(sigma_{dim} / sigma_1 = {s[dim-1] / s[0]:.3g})")
    u = u[:, :dim]
    s = s[:dim]
    v = vt[:dim].T  # (n_p, dim)
    sinv_ut = (u / s).T  # (dim, n_m*n_out)

    # approximate target frame: N_hat = C_target V
    c_target = np.column_stack([propagate_state(target, f) for f in prep_fids])
    n_hat = c_target @ v
    n_hat_inv = np.linalg.inv(n_hat)

    ops = operation_circuits(target)
    gate_labels = sorted(target.gates, key=lambda l: (l.name, tuple(map(str, l.targets))))
    estimates = {}
    for circ, key in zip(ops, list(gate_labels) + (["(idle)"] if target.idle is not None else [])):
        raw = sinv_ut @ table_for(circ) @ v
        mat = n_hat @ raw @ n_hat_inv
        mat[0, :] = 0.0
        mat[0, 0] = 1.0
        estimates[key] = FullTPOp(mat)

    rho_raw = sinv_ut @ a_tilde[:, j_empty]
    rho = n_hat @ rho_raw
    rho[0] = target.spam.dense_prep()[0]

    i_empty = next(k for k, f in enumerate(meas_fids) if f.depth == 0)
    effect_rows = a_tilde[i_empty * n_out:(i_empty + 1) * n_out, :] @ v @ n_hat_inv

    effects = {}
    comp = target.spam.complement_label
    for k, lbl in enumerate(labels):
        if lbl == comp:
            effects[lbl] = StaticVec(effect_rows[k])  # replaced by completeness below
        else:
            effects[lbl] = FullEffectVec(effect_rows[k])
    spam = SpamPair(TPPrepVec(rho), effects, complement_label=comp)

    gates = {lbl: estimates[lbl] for lbl in gate_labels}
    idle = estimates.get("(idle)")
    return GateSetModel(target.lines, gates, spam, idle)
