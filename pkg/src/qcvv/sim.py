"""Forward simulation: outcome probabilities, parameter Jacobians, sampling.

Probabilities are never clipped here; likelihood code owns its own
regularization.  Bulk evaluation over a state-mode tree reproduces the
per-circuit propagation exactly (same floating-point operation order),
while sharing the work of every repeated circuit prefix.
"""

from __future__ import annotations

import numpy as np

from .basis import embed_ptm, _embed_perm
from .circuits import Circuit, Layer, serialize_circuit
from .data import DataSet
from .evaltree import LEAF, EvalTree, build_eval_tree
from .models import GateSetModel


class SimulationError(ValueError):
    pass


def _gate_positions(model: GateSetModel, label) -> tuple[int, ...]:
    try:
        return tuple(model.lines.index(t) for t in label.targets)
    except ValueError:
        raise SimulationError(f"gate {label} targets lines outside the model "
                              f"{model.lines}") from None


def _layer_ptm(model: GateSetModel, layer: Layer) -> np.ndarray:
    n = len(model.lines)
    if not layer.labels:
        return model.idle.dense() if model.idle is not None else np.eye(model.dim)
    mat = None
    for label in layer.labels:
        op = model.gates.get(label)
        if op is None:
            raise SimulationError(f"unknown gate label {label} (model has "
                                  f"{sorted(map(str, model.gates))})")
        emb = embed_ptm(op.dense(), _gate_positions(model, label), n)
        mat = emb if mat is None else emb @ mat
    return mat


def circuit_matrix(model: GateSetModel, circuit: Circuit) -> np.ndarray:
    """Full transfer matrix of a circuit (layers composed in time order)."""
    mat = np.eye(model.dim)
    for layer in circuit.layers:
        mat = _layer_ptm(model, layer) @ mat
    return mat


def propagate_state(model: GateSetModel, circuit: Circuit) -> np.ndarray:
    state = model.spam.dense_prep()
    for layer in circuit.layers:
        state = _layer_ptm(model, layer) @ state
    return state


def probs(model: GateSetModel, circuit: Circuit) -> dict[str, float]:
    """Outcome distribution of one circuit: left-to-right state propagation."""
    if not set(circuit.lines) <= set(model.lines):
        raise SimulationError(f"circuit lines {circuit.lines} not covered by model "
                              f"lines {model.lines}")
    state = model.spam.dense_prep()
    for layer in circuit.layers:
        state = _layer_ptm(model, layer) @ state
    effects = model.spam.dense_effects()
    vals = effects @ state
    return {lbl: float(v) for lbl, v in zip(model.outcome_labels, vals)}


def _tree_states(model: GateSetModel, tree: EvalTree) -> np.ndarray:
    ptms = [_layer_ptm(model, layer) for layer in tree.layers]
    prep = model.spam.dense_prep()
    states = np.empty((tree.num_nodes, model.dim))
    for node in range(tree.num_nodes):
        if tree.node_kind[node] == LEAF:
            states[node] = ptms[tree.node_a[node]] @ prep
        else:
            lid = tree.node_layer(node)
            states[node] = ptms[lid] @ states[tree.node_a[node]]
    return states


def _tree_matrices(model: GateSetModel, tree: EvalTree) -> np.ndarray:
    ptms = [_layer_ptm(model, layer) for layer in tree.layers]
    mats = np.empty((tree.num_nodes, model.dim, model.dim))
    for node in range(tree.num_nodes):
        if tree.node_kind[node] == LEAF:
            mats[node] = ptms[tree.node_a[node]]
        else:
            mats[node] = mats[tree.node_b[node]] @ mats[tree.node_a[node]]
    return mats


def bulk_probs_array(model: GateSetModel, tree: EvalTree) -> np.ndarray:
    """(n_circuits, n_outcomes) probability table in model outcome order."""
    prep = model.spam.dense_prep()
    effects = model.spam.dense_effects()
    out = np.empty((len(tree.circuits), effects.shape[0]))
    if tree.mode == "state":
        states = _tree_states(model, tree)
        for k, node in enumerate(tree.circuit_node):
            vec = prep if node == -1 else states[node]
            out[k] = effects @ vec
    else:
        mats = _tree_matrices(model, tree)
        for k, node in enumerate(tree.circuit_node):
            vec = prep if node == -1 else mats[node] @ prep
            out[k] = effects @ vec
    return out


def bulk_probs(model: GateSetModel, tree: EvalTree) -> dict[Circuit, dict[str, float]]:
    """Per-circuit outcome distributions for every circuit in the tree."""
    table = bulk_probs_array(model, tree)
    labels = model.outcome_labels
    return {c: {lbl: float(v) for lbl, v in zip(labels, table[k])}
            for k, c in enumerate(tree.circuits)}


def _layer_contributions(model: GateSetModel, tree: EvalTree, segments):
    """Per distinct layer: ptm plus parameterized-op contribution records."""
    n = len(model.lines)
    seg_slice = {id(el): sl for _, el, sl in segments}
    dparams_cache = {id(el): el.dparams() for _, el, sl in segments}
    infos = []
    for layer in tree.layers:
        ptm = _layer_ptm(model, layer)
        contribs = []
        if not layer.labels:
            if model.idle is not None and model.idle.num_params > 0:
                op = model.idle
                contribs.append((seg_slice[id(op)],
                                 dparams_cache[id(op)].reshape(op.num_params, -1),
                                 tuple(range(n)), None))
        else:
            embeds = []
            for label in layer.labels:
                op = model.gates[label]
                embeds.append((label, op, embed_ptm(op.dense(), _gate_positions(model, label), n)))
            for k, (label, op, _) in enumerate(embeds):
                if op.num_params == 0 or id(op) not in seg_slice:
                    continue
                other = None
                if len(embeds) > 1:
                    other = np.eye(model.dim)
                    for j, (_, _, emb_j) in enumerate(embeds):
                        if j != k:
                            other = emb_j @ other
                contribs.append((seg_slice[id(op)],
                                 dparams_cache[id(op)].reshape(op.num_params, -1),
                                 _gate_positions(model, label), other))
        infos.append((ptm, contribs))
    return infos


def _adjoint_pullback(bt_rows: np.ndarray, f_rows: np.ndarray,
                      positions: tuple[int, ...], n_lines: int) -> np.ndarray:
    """sum_k outer(bt_k, f_k), pulled back through the target embedding.

    bt_rows: (n_occ, D) backward rows, f_rows: (n_occ, D) forward rows.
    Returns the local (d_t^2, d_t^2) derivative-contraction matrix.
    """
    if positions == tuple(range(n_lines)):
        return bt_rows.T @ f_rows
    perm = _embed_perm(positions, n_lines)
    inv = np.argsort(perm)
    dt = 4 ** len(positions)
    dr = bt_rows.shape[1] // dt
    ug = bt_rows[:, inv].reshape(-1, dt, dr)
    vg = f_rows[:, inv].reshape(-1, dt, dr)
    return np.einsum("kar,kbr->ab", ug, vg)


def bulk_dprobs_array(model: GateSetModel, tree: EvalTree) -> np.ndarray:
    """(n_circuits, n_outcomes, n_params) derivative table.

    Analytic chain rule over cached prefix states; operators without
    closed-form derivatives supply their own internally differenced
    dense-matrix derivatives.
    """
    if tree.mode != "state":
        tree = build_eval_tree(tree.circuits, mode="state")
    segments = model.param_segments()
    n_params = model.num_params
    n_out = len(model.outcome_labels)
    dim = model.dim
    jac = np.zeros((len(tree.circuits), n_out, n_params))
    if n_params == 0:
        return jac

    states = _tree_states(model, tree)
    infos = _layer_contributions(model, tree, segments)
    prep = model.spam.dense_prep()
    effects = model.spam.dense_effects()

    prep_el = model.spam.prep
    prep_slice = next(sl for name, el, sl in segments if name == "prep") \
        if prep_el.num_params else None
    prep_dp = prep_el.dparams() if prep_el.num_params else None
    effect_items = []
    comp_idx = model.spam.labels.index(model.spam.complement_label)
    for name, el, sl in segments:
        if name.startswith("effect:"):
            lbl = name.split(":", 1)[1]
            effect_items.append((model.spam.labels.index(lbl), el.dparams(), sl))

    for ci in range(len(tree.circuits)):
        node = tree.circuit_node[ci]
        path = tree.node_path(ci) if node != -1 else []
        depth = len(path)
        fstack = np.empty((depth + 1, dim))
        fstack[0] = prep
        layer_ids = np.empty(depth, dtype=np.intp)
        for i, nd in enumerate(path):
            fstack[i + 1] = states[nd]
            layer_ids[i] = tree.node_layer(nd)
        bstack = np.empty((depth + 1, dim, n_out))
        bstack[depth] = effects.T
        for i in range(depth, 0, -1):
            ptm, _ = infos[layer_ids[i - 1]]
            bstack[i - 1] = ptm.T @ bstack[i]

        # gate parameter blocks, grouped per distinct layer in this circuit
        for lid in set(layer_ids.tolist()):
            _, contribs = infos[lid]
            if not contribs:
                continue
            occ = np.nonzero(layer_ids == lid)[0]  # positions i-1 (0-based)
            b_rows = bstack[occ + 1]               # (n_occ, dim, n_out)
            f_rows = fstack[occ]                   # (n_occ, dim)
            for sl, dp_flat, positions, other in contribs:
                for o in range(n_out):
                    bo = b_rows[:, :, o]
                    if other is not None:
                        bo = bo @ other
                    t_local = _adjoint_pullback(bo, f_rows, positions, len(model.lines))
                    jac[ci, o, sl] += dp_flat @ t_local.ravel()

        if prep_slice is not None:
            jac[ci, :, prep_slice] += bstack[0].T @ prep_dp.T
        f_final = fstack[depth]
        for out_idx, eff_dp, sl in effect_items:
            grad = eff_dp @ f_final
            jac[ci, out_idx, sl] += grad
            jac[ci, comp_idx, sl] -= grad
    return jac


def bulk_dprobs(model: GateSetModel, tree: EvalTree):
    """Per-circuit {outcome: gradient vector} derivative maps."""
    table = bulk_dprobs_array(model, tree)
    labels = model.outcome_labels
    return {c: {lbl: table[k, j].copy() for j, lbl in enumerate(labels)}
            for k, c in enumerate(tree.circuits)}


def simulate_dataset(model: GateSetModel, circuits, shots_per_circuit: int,
                     seed=None) -> DataSet:
    """Multinomial outcome draws per circuit with a seeded generator."""
    if shots_per_circuit < 0:
        raise ValueError("shots_per_circuit must be nonnegative")
    circuits = list(circuits)
    rng = np.random.default_rng(seed)
    labels = model.outcome_labels
    if circuits:
        tree = build_eval_tree(circuits, mode="state")
        table = bulk_probs_array(model, tree)
    else:
        table = np.empty((0, len(labels)))
    rows = []
    for k in range(len(circuits)):
        p = np.clip(table[k], 0.0, None)
        total = p.sum()
        if total <= 0:
            raise SimulationError(f"degenerate distribution for circuit "
                                  f"{serialize_circuit(circuits[k])}")
        rows.append(rng.multinomial(shots_per_circuit, p / total))
    return DataSet(labels, circuits, rows)


def exact_frequency_dataset(model: GateSetModel, circuits, total: float = 1.0) -> DataSet:
    """Dataset whose "counts" are exact outcome probabilities times total.

    For self-consistency analyses at infinite-shot statistics; not
    writable to disk (counts are not integers).
    """
    circuits = list(circuits)
    tree = build_eval_tree(circuits, mode="state")
    table = np.clip(bulk_probs_array(model, tree), 0.0, None) * total
    return DataSet(model.outcome_labels, circuits, list(table))
