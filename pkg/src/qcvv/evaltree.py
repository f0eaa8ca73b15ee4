"""Shared-subcircuit evaluation trees for batched circuit simulation.

A tree node is either a leaf (one layer) or the composition of a left
child followed by a right child; every circuit in the batch maps to one
node whose expansion is its layer sequence.  Two builders exist:

* ``state`` mode produces a left-deep prefix trie.  Evaluation caches
  the propagated state vector of every distinct circuit prefix, which
  reproduces per-circuit propagation bit for bit while sharing all the
  work common to circuits with equal prefixes.
* ``matrix`` mode additionally splits repeated halves (germ powers) so
  a circuit's full transfer matrix is built by doubling; good when the
  batch is small relative to the matrix dimension.

The automatic mode picks ``state`` when the circuit count dominates the
superoperator dimension, which is the regime of iterative model fitting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuits import Circuit, Layer

LEAF = 0
PRODUCT = 1


@dataclass
class EvalTree:
    mode: str
    circuits: list[Circuit]
    layers: list[Layer]                    # distinct layers; leaf payloads
    node_kind: list[int] = field(default_factory=list)
    node_a: list[int] = field(default_factory=list)     # leaf: layer id, product: left node
    node_b: list[int] = field(default_factory=list)     # product: right node (-1 for leaf)
    circuit_node: list[int] = field(default_factory=list)  # -1 for the empty circuit

    @property
    def num_nodes(self) -> int:
        return len(self.node_kind)

    @property
    def total_layer_count(self) -> int:
        return sum(c.depth for c in self.circuits)

    def node_path(self, circuit_index: int) -> list[int]:
        """State-mode only: node ids of each prefix, position 1..depth."""
        if self.mode != "state":
            raise ValueError("node paths are defined for state-mode trees")
        path = []
        node = self.circuit_node[circuit_index]
        while node != -1:
            path.append(node)
            node = self.node_a[node] if self.node_kind[node] == PRODUCT else -1
        path.reverse()
        return path

    def node_layer(self, node: int) -> int:
        """State-mode: layer id applied at this node."""
        if self.node_kind[node] == LEAF:
            return self.node_a[node]
        return self.node_a[self.node_b[node]]


def build_eval_tree(circuits, mode: str = "auto") -> EvalTree:
    """Build an evaluation tree for a batch of circuits.

    Node count never exceeds the total layer count across circuits, and
    shared prefixes (state mode) or repeated halves (matrix mode) are
    deduplicated.
    """
    circuits = list(circuits)
    if not circuits:
        raise ValueError("cannot build an evaluation tree for an empty circuit list")
    if mode == "auto":
        widths = {len(c.lines) for c in circuits}
        d2 = 4 ** max(widths) if widths else 4
        mode = "state" if len(circuits) > 2 * d2 else "matrix"
    if mode == "state":
        return _build_state_tree(circuits)
    if mode == "matrix":
        return _build_matrix_tree(circuits)
    raise ValueError(f"unknown tree mode {mode!r}")


def _layer_ids(circuits):
    layer_index: dict[Layer, int] = {}
    layers: list[Layer] = []
    seqs = []
    for c in circuits:
        seq = []
        for layer in c.layers:
            lid = layer_index.get(layer)
            if lid is None:
                lid = len(layers)
                layer_index[layer] = lid
                layers.append(layer)
            seq.append(lid)
        seqs.append(tuple(seq))
    return layers, seqs


def _build_state_tree(circuits) -> EvalTree:
    layers, seqs = _layer_ids(circuits)
    tree = EvalTree("state", circuits, layers)
    trie: dict[tuple[int, int], int] = {}
    leaf_for_layer: dict[int, int] = {}

    def leaf(lid: int) -> int:
        nid = leaf_for_layer.get(lid)
        if nid is None:
            nid = _add(tree, LEAF, lid, -1)
            leaf_for_layer[lid] = nid
        return nid

    circuit_node = []
    for seq in seqs:
        node = -1
        for lid in seq:
            key = (node, lid)
            nxt = trie.get(key)
            if nxt is None:
                if node == -1:
                    nxt = leaf(lid)
                else:
                    nxt = _add(tree, PRODUCT, node, leaf(lid))
                trie[key] = nxt
            node = nxt
        circuit_node.append(node)
    tree.circuit_node = circuit_node
    return tree


def _build_matrix_tree(circuits) -> EvalTree:
    layers, seqs = _layer_ids(circuits)
    tree = EvalTree("matrix", circuits, layers)
    memo: dict[tuple[int, ...], int] = {}

    def node(seq: tuple[int, ...]) -> int:
        nid = memo.get(seq)
        if nid is not None:
            return nid
        n = len(seq)
        if n == 1:
            nid = _add(tree, LEAF, seq[0], -1)
        else:
            half = n // 2
            if n % 2 == 0 and seq[:half] == seq[half:]:
                left = node(seq[:half])
                nid = _add(tree, PRODUCT, left, left)
            else:
                nid = _add(tree, PRODUCT, node(seq[:-1]), node(seq[-1:]))
        memo[seq] = nid
        return nid

    tree.circuit_node = [node(seq) if seq else -1 for seq in seqs]
    return tree


def _add(tree: EvalTree, kind: int, a: int, b: int) -> int:
    tree.node_kind.append(kind)
    tree.node_a.append(a)
    tree.node_b.append(b)
    return len(tree.node_kind) - 1
