"""Tomography experiment designs: fiducial sandwiches around germ powers.

For each maximum length L in a doubling sequence, the design contains
every circuit  prep_fid[j] . germ^floor(L/|germ|) . meas_fid[i]  (powers
of zero skipped, duplicates removed), on top of the linear-inversion
subset {F_i F_j} and {F_i g F_j} for each model operation g.  Circuit
lists are nested: the list for L is a prefix of the list for 2L.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, Layer, concat, empty_circuit, repeat, serialize_circuit
from .design import DesignError, ExperimentDesign, parse_circuit_list, register_design_kind, _serialize_circuit_list
from .models import GateSetModel
from .packs import ModelPack, target_model_pack
from .sim import circuit_matrix, propagate_state


class RankDeficiencyError(ValueError):
    pass


@dataclass
class CompletenessReport:
    dim: int
    prep_rank: int
    meas_rank: int
    prep_singular_values: np.ndarray
    meas_singular_values: np.ndarray

    @property
    def ok(self) -> bool:
        return self.prep_rank == self.dim and self.meas_rank == self.dim

    def __str__(self):
        return (f"informational completeness: dim={self.dim} "
                f"prep rank={self.prep_rank} (smallest sv {self.prep_singular_values.min():.3g}), "
                f"meas rank={self.meas_rank} (smallest sv {self.meas_singular_values.min():.3g})")


def check_informational_completeness(model: GateSetModel, prep_fiducials,
                                     meas_fiducials,
                                     raise_on_deficiency: bool = True) -> CompletenessReport:
    """Rank-check the fiducial prep columns and effect rows against d^2."""
    prep_cols = np.column_stack([propagate_state(model, f) for f in prep_fiducials])
    effects = model.spam.dense_effects()
    meas_rows = np.vstack([effects @ circuit_matrix(model, f) for f in meas_fiducials])
    sp = np.linalg.svd(prep_cols, compute_uv=False)
    sm = np.linalg.svd(meas_rows, compute_uv=False)
    tol_p = max(prep_cols.shape) * np.finfo(float).eps * sp[0]
    tol_m = max(meas_rows.shape) * np.finfo(float).eps * sm[0]
    report = CompletenessReport(model.dim,
                                int(np.sum(sp > max(tol_p, 1e-9 * sp[0]))),
                                int(np.sum(sm > max(tol_m, 1e-9 * sm[0]))),
                                sp, sm)
    if raise_on_deficiency and not report.ok:
        sides = []
        if report.prep_rank < model.dim:
            sides.append(f"prep fiducials (rank {report.prep_rank} < {model.dim})")
        if report.meas_rank < model.dim:
            sides.append(f"meas fiducials (rank {report.meas_rank} < {model.dim})")
        raise RankDeficiencyError("informationally incomplete: " + " and ".join(sides))
    return report


def operation_circuits(model: GateSetModel) -> list[Circuit]:
    """One-layer circuits for every model operation, idle (empty layer) last."""
    lines = model.lines
    circs = [Circuit((Layer((label,)),), lines) for label in sorted(
        model.gates, key=lambda l: (l.name, tuple(map(str, l.targets))))]
    if model.idle is not None:
        circs.append(Circuit((Layer(()),), lines))
    return circs


@register_design_kind
class GstDesign(ExperimentDesign):
    kind = "gst"

    def __init__(self, circuits, metadata, prep_fiducials, meas_fiducials,
                 germs, max_lengths, lgst_indices, length_indices, pack_name=""):
        super().__init__(circuits, metadata)
        self.prep_fiducials = list(prep_fiducials)
        self.meas_fiducials = list(meas_fiducials)
        self.germs = list(germs)
        self.max_lengths = list(max_lengths)
        self.lgst_indices = list(lgst_indices)
        self.length_indices = {int(L): list(idx) for L, idx in length_indices.items()}
        self.pack_name = pack_name

    def attributes(self) -> dict[str, str]:
        attrs = {
            "pack": self.pack_name,
            "max_lengths": ",".join(str(L) for L in self.max_lengths),
            "prep_fiducials": _serialize_circuit_list(self.prep_fiducials),
            "meas_fiducials": _serialize_circuit_list(self.meas_fiducials),
            "germs": _serialize_circuit_list(self.germs),
            "lgst_indices": ",".join(map(str, self.lgst_indices)),
        }
        for L in self.max_lengths:
            attrs[f"length_indices_{L}"] = ",".join(map(str, self.length_indices[L]))
        return attrs

    @classmethod
    def from_serialized(cls, circuits, metadata, attributes) -> "GstDesign":
        max_lengths = [int(x) for x in attributes["max_lengths"].split(",") if x]
        length_indices = {}
        for L in max_lengths:
            text = attributes[f"length_indices_{L}"]
            length_indices[L] = [int(x) for x in text.split(",") if x]
        lgst = [int(x) for x in attributes["lgst_indices"].split(",") if x]
        return cls(circuits, metadata,
                   parse_circuit_list(attributes["prep_fiducials"]),
                   parse_circuit_list(attributes["meas_fiducials"]),
                   parse_circuit_list(attributes["germs"]),
                   max_lengths, lgst, length_indices,
                   attributes.get("pack", ""))

    def circuits_up_to(self, max_length: int) -> list[Circuit]:
        return [self.circuits[k] for k in self.length_indices[max_length]]

    def lgst_circuits(self) -> list[Circuit]:
        return [self.circuits[k] for k in self.lgst_indices]

    def germ_power_block(self, germ_index: int, max_length: int):
        """(power, grid) for a per-sequence detail block; grid[i][j] is the
        circuit index for meas fiducial i and prep fiducial j (or -1)."""
        germ = self.germs[germ_index]
        power = max_length // germ.depth if germ.depth else 0
        if power == 0:
            return 0, []
        index = {c: k for k, c in enumerate(self.circuits)}
        grid = []
        for fm in self.meas_fiducials:
            row = []
            for fp in self.prep_fiducials:
                c = concat(concat(fp, repeat(germ, power)), fm)
                row.append(index.get(c, -1))
            grid.append(row)
        return power, grid


def make_gst_design(pack, max_max_length: int, model: GateSetModel | None = None) -> GstDesign:
    """Build the nested-length design for a pack (name or ModelPack)."""
    if isinstance(pack, str):
        pack = target_model_pack(pack)
    if not isinstance(pack, ModelPack):
        raise TypeError("pack must be a pack name or a ModelPack")
    L = int(max_max_length)
    if L < 1 or (L & (L - 1)) != 0:
        raise DesignError(f"max_max_length must be a power of two >= 1, got {max_max_length}")
    model = pack.model if model is None else model
    if not pack.prep_fiducials or not pack.meas_fiducials:
        raise DesignError(f"pack {pack.name} has no fiducial lists; it cannot drive "
                          "a tomography design")
    check_informational_completeness(model, pack.prep_fiducials, pack.meas_fiducials)

    max_lengths = []
    cur = 1
    while cur <= L:
        max_lengths.append(cur)
        cur *= 2

    circuits: list[Circuit] = []
    metadata: list[dict[str, str]] = []
    index: dict[Circuit, int] = {}

    def add(c: Circuit, meta: dict[str, str]) -> int:
        k = index.get(c)
        if k is None:
            k = len(circuits)
            index[c] = k
            circuits.append(c)
            metadata.append(meta)
        return k

    lgst_indices = []
    ops = operation_circuits(model)
    for j, fp in enumerate(pack.prep_fiducials):
        for i, fm in enumerate(pack.meas_fiducials):
            k = add(concat(fp, fm), {"role": "lgst", "prep_fid": str(j), "meas_fid": str(i)})
            lgst_indices.append(k)
    for g, op in enumerate(ops):
        for j, fp in enumerate(pack.prep_fiducials):
            for i, fm in enumerate(pack.meas_fiducials):
                k = add(concat(concat(fp, op), fm),
                        {"role": "lgst", "op": str(g), "prep_fid": str(j), "meas_fid": str(i)})
                lgst_indices.append(k)
    lgst_indices = sorted(set(lgst_indices))

    length_indices: dict[int, list[int]] = {}
    running = list(lgst_indices)
    seen = set(running)
    for Lcur in max_lengths:
        for gi, germ in enumerate(pack.germs):
            if germ.depth == 0:
                raise DesignError("germs must have at least one layer")
            power = Lcur // germ.depth
            if power == 0:
                continue
            block = repeat(germ, power)
            for j, fp in enumerate(pack.prep_fiducials):
                for i, fm in enumerate(pack.meas_fiducials):
                    c = concat(concat(fp, block), fm)
                    k = add(c, {"role": "germ", "germ": str(gi), "power": str(power),
                                "L": str(Lcur), "prep_fid": str(j), "meas_fid": str(i)})
                    if k not in seen:
                        seen.add(k)
                        running.append(k)
        length_indices[Lcur] = list(running)

    return GstDesign(circuits, metadata, pack.prep_fiducials, pack.meas_fiducials,
                     pack.germs, max_lengths, lgst_indices, length_indices, pack.name)
