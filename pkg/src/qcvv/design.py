"""Experiment designs and their on-disk directory layout.

A design directory contains::

    edesign/type.txt          design kind (plain | gst | rb | rpe)
    edesign/circuits.txt      one canonical circuit per line
    edesign/metadata.txt      one "key=value ..." record per circuit
    edesign/attributes.txt    design-level "key=value" records
    data/dataset.txt          count (or time-series) data

``write_empty_protocol_data`` writes the design plus a dataset template
whose rows list every circuit with blank counts; after the template is
filled, ``load_data_from_dir`` reunites design and data and validates
that the data cover the design exactly.
"""

from __future__ import annotations

import os

import numpy as np

from .basis import outcome_labels
from .circuits import Circuit, parse_circuit, serialize_circuit
from .data import (DataFormatError, DataSet, TimeSeriesDataSet, dataset_header,
                   load_time_series, write_time_series, _load_dataset_allow_missing)


class DesignError(ValueError):
    pass


class ExperimentDesign:
    """An ordered list of unique circuits plus per-circuit metadata tags."""

    kind = "plain"

    def __init__(self, circuits, metadata=None):
        self.circuits: list[Circuit] = list(circuits)
        if len(set(self.circuits)) != len(self.circuits):
            raise DesignError("design circuits must be unique")
        if metadata is None:
            metadata = [{} for _ in self.circuits]
        self.metadata: list[dict[str, str]] = [dict(m) for m in metadata]
        if len(self.metadata) != len(self.circuits):
            raise DesignError("metadata must cover every circuit")

    def attributes(self) -> dict[str, str]:
        return {}

    @classmethod
    def from_serialized(cls, circuits, metadata, attributes) -> "ExperimentDesign":
        return cls(circuits, metadata)

    @property
    def width(self) -> int:
        return len(self.circuits[0].lines) if self.circuits else 1

    def outcome_alphabet(self) -> tuple[str, ...]:
        return outcome_labels(self.width)


_DESIGN_KINDS: dict[str, type] = {"plain": ExperimentDesign}


def register_design_kind(cls) -> type:
    _DESIGN_KINDS[cls.kind] = cls
    return cls


def _serialize_circuit_list(circuits) -> str:
    return ";".join(serialize_circuit(c) for c in circuits)


def parse_circuit_list(text: str) -> list[Circuit]:
    return [parse_circuit(s) for s in text.split(";")] if text else []


def write_design(design: ExperimentDesign, dirpath) -> None:
    ed = os.path.join(dirpath, "edesign")
    os.makedirs(ed, exist_ok=True)
    with open(os.path.join(ed, "type.txt"), "w") as f:
        f.write(design.kind + "\n")
    with open(os.path.join(ed, "circuits.txt"), "w") as f:
        for c in design.circuits:
            f.write(serialize_circuit(c) + "\n")
    with open(os.path.join(ed, "metadata.txt"), "w") as f:
        for meta in design.metadata:
            f.write(" ".join(f"{k}={v}" for k, v in sorted(meta.items())) + "\n")
    with open(os.path.join(ed, "attributes.txt"), "w") as f:
        for k, v in sorted(design.attributes().items()):
            f.write(f"{k}={v}\n")


def load_design(dirpath) -> ExperimentDesign:
    # design subclasses register on import
    from . import gstdesign, rb, rpe  # noqa: F401
    ed = os.path.join(dirpath, "edesign")
    try:
        with open(os.path.join(ed, "type.txt")) as f:
            kind = f.read().strip()
    except FileNotFoundError:
        raise DesignError(f"{dirpath!r} has no edesign/type.txt") from None
    cls = _DESIGN_KINDS.get(kind)
    if cls is None:
        raise DesignError(f"unknown design kind {kind!r}")
    with open(os.path.join(ed, "circuits.txt")) as f:
        circuits = [parse_circuit(line) for line in f.read().splitlines() if line]
    metadata = []
    with open(os.path.join(ed, "metadata.txt")) as f:
        for line in f.read().splitlines():
            meta = {}
            if line:
                for item in line.split(" "):
                    k, _, v = item.partition("=")
                    meta[k] = v
            metadata.append(meta)
    attributes = {}
    with open(os.path.join(ed, "attributes.txt")) as f:
        for line in f.read().splitlines():
            if line:
                k, _, v = line.partition("=")
                attributes[k] = v
    return cls.from_serialized(circuits, metadata, attributes)


def write_empty_protocol_data(design: ExperimentDesign, dirpath,
                              time_series: bool = False, passes: int = 1) -> None:
    """Write the design and a dataset template awaiting real counts."""
    write_design(design, dirpath)
    data_dir = os.path.join(dirpath, "data")
    os.makedirs(data_dir, exist_ok=True)
    path = os.path.join(data_dir, "dataset.txt")
    if time_series:
        header = f"## TimeSeries passes={passes}"
    else:
        header = dataset_header(design.outcome_alphabet())
    with open(path, "w") as f:
        f.write(header + "\n")
        for c in design.circuits:
            f.write(serialize_circuit(c) + "\n")


def write_data_for_design(ds, dirpath) -> None:
    """Replace the dataset file under an existing design directory."""
    data_dir = os.path.join(dirpath, "data")
    os.makedirs(data_dir, exist_ok=True)
    path = os.path.join(data_dir, "dataset.txt")
    if isinstance(ds, TimeSeriesDataSet):
        write_time_series(ds, path)
    else:
        from .data import write_dataset
        write_dataset(ds, path)


def load_data_from_dir(dirpath):
    """Load (design, dataset); errors if the template is not fully filled."""
    design = load_design(dirpath)
    path = os.path.join(dirpath, "data", "dataset.txt")
    with open(path) as f:
        first = f.readline()
    if first.startswith("## TimeSeries"):
        ds = load_time_series(path, design.outcome_alphabet())
        have = set(ds.circuits)
        empty = [c for c in design.circuits
                 if c not in have or len(ds.outcomes[ds.circuit_index(c)]) == 0]
        if empty:
            raise DataFormatError(f"{len(empty)} circuits missing time-series data "
                                  f"(first: {serialize_circuit(empty[0])})")
    else:
        ds, missing = _load_dataset_allow_missing(path)
        if missing:
            raise DataFormatError(f"{len(missing)} circuits missing counts "
                                  f"(first: {serialize_circuit(missing[0])})")
    have = set(ds.circuits)
    missing_circuits = [c for c in design.circuits if c not in have]
    if missing_circuits:
        raise DataFormatError(
            f"{len(missing_circuits)} design circuits missing from the data "
            f"(first: {serialize_circuit(missing_circuits[0])})")
    extra = have - set(design.circuits)
    if extra:
        c = sorted(extra, key=serialize_circuit)[0]
        raise DataFormatError(f"data contain {len(extra)} circuits not in the design "
                              f"(first: {serialize_circuit(c)})")
    return design, ds
