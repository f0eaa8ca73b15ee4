"""Count and time-series datasets with strict line-oriented text formats.

Dataset file format (one circuit per line, single tab before counts)::

    ## Columns = 00 counts, 01 counts, 10 counts, 11 counts
    [Gxpi2:0]@(0,1)<TAB>10 55 5 30

Time-series file format (ordered outcome stream per circuit)::

    ## TimeSeries passes=30
    [Gxpi2:0]@(0)<TAB>0:0,1:1,2:0

Counts on disk are nonnegative integers; timestamps are nondecreasing
and written in shortest round-trip decimal form.  Writing a loaded
dataset reproduces the canonical file byte for byte.  In memory, counts
are stored as floats so that exact-probability "frequency datasets" can
flow through the same analysis code; such datasets are not writable.
"""

from __future__ import annotations

import numpy as np

from .circuits import Circuit, CircuitParseError, parse_circuit, serialize_circuit


class DataFormatError(ValueError):
    """Malformed dataset text; message carries the file line number."""


def _fmt_count(x: float) -> str:
    if float(x).is_integer():
        return str(int(x))
    raise DataFormatError(f"cannot write non-integer count {x!r} to disk")


def _fmt_time(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else repr(float(t))


class DataSet:
    """Outcome counts per circuit over a fixed outcome alphabet."""

    def __init__(self, outcome_labels, circuits=(), counts=None):
        self.outcome_labels = tuple(outcome_labels)
        if len(set(self.outcome_labels)) != len(self.outcome_labels):
            raise ValueError("outcome labels must be distinct")
        widths = {len(l) for l in self.outcome_labels}
        if len(widths) != 1:
            raise ValueError("outcome labels must share a fixed width")
        self.width = widths.pop()
        self.circuits: list[Circuit] = []
        self._index: dict[Circuit, int] = {}
        rows = []
        for k, c in enumerate(circuits):
            self._add_circuit(c)
            rows.append(np.asarray(counts[k], dtype=float))
        self.counts = (np.array(rows, dtype=float)
                       if rows else np.empty((0, len(self.outcome_labels))))
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")

    def _add_circuit(self, c: Circuit) -> None:
        if c in self._index:
            raise ValueError(f"duplicate circuit {serialize_circuit(c)}")
        if len(c.lines) != self.width:
            raise ValueError(
                f"circuit {serialize_circuit(c)} has {len(c.lines)} lines but the "
                f"outcome alphabet has width {self.width}")
        self._index[c] = len(self.circuits)
        self.circuits.append(c)

    def __len__(self):
        return len(self.circuits)

    def __contains__(self, c: Circuit):
        return c in self._index

    def circuit_index(self, c: Circuit) -> int:
        try:
            return self._index[c]
        except KeyError:
            raise KeyError(f"dataset has no circuit {serialize_circuit(c)}") from None

    def row(self, c: Circuit) -> dict[str, float]:
        r = self.counts[self.circuit_index(c)]
        return {lbl: float(r[k]) for k, lbl in enumerate(self.outcome_labels)}

    def total(self, c: Circuit) -> float:
        return float(self.counts[self.circuit_index(c)].sum())

    def counts_for(self, circuits) -> np.ndarray:
        """Count rows aligned with the given circuits (all must be present)."""
        idx = [self.circuit_index(c) for c in circuits]
        return self.counts[idx]

    def is_integral(self) -> bool:
        return bool(np.all(self.counts == np.round(self.counts)))


class TimeSeriesDataSet:
    """Ordered (timestamp, outcome) streams per circuit."""

    def __init__(self, outcome_labels, n_passes: int = 1):
        self.outcome_labels = tuple(outcome_labels)
        self.n_passes = int(n_passes)
        self.circuits: list[Circuit] = []
        self._index: dict[Circuit, int] = {}
        self.times: list[np.ndarray] = []
        self.outcomes: list[list[str]] = []

    def add_row(self, circuit: Circuit, times, outcomes) -> None:
        if circuit in self._index:
            raise ValueError(f"duplicate circuit {serialize_circuit(circuit)}")
        times = np.asarray(times, dtype=float)
        outcomes = list(outcomes)
        if times.shape != (len(outcomes),):
            raise ValueError("times and outcomes must have equal length")
        if np.any(np.diff(times) < 0):
            raise ValueError(f"timestamps must be nondecreasing for "
                             f"{serialize_circuit(circuit)}")
        bad = [o for o in outcomes if o not in self.outcome_labels]
        if bad:
            raise ValueError(f"outcomes {bad[:3]} not in alphabet {self.outcome_labels}")
        self._index[circuit] = len(self.circuits)
        self.circuits.append(circuit)
        self.times.append(times)
        self.outcomes.append(outcomes)

    def __len__(self):
        return len(self.circuits)

    def circuit_index(self, c: Circuit) -> int:
        try:
            return self._index[c]
        except KeyError:
            raise KeyError(f"dataset has no circuit {serialize_circuit(c)}") from None

    def stream(self, c: Circuit):
        k = self.circuit_index(c)
        return self.times[k], self.outcomes[k]


def pool(tsds: TimeSeriesDataSet) -> DataSet:
    """Collapse each stream to outcome counts, discarding time order."""
    labels = tsds.outcome_labels
    pos = {lbl: k for k, lbl in enumerate(labels)}
    rows = []
    for outcomes in tsds.outcomes:
        row = np.zeros(len(labels))
        for o in outcomes:
            row[pos[o]] += 1
        rows.append(row)
    return DataSet(labels, list(tsds.circuits), rows)


# ---------------------------------------------------------------------------
# text IO

def dataset_header(outcome_labels) -> str:
    return "## Columns = " + ", ".join(f"{lbl} counts" for lbl in outcome_labels)


def write_dataset(ds: DataSet, path) -> None:
    lines = [dataset_header(ds.outcome_labels)]
    for k, c in enumerate(ds.circuits):
        row = " ".join(_fmt_count(x) for x in ds.counts[k])
        lines.append(f"{serialize_circuit(c)}\t{row}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def _parse_header(line: str, lineno: int):
    prefix = "## Columns = "
    if not line.startswith(prefix):
        raise DataFormatError(f"line {lineno}: expected dataset header '{prefix}...'")
    labels = []
    for part in line[len(prefix):].split(", "):
        if not part.endswith(" counts"):
            raise DataFormatError(f"line {lineno}: bad column spec {part!r}")
        labels.append(part[:-len(" counts")])
    return tuple(labels)


def load_dataset(path) -> DataSet:
    """Strict loader; any deviation from the canonical format is an error."""
    ds, missing = _load_dataset_allow_missing(path)
    if missing:
        raise DataFormatError(f"{len(missing)} circuits missing counts "
                              f"(first: {serialize_circuit(missing[0])})")
    return ds


def _load_dataset_allow_missing(path):
    with open(path) as f:
        text = f.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataFormatError("empty file: missing header line")
    labels = _parse_header(lines[0], 1)
    circuits, rows, missing = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "":
            raise DataFormatError(f"line {lineno}: blank line not allowed")
        circ_str, tab, rest = line.partition("\t")
        try:
            c = parse_circuit(circ_str)
        except CircuitParseError as exc:
            raise DataFormatError(f"line {lineno}: {exc}") from None
        if serialize_circuit(c) != circ_str:
            raise DataFormatError(f"line {lineno}: circuit not in canonical form "
                                  f"(expected {serialize_circuit(c)})")
        if not tab or rest == "":
            missing.append(c)
            circuits.append(c)
            rows.append(np.zeros(len(labels)))
            continue
        parts = rest.split(" ")
        if len(parts) != len(labels):
            raise DataFormatError(f"line {lineno}: expected {len(labels)} counts, "
                                  f"got {len(parts)}")
        row = np.empty(len(labels))
        for k, p in enumerate(parts):
            if not p.isdigit():
                raise DataFormatError(f"line {lineno}: bad count {p!r} "
                                      "(nonnegative integer required)")
            row[k] = int(p)
        circuits.append(c)
        rows.append(row)
    try:
        ds = DataSet(labels, circuits, rows)
    except ValueError as exc:
        raise DataFormatError(str(exc)) from None
    return ds, missing


def write_time_series(tsds: TimeSeriesDataSet, path) -> None:
    lines = [f"## TimeSeries passes={tsds.n_passes}"]
    for k, c in enumerate(tsds.circuits):
        entries = ",".join(f"{_fmt_time(t)}:{o}"
                           for t, o in zip(tsds.times[k], tsds.outcomes[k]))
        lines.append(f"{serialize_circuit(c)}\t{entries}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_time_series(path, outcome_labels=None) -> TimeSeriesDataSet:
    with open(path) as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith("## TimeSeries passes="):
        raise DataFormatError("line 1: expected '## TimeSeries passes=<n>' header")
    try:
        n_passes = int(lines[0].split("=", 1)[1])
    except ValueError:
        raise DataFormatError("line 1: bad pass count") from None
    rows = []
    seen_labels: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        circ_str, tab, rest = line.partition("\t")
        try:
            c = parse_circuit(circ_str)
        except CircuitParseError as exc:
            raise DataFormatError(f"line {lineno}: {exc}") from None
        times, outs = [], []
        if rest:
            for entry in rest.split(","):
                tstr, colon, o = entry.partition(":")
                if not colon:
                    raise DataFormatError(f"line {lineno}: bad entry {entry!r}")
                try:
                    times.append(float(tstr))
                except ValueError:
                    raise DataFormatError(f"line {lineno}: bad timestamp {tstr!r}") from None
                outs.append(o)
                seen_labels.add(o)
        rows.append((c, times, outs))
    if outcome_labels is None:
        width = len(rows[0][0].lines) if rows else 1
        from .basis import outcome_labels as full_alphabet
        outcome_labels = full_alphabet(width)
    tsds = TimeSeriesDataSet(outcome_labels, n_passes)
    for c, times, outs in rows:
        try:
            tsds.add_row(c, times, outs)
        except ValueError as exc:
            raise DataFormatError(str(exc)) from None
    return tsds
