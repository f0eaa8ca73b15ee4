"""Gate labels, layers, and circuits with a strict text grammar.

Grammar (whitespace permitted only between layers and around the string)::

    circuit   := (layerseq | legacyseq | "{}") ["@(" lines ")"]
    layerseq  := ("[" label* "]")+
    legacyseq := name+                      (single-line circuits only)
    label     := name (":" target)*
    name      := "G" [a-z0-9]+
    lines     := token ("," token)*

Targets and line labels are tokens over [A-Za-z0-9_].  A token may not
contain "G" followed by a lowercase letter or digit, since that sequence
always begins a new gate name.  Integer-looking tokens are treated as
integers and sort numerically; all other tokens sort lexically after the
integers.  An absent "@(...)" suffix infers the lines as the sorted union
of all targets (line 0 for the legacy form).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

LineLabel = int | str

_NAME_RE = re.compile(r"G[a-z0-9]+")
_TOKEN_RE = re.compile(r"(?:(?!G[a-z0-9])[A-Za-z0-9_])+")
_LEGACY_RE = re.compile(r"(?:G[a-z0-9]+)+$")


class CircuitError(ValueError):
    """Invalid circuit construction (bad labels, lines, or composition)."""


class CircuitParseError(CircuitError):
    """Syntax or semantic error in circuit text, with a byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def _as_line(token: str) -> LineLabel:
    return int(token) if token.isdigit() else token


def line_sort_key(label: LineLabel):
    """Sort key putting integer labels first, in numeric order."""
    if isinstance(label, int):
        return (0, label, "")
    return (1, 0, str(label))


@dataclass(frozen=True)
class GateLabel:
    """A named gate applied to an ordered tuple of line labels."""

    name: str
    targets: tuple[LineLabel, ...]

    def __post_init__(self):
        if not _NAME_RE.fullmatch(self.name):
            raise CircuitError(f"bad gate name {self.name!r}: must match G[a-z0-9]+")
        if not self.targets:
            raise CircuitError(f"gate {self.name!r} needs at least one target")
        if len(set(self.targets)) != len(self.targets):
            raise CircuitError(f"gate {self.name!r} has repeated targets {self.targets}")

    def __str__(self):
        return self.name + "".join(f":{t}" for t in self.targets)

    def _sort_key(self):
        return tuple(line_sort_key(t) for t in self.targets), self.name


def glabel(name: str, *targets: LineLabel) -> GateLabel:
    """Shorthand constructor: ``glabel("Gxpi2", 0)``."""
    return GateLabel(name, tuple(targets))


@dataclass(frozen=True)
class Layer:
    """Gates executed concurrently; their target sets must be disjoint.

    Labels are stored in canonical order (by first target, then name); an
    input that violates target disjointness is rejected outright.
    """

    labels: tuple[GateLabel, ...]

    def __init__(self, labels=()):
        labels = tuple(sorted(labels, key=GateLabel._sort_key))
        seen: set[LineLabel] = set()
        for lbl in labels:
            for t in lbl.targets:
                if t in seen:
                    raise CircuitError(f"duplicate target {t!r} within a layer")
                seen.add(t)
        object.__setattr__(self, "labels", labels)

    @property
    def targets(self) -> set[LineLabel]:
        return {t for lbl in self.labels for t in lbl.targets}

    def __str__(self):
        return "[" + "".join(str(lbl) for lbl in self.labels) + "]"


@dataclass(frozen=True)
class Circuit:
    """An ordered sequence of layers over a fixed tuple of lines.

    Circuits are immutable, hashable, and safe to share between threads.
    ``serialize_circuit`` followed by ``parse_circuit`` reproduces the
    circuit exactly.
    """

    layers: tuple[Layer, ...] = ()
    lines: tuple[LineLabel, ...] = ()

    def __post_init__(self):
        layers = tuple(
            layer if isinstance(layer, Layer) else Layer(layer) for layer in self.layers
        )
        object.__setattr__(self, "layers", layers)
        lines = tuple(self.lines)
        if len(set(lines)) != len(lines):
            raise CircuitError(f"duplicate line labels {lines}")
        object.__setattr__(self, "lines", lines)
        declared = set(lines)
        for layer in layers:
            missing = layer.targets - declared
            if missing:
                raise CircuitError(f"layer {layer} targets undeclared lines {sorted(map(str, missing))}")

    @property
    def depth(self) -> int:
        return len(self.layers)

    def __str__(self):
        return serialize_circuit(self)

    def __add__(self, other: "Circuit") -> "Circuit":
        return concat(self, other)

    def __mul__(self, k: int) -> "Circuit":
        return repeat(self, k)


def circuit(layer_specs, lines=None) -> Circuit:
    """Build a circuit from a list of layer specs.

    Each spec is a GateLabel, a (name, *targets) tuple, or a list of either
    (one list per multi-gate layer); ``[]`` denotes an empty layer.
    """

    def as_label(spec):
        if isinstance(spec, GateLabel):
            return spec
        name, *targets = spec
        return GateLabel(name, tuple(targets))

    layers = []
    for spec in layer_specs:
        if isinstance(spec, Layer):
            layers.append(spec)
        elif isinstance(spec, list):
            layers.append(Layer([as_label(s) for s in spec]))
        else:
            layers.append(Layer([as_label(spec)]))
    if lines is None:
        lines = sorted({t for ly in layers for t in ly.targets}, key=line_sort_key)
    return Circuit(tuple(layers), tuple(lines))


def empty_circuit(lines) -> Circuit:
    return Circuit((), tuple(lines))


def serialize_circuit(c: Circuit) -> str:
    """Canonical text form: bracketed layers, explicit targets and lines."""
    if not c.layers:
        body = "{}"
    else:
        body = "".join(str(layer) for layer in c.layers)
    return body + "@(" + ",".join(str(l) for l in c.lines) + ")"


def parse_circuit(text: str) -> Circuit:
    """Parse circuit text (see module grammar); raises CircuitParseError."""
    s = text
    n = len(s)
    i = 0
    while i < n and s[i].isspace():
        i += 1
    end = n
    while end > i and s[end - 1].isspace():
        end -= 1
    at = s.find("@", i)
    body_end = at if at != -1 else end
    body = s[i:body_end]
    body_start = i

    layers: list[list[GateLabel]] = []
    legacy = False

    if body == "{}":
        pass
    elif body.startswith("["):
        j = 0
        m = len(body)
        while j < m:
            if body[j].isspace():
                j += 1
                continue
            if body[j] != "[":
                raise CircuitParseError(f"expected '[' but found {body[j]!r}", body_start + j)
            j += 1
            labels: list[GateLabel] = []
            while j < m and body[j] != "]":
                mname = _NAME_RE.match(body, j)
                if not mname:
                    raise CircuitParseError(f"expected gate name but found {body[j]!r}", body_start + j)
                name = mname.group(0)
                j = mname.end()
                targets: list[LineLabel] = []
                while j < m and body[j] == ":":
                    mtok = _TOKEN_RE.match(body, j + 1)
                    if not mtok:
                        raise CircuitParseError("expected target token after ':'", body_start + j + 1)
                    targets.append(_as_line(mtok.group(0)))
                    j = mtok.end()
                if not targets:
                    raise CircuitParseError(f"gate {name!r} has no targets (bracketed form requires them)", body_start + j)
                try:
                    labels.append(GateLabel(name, tuple(targets)))
                except CircuitError as exc:
                    raise CircuitParseError(str(exc), body_start + j) from None
            if j >= m:
                raise CircuitParseError("unterminated layer: missing ']'", body_start + j)
            j += 1
            layers.append(labels)
    else:
        if not body or not _LEGACY_RE.fullmatch(body):
            bad = body_start + (len(body.rstrip()) if body else 0)
            raise CircuitParseError("not a valid layer sequence, legacy sequence, or '{}'", bad)
        legacy = True
        for mname in _NAME_RE.finditer(body):
            layers.append([GateLabel(mname.group(0), (0,))])

    lines: tuple[LineLabel, ...] | None = None
    if at != -1:
        j = at + 1
        if not s.startswith("(", j):
            raise CircuitParseError("expected '(' after '@'", j)
        close = s.find(")", j)
        if close == -1 or close >= end:
            raise CircuitParseError("unterminated line list: missing ')'", j)
        inner = s[j + 1:close]
        if close + 1 != end:
            raise CircuitParseError("trailing characters after line list", close + 1)
        toks = inner.split(",") if inner else []
        for k, tok in enumerate(toks):
            if not _TOKEN_RE.fullmatch(tok):
                raise CircuitParseError(f"bad line label {tok!r}", j + 1)
        lines = tuple(_as_line(t) for t in toks)
        if legacy:
            if len(lines) != 1:
                raise CircuitParseError("legacy form allows exactly one line", j + 1)
            layers = [[GateLabel(lbl.name, (lines[0],))] for (lbl,) in [tuple(ls) for ls in layers]]

    try:
        built_layers = tuple(Layer(ls) for ls in layers)
    except CircuitError as exc:
        raise CircuitParseError(str(exc), body_start) from None
    if lines is None:
        lines = tuple(sorted({t for ly in built_layers for t in ly.targets}, key=line_sort_key))
        if legacy:
            lines = (0,)
    try:
        return Circuit(built_layers, lines)
    except CircuitError as exc:
        raise CircuitParseError(str(exc), body_start) from None


def concat(a: Circuit, b: Circuit) -> Circuit:
    """Concatenate two circuits over the same line set (or one empty)."""
    if set(a.lines) == set(b.lines):
        return Circuit(a.layers + b.layers, a.lines)
    if not a.layers and not a.lines:
        return b
    if not b.layers and not b.lines:
        return a
    raise CircuitError(f"cannot concat circuits with mismatched lines {a.lines} vs {b.lines}")


def repeat(c: Circuit, k: int) -> Circuit:
    """Repeat a circuit's layers k times (k=0 gives the empty circuit)."""
    if k < 0:
        raise CircuitError(f"repeat count must be nonnegative, got {k}")
    return Circuit(c.layers * k, c.lines)
