"""Built-in target models with matching fiducial and germ circuit lists.

Pack gates are full-TP parameterized perfect gates (use
``set_parameterization`` for other kinds); preparation is |0...0> and
measurement is the computational basis.  Fiducial lists always contain
the empty circuit and pass the informational-completeness rank check;
germ lists are short words chosen to amplify the standard error
directions of each gate set.  The RPE pack has no fiducials or germs
(an X-only gate set is not informationally complete); it exists to
drive phase-estimation designs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, GateLabel, Layer, circuit, empty_circuit, glabel
from .gates import gate_ptm
from .models import GateSetModel, SpamPair
from .ops import FullTPOp

PACK_NAMES = ("smq1Q_XYI", "smq1Q_XYZI", "smq1Q_Xpi2_rpe", "smq2Q_XYICNOT")


@dataclass
class ModelPack:
    name: str
    model: GateSetModel
    prep_fiducials: list[Circuit] = field(default_factory=list)
    meas_fiducials: list[Circuit] = field(default_factory=list)
    germs: list[Circuit] = field(default_factory=list)

    def target_model(self) -> GateSetModel:
        return self.model.copy()


def _perfect_model(lines, gate_names_targets) -> GateSetModel:
    gates = {}
    for name, targets in gate_names_targets:
        gates[GateLabel(name, tuple(targets))] = FullTPOp(gate_ptm(name))
    idle = FullTPOp(np.eye(4 ** len(lines)))
    spam = SpamPair.computational(len(lines))
    return GateSetModel(lines, gates, spam, idle)


def _seq(*specs):
    return circuit(list(specs), lines=(0,))


def _fiducials_1q():
    x = ("Gxpi2", 0)
    y = ("Gypi2", 0)
    return [
        empty_circuit((0,)),
        _seq(x),
        _seq(y),
        _seq(x, x),
        _seq(x, x, x),
        _seq(y, y, y),
    ]


def _germs_xyi():
    x = ("Gxpi2", 0)
    y = ("Gypi2", 0)
    idle_layer = Layer(())
    def c(*specs):
        return circuit(list(specs), lines=(0,))
    return [
        c(x),
        c(y),
        Circuit((idle_layer,), (0,)),
        c(x, y),
        Circuit((Layer((glabel("Gxpi2", 0),)), Layer((glabel("Gypi2", 0),)), idle_layer), (0,)),
        Circuit((Layer((glabel("Gxpi2", 0),)), idle_layer, Layer((glabel("Gypi2", 0),))), (0,)),
        Circuit((Layer((glabel("Gxpi2", 0),)), idle_layer, idle_layer), (0,)),
        Circuit((Layer((glabel("Gypi2", 0),)), idle_layer, idle_layer), (0,)),
        c(x, x, y, x, y, y),
    ]


def _germs_xyzi():
    x = ("Gxpi2", 0)
    y = ("Gypi2", 0)
    z = ("Gzpi2", 0)
    idle_layer = Layer(())
    gs = _germs_xyi()
    gs += [
        _seq(z),
        _seq(x, z),
        _seq(y, z),
        Circuit((Layer((glabel("Gzpi2", 0),)), idle_layer), (0,)),
        _seq(x, y, z),
    ]
    return gs


def _product_fiducial(a: Circuit, b: Circuit) -> Circuit:
    """Run two single-line fiducials concurrently on lines 0 and 1."""
    depth = max(a.depth, b.depth)
    layers = []
    for k in range(depth):
        labels = []
        if k < a.depth:
            labels.extend(a.layers[k].labels)
        if k < b.depth:
            labels.extend(GateLabel(l.name, (1,)) for l in b.layers[k].labels)
        layers.append(Layer(labels))
    return Circuit(tuple(layers), (0, 1))


def _fiducials_2q():
    ones = _fiducials_1q()
    return [_product_fiducial(a, b) for a in ones for b in ones]


def _germs_2q():
    def c2(*specs):
        return circuit(list(specs), lines=(0, 1))
    x0, y0 = ("Gxpi2", 0), ("Gypi2", 0)
    x1, y1 = ("Gxpi2", 1), ("Gypi2", 1)
    cnot = ("Gcnot", 0, 1)
    return [
        c2(x0), c2(y0), c2(x1), c2(y1), c2(cnot),
        Circuit((Layer(()),), (0, 1)),
        c2([glabel("Gxpi2", 0), glabel("Gypi2", 1)]),
        c2(cnot, x0),
        c2(cnot, y1),
        c2(x0, y0), c2(x1, y1),
        c2(cnot, x0, y1),
    ]


def target_model_pack(name: str) -> ModelPack:
    """Return the named pack: perfect model plus fiducial/germ lists."""
    if name == "smq1Q_XYI":
        model = _perfect_model((0,), [("Gxpi2", (0,)), ("Gypi2", (0,))])
        fids = _fiducials_1q()
        return ModelPack(name, model, fids, list(fids), _germs_xyi())
    if name == "smq1Q_XYZI":
        model = _perfect_model((0,), [("Gxpi2", (0,)), ("Gypi2", (0,)), ("Gzpi2", (0,))])
        fids = _fiducials_1q()
        return ModelPack(name, model, fids, list(fids), _germs_xyzi())
    if name == "smq1Q_Xpi2_rpe":
        model = _perfect_model((0,), [("Gxpi2", (0,))])
        return ModelPack(name, model, [], [], [])
    if name == "smq2Q_XYICNOT":
        model = _perfect_model(
            (0, 1),
            [("Gxpi2", (0,)), ("Gxpi2", (1,)), ("Gypi2", (0,)), ("Gypi2", (1,)),
             ("Gcnot", (0, 1))])
        fids = _fiducials_2q()
        return ModelPack(name, model, fids, list(fids), _germs_2q())
    raise KeyError(f"unknown model pack {name!r}; available: {', '.join(PACK_NAMES)}")
