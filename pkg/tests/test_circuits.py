import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcvv.circuits import (Circuit, CircuitError, CircuitParseError, GateLabel,
                           Layer, circuit, concat, empty_circuit, glabel,
                           parse_circuit, repeat, serialize_circuit)


def test_parse_two_layer_two_qubit():
    c = parse_circuit("[Gxpi2:0Gypi2:1][Gcnot:0:1]@(0,1)")
    assert c.depth == 2
    assert c.lines == (0, 1)
    assert set(c.layers[0].labels) == {glabel("Gxpi2", 0), glabel("Gypi2", 1)}
    assert c.layers[1].labels == (glabel("Gcnot", 0, 1),)


def test_parse_empty_circuit():
    c = parse_circuit("{}@(0)")
    assert c.depth == 0
    assert c.lines == (0,)
    assert serialize_circuit(c) == "{}@(0)"


def test_parse_legacy_form():
    c = parse_circuit("GxGxGxGy")
    assert c.depth == 4
    assert c.lines == (0,)
    assert [ly.labels[0].name for ly in c.layers] == ["Gx", "Gx", "Gx", "Gy"]
    assert serialize_circuit(c) == "[Gx:0][Gx:0][Gx:0][Gy:0]@(0)"


def test_parse_infers_sorted_lines():
    c = parse_circuit("[Gxpi2:2][Gypi2:0]")
    assert c.lines == (0, 2)


def test_parse_string_line_labels():
    c = parse_circuit("[Gxpi2:Q0]@(Q0,Q1)")
    assert c.lines == ("Q0", "Q1")
    assert c.layers[0].labels[0].targets == ("Q0",)
    assert parse_circuit(serialize_circuit(c)) == c


def test_whitespace_between_layers_ok():
    a = parse_circuit("[Gxpi2:0] [Gypi2:0]@(0)")
    b = parse_circuit("[Gxpi2:0][Gypi2:0]@(0)")
    assert a == b


def test_parse_error_offsets():
    with pytest.raises(CircuitParseError) as err:
        parse_circuit("[Gxpi2:0")
    assert "offset" in str(err.value)
    with pytest.raises(CircuitParseError):
        parse_circuit("[gx:0]@(0)")
    with pytest.raises(CircuitParseError):
        parse_circuit("[Gxpi2:0]@(0,0)")


def test_duplicate_target_within_layer_rejected():
    with pytest.raises(CircuitParseError):
        parse_circuit("[Gxpi2:0Gypi2:0]@(0)")
    with pytest.raises(CircuitError):
        Layer([glabel("Gxpi2", 0), glabel("Gypi2", 0)])


def test_target_outside_declared_lines_rejected():
    with pytest.raises(CircuitParseError):
        parse_circuit("[Gxpi2:2]@(0,1)")


def test_empty_layer_parses():
    c = parse_circuit("[]@(0)")
    assert c.depth == 1
    assert c.layers[0].labels == ()
    assert parse_circuit(serialize_circuit(c)) == c


def test_listing_style_round_trip_verbatim():
    s = "[Gxpi2:0Gypi2:1][Gcnot:0:1][Gcnot:1:2][Gxpi2:0Gcnot:2:3]@(0,1,2,3)"
    assert serialize_circuit(parse_circuit(s)) == s


def test_concat_and_repeat():
    a = circuit([("Gxpi2", 0)], (0,))
    b = circuit([("Gypi2", 0)], (0,))
    assert concat(a, b).depth == 2
    assert concat(a, empty_circuit((0,))) == a
    assert repeat(a, 3).depth == 3
    assert repeat(a, 0) == empty_circuit((0,))
    with pytest.raises(CircuitError):
        concat(a, circuit([("Gxpi2", 1)], (1,)))
    with pytest.raises(CircuitError):
        repeat(a, -1)


def test_concat_associative():
    a = circuit([("Gxpi2", 0)], (0,))
    b = circuit([("Gypi2", 0)], (0,))
    c = circuit([[]], (0,))
    assert concat(concat(a, b), c) == concat(a, concat(b, c))


_names = st.sampled_from(["Gxpi2", "Gypi2", "Gcnot", "Gi", "Ga0b"])
_lines_pool = [0, 1, 2, "Q3"]


@st.composite
def circuits_strategy(draw):
    lines = tuple(draw(st.permutations(_lines_pool))[: draw(st.integers(1, 4))])
    n_layers = draw(st.integers(0, 6))
    layers = []
    for _ in range(n_layers):
        avail = list(lines)
        draw_n = draw(st.integers(0, len(avail)))
        labels = []
        for _ in range(draw_n):
            name = draw(_names)
            want = 2 if name == "Gcnot" else 1
            if len(avail) < want:
                continue
            targets = []
            for _ in range(want):
                t = draw(st.sampled_from(avail))
                avail.remove(t)
                targets.append(t)
            labels.append(GateLabel(name, tuple(targets)))
        layers.append(Layer(labels))
    return Circuit(tuple(layers), lines)


@given(circuits_strategy())
@settings(max_examples=200, deadline=None)
def test_round_trip_identity(c):
    assert parse_circuit(serialize_circuit(c)) == c


@given(circuits_strategy(), st.integers(0, 4))
@settings(max_examples=50, deadline=None)
def test_repeat_depth_multiplies(c, k):
    assert repeat(c, k).depth == k * c.depth
