import numpy as np
import pytest

from qcvv.circuits import circuit, empty_circuit, parse_circuit
from qcvv.evaltree import build_eval_tree
from qcvv.gstdesign import make_gst_design
from qcvv.models import depolarize, set_parameterization
from qcvv.packs import target_model_pack
from qcvv.sim import (SimulationError, bulk_dprobs_array, bulk_probs,
                      bulk_probs_array, exact_frequency_dataset, probs,
                      simulate_dataset)


@pytest.fixture(scope="module")
def xyi():
    return target_model_pack("smq1Q_XYI")


def test_probs_equator(xyi):
    p = probs(xyi.model, parse_circuit("[Gxpi2:0]@(0)"))
    assert abs(p["0"] - 0.5) < 1e-12 and abs(p["1"] - 0.5) < 1e-12


def test_probs_flip(xyi):
    p = probs(xyi.model, parse_circuit("[Gxpi2:0][Gxpi2:0]@(0)"))
    assert abs(p["0"]) < 1e-12 and abs(p["1"] - 1.0) < 1e-12


def test_probs_depolarized_double_x(xyi):
    noisy = depolarize(xyi.model, 0.07, 0.0)
    p = probs(noisy, parse_circuit("[Gxpi2:0][Gxpi2:0]@(0)"))
    # matrix-product oracle: Bloch z after two depolarized X(pi/2) is -0.93^2
    assert abs(p["0"] - (1 - 0.93 ** 2) / 2) < 1e-12
    assert abs(p["1"] - (1 + 0.93 ** 2) / 2) < 1e-12


def test_probs_unknown_gate(xyi):
    with pytest.raises(SimulationError):
        probs(xyi.model, parse_circuit("[Gnope:0]@(0)"))


def test_probs_uncovered_lines(xyi):
    with pytest.raises(SimulationError):
        probs(xyi.model, parse_circuit("[Gxpi2:3]@(3)"))


def test_tree_power_doubling_node_count():
    g = circuit([("Gxpi2", 0)], (0,))
    circuits = [g, g * 2, g * 4]
    tree = build_eval_tree(circuits, mode="matrix")
    assert tree.num_nodes == 3  # leaf, square, square-of-square
    assert tree.total_layer_count == 7


def test_tree_single_circuit_chain():
    g = circuit([("Gxpi2", 0)], (0,)) * 5
    tree = build_eval_tree([g], mode="state")
    assert tree.num_nodes == 5
    assert tree.node_path(0) == list(range(5))


def test_tree_node_count_bound_gst_design():
    design = make_gst_design("smq1Q_XYI", 64)
    tree = build_eval_tree(design.circuits, mode="state")
    assert tree.num_nodes <= tree.total_layer_count
    assert tree.num_nodes < 0.5 * tree.total_layer_count


def test_bulk_probs_equals_map_probs_exactly(xyi):
    rng = np.random.default_rng(5)
    model = depolarize(xyi.model, 0.05, 0.03)
    circuits = []
    for _ in range(100):
        n = rng.integers(0, 10)
        body = "".join(rng.choice(["[Gxpi2:0]", "[Gypi2:0]", "[]"]) for _ in range(n))
        c = parse_circuit((body or "{}") + "@(0)")
        if c not in circuits:
            circuits.append(c)
    tree = build_eval_tree(circuits, mode="state")
    table = bulk_probs_array(model, tree)
    for k, c in enumerate(circuits):
        single = probs(model, c)
        for j, lbl in enumerate(model.outcome_labels):
            assert table[k, j] == single[lbl]  # bitwise identical

    mtree = build_eval_tree(circuits, mode="matrix")
    mtable = bulk_probs_array(model, mtree)
    assert np.max(np.abs(mtable - table)) < 1e-14


def test_bulk_probs_dict_interface(xyi):
    circuits = [parse_circuit("[Gxpi2:0]@(0)"), parse_circuit("{}@(0)")]
    tree = build_eval_tree(circuits)
    out = bulk_probs(xyi.model, tree)
    assert abs(out[circuits[0]]["0"] - 0.5) < 1e-12
    assert abs(out[circuits[1]]["0"] - 1.0) < 1e-12


def _fd_jacobian(model, circuits, step=1e-7):
    tree = build_eval_tree(circuits, mode="state")
    x0 = model.to_vector()
    jac = np.zeros((len(circuits), len(model.outcome_labels), len(x0)))
    for k in range(len(x0)):
        for sign in (1, -1):
            x = x0.copy()
            x[k] += sign * step
            model.from_vector(x)
            p = bulk_probs_array(model, tree)
            if sign > 0:
                plus = p
            else:
                minus = p
        jac[:, :, k] = (plus - minus) / (2 * step)
    model.from_vector(x0)
    return jac


def test_jacobian_matches_finite_differences_tp(xyi):
    rng = np.random.default_rng(9)
    model = set_parameterization(depolarize(xyi.model, 0.06, 0.02), "full-TP")
    v = model.to_vector() + rng.normal(scale=0.02, size=model.num_params)
    model.from_vector(v)
    circuits = [parse_circuit(s + "@(0)") for s in
                ["{}", "[Gxpi2:0]", "[Gxpi2:0][Gypi2:0]", "[]",
                 "[Gypi2:0][Gypi2:0][Gxpi2:0]", "[Gxpi2:0][]" + "[Gxpi2:0]" * 6]]
    tree = build_eval_tree(circuits, mode="state")
    analytic = bulk_dprobs_array(model, tree)
    fd = _fd_jacobian(model, circuits)
    assert np.max(np.abs(analytic - fd)) < 1e-6


def test_jacobian_two_qubit_embedded_gates():
    rng = np.random.default_rng(13)
    pack = target_model_pack("smq2Q_XYICNOT")
    model = set_parameterization(depolarize(pack.model, 0.05, 0.01), "full-TP")
    v = model.to_vector() + rng.normal(scale=0.01, size=model.num_params)
    model.from_vector(v)
    circuits = [parse_circuit(s + "@(0,1)") for s in
                ["[Gxpi2:0Gypi2:1][Gcnot:0:1]", "[Gcnot:0:1][Gcnot:0:1]",
                 "[Gxpi2:1]", "{}"]]
    tree = build_eval_tree(circuits, mode="state")
    analytic = bulk_dprobs_array(model, tree)
    fd = _fd_jacobian(model, circuits)
    assert np.max(np.abs(analytic - fd)) < 1e-6


def test_jacobian_custom_op_parameter():
    from qcvv.circuits import glabel
    from qcvv.models import replace_op
    from qcvv.ops import DepolOverrotXpi2Op
    pack = target_model_pack("smq1Q_XYI")
    model = set_parameterization(pack.model, "static")
    model = replace_op(model, glabel("Gxpi2", 0), DepolOverrotXpi2Op(0.0, 0.0))
    c = parse_circuit("[Gxpi2:0][Gxpi2:0]@(0)")
    tree = build_eval_tree([c], mode="state")
    analytic = bulk_dprobs_array(model, tree)
    fd = _fd_jacobian(model, [c])
    assert analytic.shape == (1, 2, 2)
    assert np.max(np.abs(analytic - fd)) < 1e-6
    # p(1 | XX) = (1 + (1-depol)^2)/2, so dp(1)/ddepol = -1 at depol = 0
    j = model.outcome_labels.index("1")
    assert abs(analytic[0, j, 0] - (-1.0)) < 1e-9


def test_jacobian_static_model_empty():
    pack = target_model_pack("smq1Q_XYI")
    model = set_parameterization(pack.model, "static")
    c = parse_circuit("[Gxpi2:0]@(0)")
    tree = build_eval_tree([c])
    jac = bulk_dprobs_array(model, tree)
    assert jac.shape == (1, 2, 0)


def test_simulate_dataset_deterministic(xyi):
    circuits = [parse_circuit("[Gxpi2:0]@(0)"), parse_circuit("{}@(0)")]
    a = simulate_dataset(xyi.model, circuits, 500, seed=17)
    b = simulate_dataset(xyi.model, circuits, 500, seed=17)
    assert np.array_equal(a.counts, b.counts)
    assert a.counts.sum(axis=1).tolist() == [500, 500]


def test_simulate_dataset_zero_shots(xyi):
    ds = simulate_dataset(xyi.model, [parse_circuit("{}@(0)")], 0, seed=0)
    assert ds.counts.sum() == 0


def test_simulate_dataset_binomial_bounds(xyi):
    c = parse_circuit("[Gxpi2:0]@(0)")
    ds = simulate_dataset(xyi.model, [c], 10 ** 6, seed=23)
    n0 = ds.row(c)["0"]
    sigma = np.sqrt(10 ** 6 * 0.25)
    assert abs(n0 - 5e5) < 5 * sigma


def test_exact_frequency_dataset(xyi):
    c = parse_circuit("[Gxpi2:0]@(0)")
    ds = exact_frequency_dataset(xyi.model, [c])
    assert abs(ds.row(c)["0"] - 0.5) < 1e-12
    assert not ds.is_integral()
