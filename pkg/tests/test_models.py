import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcvv.basis import (choi_eigenvalues, choi_to_ptm, ptm_to_choi,
                        unitary_to_ptm)
from qcvv.circuits import glabel, parse_circuit
from qcvv.gates import gate_ptm
from qcvv.metrics import entanglement_infidelity
from qcvv.models import (depolarize, gauge_transform, num_nongauge_params,
                         replace_op, set_parameterization)
from qcvv.ops import (CPTPOp, DepolOverrotXpi2Op, FixedDepolWrapperOp,
                      FullTPOp, OpTransformError, StaticOp, depolarizing_ptm)
from qcvv.packs import target_model_pack
from qcvv.sim import probs
from scipy.linalg import expm

X_PI2_PTM = np.array([[1, 0, 0, 0],
                      [0, 1, 0, 0],
                      [0, 0, 0, -1],
                      [0, 0, 1, 0]], dtype=float)


def random_tp_gauge(dim, rng, scale=0.3):
    k = rng.normal(scale=scale, size=(dim, dim))
    k[0, :] = 0.0
    s = expm(k)
    s[0, :] = 0.0
    s[0, 0] = 1.0
    return s


# ---------------------------------------------------------------------------
# operator kinds

def test_xpi2_ptm_matches_convention():
    assert np.allclose(gate_ptm("Gxpi2"), X_PI2_PTM, atol=1e-12)


def test_custom_op_perfect_at_zero():
    op = DepolOverrotXpi2Op(0.0, 0.0)
    assert np.allclose(op.dense(), X_PI2_PTM, atol=1e-15)


def test_custom_op_depol_only():
    op = DepolOverrotXpi2Op(0.1, 0.0)
    assert np.isclose(op.dense()[1, 1], 0.9)
    assert np.isclose(op.dense()[3, 2], 0.9)
    assert abs(op.dense()[2, 2]) < 1e-15


def test_custom_op_overrotation_formula_oracle():
    # direct evaluation of the defining formula
    over = 0.02
    theta = (np.pi / 2 + over) / 2
    b = 2 * np.cos(theta) * np.sin(theta)
    c = np.sin(theta) ** 2 - np.cos(theta) ** 2
    op = DepolOverrotXpi2Op(0.0, over)
    assert np.isclose(op.dense()[3, 2], b)
    assert np.isclose(op.dense()[2, 2], c)
    assert np.isclose(b, np.cos(over))
    assert np.isclose(c, np.sin(over))


def test_custom_op_dparams_match_finite_differences():
    op = DepolOverrotXpi2Op(0.07, -0.03)
    dp = op.dparams()
    for k in range(2):
        h = 1e-7
        v = op.to_vector()
        vp, vm = v.copy(), v.copy()
        vp[k] += h
        vm[k] -= h
        op2 = DepolOverrotXpi2Op(*vp)
        op3 = DepolOverrotXpi2Op(*vm)
        fd = (op2.dense() - op3.dense()) / (2 * h)
        assert np.max(np.abs(fd - dp[k])) < 1e-6


@pytest.mark.parametrize("kind_op", [
    StaticOp(X_PI2_PTM),
    FullTPOp(X_PI2_PTM),
    CPTPOp.from_dense(X_PI2_PTM),
    DepolOverrotXpi2Op(0.05, 0.01),
    FixedDepolWrapperOp(depolarizing_ptm(4, 0.1), DepolOverrotXpi2Op(0.0, 0.02)),
])
def test_vector_round_trip_reproduces_dense(kind_op):
    dense_before = kind_op.dense().copy()
    v = kind_op.to_vector()
    assert v.shape == (kind_op.num_params,)
    kind_op.from_vector(v)
    atol = 1e-12 if kind_op.kind == "CPTP" else 0.0
    assert np.allclose(kind_op.dense(), dense_before, atol=atol, rtol=0)


def test_full_tp_param_count_1q():
    op = FullTPOp(np.eye(4))
    assert op.num_params == 12


def test_cptp_choi_psd_for_random_params():
    rng = np.random.default_rng(42)
    op = CPTPOp.from_dense(X_PI2_PTM)
    for _ in range(20):
        op.from_vector(rng.normal(size=op.num_params))
        mat = op.dense()
        assert np.allclose(mat[0], [1, 0, 0, 0], atol=1e-9)
        assert choi_eigenvalues(mat).min() > -1e-10


def test_cptp_projection_of_noncp_matrix():
    bad = np.diag([1.0, 1.1, 1.1, 1.1])  # outside the CP cone
    op = CPTPOp.from_dense(bad)
    assert op.projection_distance > 0
    assert choi_eigenvalues(op.dense()).min() > -1e-10


def test_choi_ptm_round_trip():
    rng = np.random.default_rng(0)
    for gate in ("Gxpi2", "Gcnot"):
        r = gate_ptm(gate)
        assert np.allclose(choi_to_ptm(ptm_to_choi(r)), r, atol=1e-12)


def test_wrapper_flattens_and_composes():
    inner = DepolOverrotXpi2Op(0.0, 0.0)
    w1 = FixedDepolWrapperOp(depolarizing_ptm(4, 0.1), inner)
    w2 = FixedDepolWrapperOp(depolarizing_ptm(4, 0.2), w1)
    assert w2.inner is inner or isinstance(w2.inner, DepolOverrotXpi2Op)
    expected = depolarizing_ptm(4, 0.2) @ depolarizing_ptm(4, 0.1) @ inner.dense()
    assert np.allclose(w2.dense(), expected)
    assert w2.num_params == 2


# ---------------------------------------------------------------------------
# model-level operations

def test_depolarize_identity_gate_diagonal():
    pack = target_model_pack("smq1Q_XYI")
    noisy = depolarize(pack.model, op_noise=0.07, spam_noise=0.07)
    assert np.allclose(noisy.idle.dense(), np.diag([1, 0.93, 0.93, 0.93]), atol=1e-12)


def test_depolarize_zero_is_identity_map():
    pack = target_model_pack("smq1Q_XYI")
    out = depolarize(pack.model, 0.0, 0.0)
    for label in pack.model.gates:
        assert np.allclose(out.gates[label].dense(), pack.model.gates[label].dense())
    assert np.allclose(out.spam.dense_prep(), pack.model.spam.dense_prep())


def test_depolarize_rate_out_of_range():
    pack = target_model_pack("smq1Q_XYI")
    with pytest.raises(ValueError):
        depolarize(pack.model, op_noise=1.5)


def test_entanglement_infidelity_depolarized_identity():
    ident = np.eye(4)
    dep = depolarizing_ptm(4, 0.07)
    assert np.isclose(entanglement_infidelity(dep, ident), 0.0525)
    assert entanglement_infidelity(ident, ident) == 0.0


def test_entanglement_infidelity_affine_in_rate():
    ident = np.eye(4)
    rates = np.linspace(0, 0.4, 9)
    vals = [entanglement_infidelity(depolarizing_ptm(4, r), ident) for r in rates]
    diffs = np.diff(vals)
    assert np.allclose(diffs, diffs[0])


def test_entanglement_infidelity_gauge_invariant_under_orthogonal():
    rng = np.random.default_rng(7)
    g = depolarizing_ptm(4, 0.1) @ gate_ptm("Gxpi2")
    ideal = gate_ptm("Gxpi2")
    base = entanglement_infidelity(g, ideal)
    for _ in range(10):
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        assert np.isclose(entanglement_infidelity(q.T @ g @ q, q.T @ ideal @ q), base)


def test_gauge_transform_identity_unchanged():
    pack = target_model_pack("smq1Q_XYI")
    out = gauge_transform(pack.model, np.eye(4))
    for label in pack.model.gates:
        assert np.allclose(out.gates[label].dense(), pack.model.gates[label].dense())


def test_gauge_transform_preserves_probabilities():
    rng = np.random.default_rng(11)
    pack = target_model_pack("smq1Q_XYI")
    model = depolarize(pack.model, 0.05, 0.02)
    s = random_tp_gauge(4, rng)
    moved = gauge_transform(model, s)
    for _ in range(50):
        n = rng.integers(0, 8)
        body = "".join(rng.choice(["[Gxpi2:0]", "[Gypi2:0]", "[]"]) for _ in range(n))
        c = parse_circuit((body or "{}") + "@(0)")
        p0 = probs(model, c)
        p1 = probs(moved, c)
        for lbl in p0:
            assert abs(p0[lbl] - p1[lbl]) < 1e-12


def test_gauge_transform_static_model_raises():
    pack = target_model_pack("smq1Q_XYI")
    static = set_parameterization(pack.model, "static")
    with pytest.raises(OpTransformError):
        gauge_transform(static, random_tp_gauge(4, np.random.default_rng(0)))


def test_gauge_transform_singular_raises():
    pack = target_model_pack("smq1Q_XYI")
    s = np.eye(4)
    s[3, 3] = 0.0
    with pytest.raises(ValueError):
        gauge_transform(pack.model, s)


def test_set_parameterization_full_tp_param_counts():
    pack = target_model_pack("smq1Q_XYI")
    m = set_parameterization(pack.model, "full-TP")
    for op in m.gates.values():
        assert op.num_params == 12
    m2 = set_parameterization(m, "full-TP")
    assert np.allclose(m2.to_vector(), m.to_vector())


def test_replace_op_changes_param_count():
    pack = target_model_pack("smq1Q_XYZI")
    m = set_parameterization(pack.model, "CPTP")
    label = glabel("Gzpi2", 0)
    before = m.num_params
    per_gate = m.gates[label].num_params
    m2 = replace_op(m, label, StaticOp(m.gates[label].dense()))
    assert m2.num_params == before - per_gate


def test_model_vector_round_trip():
    pack = target_model_pack("smq1Q_XYI")
    m = depolarize(pack.model, 0.03, 0.01)
    v = m.to_vector()
    m.from_vector(v)
    assert np.allclose(m.to_vector(), v)
    assert m.num_params == 3 * 12 + 3 + 4  # idle + X + Y gates, prep, one effect


def test_nongauge_param_count_xyi_tp():
    pack = target_model_pack("smq1Q_XYI")
    assert num_nongauge_params(pack.model) == pack.model.num_params - 12


def test_nongauge_params_static_model_zero():
    pack = target_model_pack("smq1Q_XYI")
    static = set_parameterization(pack.model, "static")
    assert num_nongauge_params(static) == 0


def test_probabilities_sum_to_one_tp_models():
    rng = np.random.default_rng(3)
    pack = target_model_pack("smq1Q_XYI")
    model = set_parameterization(pack.model, "full-TP")
    v = model.to_vector() + rng.normal(scale=0.05, size=model.num_params)
    model.from_vector(v)
    for _ in range(20):
        n = rng.integers(0, 6)
        body = "".join(rng.choice(["[Gxpi2:0]", "[Gypi2:0]", "[]"]) for _ in range(n))
        c = parse_circuit((body or "{}") + "@(0)")
        assert abs(sum(probs(model, c).values()) - 1.0) < 1e-12
