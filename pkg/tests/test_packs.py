import numpy as np
import pytest

from qcvv.circuits import glabel, parse_circuit
from qcvv.gstdesign import check_informational_completeness
from qcvv.localnoise import build_localnoise_model
from qcvv.basis import embed_ptm
from qcvv.gates import gate_ptm
from qcvv.packs import target_model_pack
from qcvv.sim import probs


def test_unknown_pack():
    with pytest.raises(KeyError):
        target_model_pack("smq9Q_nope")


def test_xyi_pack_contents():
    pack = target_model_pack("smq1Q_XYI")
    assert set(pack.model.gates) == {glabel("Gxpi2", 0), glabel("Gypi2", 0)}
    assert pack.model.idle is not None
    x = pack.model.gates[glabel("Gxpi2", 0)].dense()
    assert np.allclose(x, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]],
                       atol=1e-12)
    prep = pack.model.spam.dense_prep()
    assert np.allclose(prep, np.array([1, 0, 0, 1]) / np.sqrt(2))
    p = probs(pack.model, parse_circuit("{}@(0)"))
    assert abs(p["0"] - 1.0) < 1e-12


def test_pack_fiducials_informationally_complete():
    for name in ("smq1Q_XYI", "smq1Q_XYZI", "smq2Q_XYICNOT"):
        pack = target_model_pack(name)
        report = check_informational_completeness(
            pack.model, pack.prep_fiducials, pack.meas_fiducials)
        assert report.ok


def test_single_fiducial_rank_failure():
    from qcvv.gstdesign import RankDeficiencyError
    from qcvv.circuits import empty_circuit
    pack = target_model_pack("smq1Q_XYI")
    fids = [empty_circuit((0,))]
    with pytest.raises(RankDeficiencyError):
        check_informational_completeness(pack.model, fids, fids)
    report = check_informational_completeness(pack.model, fids, fids,
                                              raise_on_deficiency=False)
    assert report.prep_rank == 1


def test_completeness_rank_invariant_under_gauge():
    from qcvv.models import gauge_transform
    from tests_util import random_tp_gauge  # local helper
    pack = target_model_pack("smq1Q_XYI")
    s = random_tp_gauge(4, np.random.default_rng(5))
    moved = gauge_transform(pack.model, s)
    report = check_informational_completeness(moved, pack.prep_fiducials,
                                              pack.meas_fiducials)
    assert report.ok


def test_cnot_squared_is_identity():
    pack = target_model_pack("smq2Q_XYICNOT")
    cnot = pack.model.gates[glabel("Gcnot", 0, 1)].dense()
    assert cnot.shape == (16, 16)
    assert np.allclose(cnot @ cnot, np.eye(16), atol=1e-12)


def test_rpe_pack_minimal():
    pack = target_model_pack("smq1Q_Xpi2_rpe")
    assert set(pack.model.gates) == {glabel("Gxpi2", 0)}
    assert pack.prep_fiducials == [] and pack.germs == []


def test_localnoise_two_qubit_perfect():
    m = build_localnoise_model(2, ["Gxpi2", "Gypi2", "Gcnot"])
    p = probs(m, parse_circuit("{}@(0,1)"))
    assert abs(p["00"] - 1.0) < 1e-12
    assert glabel("Gcnot", 0, 1) in m.gates


def test_localnoise_four_qubit_rejected():
    with pytest.raises(ValueError):
        build_localnoise_model(4, ["Gxpi2", "Gypi2", "Gcnot"])


def test_localnoise_bad_availability():
    with pytest.raises(ValueError):
        build_localnoise_model(2, ["Gcnot"], availability={"Gcnot": [(0, 5)]})


def test_localnoise_three_qubit_cnot_embedding():
    m = build_localnoise_model(3, ["Gcnot"], availability={"Gcnot": [(0, 1)]})
    expected = embed_ptm(gate_ptm("Gcnot"), (0, 1), 3)
    kron_oracle = np.kron(gate_ptm("Gcnot"), np.eye(4))
    assert np.allclose(expected, kron_oracle)
    got = probs(m, parse_circuit("[Gcnot:0:1]@(0,1,2)"))
    assert abs(got["000"] - 1.0) < 1e-12
