import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from capbound import bounds, channel, coherent, qmat, serialize, zoo
from capbound.qmat import DensityMatrix

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)


def basis_flags(k):
    return tuple(DensityMatrix(np.diag(np.eye(k)[i]).astype(complex), (k,)) for i in range(k))


def test_amplitude_damping_is_degradable():
    r = bounds.approx_degradable_bound(zoo.amplitude_damping(0.3))
    assert r.kind == "approx-degradable"
    assert sum(v for k, v in r.terms.items() if k != "q1") <= 1e-5
    assert r.value == pytest.approx(
        coherent.q1_maximize(zoo.amplitude_damping(0.3), degradable=True).value, abs=1e-7)
    assert not r.heuristic


def test_unitary_channel_bound_is_one():
    r = bounds.approx_degradable_bound(channel.from_kraus([HADAMARD]))
    assert r.value == pytest.approx(1.0, abs=1e-6)
    assert r.env_dim == 1


def test_approx_rejects_non_tp():
    with pytest.raises(ValueError):
        bounds.approx_degradable_bound(channel.from_kraus([0.5 * np.eye(2)]))


def test_alpha_one_flags_factor_out():
    dec = zoo.depolarizing_decomposition(0.1)
    flagged = bounds.channel_flag_bound(dec, 1.0)
    plain = bounds.approx_degradable_bound(dec.channel)
    assert flagged.eta == pytest.approx(plain.eta, abs=1e-6)
    assert flagged.value == pytest.approx(plain.value, abs=1e-5)


def test_gad_orthogonal_flags_give_q1():
    r = bounds.gad_flag_bound(0.2, 0.3)
    assert r.eta <= 1e-6
    assert r.value == pytest.approx(r.q1, abs=1e-5)
    assert r.kind == "channel-prop3" and r.alpha == 0.0


def test_gad_zero_at_half():
    assert bounds.gad_flag_bound(0.5, 0.2).value == pytest.approx(0.0, abs=1e-5)


def test_general_flags_match_pure_flags_at_zero():
    dec = zoo.depolarizing_decomposition(0.1)
    g = bounds.general_flag_bound(dec, basis_flags(2))
    c = bounds.channel_flag_bound(dec, 0.0)
    assert g.value == pytest.approx(c.value, abs=1e-5)
    assert g.kind == "channel-prop2"


def test_general_flags_single_part_is_approx():
    n = zoo.amplitude_damping(0.2)
    dec = channel.CPDecomposition((n,), basis_flags(1))
    assert bounds.general_flag_bound(dec).value == pytest.approx(
        bounds.approx_degradable_bound(n).value, abs=1e-6)


def test_pauli_split_with_orthogonal_flags_is_perfect():
    # with the branch revealed the receiver can undo each Pauli
    r = bounds.general_flag_bound(zoo.depolarizing_pauli_split(0.2), basis_flags(4))
    assert r.value == pytest.approx(1.0, abs=1e-5)


def test_general_flag_needs_flags():
    with pytest.raises(ValueError):
        bounds.general_flag_bound(zoo.depolarizing_decomposition(0.1))


def test_two_part_requirement():
    with pytest.raises(ValueError):
        bounds.channel_flag_bound(zoo.depolarizing_pauli_split(0.1), 0.5)


def _fake(value):
    return bounds._report("fake", {"v": value}, 0.0, None)


def test_alpha_scan_constant_keeps_first_point():
    a, r = bounds.alpha_scan(lambda a: _fake(1.0), grid=11, refine=5)
    assert a == 0.0 and r.value == 1.0
    assert r.scan["evaluations"] == 11 + 5


def test_alpha_scan_monotone_ends_at_one():
    a, r = bounds.alpha_scan(lambda a: _fake(2.0 - a), grid=11, refine=10)
    assert a == pytest.approx(1.0, abs=1e-2)
    assert r.value == pytest.approx(1.0, abs=1e-2)


def test_alpha_scan_refines_interior_minimum():
    a, r = bounds.alpha_scan(lambda a: _fake((a - 0.333) ** 2), grid=11, refine=30)
    assert a == pytest.approx(0.333, abs=1e-5)


def test_alpha_scan_bisects_feasibility_boundary():
    def ev(a):
        if a > 0.55:
            return bounds._infinite("fake", 1.0)
        return _fake(1.0 - a)
    a, r = bounds.alpha_scan(ev, grid=11, refine=30)
    assert a == pytest.approx(0.55, abs=1e-6) and a <= 0.55


def test_choi_bound_endpoints():
    r0 = bounds.choi_channel_bound(*zoo.depolarizing_choi_split(0.0), grid=5, refine=3)
    assert r0.value == pytest.approx(1.0, abs=1e-5)
    assert any("teleportation" in n for n in r0.notes)
    r1 = bounds.choi_channel_bound(*zoo.depolarizing_choi_split(1.0), grid=5, refine=3)
    assert r1.value >= 0.0


def test_state_bound_input_checks():
    tau, omega = zoo.depolarizing_choi_split(0.1)
    with pytest.raises(ValueError):
        bounds.state_pure_flag_bound(tau, omega, 1.5)
    with pytest.raises(qmat.DimensionError):
        bounds.flagged_state(tau, np.eye(2), 0.5)
    with pytest.raises(qmat.NotPSDError):
        bounds.state_pure_flag_bound(tau + omega + 0.1 * np.diag([1, -1, 0, 0]),
                                     -0.1 * np.diag([1, -1, 0, 0]).astype(complex), 0.5)


def test_non_degradable_decomposition_is_infinite_with_courtesy():
    r = bounds.degradable_flag_bound(zoo.depolarizing_decomposition(0.7), grid=3, refine=2,
                                     courtesy_grid=2)
    assert r.infinite and math.isinf(r.value)
    assert r.courtesy is not None and math.isfinite(r.courtesy.value)
    d = json.loads(serialize.report_to_json(r))
    assert d["value"] is None and d["infinite"] is True
    assert d["courtesy"]["value"] is not None
    assert r.itemization_error() == 0.0


def test_degradable_flag_private_tag():
    r = bounds.degradable_flag_bound(zoo.bb84_decomposition(0.02), "private", grid=11, refine=10)
    assert r.kind == "private-degradable" and not r.infinite
    assert set(r.terms) == {"q1"}
    assert r.value_upper >= r.value


def test_bad_flavor():
    with pytest.raises(ValueError):
        bounds.degradable_flag_bound(zoo.bb84_decomposition(0.02), "classical", grid=2)


def test_dp_gad_examples():
    assert bounds.dp_gad_bound(0.0, 0.0) == pytest.approx(1.0, abs=1e-9)
    y, N = 0.2, 0.3
    yp = bounds.dp_gad_prime(y, N)
    assert yp == pytest.approx(0.2 * 0.7 / 0.94)
    ref = coherent.q1_maximize(zoo.amplitude_damping(yp), strategy="bloch", degradable=True).value
    assert bounds.dp_gad_bound(y, N) == pytest.approx(ref, abs=1e-7)
    assert bounds.dp_gad_bound(0.6, 0.0) == 0.0
    with pytest.raises(ValueError):
        bounds.dp_gad_prime(1.2, 0.0)


def test_report_fields():
    r = bounds.approx_degradable_bound(zoo.depolarizing(0.05))
    assert r.itemization_error() == 0.0
    assert r.q1 == r.terms["q1"]
    assert set(r.csv_fields()) >= {"value", "value_upper", "alpha", "eta", "env_dim"}
    assert r.diagnostics and r.diagnostics[0]["gap"] <= 1e-7
    assert r.degrading_map is not None and r.degrading_map.is_cptp


@given(st.floats(0.0, 1.0), st.integers(1, 16))
def test_private_terms_dominate_quantum(eta, dE):
    assert math.fsum(bounds.private_terms(eta, dE).values()) >= \
        math.fsum(bounds.quantum_terms(eta, dE).values()) - 1e-12


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(1, 16))
def test_terms_monotone_in_eta_below_half(a, b, dE):
    lo, hi = sorted((0.5 * a, 0.5 * b))
    for make in (bounds.quantum_terms, bounds.private_terms, bounds.state_terms):
        assert math.fsum(make(lo, dE).values()) <= math.fsum(make(hi, dE).values()) + 1e-12


@given(st.integers(0, 2**32 - 1))
def test_sandwich_on_random_channels(seed):
    n = channel.random_channel(2, 2, np.random.default_rng(seed), 2)
    r = bounds.approx_degradable_bound(n, restarts=2, seed=seed)
    assert r.q1 <= r.value <= r.value_upper
    assert r.itemization_error() == 0.0
    # a pure input has zero coherent information
    assert r.q1 >= -1e-9
