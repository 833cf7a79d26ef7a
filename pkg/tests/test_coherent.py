import numpy as np
import pytest
from hypothesis import given, strategies as st

from capbound import channel, coherent, qmat, zoo
from capbound.coherent import q1_diagonal_scan, q1_maximize, state_coherent_info

seeds = st.integers(0, 2**32 - 1)


def test_state_coherent_info_examples():
    assert state_coherent_info(qmat.max_entangled(2), (2, 2)) == pytest.approx(1.0, abs=1e-12)
    assert state_coherent_info(np.eye(4) / 4, (2, 2)) == pytest.approx(-1.0, abs=1e-12)
    # isotropic state at w = 3f/4 = 0.01
    rho = zoo.isotropic_state(0.01 * 4 / 3)
    assert state_coherent_info(rho) == pytest.approx(0.903357239, abs=1e-8)


def test_channel_values_at_maximally_mixed():
    half = np.eye(2) / 2
    assert coherent.channel_coherent_info_at(zoo.depolarizing(1.0), half) == pytest.approx(-1.0, abs=1e-10)
    assert coherent.channel_coherent_info_at(zoo.bb84(0.01), half) == pytest.approx(0.838413728, abs=1e-8)
    p = 0.05 * 4 / 3
    assert coherent.channel_coherent_info_at(zoo.depolarizing(p), half) == pytest.approx(0.634354918, abs=1e-8)
    assert zoo.depolarizing_q1(p) == pytest.approx(0.634354918, abs=1e-8)


def test_choi_state_matches_channel_at_maximally_mixed(rng):
    n = channel.random_channel(2, 3, rng, 2)
    J = channel.choi_state(n)
    assert state_coherent_info(J, (2, 3)) == pytest.approx(
        coherent.channel_coherent_info_at(n, np.eye(2) / 2), abs=1e-10)


def test_bb84_q1_certified_at_maximally_mixed():
    r = q1_maximize(zoo.bb84(0.01))
    assert r.value == pytest.approx(zoo.bb84_q1(0.01), abs=1e-8)
    assert np.allclose(r.rho, np.eye(2) / 2, atol=1e-4)
    assert r.heuristic  # not declared degradable


def test_degradable_ascent_is_certified():
    r = q1_maximize(zoo.amplitude_damping(0.3), degradable=True)
    assert r.certified and r.restarts == 1
    assert r.to_dict()["certified"] is True


def test_amplitude_damping_q1_agrees_across_strategies():
    n = zoo.amplitude_damping(0.3)
    vals = [q1_maximize(n, strategy=s, degradable=True).value
            for s in ("full-simplex-eig", "bloch", "diagonal")]
    assert max(vals) - min(vals) < 1e-7
    assert q1_diagonal_scan(n)[0] == pytest.approx(vals[0], abs=1e-7)


def test_flagged_gad_diagonal_scan_matches_ascent():
    dec = zoo.gad_decomposition(0.3, 0.2)
    nh = channel.pure_flag_family(*dec.parts, 0.0)
    v, p = q1_diagonal_scan(nh)
    assert 0.0 < p < 1.0
    assert v == pytest.approx(q1_maximize(nh, strategy="bloch", degradable=True).value, abs=1e-5)
    # a coarse grid still returns a grid point value no larger than the refined one
    assert q1_diagonal_scan(nh, grid=1)[0] <= v + 1e-12


def test_diagonal_scan_rejects_qutrits(rng):
    with pytest.raises(ValueError):
        q1_diagonal_scan(channel.random_channel(3, 3, rng))


def test_unknown_strategy():
    with pytest.raises(ValueError):
        q1_maximize(zoo.bb84(0.1), strategy="simplex")
    with pytest.raises(ValueError):
        q1_maximize(channel.identity(3), strategy="bloch")


def test_project_simplex():
    v = coherent.project_simplex(np.array([2.0, 0.0, -1.0]))
    assert np.allclose(v, [1.0, 0.0, 0.0])
    u = coherent.project_simplex(np.array([0.3, 0.3, 0.4]))
    assert np.allclose(u, [0.3, 0.3, 0.4])


@given(seeds)
def test_q1_at_least_value_at_maximally_mixed(seed):
    n = channel.random_channel(2, 2, np.random.default_rng(seed), 2)
    r = q1_maximize(n, restarts=3, seed=seed)
    assert r.value >= coherent.channel_coherent_info_at(n, np.eye(2) / 2) - 1e-9
    assert np.isclose(np.trace(r.rho).real, 1.0)
    assert np.linalg.eigvalsh(r.rho).min() > -1e-12


@given(st.floats(0.0, 0.5), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_degradable_concavity(y, a, b, t):
    # amplitude damping with y <= 1/2 is degradable, so I_c is concave in the input
    f = coherent.CoherentObjective(zoo.amplitude_damping(y))
    ra, rb = np.diag([a, 1 - a]), np.diag([b, 1 - b])
    mid = f(t * ra + (1 - t) * rb)
    assert mid >= t * f(ra) + (1 - t) * f(rb) - 1e-9


@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_pauli_q1_dominates_maximally_mixed_and_pure(px, pz):
    r = q1_maximize(zoo.bb84(px, pz), restarts=2, seed=1)
    assert r.value >= max(zoo.bb84_q1(px, pz), 0.0) - 1e-7


@given(st.floats(0.0, 0.03), st.floats(0.0, 0.03))
def test_pauli_argmax_is_maximally_mixed_at_low_noise(px, pz):
    r = q1_maximize(zoo.bb84(px, pz), restarts=2, seed=1)
    assert r.value == pytest.approx(zoo.bb84_q1(px, pz), abs=1e-6)
