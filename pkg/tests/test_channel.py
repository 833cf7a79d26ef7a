import numpy as np
import pytest
from hypothesis import given, strategies as st

from capbound import channel, qmat, zoo
from capbound.channel import CPDecomposition
from capbound.qmat import DensityMatrix, DimensionError, NotPSDError, von_neumann_entropy

seeds = st.integers(0, 2**32 - 1)


def rand_channel(seed, din=2, dout=2, r=None):
    return channel.random_channel(din, dout, np.random.default_rng(seed), r)


def basis_ops(d):
    return [np.outer(qmat.ket(i, d), qmat.ket(j, d)) for i in range(d) for j in range(d)]


def test_from_kraus_examples():
    n = channel.from_kraus([np.eye(2)])
    assert np.allclose(n.choi, 2 * qmat.max_entangled(2))
    assert zoo.gad(0.3, 0.2).is_cptp
    with pytest.raises(ValueError):
        channel.from_kraus([])
    with pytest.raises(DimensionError):
        channel.from_kraus([np.eye(2), np.eye(3)])


def test_non_cptp_flag():
    assert not channel.from_kraus([0.5 * np.eye(2)]).is_cptp


def test_kraus_from_choi_examples():
    assert channel.kraus_from_choi(channel.identity(2).choi, 2, 2).num_kraus == 1
    assert channel.minimal(zoo.depolarizing(0.3)).num_kraus == 4
    low = channel.from_kraus([np.eye(2)[:, :1] @ np.ones((1, 2)) / np.sqrt(2),
                              np.eye(2)[:, 1:] @ np.ones((1, 2)) / np.sqrt(2)])
    assert channel.minimal(low).num_kraus < 4
    with pytest.raises(NotPSDError):
        channel.kraus_from_choi(np.diag([1.0, -1.0, 0, 0]), 2, 2)


def test_apply_examples():
    rho = DensityMatrix(np.diag([1.0, 0.0]), (2,))
    assert np.allclose(channel.apply(channel.identity(2), rho).matrix, rho.matrix)
    p = 0.3
    out = zoo.depolarizing(p)(rho.matrix)
    assert np.allclose(out, (1 - p) * rho.matrix + p * np.eye(2) / 2)
    with pytest.raises(DimensionError):
        channel.apply(channel.identity(2), np.eye(3) / 3)


def test_complement_of_identity_is_trivial():
    c = channel.complementary(channel.identity(2))
    assert c.dim_out == 1
    assert von_neumann_entropy(c(np.eye(2) / 2)) == pytest.approx(0.0, abs=1e-12)


def test_amplitude_damping_complement_is_amplitude_damping():
    y = 0.3
    comp = channel.complementary(zoo.amplitude_damping(y))
    other = zoo.amplitude_damping(1 - y)
    for t in np.linspace(0, 1, 11):
        for c in (0.0, 0.2, 0.4j):
            rho = np.array([[t, c * np.sqrt(t * (1 - t))], [np.conj(c) * np.sqrt(t * (1 - t)), 1 - t]])
            assert abs(von_neumann_entropy(comp(rho)) - von_neumann_entropy(other(rho))) <= 1e-8


def test_random_channel_rejects_impossible_kraus_count():
    with pytest.raises(ValueError):
        channel.random_channel(3, 1, np.random.default_rng(0), 2)


def test_complement_of_zero_map_raises():
    with pytest.raises(ValueError):
        channel.complementary(channel.from_kraus([np.zeros((2, 2))]))


def test_compose_examples():
    n = zoo.depolarizing(0.2)
    assert np.allclose(channel.compose(channel.identity(2), n).choi, n.choi)
    assert np.allclose(channel.compose(n, n).choi, zoo.depolarizing(0.36).choi)
    with pytest.raises(DimensionError):
        channel.compose(channel.identity(3), n)


def test_compose_matches_link_product():
    from capbound import _kernels
    rng = np.random.default_rng(0)
    n = channel.random_channel(2, 3, rng)
    d = channel.random_channel(3, 2, rng)
    J = _kernels.link_stack(n.choi, d.choi[None], 2, 3, 2)[0]
    assert np.max(np.abs(J - channel.compose(d, n).choi)) <= 1e-8


def test_flag_extend_single_part():
    n = zoo.amplitude_damping(0.2)
    dec = CPDecomposition((n,), (np.diag([1.0, 0.0]),))
    ext = channel.flag_extend(dec)
    assert np.allclose(ext.choi, channel.from_kraus([np.kron(K, qmat.ket(0, 2)[:, None])
                                                     for K in n.kraus]).choi)


def test_flag_extend_depolarizing_orthogonal_flags():
    p = 0.3
    dec = zoo.depolarizing_decomposition(p).with_flags([np.diag([1.0, 0]), np.diag([0, 1.0])])
    ext = channel.flag_extend(dec)
    assert ext.is_cptp and ext.dim_out == 4
    J = ext.choi.reshape(2, 2, 2, 2, 2, 2)  # (a, b, f, a', b', f')
    assert np.allclose(J[:, :, 0, :, :, 0].reshape(4, 4), (1 - p) * 2 * qmat.max_entangled(2))
    assert np.allclose(J[:, :, 1, :, :, 1].reshape(4, 4), p * np.eye(4) / 2)
    assert np.allclose(J[:, :, 0, :, :, 1], 0)


def test_flag_extend_marginal_recovers_channel():
    dec = zoo.gad_decomposition(0.3, 0.2).with_flags([qmat.proj(channel.psi_alpha(0.4)),
                                                      np.diag([1.0, 0])])
    ext = channel.flag_extend(dec)
    for E in basis_ops(2):
        out = ext(E)
        assert np.max(np.abs(qmat.partial_trace(out, [2, 2], [0]) - dec.channel(E))) <= 1e-10


def test_flag_extend_requires_flags():
    with pytest.raises(ValueError):
        channel.flag_extend(zoo.depolarizing_decomposition(0.1))


def test_decomposition_validation():
    with pytest.raises(ValueError):
        CPDecomposition((channel.from_kraus([0.5 * np.eye(2)]),))
    with pytest.raises(ValueError):
        zoo.depolarizing_decomposition(0.1).with_flags([np.diag([1.0, 0])])
    with pytest.raises(DimensionError):
        zoo.depolarizing_decomposition(0.1).with_flags([np.diag([1.0, 0]), np.eye(3) / 3])


def test_pure_flag_family_examples():
    n0, n1 = zoo.depolarizing_decomposition(0.2).parts
    one = channel.pure_flag_family(n0, n1, 1.0)
    for E in basis_ops(2):
        assert np.allclose(one(E), np.kron(zoo.depolarizing(0.2)(E), np.diag([1.0, 0])))
    zero = channel.pure_flag_family(n0, n1, 0.0)
    dec = CPDecomposition((n0, n1), (np.diag([0, 1.0]), np.diag([1.0, 0])))
    assert np.allclose(zero.choi, channel.flag_extend(dec).choi)
    with pytest.raises(ValueError):
        channel.pure_flag_family(n0, n1, 1.5)


def test_gad_alpha_zero_is_orthogonally_flagged():
    y, N = 0.3, 0.2
    A1, A2, A3, A4 = zoo.gad_kraus(y, N)
    parts = zoo.gad_decomposition(y, N).parts
    nhat = channel.pure_flag_family(*parts, 0.0)
    one, zero = qmat.ket(1, 2)[:, None], qmat.ket(0, 2)[:, None]
    ref = channel.from_kraus([np.kron(A1, one), np.kron(A2, one),
                              np.kron(A3, zero), np.kron(A4, zero)])
    assert np.allclose(nhat.choi, ref.choi)


def test_choi_state_examples():
    assert np.allclose(channel.choi_state(channel.identity(2)).matrix, qmat.max_entangled(2))
    p = 0.3
    cs = channel.choi_state(zoo.depolarizing(p))
    assert np.allclose(cs.matrix, (1 - p) * qmat.max_entangled(2) + p * np.eye(4) / 4)
    assert np.allclose(cs.ptrace([0]).matrix, np.eye(2) / 2)
    with pytest.raises(ValueError):
        channel.choi_state(channel.from_kraus([0.5 * np.eye(2)]))


@given(seeds, st.integers(1, 3), st.integers(1, 3), st.integers(1, 4))
def test_cptp_choi_round_trip(seed, din, dout, r):
    r = max(r, -(-din // dout))
    n = rand_channel(seed, din, dout, r)
    assert n.is_cptp
    assert np.linalg.eigvalsh(n.choi)[0] >= -1e-10
    m = channel.kraus_from_choi(n.choi, din, dout)
    assert np.max(np.abs(m.choi - n.choi)) <= 1e-8
    assert m.num_kraus == qmat.numerical_rank(n.choi)
    for E in basis_ops(din):
        assert np.max(np.abs(channel.apply_via_choi(n.choi, E, din, dout) - n(E))) <= 1e-10


@given(seeds)
def test_complement_entropies(seed):
    rng = np.random.default_rng(seed)
    n = channel.random_channel(2, 2, rng, 3)
    comp = channel.complementary(n)
    rho = qmat.random_density(2, rng)
    # Stinespring: the environment marginal of V rho V^dagger
    V = np.concatenate([K for K in channel.minimal(n).kraus], axis=0)  # (E B) x A
    big = V @ rho @ V.conj().T
    env = qmat.partial_trace(big, [comp.dim_out, 2], [0])
    assert abs(von_neumann_entropy(comp(rho)) - von_neumann_entropy(env)) <= 1e-8
    cc = channel.complementary(comp)
    assert abs(von_neumann_entropy(cc(rho)) - von_neumann_entropy(n(rho))) <= 1e-8
