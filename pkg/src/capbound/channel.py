"""Completely positive maps: Kraus/Choi conversions, complements, flags.

Choi matrices are unnormalized, J = sum_ij |i><j| (x) N(|i><j|) with the
input system first, so ``tr_out J = I_in`` for trace-preserving maps.
"""

from dataclasses import dataclass, field

import numpy as np

from . import qmat
from .qmat import DensityMatrix, DimensionError, NotPSDError

CPTP_TOL = 1e-10


def choi_from_kraus(kraus, dim_in):
    dout = kraus[0].shape[0]
    J = np.zeros((dim_in * dout, dim_in * dout), dtype=np.complex128)
    for K in kraus:
        v = K.T.reshape(-1)
        J += np.outer(v, v.conj())
    return J


@dataclass(frozen=True, eq=False)
class CPMap:
    """A completely positive map held as Kraus operators with cached Choi."""

    kraus: tuple
    dim_in: int
    dim_out: int
    choi: np.ndarray = field(repr=False, compare=False)
    is_cptp: bool = field(compare=False)

    def __call__(self, rho):
        return apply(self, rho)

    @property
    def num_kraus(self):
        return len(self.kraus)


def from_kraus(kraus):
    kraus = [np.array(K, dtype=np.complex128) for K in kraus]
    if not kraus:
        raise ValueError("a CP map needs at least one Kraus operator")
    shape = kraus[0].shape
    if len(shape) != 2 or any(K.shape != shape for K in kraus):
        raise DimensionError(f"Kraus operators must share one 2-d shape, got "
                             f"{[K.shape for K in kraus]}")
    dout, din = shape
    for K in kraus:
        K.setflags(write=False)
    J = choi_from_kraus(kraus, din)
    J.setflags(write=False)
    S = sum(K.conj().T @ K for K in kraus)
    cptp = bool(np.max(np.abs(S - np.eye(din))) <= CPTP_TOL)
    return CPMap(tuple(kraus), din, dout, J, cptp)


def kraus_from_choi(J, dim_in, dim_out, rel_tol=qmat.RANK_TOL):
    """Minimal Kraus representation read off the eigenvectors of ``J``."""
    J = qmat.as_matrix(J)
    if J.shape != (dim_in * dim_out, dim_in * dim_out):
        raise DimensionError(f"Choi shape {J.shape} does not match "
                             f"{dim_in} -> {dim_out}")
    w, v = qmat.eigh(J)
    top = w[-1] if w.size else 0.0
    if w.size and w[0] < -1e-8 * max(1.0, top):
        raise NotPSDError(f"Choi matrix has eigenvalue {w[0]:.3e}")
    keep = np.nonzero(w > rel_tol * top)[0][::-1] if top > 0 else []
    kraus = [np.sqrt(w[i]) * v[:, i].reshape(dim_in, dim_out).T for i in keep]
    if not kraus:
        kraus = [np.zeros((dim_out, dim_in), dtype=np.complex128)]
    return from_kraus(kraus)


def minimal(n, rel_tol=qmat.RANK_TOL):
    return kraus_from_choi(n.choi, n.dim_in, n.dim_out, rel_tol)


def apply(n, rho):
    """Sum_k K rho K^dagger.  DensityMatrix in, DensityMatrix out."""
    if isinstance(rho, DensityMatrix):
        out = apply(n, rho.matrix)
        return DensityMatrix(out, (n.dim_out,), substate=not n.is_cptp)
    rho = qmat.as_matrix(rho)
    if rho.shape != (n.dim_in, n.dim_in):
        raise DimensionError(f"input shape {rho.shape} does not match dim_in={n.dim_in}")
    out = np.zeros((n.dim_out, n.dim_out), dtype=np.complex128)
    for K in n.kraus:
        out += K @ rho @ K.conj().T
    return out


def apply_via_choi(J, rho, dim_in, dim_out):
    """N(rho) = tr_in[(rho^T (x) I) J]."""
    M = np.kron(np.asarray(rho).T, np.eye(dim_out)) @ J
    return qmat.partial_trace(M, [dim_in, dim_out], [1])


def complementary(n, rel_tol=qmat.RANK_TOL):
    """Complement built from the minimal Stinespring dilation.

    The environment dimension equals the numerical rank of the Choi matrix.
    """
    m = minimal(n, rel_tol)
    if not np.any(m.choi):
        raise ValueError("the zero map has no complementary channel")
    K = np.stack(m.kraus)  # (r, dout, din)
    # E_b[k, :] = K_k[b, :]
    return from_kraus([K[:, b, :] for b in range(n.dim_out)])


def compose(d, n):
    """The map d o n (apply n first)."""
    if d.dim_in != n.dim_out:
        raise DimensionError(f"cannot compose: {d.dim_in} != {n.dim_out}")
    return from_kraus([D @ K for D in d.kraus for K in n.kraus])


def identity(d):
    return from_kraus([np.eye(d)])


def add(*maps):
    """Sum of CP maps with common dimensions (Kraus lists concatenate)."""
    return from_kraus([K for m in maps for K in m.kraus])


def scale(n, c):
    if c < 0:
        raise ValueError("CP maps only scale by non-negative numbers")
    return from_kraus([np.sqrt(c) * K for K in n.kraus])


@dataclass(frozen=True, eq=False)
class CPDecomposition:
    """CP maps summing to a channel, with optional flag states."""

    parts: tuple
    flags: tuple = None

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("decomposition needs at least one part")
        din, dout = parts[0].dim_in, parts[0].dim_out
        if any(p.dim_in != din or p.dim_out != dout for p in parts):
            raise DimensionError("decomposition parts must share dimensions")
        total = sum(p.choi for p in parts)
        if np.max(np.abs(qmat.partial_trace(total, [din, dout], [0]) - np.eye(din))) > CPTP_TOL:
            raise ValueError("decomposition parts do not sum to a CPTP map")
        object.__setattr__(self, "parts", parts)
        if self.flags is not None:
            flags = tuple(f if isinstance(f, DensityMatrix) else DensityMatrix(f, (len(f),))
                          for f in self.flags)
            if len(flags) != len(parts):
                raise ValueError(f"{len(parts)} parts but {len(flags)} flags")
            if len({f.dim for f in flags}) != 1:
                raise DimensionError("flag states must share one dimension")
            object.__setattr__(self, "flags", flags)

    @property
    def channel(self):
        return add(*self.parts)

    def with_flags(self, flags):
        return CPDecomposition(self.parts, tuple(flags))


def flag_extend(dec):
    """N_hat(rho) = sum_j N_j(rho) (x) sigma_j, flag system last."""
    if dec.flags is None:
        raise ValueError("decomposition carries no flag states")
    kraus = []
    for part, sigma in zip(dec.parts, dec.flags):
        w, v = qmat.eigh(sigma.matrix)
        for s, f in zip(w, v.T):
            if s <= 0:
                continue
            col = np.sqrt(s) * f[:, None]
            kraus.extend(np.kron(K, col) for K in part.kraus)
    return from_kraus(kraus)


def psi_alpha(alpha):
    return np.array([np.sqrt(alpha), np.sqrt(1.0 - alpha)], dtype=np.complex128)


def pure_flag_family(n0, n1, alpha):
    """N0 (x) |psi_alpha><psi_alpha| + N1 (x) |0><0|.

    alpha = 1 gives identical flags, alpha = 0 orthogonal ones.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    psi = psi_alpha(alpha)
    zero = qmat.ket(0, 2)
    kraus = [np.kron(K, psi[:, None]) for K in n0.kraus]
    kraus += [np.kron(K, zero[:, None]) for K in n1.kraus]
    return from_kraus(kraus)


def choi_state(n):
    if not n.is_cptp:
        raise ValueError("Choi state needs a trace-preserving map")
    return DensityMatrix(n.choi / n.dim_in, (n.dim_in, n.dim_out))


def random_channel(dim_in, dim_out, rng, num_kraus=None):
    """Random CPTP map from a Haar-ish random isometry."""
    r = num_kraus or dim_in * dim_out
    if r * dim_out < dim_in:
        raise ValueError(f"{r} Kraus operators of shape {dim_out}x{dim_in} cannot be CPTP")
    g = rng.normal(size=(r * dim_out, dim_in)) + 1j * rng.normal(size=(r * dim_out, dim_in))
    q, _ = np.linalg.qr(g)
    return from_kraus([q[k * dim_out:(k + 1) * dim_out, :] for k in range(r)])
