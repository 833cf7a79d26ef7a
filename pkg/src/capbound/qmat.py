"""Dense complex linear algebra and quantum-information primitives.

All matrices are plain ``numpy`` arrays of dtype complex128.  Logarithms
are base 2 throughout.
"""

from dataclasses import dataclass, field
from math import prod

import numpy as np

from . import _kernels

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
ENTROPY_CLAMP = 1e-10
ENTROPY_REJECT = 1e-8
RANK_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when subsystem dimensions do not factor a matrix."""


class NotPSDError(ValueError):
    """Raised when an operator is negative beyond tolerance."""


def as_matrix(m):
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def is_hermitian(m, tol=HERMITIAN_TOL):
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
    return float(np.max(np.abs(m - m.conj().T), initial=0.0)) <= tol * scale


def hermitize(m):
    m = as_matrix(m)
    return 0.5 * (m + m.conj().T)


def _check_dims(n, dims):
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or prod(dims) != n:
        raise DimensionError(f"dims {dims} do not factor dimension {n}")
    return dims


@dataclass(frozen=True)
class DensityMatrix:
    """A (sub)normalized state with its subsystem structure.

    ``substate=True`` relaxes the trace condition to ``0 < tr <= 1``.
    """

    matrix: np.ndarray
    dims: tuple
    substate: bool = field(default=False)

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        dims = tuple(_check_dims(m.shape[0], self.dims))
        if not is_hermitian(m, 1e-10):
            raise ValueError("density matrix is not Hermitian")
        m = hermitize(m)
        lam = np.linalg.eigvalsh(m)
        if lam.size and lam[0] < -PSD_TOL:
            raise NotPSDError(f"minimum eigenvalue {lam[0]:.3e} < -{PSD_TOL}")
        tr = float(np.trace(m).real)
        if self.substate:
            if not (0.0 < tr <= 1.0 + TRACE_TOL):
                raise ValueError(f"substate trace {tr} outside (0, 1]")
        elif abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr} differs from 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def ptrace(self, keep):
        kept = [self.dims[i] for i in sorted(keep)]
        return DensityMatrix(partial_trace(self.matrix, self.dims, keep), kept,
                             substate=self.substate)

    def entropy(self):
        return von_neumann_entropy(self.matrix)


def tensor(*ops):
    """Kronecker product of any number of matrices (or vectors)."""
    out = np.asarray(ops[0], dtype=np.complex128)
    for b in ops[1:]:
        out = np.kron(out, np.asarray(b, dtype=np.complex128))
    return out


def partial_trace(m, dims, keep):
    """Trace out every subsystem not listed in ``keep``.

    The kept subsystems appear in ascending index order.
    """
    m = as_matrix(m)
    dims = _check_dims(m.shape[0], dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise IndexError(f"subsystem index out of range for {n} subsystems: {keep}")
    t = m.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = [letters[i] for i in range(n)]
    col = [letters[i].upper() for i in range(n)]
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    r = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = prod(dims[i] for i in keep)
    return r.reshape(d, d)


def partial_transpose(m, dims, sys):
    """Transpose the subsystems in ``sys`` (an int or iterable of ints)."""
    m = as_matrix(m)
    dims = _check_dims(m.shape[0], dims)
    n = len(dims)
    sys = [sys] if np.isscalar(sys) else list(sys)
    if any(s < 0 or s >= n for s in sys):
        raise IndexError(f"subsystem index out of range: {sys}")
    perm = list(range(2 * n))
    for s in sys:
        perm[s], perm[n + s] = perm[n + s], perm[s]
    return m.reshape(dims + dims).transpose(perm).reshape(m.shape)


def eigh(m):
    """Deterministic Hermitian eigendecomposition.

    Eigenvalues ascend; each eigenvector is rephased so its largest-magnitude
    component (first such index on ties) is real and positive.
    """
    m = hermitize(m)
    w, v = np.linalg.eigh(m)
    if v.size:
        mags = np.abs(v)
        idx = np.argmax(mags >= mags.max(axis=0) * (1 - 1e-12), axis=0)
        piv = v[idx, np.arange(v.shape[1])]
        v = v * (np.abs(piv) / piv)[None, :]
    return w, v


def trace_norm(m):
    m = as_matrix(m)
    if is_hermitian(m, 1e-9):
        return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(m)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def _clamped_eigs(m):
    w = np.linalg.eigvalsh(hermitize(m))
    if w.size and w[0] < -ENTROPY_REJECT:
        raise NotPSDError(f"eigenvalue {w[0]:.3e} below -{ENTROPY_REJECT}")
    return np.where(w < 0.0, 0.0, w)


def von_neumann_entropy(rho):
    """Entropy in bits.  Tiny negative eigenvalues (solver noise) count as 0."""
    if isinstance(rho, DensityMatrix):
        rho = rho.matrix
    return _kernels.entropy_bits(_clamped_eigs(rho))


def binary_entropy(p):
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary entropy needs p in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def bosonic_entropy(p):
    """g(p) = (1+p) h(p/(1+p))."""
    p = float(p)
    if p < 0.0:
        raise ValueError(f"bosonic entropy needs p >= 0, got {p}")
    if p == 0.0:
        return 0.0
    return (1.0 + p) * binary_entropy(p / (1.0 + p))


def numerical_rank(m, rel_tol=RANK_TOL):
    w = np.linalg.eigvalsh(hermitize(m))
    if not w.size or w[-1] <= 0.0:
        return 0
    return int(np.sum(w > rel_tol * w[-1]))


def purification(rho, rel_tol=RANK_TOL):
    """Purify ``rho`` onto ``rho`` (x) E with |E| equal to the numerical rank.

    Returns ``(psi, dim_E)`` where ``psi`` is a vector of length
    ``dim(rho) * dim_E`` ordered as (system, E).
    """
    if isinstance(rho, DensityMatrix):
        rho = rho.matrix
    w, v = eigh(rho)
    lam_max = w[-1] if w.size else 0.0
    keep = np.nonzero(w > rel_tol * lam_max)[0][::-1] if lam_max > 0 else []
    dE = len(keep)
    d = v.shape[0]
    psi = np.zeros((d, dE), dtype=np.complex128)
    for j, i in enumerate(keep):
        psi[:, j] = np.sqrt(w[i]) * v[:, i]
    return psi.reshape(d * dE), dE


def ket(i, d):
    v = np.zeros(d, dtype=np.complex128)
    v[i] = 1.0
    return v


def proj(v):
    v = np.asarray(v, dtype=np.complex128).ravel()
    return np.outer(v, v.conj())


def max_entangled(d=2):
    """Normalized maximally entangled projector |Phi><Phi| on d x d."""
    phi = sum(np.kron(ket(i, d), ket(i, d)) for i in range(d)) / np.sqrt(d)
    return proj(phi)


def random_density(d, rng, rank=None):
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    r = g @ g.conj().T
    return r / np.trace(r).real


def random_unitary(d, rng):
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
