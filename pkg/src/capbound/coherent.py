"""Coherent information of states and channels and its maximization."""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import channel, qmat
from .qmat import von_neumann_entropy

FD_STEP = 1e-5
GRAD_TOL = 1e-6
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def state_coherent_info(rho, dims=None):
    """I(A>B) = H(B) - H(AB), with A the first subsystem and B the rest."""
    if isinstance(rho, qmat.DensityMatrix):
        dims = rho.dims if dims is None else dims
        rho = rho.matrix
    dims = list(dims)
    dA, dB = dims[0], int(np.prod(dims[1:]))
    rho_B = qmat.partial_trace(rho, [dA, dB], [1])
    return von_neumann_entropy(rho_B) - von_neumann_entropy(rho)


class CoherentObjective:
    """rho -> H(N(rho)) - H(N^c(rho)) with the minimal complement cached."""

    def __init__(self, n, rel_tol=qmat.RANK_TOL):
        m = channel.minimal(n, rel_tol)
        self.dim = n.dim_in
        self.K = np.stack(m.kraus)
        # complement Kraus E_b[k, :] = K_k[b, :]
        self.Kc = np.transpose(self.K, (1, 0, 2))
        self.env_dim = self.K.shape[0]

    @staticmethod
    def _act(K, rho):
        return np.einsum("kij,jl,kml->im", K, rho, K.conj(), optimize=True)

    def __call__(self, rho):
        return (von_neumann_entropy(self._act(self.K, rho))
                - von_neumann_entropy(self._act(self.Kc, rho)))


def channel_coherent_info_at(n, rho):
    if isinstance(rho, qmat.DensityMatrix):
        rho = rho.matrix
    return CoherentObjective(n)(qmat.as_matrix(rho))


# --------------------------------------------------------------------------
# input parametrizations
# --------------------------------------------------------------------------

def project_simplex(v):
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    r = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[r] / (r + 1.0), 0.0)


def _herm_offdiag(h, d):
    H = np.zeros((d, d), dtype=np.complex128)
    iu = np.triu_indices(d, 1)
    m = len(iu[0])
    H[iu] = h[:m] + 1j * h[m:]
    return H + H.conj().T


@dataclass
class InputParam:
    """A point of an input-state family.

    ``tag`` is one of ``full-simplex-eig`` (eigenvalues plus a unitary),
    ``diagonal`` or ``bloch``.
    """

    tag: str
    params: np.ndarray
    unitary: np.ndarray = field(default=None, repr=False)

    def density(self):
        if self.tag == "bloch":
            r = np.linalg.norm(self.params)
            x, y, z = self.params / max(r, 1.0)
            return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])
        lam = np.clip(self.params, 0.0, None)
        lam = lam / lam.sum()
        if self.tag == "diagonal":
            return np.diag(lam).astype(np.complex128)
        U = self.unitary
        return (U * lam) @ U.conj().T


class _Family:
    """Projected-gradient geometry of one parametrization."""

    def __init__(self, tag, d):
        if tag == "bloch" and d != 2:
            raise ValueError("the Bloch parametrization is for qubits only")
        if tag not in ("full-simplex-eig", "diagonal", "bloch"):
            raise ValueError(f"unknown input parametrization {tag!r}")
        self.tag, self.d = tag, d

    def center(self):
        if self.tag == "bloch":
            return InputParam("bloch", np.zeros(3))
        p = InputParam(self.tag, np.full(self.d, 1.0 / self.d))
        if self.tag == "full-simplex-eig":
            p.unitary = np.eye(self.d, dtype=np.complex128)
        return p

    def random(self, rng):
        if self.tag == "bloch":
            v = rng.normal(size=3)
            return InputParam("bloch", v / np.linalg.norm(v) * rng.uniform() ** (1 / 3))
        p = InputParam(self.tag, rng.dirichlet(np.ones(self.d)))
        if self.tag == "full-simplex-eig":
            p.unitary = qmat.random_unitary(self.d, rng)
        return p

    def n_tangent(self):
        if self.tag == "full-simplex-eig":
            return self.d * self.d
        return len(self.center().params)

    def move(self, p, step):
        """Point reached by the raw (unprojected) coordinate step."""
        if self.tag == "full-simplex-eig":
            d = self.d
            U = p.unitary @ expm(1j * _herm_offdiag(step[d:], d))
            return InputParam(p.tag, p.params + step[:d], U)
        return InputParam(p.tag, p.params + step, p.unitary)

    def project(self, p):
        if self.tag == "bloch":
            r = np.linalg.norm(p.params)
            return p if r <= 1.0 else InputParam("bloch", p.params / r)
        return InputParam(p.tag, project_simplex(p.params), p.unitary)

    def proj_step(self, p, g, t):
        q = self.project(self.move(p, t * g))
        if self.tag == "full-simplex-eig":
            d = self.d
            delta = np.concatenate([q.params - p.params, t * g[d:]])
        else:
            delta = q.params - p.params
        return q, delta


def _fd_gradient(f, fam, p):
    g = np.zeros(fam.n_tangent())
    for i in range(len(g)):
        e = np.zeros_like(g)
        e[i] = FD_STEP
        g[i] = (f(fam.move(p, e).density()) - f(fam.move(p, -e).density())) / (2 * FD_STEP)
    if fam.tag != "bloch":
        # simplex coordinates: only the sum-zero part of the eigenvalue
        # gradient is meaningful
        k = fam.d
        g[:k] -= g[:k].mean()
    return g


def _ascend(f, fam, p, tol, max_iter):
    fx = f(p.density())
    t = 1.0
    gnorm = np.inf
    prev = None
    for it in range(max_iter):
        g = _fd_gradient(f, fam, p)
        q, delta = fam.proj_step(p, g, 1.0)
        gnorm = float(np.linalg.norm(delta))
        if gnorm <= tol:
            return p, fx, gnorm, it
        if prev is not None:
            # Barzilai-Borwein trial step for the (concave) ascent
            s, dg = prev[0], prev[1] - g
            sy = float(s @ dg)
            if sy > 0:
                t = min(max(float(s @ s) / sy, 1e-8), 1e4)
        while True:
            q, delta = fam.proj_step(p, g, t)
            fq = f(q.density())
            if fq >= fx + 1e-4 * float(g @ delta) or t < 1e-12:
                break
            t *= 0.5
        if fq < fx:
            return p, fx, gnorm, it
        prev = (delta, g)
        p, fx = q, fq
    return p, fx, gnorm, max_iter


@dataclass
class Q1Result:
    value: float
    argmax: InputParam
    rho: np.ndarray
    strategy: str
    restarts: int
    seed: int
    grad_norm: float
    certified: bool

    @property
    def heuristic(self):
        return not self.certified

    def to_dict(self):
        return {
            "value": self.value,
            "strategy": self.strategy,
            "restarts": self.restarts,
            "seed": self.seed,
            "grad_norm": self.grad_norm,
            "certified": self.certified,
            "argmax": [[z.real, z.imag] for z in self.rho.ravel()],
        }


def q1_maximize(n, strategy="full-simplex-eig", restarts=20, seed=0,
                degradable=False, tol=GRAD_TOL, max_iter=500):
    """Maximize the coherent information of ``n`` over input states.

    For a channel certified degradable the objective is concave, so one
    ascent from the maximally mixed state is run and the result is certified
    by a vanishing projected gradient.  Otherwise the best of ``restarts``
    ascents (the first from the maximally mixed state) is returned as a
    heuristic lower bound on Q^(1).
    """
    f = CoherentObjective(n)
    fam = _Family(strategy, n.dim_in)
    rng = np.random.default_rng(seed)
    starts = [fam.center()]
    if not degradable:
        starts += [fam.random(rng) for _ in range(max(restarts, 1) - 1)]
    best = None
    for p0 in starts:
        p, fx, gnorm, _ = _ascend(f, fam, p0, tol, max_iter)
        if best is None or fx > best[1]:
            best = (p, fx, gnorm)
    p, fx, gnorm = best
    return Q1Result(float(fx), p, p.density(), strategy, len(starts), seed,
                    gnorm, bool(degradable and gnorm <= tol))


def _golden_max(f, a, b, xtol):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def q1_diagonal_scan(n, grid=101, xtol=1e-9):
    """max_p I_c(p|0><0| + (1-p)|1><1|, n) by grid plus golden section.

    Only sound when the caller knows diagonal inputs are optimal (for
    example a sigma_Z-covariant degradable channel).  ``grid <= 1`` checks
    the endpoints and the midpoint only.
    """
    if n.dim_in != 2:
        raise ValueError("diagonal scan is defined for qubit inputs")
    obj = CoherentObjective(n)

    def f(p):
        return obj(np.diag([p, 1.0 - p]).astype(np.complex128))

    ps = np.linspace(0.0, 1.0, max(int(grid), 3))
    vals = np.array([f(p) for p in ps])
    i = int(np.argmax(vals))
    if grid <= 1:
        return float(vals[i]), float(ps[i])
    lo, hi = ps[max(i - 1, 0)], ps[min(i + 1, len(ps) - 1)]
    p, v = _golden_max(f, lo, hi, xtol)
    if v < vals[i]:
        return float(vals[i]), float(ps[i])
    return float(v), float(p)
