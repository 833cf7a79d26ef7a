"""Conic solver contract and the degradability / diamond-norm programs.

Problems are written in linear-matrix-inequality form over a real
parameter vector ``x``::

    minimize    c @ x + offset
    subject to  eq_A @ x == eq_b
                smat(psd_g[k] + psd_F[k] @ x)  is PSD      for every block k
                nonneg_g + nonneg_F @ x >= 0                (optional)

where ``smat`` unpacks a scaled column-major upper triangle.  Hermitian
matrix variables are expanded over a real basis; when every data matrix is
real the variables are restricted to real symmetric matrices (the conjugate
of any complex optimum is also optimal, so their average is a real optimum).

The numerical engine is Clarabel's interior-point method; the certificate
(duality gap, primal and dual residuals) is recomputed here from the
returned iterates rather than trusted from the solver.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels, channel, qmat
from .channel import CPMap
from .qmat import DimensionError

DEFAULT_TOL = 1e-8
CERT_TOL = 1e-7
DEGRADABLE_THRESHOLD = 1e-6
REAL_TOL = 1e-14


class SolverError(RuntimeError):
    """Raised when a conic solve does not end with a certified optimum."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


def smat(v, n):
    S = np.zeros((n, n))
    r, c = _kernels._triu_index(n)
    vals = np.where(r == c, v, v / np.sqrt(2.0))
    S[r, c] = vals
    S[c, r] = vals
    return S


@dataclass
class ConicProblem:
    c: np.ndarray
    eq_A: np.ndarray
    eq_b: np.ndarray
    psd_F: list
    psd_g: list
    psd_dims: list
    nonneg_F: np.ndarray = None
    nonneg_g: np.ndarray = None
    offset: float = 0.0
    block_names: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.c)
        if self.eq_A.shape != (len(self.eq_b), n):
            raise DimensionError(f"equality matrix {self.eq_A.shape} vs "
                                 f"{len(self.eq_b)} rows x {n} variables")
        for F, g, d in zip(self.psd_F, self.psd_g, self.psd_dims):
            t = d * (d + 1) // 2
            if F.shape != (t, n) or g.shape != (t,):
                raise DimensionError(f"PSD block of dim {d} needs {t} rows, "
                                     f"got F{F.shape}, g{g.shape}")
        if self.nonneg_F is not None and self.nonneg_F.shape != (len(self.nonneg_g), n):
            raise DimensionError("nonnegative block shape mismatch")

    @property
    def num_vars(self):
        return len(self.c)

    def to_dict(self):
        d = {
            "c": self.c.tolist(),
            "eq_A": self.eq_A.tolist(),
            "eq_b": self.eq_b.tolist(),
            "psd_blocks": [
                {"name": name, "dim": dim, "F": F.tolist(), "g": g.tolist()}
                for name, dim, F, g in zip(self._names(), self.psd_dims,
                                           self.psd_F, self.psd_g)],
            "offset": self.offset,
        }
        if self.nonneg_F is not None:
            d["nonneg"] = {"F": self.nonneg_F.tolist(), "g": self.nonneg_g.tolist()}
        return d

    @classmethod
    def from_dict(cls, d):
        blocks = d["psd_blocks"]
        nn = d.get("nonneg")
        n = len(d["c"])
        return cls(
            c=np.array(d["c"], dtype=float),
            eq_A=np.array(d["eq_A"], dtype=float).reshape(-1, n),
            eq_b=np.array(d["eq_b"], dtype=float),
            psd_F=[np.array(b["F"], dtype=float).reshape(-1, n) for b in blocks],
            psd_g=[np.array(b["g"], dtype=float) for b in blocks],
            psd_dims=[int(b["dim"]) for b in blocks],
            nonneg_F=None if nn is None else np.array(nn["F"], dtype=float).reshape(-1, n),
            nonneg_g=None if nn is None else np.array(nn["g"], dtype=float),
            offset=float(d.get("offset", 0.0)),
            block_names=[b.get("name", "") for b in blocks],
        )

    def _names(self):
        if len(self.block_names) == len(self.psd_dims):
            return self.block_names
        return [f"block{k}" for k in range(len(self.psd_dims))]


@dataclass
class ConicSolution:
    primal_value: float
    dual_value: float
    x: np.ndarray
    status: str
    iterations: int
    gap: float
    primal_residual: float
    dual_residual: float
    solver_status: str = ""
    solve_time: float = 0.0

    @property
    def certified(self):
        return self.status == "optimal"

    def to_dict(self):
        return {
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "status": self.status,
            "solver_status": self.solver_status,
            "iterations": self.iterations,
            "gap": self.gap,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "solve_time": self.solve_time,
            "x": self.x.tolist(),
        }

    def diagnostics(self):
        d = self.to_dict()
        del d["x"]
        return d


def _min_eig(v, d):
    return float(np.linalg.eigvalsh(smat(v, d))[0]) if d else 0.0


def certificate(problem, x, z_blocks, z_nonneg, y_eq):
    """Gap and residuals of a primal iterate ``x`` and dual multipliers.

    Dual form: maximize  -eq_b @ y - sum_k psd_g[k] @ z_k - nonneg_g @ z_nn
    subject to c + eq_A^T y - sum_k psd_F[k]^T z_k - nonneg_F^T z_nn = 0,
    z_k in the PSD cone, z_nn >= 0.
    """
    p = problem
    primal = float(p.c @ x) + p.offset
    dual = -float(p.eq_b @ y_eq) + p.offset
    r_dual = p.c + p.eq_A.T @ y_eq
    r_prim = float(np.max(np.abs(p.eq_A @ x - p.eq_b), initial=0.0))
    cone_dual = 0.0
    for F, g, d, z in zip(p.psd_F, p.psd_g, p.psd_dims, z_blocks):
        r_prim = max(r_prim, -_min_eig(g + F @ x, d))
        cone_dual = max(cone_dual, -_min_eig(z, d))
        dual -= float(g @ z)
        r_dual = r_dual - F.T @ z
    if p.nonneg_F is not None:
        r_prim = max(r_prim, -float(np.min(p.nonneg_g + p.nonneg_F @ x)))
        cone_dual = max(cone_dual, -float(np.min(z_nonneg)))
        dual -= float(p.nonneg_g @ z_nonneg)
        r_dual = r_dual - p.nonneg_F.T @ z_nonneg
    r_dual = max(float(np.max(np.abs(r_dual), initial=0.0)), cone_dual)
    return primal, dual, max(r_prim, 0.0), r_dual


def solve(problem, tol=DEFAULT_TOL, max_iter=200):
    """Solve a ConicProblem and certify the result.

    ``status`` is ``optimal`` only when the recomputed duality gap is at most
    ``max(CERT_TOL, tol) * max(1, |primal|)`` and both residuals are at most
    ``max(CERT_TOL, tol)``.
    """
    import clarabel

    p = problem
    n = p.num_vars
    rows, b, cones = [], [], []
    m_eq = len(p.eq_b)
    if m_eq:
        rows.append(p.eq_A)
        b.append(p.eq_b)
        cones.append(clarabel.ZeroConeT(m_eq))
    for F, g, d in zip(p.psd_F, p.psd_g, p.psd_dims):
        rows.append(-F)
        b.append(g)
        cones.append(clarabel.PSDTriangleConeT(d))
    if p.nonneg_F is not None:
        rows.append(-p.nonneg_F)
        b.append(p.nonneg_g)
        cones.append(clarabel.NonnegativeConeT(len(p.nonneg_g)))
    A = sp.csc_matrix(np.vstack(rows)) if rows else sp.csc_matrix((0, n))
    bvec = np.concatenate(b) if b else np.zeros(0)

    sol = None
    for attempt, overrides in enumerate(_RETRY_SETTINGS):
        sol = _solve_once(clarabel, p, A, bvec, cones, m_eq, tol, max_iter, overrides)
        if sol.status in ("optimal", "infeasible", "unbounded"):
            break
    if attempt:
        sol.solver_status += f" (retry {attempt})"
    return sol


# Ruiz equilibration occasionally stalls Clarabel at AlmostSolved on the
# complex-embedded degradability SDPs whose optimum is degenerate (eta = 0);
# switching it off recovers a certified solution.  A few problems stay at
# residuals ~3e-7 either way; the faer factorization certifies those
_RETRY_SETTINGS = ({}, {"equilibrate_enable": False}, {"direct_solve_method": "faer"},
                   {"direct_solve_method": "faer", "equilibrate_enable": False})


def _solve_once(clarabel, p, A, bvec, cones, m_eq, tol, max_iter, overrides):
    n = p.num_vars
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    settings.max_threads = 1
    for key, value in overrides.items():
        setattr(settings, key, value)
    t0 = time.perf_counter()
    sol = clarabel.DefaultSolver(sp.csc_matrix((n, n)), np.asarray(p.c, float),
                                 A, bvec, cones, settings).solve()
    elapsed = time.perf_counter() - t0

    x = np.array(sol.x)
    z = np.array(sol.z)
    y_eq, k = z[:m_eq], m_eq
    z_blocks = []
    for d in p.psd_dims:
        t = d * (d + 1) // 2
        z_blocks.append(z[k:k + t])
        k += t
    z_nn = z[k:] if p.nonneg_F is not None else None

    raw = str(sol.status)
    if "Infeasible" in raw:
        status = "infeasible" if "Primal" in raw else "unbounded"
        return ConicSolution(np.nan, np.nan, x, status, sol.iterations, np.inf,
                             np.inf, np.inf, raw, elapsed)
    primal, dual, r_prim, r_dual = certificate(p, x, z_blocks, z_nn, y_eq)
    gap = abs(primal - dual)
    cert = max(CERT_TOL, tol)
    if gap <= cert * max(1.0, abs(primal)) and r_prim <= cert and r_dual <= cert:
        status = "optimal"
    elif "MaxIterations" in raw:
        status = "max-iterations"
    else:
        status = "uncertified"
    return ConicSolution(primal, dual, x, status, sol.iterations, gap, r_prim,
                         r_dual, raw, elapsed)


# --------------------------------------------------------------------------
# assembling LMI problems over Hermitian matrix variables
# --------------------------------------------------------------------------

def hermitian_basis(n, real):
    """Real basis of n x n Hermitian (or real symmetric) matrices."""
    mats = []
    for i in range(n):
        E = np.zeros((n, n), dtype=np.complex128)
        E[i, i] = 1.0
        mats.append(E)
    for j in range(n):
        for i in range(j):
            E = np.zeros((n, n), dtype=np.complex128)
            E[i, j] = E[j, i] = 1.0
            mats.append(E)
    if not real:
        for j in range(n):
            for i in range(j):
                E = np.zeros((n, n), dtype=np.complex128)
                E[i, j] = 1j
                E[j, i] = -1j
                mats.append(E)
    return np.stack(mats)


def hermitian_coords(M, real):
    """Coordinates of a stack of Hermitian matrices in ``hermitian_basis``."""
    M = np.asarray(M)
    n = M.shape[-1]
    iu, ju = [], []
    for j in range(n):
        for i in range(j):
            iu.append(i)
            ju.append(j)
    iu, ju = np.array(iu, dtype=int), np.array(ju, dtype=int)
    diag = np.real(M[..., np.arange(n), np.arange(n)])
    parts = [diag, np.real(M[..., iu, ju])]
    if not real:
        parts.append(np.imag(M[..., iu, ju]))
    return np.concatenate(parts, axis=-1)


class LMIBuilder:
    """Collects variables and blocks, then emits a ConicProblem."""

    def __init__(self, real):
        self.real = real
        self.slices = {}
        self.bases = {}
        self.n = 0
        self.blocks = []
        self.eqs = []
        self.c = {}

    def scalar(self, name):
        self.slices[name] = slice(self.n, self.n + 1)
        self.bases[name] = None
        self.n += 1

    def hermitian(self, name, dim):
        B = hermitian_basis(dim, self.real)
        self.slices[name] = slice(self.n, self.n + len(B))
        self.bases[name] = B
        self.n += len(B)
        return B

    def objective(self, name, coeffs):
        self.c[name] = np.atleast_1d(np.asarray(coeffs, dtype=float))

    def psd(self, name, const, terms):
        """``const + sum_var images[var] . x_var`` must be PSD.

        ``terms`` maps a variable name to the stack of images of its basis
        elements under the block's linear map.
        """
        self.blocks.append((name, np.asarray(const, dtype=np.complex128), terms))

    def equal(self, terms, rhs):
        """Hermitian equality ``sum_var images . x_var == rhs``."""
        self.eqs.append((terms, rhs))

    def build(self):
        n = self.n
        c = np.zeros(n)
        for name, coeffs in self.c.items():
            c[self.slices[name]] = coeffs
        F_list, g_list, dims, names = [], [], [], []
        for name, const, terms in self.blocks:
            g = _kernels.svec_stack(const[None], self.real)[0]
            F = np.zeros((len(g), n))
            for var, images in terms.items():
                F[:, self.slices[var]] = _kernels.svec_stack(images, self.real).T
            F_list.append(F)
            g_list.append(g)
            d = const.shape[0]
            dims.append(d if self.real else 2 * d)
            names.append(name)
        A_rows, b_rows = [], []
        for terms, rhs in self.eqs:
            rhs_c = hermitian_coords(rhs, self.real)
            A = np.zeros((len(rhs_c), n))
            for var, images in terms.items():
                A[:, self.slices[var]] = hermitian_coords(images, self.real).T
            A_rows.append(A)
            b_rows.append(rhs_c)
        eq_A = np.vstack(A_rows) if A_rows else np.zeros((0, n))
        eq_b = np.concatenate(b_rows) if b_rows else np.zeros(0)
        return ConicProblem(c, eq_A, eq_b, F_list, g_list, dims, block_names=names)

    def value(self, name, x):
        xs = x[self.slices[name]]
        if self.bases[name] is None:
            return float(xs[0])
        return np.tensordot(xs, self.bases[name], axes=1)


def _is_real(*mats):
    return all(float(np.max(np.abs(np.imag(m)), initial=0.0)) <= REAL_TOL for m in mats)


def _require_optimal(sol, what):
    if sol.status != "optimal":
        raise SolverError(f"{what}: solver status {sol.status} "
                          f"(gap {sol.gap:.2e}, residuals {sol.primal_residual:.2e}/"
                          f"{sol.dual_residual:.2e})", sol)


# --------------------------------------------------------------------------
# diamond norm
# --------------------------------------------------------------------------

def diamond_problem(J, dim_in, dim_out):
    """inf mu  s.t.  tr_out Z <= mu I,  Z >= J,  Z >= 0  (J Hermitian)."""
    b = LMIBuilder(_is_real(J))
    b.scalar("mu")
    BZ = b.hermitian("Z", dim_in * dim_out)
    b.objective("mu", [1.0])
    b.psd("trace_bound", np.zeros((dim_in, dim_in)),
          {"mu": np.eye(dim_in)[None], "Z": -_kernels.trace_last(BZ, dim_in, dim_out)})
    b.psd("Z_psd", np.zeros_like(J), {"Z": BZ})
    b.psd("Z_dominates", -J, {"Z": BZ})
    return b


def diamond_distance_solution(n1, n2, tol=DEFAULT_TOL):
    if (n1.dim_in, n1.dim_out) != (n2.dim_in, n2.dim_out):
        raise DimensionError("diamond distance needs maps with equal dimensions")
    J = qmat.hermitize(n1.choi - n2.choi)
    builder = diamond_problem(J, n1.dim_in, n1.dim_out)
    sol = solve(builder.build(), tol)
    _require_optimal(sol, "diamond distance")
    return max(sol.primal_value, 0.0), sol


def diamond_distance(n1, n2, tol=DEFAULT_TOL):
    """Half the diamond norm of n1 - n2."""
    return diamond_distance_solution(n1, n2, tol)[0]


# --------------------------------------------------------------------------
# degradability parameters
# --------------------------------------------------------------------------

@dataclass
class EtaResult:
    eta: float
    degrading_map: CPMap
    env_dim: int
    solution: ConicSolution
    problem: ConicProblem = field(repr=False, default=None)

    def __iter__(self):
        yield self.eta
        yield self.degrading_map


def _cptp_from_choi(J, dim_in, dim_out):
    # clip solver-level negativity, then renormalize tr_out J to I exactly
    w, v = np.linalg.eigh(qmat.hermitize(J))
    J = (v * np.clip(w, 0.0, None)) @ v.conj().T
    T = qmat.partial_trace(J, [dim_in, dim_out], [0])
    wt, vt = np.linalg.eigh(qmat.hermitize(T))
    S = (vt / np.sqrt(np.clip(wt, 1e-300, None))) @ vt.conj().T
    L = np.kron(S, np.eye(dim_out))
    m = channel.kraus_from_choi(L @ J @ L.conj().T, dim_in, dim_out)
    # rank truncation in kraus_from_choi can cost ~1e-9 of trace; restore it
    K = np.stack(m.kraus)
    G = np.einsum("kji,kjl->il", K.conj(), K)
    wg, vg = np.linalg.eigh(qmat.hermitize(G))
    R = (vg / np.sqrt(wg)) @ vg.conj().T
    return channel.from_kraus([k @ R for k in K])


def eta_channel_problem(n, rel_tol=qmat.RANK_TOL):
    m = channel.minimal(n, rel_tol)
    comp = channel.complementary(n, rel_tol)
    dA, dB, dE = n.dim_in, n.dim_out, comp.dim_out
    JN, JC = m.choi, comp.choi
    b = LMIBuilder(_is_real(JN, JC))
    b.scalar("mu")
    BZ = b.hermitian("Z", dA * dE)
    BD = b.hermitian("JD", dB * dE)
    b.objective("mu", [1.0])
    b.psd("trace_bound", np.zeros((dA, dA)),
          {"mu": np.eye(dA)[None], "Z": -_kernels.trace_last(BZ, dA, dE)})
    b.psd("Z_psd", np.zeros((dA * dE, dA * dE)), {"Z": BZ})
    # J_{D o N} = tr_B[(J_N (x) I_E)(I_A (x) J_D^{T_B})], linear in J_D
    b.psd("Z_dominates", -JC, {"Z": BZ, "JD": _kernels.link_stack(JN, BD, dA, dB, dE)})
    b.psd("JD_psd", np.zeros((dB * dE, dB * dE)), {"JD": BD})
    b.equal({"JD": _kernels.trace_last(BD, dB, dE)}, np.eye(dB))
    return b, dE


def eta_channel(n, tol=DEFAULT_TOL, rel_tol=qmat.RANK_TOL):
    """min_D 1/2 || N^c - D o N ||_diamond over channels D: B -> E."""
    builder, dE = eta_channel_problem(n, rel_tol)
    problem = builder.build()
    sol = solve(problem, tol)
    _require_optimal(sol, "channel degradability")
    D = _cptp_from_choi(builder.value("JD", sol.x), n.dim_out, dE)
    return EtaResult(max(sol.primal_value, 0.0), D, dE, sol, problem)


def eta_channel_objective(n, D, tol=DEFAULT_TOL, rel_tol=qmat.RANK_TOL):
    """Re-evaluate 1/2 || N^c - D o N ||_diamond at a fixed degrading map."""
    comp = channel.complementary(n, rel_tol)
    return diamond_distance(comp, channel.compose(D, n), tol)


def _state_split(rho, dims):
    if hasattr(rho, "matrix"):
        dims = rho.dims if dims is None else dims
        rho = rho.matrix
    if dims is None:
        raise DimensionError("state dims are required")
    dims = list(dims)
    dA = dims[0]
    dB = int(np.prod(dims[1:]))
    return qmat.as_matrix(rho), dA, dB


def environment_marginal(rho, dA, dB, rel_tol=qmat.RANK_TOL):
    """rho_AE from the minimal purification of rho_AB."""
    psi, dE = qmat.purification(rho, rel_tol)
    phi = qmat.proj(psi)
    return qmat.partial_trace(phi, [dA, dB, dE], [0, 2]), dE


def eta_state_problem(rho, dims=None, rel_tol=qmat.RANK_TOL):
    rho, dA, dB = _state_split(rho, dims)
    rho_AE, dE = environment_marginal(rho, dA, dB, rel_tol)
    b = LMIBuilder(_is_real(rho, rho_AE))
    BQ = b.hermitian("Q", dA * dE)
    BM = b.hermitian("JM", dB * dE)
    # 1/2||X||_1 = min 1/2 tr(P + Q), X = P - Q; with P = X + Q and tr X = 0
    # on the feasible set the objective reduces to tr Q
    b.objective("Q", np.real(np.trace(BQ, axis1=1, axis2=2)))
    b.psd("Q_psd", np.zeros((dA * dE, dA * dE)), {"Q": BQ})
    b.psd("P_psd", rho_AE, {"Q": BQ, "JM": -_kernels.link_stack(rho, BM, dA, dB, dE)})
    b.psd("JM_psd", np.zeros((dB * dE, dB * dE)), {"JM": BM})
    b.equal({"JM": _kernels.trace_last(BM, dB, dE)}, np.eye(dB))
    return b, dE


def eta_state(rho, dims=None, dim_E=None, tol=DEFAULT_TOL, rel_tol=qmat.RANK_TOL):
    """min_M 1/2 || rho_AE - (id (x) M)(rho_AB) ||_1 over channels M: B -> E.

    ``rho`` is split as A | rest, so a state on A (x) B (x) F is treated
    with Bob holding BF.
    """
    rho_m, dA, dB = _state_split(rho, dims)
    builder, dE = eta_state_problem(rho_m, [dA, dB], rel_tol)
    if dim_E is not None and dim_E != dE:
        raise DimensionError(f"purifying dimension is {dE}, caller gave {dim_E}")
    problem = builder.build()
    sol = solve(problem, tol)
    _require_optimal(sol, "state degradability")
    M = _cptp_from_choi(builder.value("JM", sol.x), dB, dE)
    return EtaResult(max(sol.primal_value, 0.0), M, dE, sol, problem)


def eta_state_objective(rho, M, dims=None, rel_tol=qmat.RANK_TOL):
    rho, dA, dB = _state_split(rho, dims)
    rho_AE, dE = environment_marginal(rho, dA, dB, rel_tol)
    if M.dim_in != dB or M.dim_out != dE:
        raise DimensionError(f"map {M.dim_in}->{M.dim_out} does not act B->E ({dB}->{dE})")
    out = _kernels.link_stack(rho, M.choi[None], dA, dB, dE)[0]
    return 0.5 * qmat.trace_norm(rho_AE - out)
