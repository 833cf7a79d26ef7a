"""Capacity upper bounds with itemized provenance.

Every evaluator returns a :class:`BoundReport` whose ``value`` is the exact
floating-point sum (``math.fsum``) of its ``terms``.  The continuity terms are
also re-evaluated at ``eta + ETA_MARGIN`` to give ``value_upper``, a bracket
that absorbs the SDP tolerance.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel, coherent, qmat, sdp, zoo
from .channel import CPDecomposition
from .qmat import DensityMatrix, binary_entropy, bosonic_entropy

ETA_MARGIN = 1e-6
KINDS = ("state-prop1", "channel-prop2", "channel-prop3", "channel-corollary1",
         "private-pf", "private-degradable", "approx-degradable", "dp-gad")


@dataclass
class BoundReport:
    value: float
    kind: str
    terms: dict
    alpha: float = None
    eta: float = None
    value_upper: float = None
    env_dim: int = None
    rank_tol: float = qmat.RANK_TOL
    diagnostics: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    heuristic: bool = False
    infinite: bool = False
    courtesy: "BoundReport" = None
    scan: dict = None
    degrading_map: object = field(default=None, repr=False)

    @property
    def q1(self):
        for key in ("q1", "coherent_info"):
            if key in self.terms:
                return self.terms[key]
        return None

    def itemization_error(self):
        if self.infinite:
            return 0.0
        return abs(math.fsum(self.terms.values()) - self.value)

    def to_dict(self):
        d = {
            "kind": self.kind,
            "value": None if self.infinite else self.value,
            "infinite": self.infinite,
            "value_upper": None if self.infinite else self.value_upper,
            "alpha": self.alpha,
            "eta": self.eta,
            "env_dim": self.env_dim,
            "rank_tol": self.rank_tol,
            "terms": dict(self.terms),
            "heuristic": self.heuristic,
            "notes": list(self.notes),
            "diagnostics": list(self.diagnostics),
        }
        if self.scan is not None:
            d["scan"] = dict(self.scan)
        if self.courtesy is not None:
            d["courtesy"] = self.courtesy.to_dict()
        return d

    def csv_fields(self):
        return {
            "value": math.inf if self.infinite else self.value,
            "value_upper": math.inf if self.infinite else self.value_upper,
            "q1": self.q1,
            "alpha": self.alpha,
            "eta": self.eta,
            "env_dim": self.env_dim,
            "heuristic": int(self.heuristic),
        }


def _report(kind, terms, eta, upper_terms, **kw):
    value = math.fsum(terms.values())
    upper = math.fsum(upper_terms.values()) if upper_terms is not None else value
    return BoundReport(value=value, kind=kind, terms=terms, eta=eta,
                       value_upper=max(upper, value), **kw)


def _infinite(kind, eta, **kw):
    return BoundReport(value=math.inf, kind=kind, terms={}, eta=eta,
                       value_upper=math.inf, infinite=True, **kw)


# --------------------------------------------------------------------------
# continuity terms
# --------------------------------------------------------------------------

def _clip_eta(eta):
    return min(max(float(eta), 0.0), 1.0)


def _log_dm1(dE):
    # log(d_E - 1) is only reached with d_E = 1 for a unitary channel, where
    # eta = 0 as well; the term is defined as 0 there
    return math.log2(dE - 1) if dE > 1 else 0.0


def quantum_terms(eta, dE):
    e = _clip_eta(eta)
    return {
        "eta_log_dE_minus_1": e * _log_dm1(dE),
        "h_eta": binary_entropy(e),
        "2eta_log_dE": 2 * e * math.log2(dE),
        "g_eta": bosonic_entropy(e),
    }


def private_terms(eta, dE):
    e = _clip_eta(eta)
    return {
        "2eta_log_dE_minus_1": 2 * e * _log_dm1(dE),
        "8eta_log_dE": 8 * e * math.log2(dE),
        "2h_eta": 2 * binary_entropy(e),
        "4g_eta": 4 * bosonic_entropy(e),
    }


def state_terms(eta, dEhat):
    e = _clip_eta(eta)
    return {
        "4eta_log_Ehat": 4 * e * math.log2(dEhat),
        "2g_eta": 2 * bosonic_entropy(e),
    }


_TERMS = {"quantum": quantum_terms, "private": private_terms}


def _flavor_terms(flavor):
    if flavor not in _TERMS:
        raise ValueError(f"flavor must be 'quantum' or 'private', got {flavor!r}")
    return _TERMS[flavor]


# --------------------------------------------------------------------------
# coherent information of the (flagged) channel
# --------------------------------------------------------------------------

def _q1(n, degradable, strategy, restarts, seed):
    """(value, certified, notes) for Q^(1)(n)."""
    if strategy == "diagonal-scan":
        value, p = coherent.q1_diagonal_scan(n)
        note = f"Q1 by diagonal scan (argmax p={p:.6g}); diagonal inputs assumed optimal"
        return value, bool(degradable), [note]
    res = coherent.q1_maximize(n, strategy=strategy, restarts=restarts, seed=seed,
                               degradable=degradable)
    if res.certified:
        note = f"Q1 certified by concavity (projected gradient {res.grad_norm:.1e})"
    else:
        note = f"Q1 heuristic: best of {res.restarts} ascents ({strategy}, seed {seed})"
    return res.value, res.certified, [note]


def _eta_diag(res):
    return [res.solution.diagnostics()]


def _channel_report(kind, n, flavor, eta_res, alpha, rank_tol, q1_opts, extra_notes=()):
    eta, dE = eta_res.eta, eta_res.env_dim
    degradable = eta <= sdp.DEGRADABLE_THRESHOLD
    q1, certified, notes = _q1(n, degradable, **q1_opts)
    make = _flavor_terms(flavor)
    terms = {"q1": q1, **make(eta, dE)}
    upper = {"q1": q1, **make(eta + ETA_MARGIN, dE)}
    return _report(kind, terms, eta, upper, alpha=alpha, env_dim=dE, rank_tol=rank_tol,
                   diagnostics=_eta_diag(eta_res), notes=list(extra_notes) + notes,
                   heuristic=not certified, degrading_map=eta_res.degrading_map)


def _q1_opts(q1_strategy="full-simplex-eig", restarts=20, seed=0):
    return {"strategy": q1_strategy, "restarts": restarts, "seed": seed}


# --------------------------------------------------------------------------
# evaluators
# --------------------------------------------------------------------------

def approx_degradable_bound(n, sdp_tol=sdp.DEFAULT_TOL, rank_tol=qmat.RANK_TOL,
                            flavor="quantum", **q1_kw):
    """Q^(1)(N) plus the continuity terms at eps = eta(N)."""
    if not n.is_cptp:
        raise ValueError("approximate-degradability bound needs a CPTP map")
    res = sdp.eta_channel(n, sdp_tol, rank_tol)
    kind = "approx-degradable" if flavor == "quantum" else "private-pf"
    return _channel_report(kind, n, flavor, res, None, rank_tol, _q1_opts(**q1_kw))


def _two_parts(dec):
    parts = dec.parts
    if len(parts) == 1:
        zero = channel.from_kraus([np.zeros((parts[0].dim_out, parts[0].dim_in))])
        return parts[0], zero
    if len(parts) != 2:
        raise ValueError(f"pure-flag bounds need a two-part decomposition, got {len(parts)}")
    return parts


def _flagged_eta(dec, alpha, sdp_tol, rank_tol):
    n0, n1 = _two_parts(dec)
    nhat = channel.pure_flag_family(n0, n1, alpha)
    return nhat, sdp.eta_channel(nhat, sdp_tol, rank_tol)


def channel_flag_bound(dec, alpha, flavor="quantum", sdp_tol=sdp.DEFAULT_TOL,
                       rank_tol=qmat.RANK_TOL, **q1_kw):
    """Continuity bound for N0 (x) |psi_a><psi_a| + N1 (x) |0><0|."""
    nhat, res = _flagged_eta(dec, alpha, sdp_tol, rank_tol)
    kind = "channel-prop3" if flavor == "quantum" else "private-pf"
    return _channel_report(kind, nhat, flavor, res, float(alpha), rank_tol, _q1_opts(**q1_kw))


def general_flag_bound(dec, flags=None, sdp_tol=sdp.DEFAULT_TOL, rank_tol=qmat.RANK_TOL,
                       flavor="quantum", **q1_kw):
    """Continuity bound for sum_j N_j (x) sigma_j at the given flags."""
    if flags is not None:
        dec = dec.with_flags(flags)
    if dec.flags is None:
        raise ValueError("general flag bound needs flag states")
    nhat = channel.flag_extend(dec)
    res = sdp.eta_channel(nhat, sdp_tol, rank_tol)
    kind = "channel-prop2" if flavor == "quantum" else "private-pf"
    return _channel_report(kind, nhat, flavor, res, None, rank_tol, _q1_opts(**q1_kw),
                           [f"{len(dec.parts)} parts, flag dimension {dec.flags[0].dim}"])


def flagged_state(tau, omega, alpha):
    """rho_ABF = tau (x) |psi_a><psi_a| + omega (x) |0><0|."""
    tau, omega = qmat.as_matrix(tau), qmat.as_matrix(omega)
    if tau.shape != omega.shape:
        raise qmat.DimensionError("tau and omega must have the same shape")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return (np.kron(tau, qmat.proj(channel.psi_alpha(alpha)))
            + np.kron(omega, qmat.proj(qmat.ket(0, 2))))


def _split_dims(tau, dims):
    if dims is not None:
        return tuple(dims)
    if isinstance(tau, DensityMatrix):
        return tau.dims
    d = int(round(math.sqrt(qmat.as_matrix(tau).shape[0])))
    return (d, d)


def _check_split(tau, omega, dims):
    t = tau.matrix if isinstance(tau, DensityMatrix) else qmat.as_matrix(tau)
    o = omega.matrix if isinstance(omega, DensityMatrix) else qmat.as_matrix(omega)
    # raises if tau + omega is not a state; each part must be PSD too
    DensityMatrix(t + o, dims)
    for m in (t, o):
        if np.linalg.eigvalsh(qmat.hermitize(m))[0] < -qmat.PSD_TOL:
            raise qmat.NotPSDError("substate decomposition part is not PSD")
    return t, o


def state_pure_flag_bound(tau, omega, alpha, dims=None, sdp_tol=sdp.DEFAULT_TOL,
                          rank_tol=qmat.RANK_TOL):
    """I(A>BF) + 4 eta log|E^| + 2 g(eta) for the pure-flag state at ``alpha``."""
    dims = _split_dims(tau, dims)
    t, o = _check_split(tau, omega, dims)
    dA, dB = dims[0], int(np.prod(dims[1:]))
    rho = flagged_state(t, o, alpha)
    ic = coherent.state_coherent_info(rho, (dA, dB * 2))
    res = sdp.eta_state(rho, (dA, dB * 2), tol=sdp_tol, rel_tol=rank_tol)
    terms = {"coherent_info": ic, **state_terms(res.eta, res.env_dim)}
    upper = {"coherent_info": ic, **state_terms(res.eta + ETA_MARGIN, res.env_dim)}
    return _report("state-prop1", terms, res.eta, upper, alpha=float(alpha),
                   env_dim=res.env_dim, rank_tol=rank_tol, diagnostics=_eta_diag(res),
                   degrading_map=res.degrading_map)


# --------------------------------------------------------------------------
# alpha scan
# --------------------------------------------------------------------------

def _golden_min(f, a, b, iters):
    g = coherent.GOLDEN
    c, d = b - g * (b - a), a + g * (b - a)
    rc, rd = f(c), f(d)
    seen = [(c, rc), (d, rd)]
    for _ in range(max(iters - 2, 0)):
        if _val(rc) <= _val(rd):
            b, d, rd = d, c, rc
            c = b - g * (b - a)
            rc = f(c)
            seen.append((c, rc))
        else:
            a, c, rc = c, d, rd
            d = a + g * (b - a)
            rd = f(d)
            seen.append((d, rd))
    return seen


def _bisect_boundary(f, a_in, a_out, iters):
    seen = []
    for _ in range(iters):
        mid = 0.5 * (a_in + a_out)
        r = f(mid)
        seen.append((mid, r))
        if r.infinite:
            a_out = mid
        else:
            a_in = mid
    return seen


def _val(r):
    return math.inf if r.infinite else r.value


def alpha_scan(evaluator, grid=101, refine=30, lo=0.0, hi=1.0):
    """Minimize ``evaluator(alpha).value`` over [lo, hi].

    A uniform grid is followed by golden-section search between the grid
    neighbours of the best point.  When a neighbour is infinite (the
    feasibility boundary of a degradable-flag scan) the boundary is bisected
    instead.  Ties keep the earliest point, so the result is deterministic.
    Returns ``(alpha_star, report)``.
    """
    grid = max(int(grid), 1)
    alphas = np.linspace(lo, hi, grid) if grid > 1 else np.array([lo])
    seen = [(float(a), evaluator(float(a))) for a in alphas]
    vals = [_val(r) for _, r in seen]
    i = int(np.argmin(vals))
    if refine > 0 and grid > 1 and math.isfinite(vals[i]):
        nbrs = [j for j in (i - 1, i + 1) if 0 <= j < grid]
        if any(math.isinf(vals[j]) for j in nbrs):
            for j in nbrs:
                if math.isinf(vals[j]):
                    seen += _bisect_boundary(evaluator, alphas[i], alphas[j], refine)
        else:
            a, b = alphas[nbrs[0]], alphas[nbrs[-1]]
            seen += _golden_min(evaluator, a, b, refine)
    best_a, best = seen[i]
    for a, r in seen[grid:]:
        if _val(r) < _val(best):
            best_a, best = a, r
    best.alpha = best_a
    gaps = [d["gap"] for _, r in seen for d in r.diagnostics]
    res = [max(d["primal_residual"], d["dual_residual"]) for _, r in seen for d in r.diagnostics]
    best.scan = {
        "grid": grid,
        "refine": refine,
        "evaluations": len(seen),
        "grid_resolution": (hi - lo) / (grid - 1) if grid > 1 else None,
        "sdp_count": len(gaps),
        "max_gap": max(gaps, default=0.0),
        "max_residual": max(res, default=0.0),
        "heuristic_points": sum(r.heuristic for _, r in seen),
    }
    return best_a, best


def choi_channel_bound(tau, omega, dims=None, grid=101, refine=30,
                       sdp_tol=sdp.DEFAULT_TOL, rank_tol=qmat.RANK_TOL):
    """inf_alpha s(tau, omega, alpha) for a channel whose Choi state is tau + omega.

    The channel is assumed teleportation-simulable; this is recorded, not
    checked.
    """
    _, rep = alpha_scan(lambda a: state_pure_flag_bound(tau, omega, a, dims, sdp_tol, rank_tol),
                        grid, refine)
    rep.notes.append("caller asserts the channel is teleportation-simulable")
    return rep


def degradable_flag_bound(dec, flavor="quantum", grid=101, refine=30,
                          sdp_tol=sdp.DEFAULT_TOL, rank_tol=qmat.RANK_TOL,
                          threshold=sdp.DEGRADABLE_THRESHOLD, courtesy_grid=11, **q1_kw):
    """min Q^(1)(N^) over alpha with eta(N^) <= threshold, else infinity.

    The private flavor has the same value; only the kind tag differs.  When
    no alpha qualifies the best pure-flag continuity bound over a
    ``courtesy_grid`` is attached as ``courtesy``.
    """
    kind = "channel-corollary1" if flavor == "quantum" else "private-degradable"
    _flavor_terms(flavor)
    opts = _q1_opts(**q1_kw)

    def evaluate(alpha):
        nhat, res = _flagged_eta(dec, alpha, sdp_tol, rank_tol)
        if res.eta > threshold:
            return _infinite(kind, res.eta, alpha=alpha, env_dim=res.env_dim,
                             rank_tol=rank_tol, diagnostics=_eta_diag(res))
        q1, certified, notes = _q1(nhat, True, **opts)
        # the continuity terms vanish for a degradable channel; the bracket
        # keeps them at eta + margin
        upper = {"q1": q1, **_flavor_terms(flavor)(res.eta + ETA_MARGIN, res.env_dim)}
        return _report(kind, {"q1": q1}, res.eta, upper, alpha=alpha, env_dim=res.env_dim,
                       rank_tol=rank_tol, diagnostics=_eta_diag(res), notes=notes,
                       heuristic=not certified, degrading_map=res.degrading_map)

    _, rep = alpha_scan(evaluate, grid, refine)
    rep.notes.append(f"degradable when eta <= {threshold:g}")
    if rep.infinite:
        rep.notes.append("no scanned alpha gives a degradable flagged channel")
        _, rep.courtesy = alpha_scan(
            lambda a: channel_flag_bound(dec, a, flavor, sdp_tol, rank_tol, **q1_kw),
            courtesy_grid, 0)
    return rep


# --------------------------------------------------------------------------
# generalized amplitude damping
# --------------------------------------------------------------------------

def gad_flag_bound(y, N, sdp_tol=sdp.DEFAULT_TOL, rank_tol=qmat.RANK_TOL):
    """Q^(1) of the orthogonally flagged GAD channel (alpha = 0).

    Each flagged branch is sigma_Z covariant, so a diagonal input is optimal
    once the flagged channel is degradable.
    """
    rep = channel_flag_bound(zoo.gad_decomposition(y, N), 0.0, "quantum", sdp_tol,
                             rank_tol, q1_strategy="diagonal-scan")
    return rep


def dp_gad_prime(y, N):
    """y(1-N)/(1-yN), the damping of the data-processing reduction."""
    if not (0.0 <= y <= 1.0 and 0.0 <= N <= 1.0):
        raise ValueError(f"y and N must lie in [0, 1], got y={y}, N={N}")
    den = 1.0 - y * N
    return 1.0 if den == 0.0 else y * (1.0 - N) / den


def dp_gad_report(y, N):
    yp = dp_gad_prime(y, N)
    if yp >= 0.5:
        return _report("dp-gad", {"q1": 0.0}, 0.0, None,
                       notes=[f"y'={yp:.9g} >= 1/2: amplitude damping is antidegradable"])
    value, p = coherent.q1_diagonal_scan(zoo.amplitude_damping(yp))
    return _report("dp-gad", {"q1": value}, 0.0, None,
                   notes=[f"y'={yp:.9g}", f"argmax p={p:.6g}"])


def dp_gad_bound(y, N):
    """Q(A_{y', 0}) with y' = y(1-N)/(1-yN); zero for y' >= 1/2."""
    return dp_gad_report(y, N).value
