"""Named channels and states with their canonical decompositions."""

import re
from dataclasses import dataclass, field

import numpy as np

from . import channel, qmat
from .channel import CPDecomposition
from .qmat import DensityMatrix

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
# X Z = -iY; real, and conjugation by it equals conjugation by Y
PAULI_XZ = PAULI_X @ PAULI_Z


def _check_unit(name, v, hi=1.0):
    if not 0.0 <= v <= hi:
        raise ValueError(f"{name} must lie in [0, {hi}], got {v}")


def weyl(a, b, d):
    """X^a Z^b on C^d."""
    X = np.roll(np.eye(d), 1, axis=0)
    Z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    W = np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b)
    if d == 2:
        W = W.real
    return W


def depolarizing(p, d=2):
    """(1-p) rho + p tr(rho) I/d."""
    _check_unit("p", p)
    if d < 2:
        raise ValueError("depolarizing channel needs d >= 2")
    kraus = [np.sqrt(1.0 - p + p / d**2) * np.eye(d)]
    kraus += [np.sqrt(p) / d * weyl(a, b, d)
              for a in range(d) for b in range(d) if (a, b) != (0, 0)]
    return channel.from_kraus(kraus)


def depolarizing_choi_split(p, d=2):
    """tau = (1-p) Phi, omega = p I/d^2 as substates of the Choi state."""
    _check_unit("p", p)
    phi = qmat.max_entangled(d)
    return (1.0 - p) * phi, p * np.eye(d * d) / d**2


def depolarizing_decomposition(p, d=2):
    """(1-p) id + p (replace by I/d)."""
    _check_unit("p", p)
    replacer = [np.sqrt(p / d) * np.outer(qmat.ket(i, d), qmat.ket(j, d))
                for i in range(d) for j in range(d)]
    return CPDecomposition((channel.from_kraus([np.sqrt(1.0 - p) * np.eye(d)]),
                            channel.from_kraus(replacer)))


def depolarizing_pauli_split(p):
    """Qubit depolarizing channel as identity part plus three Pauli parts."""
    _check_unit("p", p)
    q = p / 4.0
    return CPDecomposition((
        channel.from_kraus([np.sqrt(1.0 - 3.0 * q) * np.eye(2)]),
        channel.from_kraus([np.sqrt(q) * PAULI_X]),
        channel.from_kraus([np.sqrt(q) * PAULI_XZ]),
        channel.from_kraus([np.sqrt(q) * PAULI_Z]),
    ))


def amplitude_damping(y):
    _check_unit("y", y)
    return channel.from_kraus([
        np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - y)]]),
        np.array([[0.0, np.sqrt(y)], [0.0, 0.0]]),
    ])


def gad_kraus(y, N):
    _check_unit("y", y)
    _check_unit("N", N)
    A1 = np.sqrt(1 - N) * np.array([[1.0, 0.0], [0.0, np.sqrt(1 - y)]])
    A2 = np.sqrt(y * (1 - N)) * np.array([[0.0, 1.0], [0.0, 0.0]])
    A3 = np.sqrt(N) * np.array([[np.sqrt(1 - y), 0.0], [0.0, 1.0]])
    A4 = np.sqrt(y * N) * np.array([[0.0, 0.0], [1.0, 0.0]])
    return [A1, A2, A3, A4]


def gad(y, N):
    """Generalized amplitude damping channel A_{y,N}."""
    return channel.from_kraus(gad_kraus(y, N))


def gad_decomposition(y, N):
    """(1-N) A^1 + N A^2 with A^1 = (A1.A1' + A2.A2')/(1-N), A^2 likewise.

    Each part is returned already weighted, i.e. part 0 has Kraus operators
    {A1, A2} and part 1 has {A3, A4}.  For N in {0, 1} a single part remains.
    """
    A1, A2, A3, A4 = gad_kraus(y, N)
    if N == 0.0:
        return CPDecomposition((channel.from_kraus([A1, A2]),))
    if N == 1.0:
        return CPDecomposition((channel.from_kraus([A3, A4]),))
    return CPDecomposition((channel.from_kraus([A1, A2]), channel.from_kraus([A3, A4])))


def bb84_probs(pX, pZ):
    """Pauli weights (I, X, Z, Y)."""
    return np.array([1 - pX - pZ + pX * pZ, pX - pX * pZ, pZ - pZ * pX, pX * pZ])


def bb84(pX, pZ=None):
    pZ = pX if pZ is None else pZ
    _check_unit("pX", pX, 0.5)
    _check_unit("pZ", pZ, 0.5)
    w = bb84_probs(pX, pZ)
    ops = [np.eye(2), PAULI_X, PAULI_Z, PAULI_XZ]
    return channel.from_kraus([np.sqrt(c) * P for c, P in zip(w, ops)])


def bb84_decomposition(pX, pZ=None):
    """Identity branch (weight (1-pX)(1-pZ)) against the three error branches."""
    pZ = pX if pZ is None else pZ
    _check_unit("pX", pX, 0.5)
    _check_unit("pZ", pZ, 0.5)
    w = bb84_probs(pX, pZ)
    n0 = channel.from_kraus([np.sqrt(w[0]) * np.eye(2)])
    n1 = channel.from_kraus([np.sqrt(w[1]) * PAULI_X, np.sqrt(w[2]) * PAULI_Z,
                             np.sqrt(w[3]) * PAULI_XZ])
    return CPDecomposition((n0, n1))


def bb84_q1(pX, pZ=None):
    pZ = pX if pZ is None else pZ
    return 1.0 - qmat.binary_entropy(pX) - qmat.binary_entropy(pZ)


def smith_smolin_bb84(p):
    """h(1/2 - 2p(1-p)) - h(2p(1-p)), the comparison curve for BB84."""
    q = 2 * p * (1 - p)
    return qmat.binary_entropy(0.5 - q) - qmat.binary_entropy(q)


def depolarizing_q1(p, d=2):
    """Coherent information of the qubit depolarizing channel at I/2."""
    if d != 2:
        raise ValueError("closed form only for qubits")
    w = 0.75 * p
    return 1.0 - qmat.binary_entropy(w) - w * np.log2(3.0)


def isotropic_state(f, d=2):
    _check_unit("f", f)
    return DensityMatrix((1 - f) * qmat.max_entangled(d) + f * np.eye(d * d) / d**2, (d, d))


# --------------------------------------------------------------------------
# textual channel specs, e.g. "depolarizing:p=0.04", "gad:y=0.3,N=0.1"
# --------------------------------------------------------------------------

FAMILIES = ("depolarizing", "gad", "bb84", "amplitude-damping")
_ALIASES = {"ad": "amplitude-damping", "amplitude_damping": "amplitude-damping",
            "depol": "depolarizing"}


@dataclass
class NamedChannelSpec:
    family: str
    params: dict = field(default_factory=dict)
    d: int = 2

    @classmethod
    def parse(cls, text):
        m = re.fullmatch(r"\s*([A-Za-z][\w-]*)\s*(?::(.*))?", text)
        if not m:
            raise ValueError(f"cannot parse channel spec {text!r}")
        family = _ALIASES.get(m.group(1).lower(), m.group(1).lower())
        if family not in FAMILIES:
            raise ValueError(f"unknown channel family {family!r}")
        params = {}
        for item in filter(None, (m.group(2) or "").split(",")):
            if "=" not in item:
                raise ValueError(f"parameter {item!r} is not key=value")
            k, v = (s.strip() for s in item.split("=", 1))
            params[k] = float(v)
        d = int(params.pop("d", 2))
        spec = cls(family, params, d)
        spec.normalized()
        return spec

    def with_param(self, key, value):
        params = dict(self.params)
        params[key] = value
        return NamedChannelSpec(self.family, params, self.d)

    def normalized(self):
        """Canonical parameters: p for depolarizing (w = 3p/4 accepted)."""
        p = dict(self.params)
        if self.family == "depolarizing":
            if "w" in p:
                if "p" in p:
                    raise ValueError("give either p or w=3p/4, not both")
                p["p"] = p.pop("w") * self.d**2 / (self.d**2 - 1)
            _need(p, "p")
            _check_unit("p", p["p"])
        elif self.family == "gad":
            _need(p, "y", "N")
            _check_unit("y", p["y"])
            _check_unit("N", p["N"])
        elif self.family == "bb84":
            if "p" in p:
                p.setdefault("pX", p["p"])
                p.setdefault("pZ", p.pop("p"))
            _need(p, "pX", "pZ")
            _check_unit("pX", p["pX"], 0.5)
            _check_unit("pZ", p["pZ"], 0.5)
        elif self.family == "amplitude-damping":
            _need(p, "y")
            _check_unit("y", p["y"])
        return p

    def channel(self):
        p = self.normalized()
        if self.family == "depolarizing":
            return depolarizing(p["p"], self.d)
        if self.family == "gad":
            return gad(p["y"], p["N"])
        if self.family == "bb84":
            return bb84(p["pX"], p["pZ"])
        return amplitude_damping(p["y"])

    def decomposition(self):
        p = self.normalized()
        if self.family == "depolarizing":
            return depolarizing_decomposition(p["p"], self.d)
        if self.family == "gad":
            return gad_decomposition(p["y"], p["N"])
        if self.family == "bb84":
            return bb84_decomposition(p["pX"], p["pZ"])
        return CPDecomposition((amplitude_damping(p["y"]),))

    def choi_split(self):
        if self.family != "depolarizing":
            raise ValueError(f"no canonical Choi-state split for {self.family}")
        return depolarizing_choi_split(self.normalized()["p"], self.d)

    def __str__(self):
        body = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.family}:{body}"


def _need(params, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise ValueError(f"missing parameter(s): {', '.join(missing)}")
