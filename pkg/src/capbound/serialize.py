"""JSON interchange for matrices, states, channels, decompositions and reports.

Matrices are row-major nested lists of ``[re, im]`` pairs.  Python's float
repr round-trips exactly, so dump/load is bit-exact.
"""

import json
import math

import numpy as np

from . import channel
from .channel import CPDecomposition
from .qmat import DensityMatrix


class FormatError(ValueError):
    """Raised on malformed interchange JSON."""


def matrix_to_json(m):
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(obj):
    try:
        a = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"matrix entries must be [re, im] pairs: {exc}") from None
    if a.ndim != 3 or a.shape[2] != 2:
        raise FormatError(f"expected rows of [re, im] pairs, got array of shape {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def density_to_json(rho):
    return {"matrix": matrix_to_json(rho.matrix), "dims": list(rho.dims),
            "substate": bool(rho.substate)}


def density_from_json(obj):
    _need(obj, "matrix", "dims")
    return DensityMatrix(matrix_from_json(obj["matrix"]), tuple(obj["dims"]),
                         substate=bool(obj.get("substate", False)))


def channel_to_json(n):
    return {"dim_in": n.dim_in, "dim_out": n.dim_out,
            "kraus": [matrix_to_json(K) for K in n.kraus]}


def channel_from_json(obj):
    """A channel given by ``kraus`` or by ``choi`` with ``dim_in``/``dim_out``."""
    if not isinstance(obj, dict):
        raise FormatError("channel JSON must be an object")
    if "kraus" in obj:
        n = channel.from_kraus([matrix_from_json(K) for K in obj["kraus"]])
        for key in ("dim_in", "dim_out"):
            if key in obj and obj[key] != getattr(n, key):
                raise FormatError(f"{key}={obj[key]} disagrees with the Kraus shapes")
        return n
    if "choi" in obj:
        _need(obj, "dim_in", "dim_out")
        return channel.kraus_from_choi(matrix_from_json(obj["choi"]),
                                       int(obj["dim_in"]), int(obj["dim_out"]))
    raise FormatError("channel JSON needs a 'kraus' or a 'choi' entry")


def decomposition_to_json(dec):
    d = {"parts": [channel_to_json(p) for p in dec.parts]}
    if dec.flags is not None:
        d["flags"] = [density_to_json(f) for f in dec.flags]
    return d


def decomposition_from_json(obj):
    _need(obj, "parts")
    parts = tuple(channel_from_json(p) for p in obj["parts"])
    flags = obj.get("flags")
    if flags is not None:
        flags = tuple(density_from_json(f) for f in flags)
    return CPDecomposition(parts, flags)


def _need(obj, *keys):
    if not isinstance(obj, dict):
        raise FormatError("expected a JSON object")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise FormatError(f"missing field(s): {', '.join(missing)}")


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _finite(o):
    # JSON has no infinity; encode it as a string
    if isinstance(o, float) and not math.isfinite(o):
        return "inf" if o > 0 else ("-inf" if o < 0 else "nan")
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    return o


def dumps(obj, indent=None):
    return json.dumps(_finite(obj), default=_default, indent=indent, sort_keys=False)


def report_to_json(report, indent=2):
    return dumps(report.to_dict(), indent)


def load_object(text):
    """Parse interchange JSON, dispatching on its fields."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    if isinstance(obj, dict) and "parts" in obj:
        return decomposition_from_json(obj)
    if isinstance(obj, dict) and ("kraus" in obj or "choi" in obj):
        return channel_from_json(obj)
    if isinstance(obj, dict) and "dims" in obj:
        return density_from_json(obj)
    raise FormatError("JSON is not a channel, decomposition or state")
