"""Numba kernels against their numpy fallbacks.

Run:  python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is timed on shapes that occur in the degradability SDPs of the
flagged qubit channels (d_A = 2, d_B = 4, d_E = 4).  The last section times a
whole eta_channel solve with CAPBOUND_NUMBA=1 and =0 in fresh interpreters,
since the flag is read at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from capbound import _kernels as K


def _basis(n, rng, k):
    M = rng.normal(size=(k, n, n)) + 1j * rng.normal(size=(k, n, n))
    return M + M.conj().transpose(0, 2, 1)


def cases(rng):
    dA, dB, dE = 2, 4, 4
    R = _basis(dA * dB, rng, 1)[0]
    J = _basis(dB * dE, rng, (dB * dE) ** 2)
    M = _basis(dA * dE, rng, (dA * dE) ** 2)
    w = np.abs(rng.normal(size=64))
    w /= w.sum()
    return {
        "link_stack": (lambda f: f(R, J, dA, dB, dE)),
        "trace_last": (lambda f: f(M, dA, dE)),
        "trace_first": (lambda f: f(M, dA, dE)),
        "svec_stack(complex)": (lambda f: f(M, False)),
        "entropy_bits": (lambda f: f(w)),
    }


def _impl(name, which):
    base = name.split("(")[0]
    return getattr(K, f"{base}_{which}")


SOLVE = """
import time
from capbound import zoo, sdp, channel
n = channel.pure_flag_family(*zoo.bb84_decomposition(0.02).parts, 0.5)
sdp.eta_channel(n)
t = time.perf_counter()
for _ in range(REPEAT):
    sdp.eta_channel(n)
print((time.perf_counter() - t) / REPEAT)
"""


def solve_time(flag, repeat):
    env = dict(os.environ, CAPBOUND_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", SOLVE.replace("REPEAT", str(repeat))],
                         env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    a = ap.parse_args()
    if not K.HAVE_NUMBA:
        print("numba is not installed; only the numpy path exists")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'numpy [us]':>12}{'numba [us]':>12}{'speedup':>9}  max|diff|")
    for name, call in cases(rng).items():
        f_np, f_nb = _impl(name, "numpy"), _impl(name, "numba")
        a_np, a_nb = call(f_np), call(f_nb)  # also compiles
        diff = float(np.max(np.abs(np.asarray(a_np) - np.asarray(a_nb))))
        t_np = min(timeit.repeat(lambda: call(f_np), number=a.repeat, repeat=3)) / a.repeat
        t_nb = min(timeit.repeat(lambda: call(f_nb), number=a.repeat, repeat=3)) / a.repeat
        print(f"{name:<22}{t_np * 1e6:12.1f}{t_nb * 1e6:12.1f}{t_np / t_nb:9.2f}  {diff:.1e}")
    r = max(a.repeat // 20, 3)
    t1, t0 = solve_time("1", r), solve_time("0", r)
    print(f"{'eta_channel solve':<22}{t0 * 1e3:10.1f}ms{t1 * 1e3:10.1f}ms{t0 / t1:9.2f}")


if __name__ == "__main__":
    main()
