"""Hot numeric kernels with a numba path and a pure-numpy path.

The numba versions are used when numba imports cleanly and the environment
variable ``CAPBOUND_NUMBA`` is not set to ``0``.  Both paths are exported
under explicit names (``*_numpy`` / ``*_numba``) so tests and the benchmark
can compare them directly.
"""

import os

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("CAPBOUND_NUMBA", "1") != "0"

SQRT2 = np.sqrt(2.0)


# --------------------------------------------------------------------------
# numpy reference implementations
# --------------------------------------------------------------------------

def link_stack_numpy(R, J, dA, dB, dE):
    """out_k[(a,e),(a',e')] = sum_{b,b'} R[(a,b),(a',b')] J_k[(b,e),(b',e')]."""
    K = J.shape[0]
    R4 = R.reshape(dA, dB, dA, dB)
    J5 = J.reshape(K, dB, dE, dB, dE)
    out = np.einsum("abcd,kbedf->kaecf", R4, J5, optimize=True)
    return out.reshape(K, dA * dE, dA * dE)


def trace_last_numpy(M, d1, d2):
    K = M.shape[0]
    return np.einsum("kaibi->kab", M.reshape(K, d1, d2, d1, d2))


def trace_first_numpy(M, d1, d2):
    K = M.shape[0]
    return np.einsum("kiaib->kab", M.reshape(K, d1, d2, d1, d2))


def _triu_index(n):
    # column-major upper triangle, the order used by PSD triangle cones
    rows, cols = [], []
    for j in range(n):
        for i in range(j + 1):
            rows.append(i)
            cols.append(j)
    return np.array(rows), np.array(cols)


def svec_stack_numpy(M, real):
    """Pack a stack of Hermitian matrices into scaled triangle vectors.

    With ``real=True`` only the real parts are packed (size n(n+1)/2).
    Otherwise the real embedding [[Re, -Im], [Im, Re]] is packed.
    """
    if real:
        S = M.real
    else:
        S = np.block([[M.real, -M.imag], [M.imag, M.real]])
    n = S.shape[-1]
    r, c = _triu_index(n)
    scale = np.where(r == c, 1.0, SQRT2)
    return S[:, r, c] * scale


def entropy_bits_numpy(w):
    w = w[w > 0.0]
    return float(-np.sum(w * np.log2(w)))


# --------------------------------------------------------------------------
# numba kernels
# --------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def link_stack_numba(R, J, dA, dB, dE):
        # one complex matmul: (a a', b b') x (b b', k e e')
        K = J.shape[0]
        Rm = np.empty((dA * dA, dB * dB), dtype=np.complex128)
        for a in range(dA):
            for a2 in range(dA):
                for b in range(dB):
                    for b2 in range(dB):
                        Rm[a * dA + a2, b * dB + b2] = R[a * dB + b, a2 * dB + b2]
        Jm = np.empty((dB * dB, K * dE * dE), dtype=np.complex128)
        for k in range(K):
            for b in range(dB):
                for e in range(dE):
                    for b2 in range(dB):
                        for e2 in range(dE):
                            Jm[b * dB + b2, (k * dE + e) * dE + e2] = J[k, b * dE + e, b2 * dE + e2]
        P = Rm @ Jm
        out = np.empty((K, dA * dE, dA * dE), dtype=np.complex128)
        for k in range(K):
            for a in range(dA):
                for a2 in range(dA):
                    for e in range(dE):
                        for e2 in range(dE):
                            out[k, a * dE + e, a2 * dE + e2] = P[a * dA + a2, (k * dE + e) * dE + e2]
        return out

    @njit(cache=True)
    def trace_last_numba(M, d1, d2):
        K = M.shape[0]
        out = np.zeros((K, d1, d1), dtype=M.dtype)
        for k in range(K):
            for a in range(d1):
                for b in range(d1):
                    s = 0j
                    for i in range(d2):
                        s += M[k, a * d2 + i, b * d2 + i]
                    out[k, a, b] = s
        return out

    @njit(cache=True)
    def trace_first_numba(M, d1, d2):
        K = M.shape[0]
        out = np.zeros((K, d2, d2), dtype=M.dtype)
        for k in range(K):
            for a in range(d2):
                for b in range(d2):
                    s = 0j
                    for i in range(d1):
                        s += M[k, i * d2 + a, i * d2 + b]
                    out[k, a, b] = s
        return out

    @njit(cache=True)
    def _svec_real(S):
        K, n = S.shape[0], S.shape[1]
        t = n * (n + 1) // 2
        out = np.empty((K, t))
        sq = np.sqrt(2.0)
        for k in range(K):
            p = 0
            for j in range(n):
                for i in range(j + 1):
                    v = S[k, i, j]
                    out[k, p] = v if i == j else sq * v
                    p += 1
        return out

    @njit(cache=True)
    def _svec_embed(M):
        K, n = M.shape[0], M.shape[1]
        m = 2 * n
        t = m * (m + 1) // 2
        out = np.empty((K, t))
        sq = np.sqrt(2.0)
        for k in range(K):
            p = 0
            for j in range(m):
                for i in range(j + 1):
                    # embedding entry (i, j) of [[Re, -Im], [Im, Re]]
                    ii, jj = i % n, j % n
                    z = M[k, ii, jj]
                    if (i < n) == (j < n):
                        v = z.real
                    elif i >= n:
                        v = z.imag
                    else:
                        v = -z.imag
                    out[k, p] = v if i == j else sq * v
                    p += 1
        return out

    def svec_stack_numba(M, real):
        M = np.ascontiguousarray(M, dtype=np.complex128)
        if real:
            return _svec_real(np.ascontiguousarray(M.real))
        return _svec_embed(M)

    @njit(cache=True)
    def entropy_bits_numba(w):
        s = 0.0
        for x in w:
            if x > 0.0:
                s -= x * np.log2(x)
        return s


def _pick(name):
    if USE_NUMBA:
        return globals()[name + "_numba"]
    return globals()[name + "_numpy"]


def link_stack(R, J, dA, dB, dE):
    R = np.ascontiguousarray(R, dtype=np.complex128)
    J = np.ascontiguousarray(J, dtype=np.complex128)
    return _pick("link_stack")(R, J, dA, dB, dE)


def trace_last(M, d1, d2):
    return _pick("trace_last")(np.ascontiguousarray(M, dtype=np.complex128), d1, d2)


def trace_first(M, d1, d2):
    return _pick("trace_first")(np.ascontiguousarray(M, dtype=np.complex128), d1, d2)


def svec_stack(M, real):
    return _pick("svec_stack")(M, real)


def entropy_bits(w):
    return float(_pick("entropy_bits")(np.ascontiguousarray(w, dtype=np.float64)))
