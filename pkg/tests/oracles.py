"""Independent reference computations used as test oracles.

The soliton reference evaluates the closed-form Marchenko row sums in 60-digit
arithmetic with plain matrix inverses and powers, so it shares no numerical
strategy with the production code. The transfer-matrix reference multiplies
2x2 matrices one site at a time in Python complex arithmetic.
"""

from __future__ import annotations

import mpmath as mp
import numpy as np

from dnls.boundstates import as_matrix_triplet

DPS = 60


def _mat(a) -> mp.matrix:
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    return mp.matrix([[mp.mpc(complex(x)) for x in row] for row in a])


def _power(A: mp.matrix, p: int) -> mp.matrix:
    if p < 0:
        A, p = A**-1, -p
    out = mp.eye(A.rows)
    for _ in range(p):
        out = out * A
    return out


def _stein(P: mp.matrix, Q: mp.matrix, R: mp.matrix) -> mp.matrix:
    """X - P X Q = R by the vectorized linear system."""
    r, c = R.rows, R.cols
    K = mp.eye(r * c)
    for a in range(r):
        for b in range(c):
            for a2 in range(r):
                for b2 in range(c):
                    K[a + r * b, a2 + r * b2] -= P[a, a2] * Q[b2, b]
    v = mp.matrix([R[a, b] for b in range(c) for a in range(r)])
    x = mp.lu_solve(K, v)
    return mp.matrix([[x[a + r * b] for b in range(c)] for a in range(r)])


def soliton_qr_reference(inside, outside, t: float, sites) -> tuple[np.ndarray, np.ndarray]:
    """q_n(t), r_n(t) from the closed-form row sums in extended precision."""
    sites = list(sites)
    with mp.workdps(DPS):
        mi, mo = as_matrix_triplet(inside), as_matrix_triplet(outside)
        A, B, C = _mat(mi.A), _mat(mi.B), _mat(mi.C)
        Ab, Bb, Cb = _mat(mo.A), _mat(mo.B), _mat(mo.C)
        N, Nb = A.rows, Ab.rows
        Ai, Abi = A**-1, Ab**-1
        X, Xb = A - Ai, Ab - Abi
        E = mp.expm(-1j * mp.mpf(t) * X * X)
        Eb = mp.expm(1j * mp.mpf(t) * Xb * Xb)
        ups = _stein(A, Abi, B * Cb)
        upsb = _stein(Abi, A, Bb * C)
        inv1 = (mp.eye(Nb) - Abi) ** -1
        invA = (mp.eye(N) - A) ** -1

        def sums(n):
            U = mp.eye(Nb) - Eb * _power(Ab, -(n + 2)) * upsb * E * _power(A, 2 * n + 1) * ups * _power(Ab, -(n + 1))
            Ubar = mp.eye(N) - E * _power(A, n) * ups * Eb * _power(Ab, -(2 * n + 3)) * upsb * _power(A, n + 1)
            left = Cb * _power(Ab, -n) * U**-1
            lbar = C * _power(A, n) * Ubar**-1
            s1 = -(left * Eb * _power(Ab, -(n + 2)) * inv1 * Bb)[0]
            s2 = 1 + (lbar * E * _power(A, n) * ups * Eb * _power(Ab, -(2 * n + 3)) * inv1 * Bb)[0]
            sb1 = 1 + (left * Eb * _power(Ab, -(n + 2)) * upsb * E * _power(A, 2 * n + 1) * invA * B)[0]
            sb2 = -(lbar * E * _power(A, n) * invA * B)[0]
            return s1, s2, sb1, sb2

        S = {k: sums(k) for k in range(min(sites) - 1, max(sites) + 1)}
        q, r = [], []
        for k in sites:
            s1, s2, sb1, sb2 = S[k]
            q.append(complex(s1 * s2 / (sb1 * s2 - s1 * sb2)))
            r.append(complex(S[k - 1][3] / S[k - 1][1] - sb2 / s2))
    return np.array(q), np.array(r)


def transfer_matrix_reference(kind: str, a: complex, b: complex, z: complex) -> np.ndarray:
    """X_n(z) written out entry by entry."""
    if kind == "qr":
        w = z - 1 / z
        return np.array([[z, w * a], [z * b, 1 / z + w * a * b]])
    return np.array([[z, z * a], [b / z, 1 / z]])


def psi_reference(kind: str, pair, z: complex, n: int) -> np.ndarray:
    """psi_n(z) by multiplying transfer matrices onto the free solution [0, z^n] one site at a time."""
    top = max(n, pair.n_max + 1)
    vec = np.array([0.0, z**top], dtype=complex)
    for k in range(top - 1, n - 1, -1):
        a, b = (complex(x[0]) for x in pair.values(np.array([k])))
        vec = transfer_matrix_reference(kind, a, b, z) @ vec
    return vec
