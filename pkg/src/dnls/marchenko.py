"""Marchenko kernels, truncated Marchenko solves and potential recovery.

Kernels are stored on a contiguous index range [k_min, k_max] and read as
zero above it. Every solve works at one lattice site n with unknowns at the
even-parity indices m = n + 2, ..., n + 2P; the odd-parity unknowns vanish
identically and are not carried.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .boundstates import BoundStateTriplet, convert_triplet, evolve_triplet, kernel_contributions, matrix_power
from .errors import DegenerateDenominator, InputError, InsufficientTail, SingularMarchenkoOperator
from .lattice import PotentialPair, cumulative_data
from .scattering import ScatteringData, fourier_coefficients, limits_from_grid
from .transforms import JostAtOne, recover_qr_at_one, us_to_qr

METHODS = ("a", "b", "c", "d", "e")
DEFAULT_WINDOW = (-32, 32)
MAX_UNKNOWNS = 512
TAIL_TOL = 1e-15
COND_LIMIT = 1e13


@dataclass(frozen=True, eq=False)
class MarchenkoKernel:
    """Omega_k and Omegabar_k for k_min <= k <= k_max (zero at odd k and above k_max).

    When ``rhat``/``rbarhat`` and the triplets are given, ``omega`` equals
    ``rhat`` plus the inside triplet part and ``omegabar`` equals ``rbarhat``
    plus the outside part. The standard solve then keeps the triplet part in
    factored form, which stays well conditioned far to the left of the
    potential where C A^{k-1} B grows geometrically.
    """

    kind: str
    k_min: int
    omega: np.ndarray
    omegabar: np.ndarray
    tail: float = 0.0
    rhat: np.ndarray | None = None
    rbarhat: np.ndarray | None = None
    inside: object = None
    outside: object = None

    @property
    def factored(self) -> bool:
        """True when the reflection part and nonempty triplets are stored separately."""
        if self.rhat is None or self.rbarhat is None:
            return False
        orders = [t.matrices().order for t in (self.inside, self.outside) if t is not None]
        return any(o > 0 for o in orders)

    @property
    def k_max(self) -> int:
        return self.k_min + self.omega.size - 1

    def _read(self, arr, k):
        k = np.asarray(k, dtype=np.int64)
        if k.size and int(k.min()) < self.k_min:
            raise InsufficientTail(f"kernel index {int(k.min())} below stored start {self.k_min}")
        idx = k - self.k_min
        out = np.zeros(k.shape, dtype=np.complex128)
        ok = idx < arr.size
        out[ok] = arr[idx[ok]]
        return out

    def at(self, k) -> np.ndarray:
        return self._read(self.omega, k)

    def atbar(self, k) -> np.ndarray:
        return self._read(self.omegabar, k)

    def summed(self) -> "SummedKernel":
        """G_k = sum_{j >= k} Omega_j and the barred analogue."""
        G = np.cumsum(self.omega[::-1])[::-1]
        Gbar = np.cumsum(self.omegabar[::-1])[::-1]
        return SummedKernel(self.kind, self.k_min, G, Gbar, self)


@dataclass(frozen=True, eq=False)
class SummedKernel:
    """Tail sums G_k, Gbar_k of a kernel; G_k - G_{k+1} = Omega_k."""

    kind: str
    k_min: int
    G: np.ndarray
    Gbar: np.ndarray
    kernel: MarchenkoKernel

    def at(self, k) -> np.ndarray:
        return self.kernel._read(self.G, k)

    def atbar(self, k) -> np.ndarray:
        return self.kernel._read(self.Gbar, k)


def _tail_index(values: np.ndarray, tol: float) -> int:
    """Index of the last entry above ``tol`` relative to the largest entry."""
    mag = np.abs(values)
    scale = max(float(mag.max()) if mag.size else 0.0, 1e-300)
    above = np.flatnonzero(mag > tol * max(scale, 1.0))
    return int(above[-1]) if above.size else 0


def build_kernels(
    data: ScatteringData,
    window: tuple[int, int] = DEFAULT_WINDOW,
    tol: float = TAIL_TOL,
) -> MarchenkoKernel:
    """Omega_k = Rhat_k + C A^{k-1} B and Omegabar_k = Rbarhat_k + Cbar Abar^{-k-1} Bbar.

    The stored range starts at 2 * window[0] - 4 and ends where both kernels
    have decayed below ``tol`` (relative to their peak, floored at one).
    """
    M = data.grid.M
    k_min = 2 * int(window[0]) - 4
    k_top = k_min + M // 2 - 1
    k = np.arange(k_min, k_top + 1)
    Rhat = fourier_coefficients(data.R, k)
    Rbarhat = fourier_coefficients(data.Rbar, k, bar=True)
    Rhat[k % 2 != 0] = 0.0
    Rbarhat[k % 2 != 0] = 0.0
    omega = Rhat + kernel_contributions(data.inside, k)
    omegabar = Rbarhat + kernel_contributions(data.outside, k)
    omega[k % 2 != 0] = 0.0
    omegabar[k % 2 != 0] = 0.0
    # the decay test ignores k < 0, where triplet terms grow with |k|
    start = max(0, -k_min)
    last = max(
        start + _tail_index(omega[start:], tol),
        start + _tail_index(omegabar[start:], tol),
        -k_min + 2 * int(window[1]) + 4,
    )
    last = min(last + 2, k.size - 1)
    tail = float(max(np.abs(omega[last:]).max(), np.abs(omegabar[last:]).max()))
    if last == k.size - 1 and tail > 1e-12:
        raise InsufficientTail(f"kernel has not decayed by k = {k_top} (|Omega| = {tail:.2e}); use a larger grid")
    cut = slice(0, last + 1)
    return MarchenkoKernel(
        data.kind,
        k_min,
        omega[cut].copy(),
        omegabar[cut].copy(),
        tail,
        rhat=Rhat[cut].copy(),
        rbarhat=Rbarhat[cut].copy(),
        inside=data.inside,
        outside=data.outside,
    )


def kernels_for_uv_and_ps(
    kernel_qr: MarchenkoKernel, D_inf: complex, E_inf: complex, tol: float = 1e-13
) -> tuple[MarchenkoKernel, MarchenkoKernel]:
    """Kernels of the uv and ps systems from the qr kernel.

    Omega^{uv}_k = (D/E)(Omega_k - Omega_{k-2}),
    Omegabar^{uv}_k = (E/D) sum_{l >= 0} Omegabar_{k+2l},
    Omega^{ps}_k = (D/E) Omega_k and Omegabar^{ps}_k = (E/D) Omegabar_k.
    The uv kernels start two indices above the qr range.
    """
    if kernel_qr.kind != "qr":
        raise InputError("expected a qr kernel")
    ratio = D_inf / E_inf
    om, omb = kernel_qr.omega, kernel_qr.omegabar
    scale = max(1.0, float(np.abs(omb).max()) if omb.size else 0.0)
    if omb.size >= 2 and float(np.abs(omb[-2:]).max()) > tol * scale:
        raise InsufficientTail("Omegabar has not decayed at the end of the stored range")
    uv = MarchenkoKernel("uv", kernel_qr.k_min + 2, ratio * (om[2:] - om[:-2]), _tail_sums(omb)[2:] / ratio, kernel_qr.tail)
    ps = MarchenkoKernel("ps", kernel_qr.k_min, ratio * om, omb / ratio, kernel_qr.tail)
    if not kernel_qr.factored or not all(
        t is None or isinstance(t, BoundStateTriplet) for t in (kernel_qr.inside, kernel_qr.outside)
    ):
        return uv, ps
    rh, rbh = kernel_qr.rhat, kernel_qr.rbarhat
    parts = {}
    for target in ("uv", "ps"):
        parts[target] = dict(
            inside=convert_triplet(kernel_qr.inside, "qr", target, D_inf, E_inf),
            outside=convert_triplet(kernel_qr.outside, "qr", target, D_inf, E_inf),
        )
    uv = MarchenkoKernel(
        "uv", uv.k_min, uv.omega, uv.omegabar, uv.tail,
        rhat=ratio * (rh[2:] - rh[:-2]), rbarhat=_tail_sums(rbh)[2:] / ratio, **parts["uv"],
    )
    ps = MarchenkoKernel("ps", ps.k_min, ps.omega, ps.omegabar, ps.tail, rhat=ratio * rh, rbarhat=rbh / ratio, **parts["ps"])
    return uv, ps


def _tail_sums(values: np.ndarray) -> np.ndarray:
    """sum_{l >= 0} values[i + 2l] for every i."""
    out = np.zeros_like(values)
    for parity in (0, 1):
        idx = np.arange(parity, values.size, 2)
        out[idx] = np.cumsum(values[idx][::-1])[::-1]
    return out


# --- standard system ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarchenkoTables:
    """Solution of the standard system at site n for m = n, n + 2, ..., n + 2P.

    ``first``/``second`` hold the components of the unbarred column (M or K)
    and ``bar_first``/``bar_second`` those of the barred column. Entry 0 is the
    diagonal m = n, fixed to [Mbar_nn M_nn] = I. Factored solves also keep
    ``triplet_sums``, the inside triplet part of sum_{l >= n} [M_nl]
    Omega_{l+n} for both columns.
    """

    kind: str
    n: int
    first: np.ndarray
    second: np.ndarray
    bar_first: np.ndarray
    bar_second: np.ndarray
    triplet_sums: np.ndarray | None = None

    @property
    def m(self) -> np.ndarray:
        return self.n + 2 * np.arange(self.first.size)

    def sums(self) -> tuple[complex, complex, complex, complex]:
        """Row sums over m >= n: (sum M_1, sum M_2, sum Mbar_1, sum Mbar_2)."""
        return (
            complex(self.first.sum()),
            complex(self.second.sum()),
            complex(self.bar_first.sum()),
            complex(self.bar_second.sum()),
        )


def default_unknowns(kernel: MarchenkoKernel, n: int, cap: int = MAX_UNKNOWNS) -> int:
    return int(min(cap, max(2, (kernel.k_max - 2 * n) // 2 + 1)))


def _hankel(read, n: int, P: int, offset: int = 0) -> np.ndarray:
    """Matrix [read(j + l + offset)] for j, l in n + 2, ..., n + 2P."""
    idx = n + 2 * np.arange(1, P + 1)
    return read(idx[:, None] + idx[None, :] + offset)


def _solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """LU solve with a LAPACK 1-norm condition estimate."""
    if matrix.size == 0:
        return rhs.copy()
    anorm = float(np.abs(matrix).sum(axis=0).max())
    lu, piv, info = lapack.zgetrf(matrix)
    if info > 0:
        raise SingularMarchenkoOperator("Marchenko operator is exactly singular")
    rcond, _ = lapack.zgecon(lu, anorm)
    if not np.isfinite(rcond) or rcond * COND_LIMIT < 1.0:
        raise SingularMarchenkoOperator(f"Marchenko operator condition number about {1 / max(rcond, 1e-300):.2e}")
    x, _ = lapack.zgetrs(lu, piv, rhs)
    return x


def solve_standard(
    kernel: MarchenkoKernel, n: int, unknowns: int | None = None, components: str = "both"
) -> MarchenkoTables:
    """Solve the standard Marchenko system at site ``n`` by a dense LU solve.

    With H_{jl} = Omega_{j+l}, Hbar_{lm} = Omegabar_{l+m} the first component
    x_m of the unbarred column solves x (I - H Hbar) = -Omegabar_{n+m}, the
    second component y_m of the barred column solves y (I - Hbar H) =
    -Omega_{n+m}, and the cross components follow as -x H and -y Hbar.

    Kernels that carry their triplets separately are solved through
    :func:`_solve_factored` instead. ``components`` may be "first" (x only)
    or "second" (y only) to skip half the work.
    """
    P = unknowns or default_unknowns(kernel, n)
    if kernel.factored:
        return _solve_factored(kernel, n, P, components)
    m = n + 2 * np.arange(1, P + 1)
    H = _hankel(kernel.at, n, P)
    Hb = _hankel(kernel.atbar, n, P)
    eye = np.eye(P, dtype=np.complex128)
    zeros = np.zeros(P, dtype=np.complex128)
    x = y = zeros
    if components in ("both", "first"):
        x = _solve(eye - Hb @ H, -kernel.atbar(n + m))
    if components in ("both", "second"):
        y = _solve(eye - H @ Hb, -kernel.at(n + m))
    xb = -(x @ H) if components != "second" else zeros
    yb = -(y @ Hb) if components != "first" else zeros
    return _tables(kernel.kind, n, x, xb, y, yb)


def _tables(kind, n, x, xb, y, yb, triplet_sums=None) -> MarchenkoTables:
    one, zero = np.array([1.0 + 0j]), np.array([0j])
    return MarchenkoTables(
        kind,
        n,
        first=np.concatenate([zero, x]),
        second=np.concatenate([one, yb]),
        bar_first=np.concatenate([one, xb]),
        bar_second=np.concatenate([zero, y]),
        triplet_sums=triplet_sums,
    )


def _triplet_factors(triplet, n: int, P: int, inside: bool):
    """Low-rank factors of the triplet part of the Hankel matrices at site n.

    Inside: Omega_{j+l} = X_j K Y_l with X_j = C A^{j-n}, K = A^{2n},
    Y_l = A^{l-n-1} B, Y_n = A^{-1} B. Outside: X_j = Cbar Abar^{n-j},
    K = Abar^{-2n}, Y_l = Abar^{n-l-1} Bbar, Y_n = Abar^{-1} Bbar. Returns (X, Y, Y_n, K_or_inverse, inverted)
    where ``inverted`` says the fourth entry is K^{-1}; it is chosen so that
    the stored power is the contracting one.
    """
    if triplet is None or triplet.matrices().order == 0:
        return None
    mt = triplet.matrices()
    step = mt.A if inside else np.linalg.inv(mt.A)
    N = step.shape[0]
    X = np.empty((P, N), dtype=np.complex128)
    Y = np.empty((N, P), dtype=np.complex128)
    row = mt.C @ step @ step
    col = step @ mt.B if inside else step @ step @ step @ mt.B
    for i in range(P):
        X[i] = row[0]
        Y[:, i] = col[:, 0]
        row = row @ step @ step
        col = step @ step @ col
    Yn = (np.linalg.solve(step, mt.B) if inside else step @ mt.B)[:, 0]
    inverted = n < 0
    K = matrix_power(step, 2 * abs(n))
    return X, Y, Yn, K, inverted


def _constraint_rows(f, P: int, col_offset: int, width: int, rhs_n: bool):
    """Rows enforcing s = K (Y v + [rhs_n] Y_n) for the unknown block v at ``col_offset``."""
    X, Y, Yn, K, inverted = f
    N = K.shape[0]
    rows = np.zeros((N, width), dtype=np.complex128)
    if inverted:
        rows[:, col_offset : col_offset + P] = -Y
        diag = K
        rhs = Yn if rhs_n else np.zeros(N, dtype=np.complex128)
    else:
        rows[:, col_offset : col_offset + P] = -K @ Y
        diag = np.eye(N, dtype=np.complex128)
        rhs = K @ Yn if rhs_n else np.zeros(N, dtype=np.complex128)
    return rows, diag, rhs


def _solve_factored(kernel: MarchenkoKernel, n: int, P: int, components: str) -> MarchenkoTables:
    """Standard solve with the triplet part of the Hankel matrices kept in factored form.

    Auxiliary unknowns s = K Y v and sbar = Kbar Ybar vbar turn the triplet
    terms into X s and Xbar sbar, so powers A^{2n} only enter through the
    contracting one of K and K^{-1}.
    """
    rh = lambda k: kernel._read(kernel.rhat, k)
    rbh = lambda k: kernel._read(kernel.rbarhat, k)
    m = n + 2 * np.arange(1, P + 1)
    HR = _hankel(rh, n, P)
    HbR = _hankel(rbh, n, P)
    fin = _triplet_factors(kernel.inside, n, P, inside=True)
    fout = _triplet_factors(kernel.outside, n, P, inside=False)
    N = fin[3].shape[0] if fin else 0
    Nb = fout[3].shape[0] if fout else 0
    size = 2 * P + N + Nb
    eye = np.eye(P, dtype=np.complex128)
    zeros = np.zeros(P, dtype=np.complex128)

    def system(first_block, second_block, rhs_first, in_target, in_rhs, out_target, out_rhs):
        # unknowns [v, vb, s, sbar]; rows: v + Hf vb + (...) = rhs_first, vb + Hs v + (...) = 0
        Mx = np.zeros((size, size), dtype=np.complex128)
        b = np.zeros(size, dtype=np.complex128)
        Mx[:P, :P] = eye
        Mx[:P, P : 2 * P] = first_block
        Mx[P : 2 * P, :P] = second_block
        Mx[P : 2 * P, P : 2 * P] = eye
        b[:P] = rhs_first
        if fin:
            r0 = 2 * P
            target_row = slice(0, P) if in_target == 0 else slice(P, 2 * P)
            Mx[target_row, r0 : r0 + N] = fin[0]
            rows, diag, rhs = _constraint_rows(fin, P, in_rhs[0], size, in_rhs[1])
            Mx[r0 : r0 + N] = rows
            Mx[r0 : r0 + N, r0 : r0 + N] = diag
            b[r0 : r0 + N] = rhs
        if fout:
            r0 = 2 * P + N
            target_row = slice(0, P) if out_target == 0 else slice(P, 2 * P)
            Mx[target_row, r0 : r0 + Nb] = fout[0]
            rows, diag, rhs = _constraint_rows(fout, P, out_rhs[0], size, out_rhs[1])
            Mx[r0 : r0 + Nb] = rows
            Mx[r0 : r0 + Nb, r0 : r0 + Nb] = diag
            b[r0 : r0 + Nb] = rhs
        sol = _solve(Mx, b)
        # C s = sum_{l >= n} v_l C A^{n+l-1} B, the triplet part of the m = n extension
        csum = complex((kernel.inside.matrices().C @ sol[2 * P : 2 * P + N])[0]) if fin else 0j
        return sol[:P], sol[P : 2 * P], csum

    x = xb = y = yb = zeros
    c1 = c2 = 0j
    if components in ("both", "first"):
        # x + HbR xb + Xbar sbar = -omegabar_R, xb + HR x + X s = 0,
        # s = K Y x, sbar = Kbar (Ybar xb + Ybar_n)
        x, xb, c1 = system(HbR, HR, -rbh(n + m), 1, (0, False), 0, (P, True))
    if components in ("both", "second"):
        # y + HR yb + X s = -omega_R, yb + HbR y + Xbar sbar = 0,
        # s = K (Y yb + Y_n), sbar = Kbar Ybar y
        y, yb, c2 = system(HR, HbR, -rh(n + m), 0, (P, True), 1, (0, False))
    return _tables(kernel.kind, n, x, xb, y, yb, np.array([c1, c2]))


def standard_residual(kernel: MarchenkoKernel, tables: MarchenkoTables) -> float:
    """Largest residual of the four scalar equations of the coupled system, m > n."""
    n = tables.n
    l = tables.m
    m = l[1:]
    om = kernel.at(l[:, None] + m[None, :])
    omb = kernel.atbar(l[:, None] + m[None, :])
    # [Mbar M] + [[0, Omegabar_{n+m}], [Omega_{n+m}, 0]] + sum_{l>n} [Mbar_l M_l][[0, Ob], [O, 0]]
    # the l = n term of the sum is the diagonal block.
    r_bar1 = tables.bar_first[1:] + tables.first @ om
    r_bar2 = tables.bar_second[1:] + tables.second @ om
    r_1 = tables.first[1:] + tables.bar_first @ omb
    r_2 = tables.second[1:] + tables.bar_second @ omb
    return float(max(np.abs(r).max() for r in (r_bar1, r_bar2, r_1, r_2)))


def recover(kind: str, tables: dict[int, MarchenkoTables], n_range: tuple[int, int]) -> PotentialPair:
    """Potentials from standard-system tables for every n in ``n_range`` (inclusive).

    uv/ps: first potential [K_{n(n+2)}]_1, second [Kbar_{n(n+2)}]_2.
    qr: row-sum quotients; needs tables at n_range[0] - 1 as well.
    """
    lo, hi = n_range
    n = np.arange(lo, hi + 1)
    if kind in ("uv", "ps"):
        a = np.array([tables[k].first[1] for k in n])
        b = np.array([tables[k].bar_second[1] for k in n])
        return PotentialPair(kind, lo, a, b)
    if kind != "qr":
        raise InputError(f"unknown kind {kind!r}")
    sums = {k: tables[k].sums() for k in range(lo - 1, hi + 1)}
    q = np.empty(n.size, dtype=np.complex128)
    r = np.empty(n.size, dtype=np.complex128)
    for i, k in enumerate(n):
        s1, s2, sb1, sb2 = sums[k]
        den = sb1 * s2 - s1 * sb2
        if abs(den) < 1e-300 or abs(s2) < 1e-300 or abs(sums[k - 1][1]) < 1e-300:
            raise DegenerateDenominator(f"row-sum recovery denominator vanishes at n = {k}")
        q[i] = s1 * s2 / den
        r[i] = sums[k - 1][3] / sums[k - 1][1] - sb2 / s2
    return PotentialPair("qr", lo, q, r)


def jost_at_one_from_tables(kind: str, tables: dict[int, MarchenkoTables], n_range) -> JostAtOne:
    """[psibar_n(1) psi_n(1)] as row sums of the standard tables."""
    lo, hi = n_range
    vals = np.empty((hi - lo + 1, 2, 2), dtype=np.complex128)
    for i, k in enumerate(range(lo, hi + 1)):
        s1, s2, sb1, sb2 = tables[k].sums()
        vals[i] = [[sb1, s1], [sb2, s2]]
    return JostAtOne(kind, lo, vals)


def diagonal_value(kernel: MarchenkoKernel, tables: MarchenkoTables) -> np.ndarray:
    """Wbar_nn = Kbar_nn + sum_{l >= n} K_nl Omega_{l+n} as a 2-vector."""
    if kernel.factored and tables.triplet_sums is not None:
        om = kernel._read(kernel.rhat, tables.m + tables.n)
        extra = tables.triplet_sums
    else:
        om = kernel.at(tables.m + tables.n)
        extra = np.zeros(2)
    return np.array(
        [tables.bar_first[0] + tables.first @ om + extra[0], tables.bar_second[0] + tables.second @ om + extra[1]]
    )


def diagonal_prediction(pair_ps: PotentialPair, n: int) -> np.ndarray:
    """(D_inf / D_{n-1}) [1, -s_{n-1}] from the ps potentials."""
    cum = cumulative_data(pair_ps)
    _, s = pair_ps.values(np.array([n - 1]))
    return cum.D_inf / complex(cum.D_at(n - 1)) * np.array([1.0, -s[0]])


def row_sum_matrix(tables: MarchenkoTables) -> np.ndarray:
    """sum_{l >= n} [Mbar_nl M_nl] as a 2x2 matrix."""
    s1, s2, sb1, sb2 = tables.sums()
    return np.array([[sb1, s1], [sb2, s2]])


def row_sum_prediction(pair_qr: PotentialPair, n: int) -> np.ndarray:
    """The row sums of the qr tables at site n expressed through the cumulative products."""
    cum = cumulative_data(pair_qr)
    q, _ = pair_qr.values(np.array([n]))
    q = q[0]
    tail = complex(np.sum(pair_qr.second[pair_qr.sites > n]))
    e = complex(cum.E_at(n - 1)) / cum.E_inf
    d = complex(cum.D_at(n)) / cum.D_inf
    return np.array([[e * (1.0 + q * tail), q * e], [d * tail, d]])


# --- alternate system ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AlternateSolution:
    """Differenced unknowns d_j = K_{n(j+1)} - K_{nj} at j = n + 2, ..., n + 2P and the diagonal value."""

    n: int
    d: np.ndarray
    diagonal: complex

    def value(self, m: int) -> complex:
        """The scalar unknown at index m >= n."""
        j = self.n + 2 * np.arange(1, self.d.size + 1)
        return complex(-self.d[j >= m].sum())


def _alternate(first: SummedKernel, n: int, P: int, swap: bool) -> AlternateSolution:
    """Solve one alternate equation at site n.

    Unbarred form (swap=False):
        sum_j d_j ([j >= m] + sum_l G_{j+l} Omegabar_{l+m-1}) = Gbar_{n+m},
    with l = n + 1, n + 3, ... The barred form exchanges G and Gbar.
    """
    if first.kernel.factored:
        return _alternate_factored(first.kernel, n, P, swap)
    G, Gb = (first.atbar, first.at) if swap else (first.at, first.atbar)
    Ob = first.kernel.at if swap else first.kernel.atbar
    j = n + 2 * np.arange(1, P + 1)
    m = j
    l = n + 1 + 2 * np.arange(0, P + 1)
    W = G(j[:, None] + l[None, :]) @ Ob(l[:, None] + m[None, :] - 1)
    T = (j[:, None] >= m[None, :]).astype(np.complex128)
    d = _solve((T + W).T, Gb(n + m))
    return AlternateSolution(n, d, complex(-d.sum()))


def _summed_factors(triplet, inside: bool):
    """(C, step, e, W B) with Omega_k = C step^{k+e} B and sum_{even j >= k} Omega_j = C step^{k+e} W B for even k."""
    if triplet is None or triplet.matrices().order == 0:
        return None
    mt = triplet.matrices()
    step = mt.A if inside else np.linalg.inv(mt.A)
    W = np.linalg.inv(np.eye(step.shape[0]) - step @ step)
    return mt.C, step, (-1 if inside else 1), W


def _alternate_factored(kernel: MarchenkoKernel, n: int, P: int, swap: bool) -> AlternateSolution:
    """The alternate equation at site n with the triplet terms in factored form.

    With e_l = sum_j d_j G_{j+l} the equation reads d T + e Omegabar = Gbar_{n+m}.
    The triplet parts G_{j+l} = X1_j K1 Y1_l and Omegabar_{l+m-1} = X2_l K2 Y2_m
    enter through s1 = d X1 K1 and s2 = (e X2 - c0) K2, where c0 K2 Y2_m is
    the triplet part of Gbar_{n+m}. Each K is stored as its contracting power.
    """
    r1, r2 = (kernel.rbarhat, kernel.rhat) if swap else (kernel.rhat, kernel.rbarhat)
    t1, t2 = (kernel.outside, kernel.inside) if swap else (kernel.inside, kernel.outside)
    S1 = np.cumsum(r1[::-1])[::-1]
    S2 = np.cumsum(r2[::-1])[::-1]
    read = kernel._read
    j = n + 2 * np.arange(1, P + 1)
    l = n + 1 + 2 * np.arange(0, P + 1)
    f1 = _summed_factors(t1, inside=not swap)
    f2 = _summed_factors(t2, inside=swap)
    N1 = f1[1].shape[0] if f1 else 0
    N2 = f2[1].shape[0] if f2 else 0
    L = P + 1
    size = P + L + N1 + N2
    A = np.zeros((size, size), dtype=np.complex128)
    b = np.zeros(size, dtype=np.complex128)
    d0, e0, a0, c0_ = 0, P, P + L, P + L + N1
    # rows m: d T + e R2 + s2 Y2 = S2R_{n+m}
    A[:P, d0:e0] = (j[:, None] >= j[None, :]).astype(np.complex128).T
    A[:P, e0:a0] = read(r2, l[None, :] + j[:, None] - 1)
    b[:P] = read(S2, n + j)
    # rows l: e - d S1R - s1 Y1 = 0
    A[P : P + L, e0:a0] = np.eye(L)
    A[P : P + L, d0:e0] = -read(S1, j[None, :] + l[:, None])
    inverted = n < 0
    if f1:
        C, step, ex, W = f1
        sq = step @ step
        X1 = np.array([(C @ np.linalg.matrix_power(sq, i))[0] for i in range(1, P + 1)])
        Y1 = np.array([(np.linalg.matrix_power(step, 2 * p + 2 + ex) @ W @ t1.matrices().B)[:, 0] for p in range(L)])
        K = matrix_power(step, 2 * abs(n))
        A[P : P + L, a0:c0_] = -Y1
        rows = slice(P + L, P + L + N1)
        if inverted:
            A[rows, a0:c0_] = K.T
            A[rows, d0:e0] = -X1.T
        else:
            A[rows, a0:c0_] = np.eye(N1)
            A[rows, d0:e0] = -(X1 @ K).T
    if f2:
        C, step, ex, W = f2
        sq = step @ step
        X2 = np.array([(C @ np.linalg.matrix_power(sq, p))[0] for p in range(L)])
        Y2 = np.array([(np.linalg.matrix_power(step, 2 * i + ex) @ t2.matrices().B)[:, 0] for i in range(1, P + 1)])
        c0 = (C @ W)[0]
        K = matrix_power(step, 2 * abs(n))
        A[:P, c0_:] = Y2
        rows = slice(P + L + N1, size)
        if inverted:
            A[rows, c0_:] = K.T
            A[rows, e0:a0] = -X2.T
            b[rows] = -c0
        else:
            A[rows, c0_:] = np.eye(N2)
            A[rows, e0:a0] = -(X2 @ K).T
            b[rows] = -(c0 @ K)
    d = _solve(A, b)[:P]
    return AlternateSolution(n, d, complex(-d.sum()))


def solve_alternate(
    summed_uv: SummedKernel, summed_ps: SummedKernel, n: int, unknowns: int | None = None
) -> tuple[AlternateSolution, AlternateSolution]:
    """Solve the alternate uv equation (unknown script-K^{uv}) and the ps equation (unknown script-Kbar^{ps}) at n."""
    P_uv = unknowns or default_unknowns(summed_uv.kernel, n)
    P_ps = unknowns or default_unknowns(summed_ps.kernel, n)
    return _alternate(summed_uv, n, P_uv, swap=False), _alternate(summed_ps, n, P_ps, swap=True)


def recover_alternate(
    diag_uv: np.ndarray, diag_ps: np.ndarray, n_lo: int, D_inf: complex, E_inf: complex
) -> PotentialPair:
    """q_n and r_n from the diagonals script-K^{uv}_{nn} and script-Kbar^{ps}_{nn}.

    ``diag_uv`` covers n_lo .. n_hi + 1 and ``diag_ps`` covers n_lo - 1 .. n_hi.
    """
    diag_uv = np.asarray(diag_uv, dtype=np.complex128)
    diag_ps = np.asarray(diag_ps, dtype=np.complex128)
    q = (D_inf / E_inf) * (diag_uv[:-1] - diag_uv[1:])
    r = (E_inf / D_inf) * (diag_ps[:-1] - diag_ps[1:])
    return PotentialPair("qr", n_lo, q, r)


# --- inversion ---------------------------------------------------------------------


def invert(
    data: ScatteringData,
    method: str = "a",
    window: tuple[int, int] = DEFAULT_WINDOW,
    trim: float = 1e-12,
) -> PotentialPair:
    """Recover the qr potentials on ``window`` from qr scattering data.

    Methods: (a) standard qr system and row-sum recovery; (b) alternate
    system; (c) uv system and recovery at z = 1; (d) ps system and recovery at
    z = 1; (e) u from the uv system, s from the ps system, then the product
    formulas.
    """
    if data.kind != "qr":
        raise InputError("invert expects qr scattering data")
    if method not in METHODS:
        raise InputError(f"method must be one of {METHODS}, got {method!r}")
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise InputError("empty window")
    limits = limits_from_grid(data)
    D, E = limits.D_inf, limits.E_inf
    kernel = build_kernels(data, (lo - 2, hi + 2))
    if method == "a":
        tables = {n: solve_standard(kernel, n) for n in range(lo - 1, hi + 1)}
        pair = recover("qr", tables, (lo, hi))
    elif method == "b":
        uv, ps = kernels_for_uv_and_ps(kernel, D, E)
        s_uv, s_ps = uv.summed(), ps.summed()
        diag_uv = [_alternate(s_uv, n, default_unknowns(uv, n), swap=False).diagonal for n in range(lo, hi + 2)]
        diag_ps = [_alternate(s_ps, n, default_unknowns(ps, n), swap=True).diagonal for n in range(lo - 1, hi + 1)]
        pair = recover_alternate(diag_uv, diag_ps, lo, D, E)
    elif method in ("c", "d"):
        kind = "uv" if method == "c" else "ps"
        uv, ps = kernels_for_uv_and_ps(kernel, D, E)
        k = uv if kind == "uv" else ps
        rng = (lo - 1, hi + 1)
        tables = {n: solve_standard(k, n) for n in range(rng[0], rng[1] + 1)}
        pair = recover_qr_at_one(jost_at_one_from_tables(kind, tables, rng), D, E).on(lo, hi)
    else:
        uv, ps = kernels_for_uv_and_ps(kernel, D, E)
        sites = range(lo - 1, hi + 2)
        u = np.array([solve_standard(uv, n, components="first").first[1] for n in sites])
        s = np.array([solve_standard(ps, n, components="second").bar_second[1] for n in sites])
        pair = us_to_qr(u, s, n_min=lo - 1).on(lo, hi)
    return pair.trimmed(trim) if trim else pair


def kernel_from_triplets(inside, outside, k_range: tuple[int, int], kind: str = "qr", t: float = 0.0) -> MarchenkoKernel:
    """Triplet-only kernel on k_range (inclusive), with norming rows evolved to time t."""
    k = np.arange(int(k_range[0]), int(k_range[1]) + 1)
    inside, outside = evolve_triplet(inside, t), evolve_triplet(outside, t)
    om = kernel_contributions(inside, k)
    omb = kernel_contributions(outside, k)
    zero = np.zeros(k.size, dtype=np.complex128)
    return MarchenkoKernel(kind, int(k_range[0]), om, omb, 0.0, zero, zero.copy(), inside, outside)
