"""Closed-form reflectionless solutions built from matrix triplets.

Every formula here acts on the expanded triplets (blocks at +z_j and -z_j),
so that sums over all lattice indices reproduce the even-k kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundstates import BoundStateTriplet, MatrixTriplet, as_matrix_triplet, convert_triplet, evolution_matrix
from .errors import IllConditioned, InputError, SingularUn
from .lattice import PotentialPair, check_admissible

DEFAULT_WINDOW = (-32, 32)
SYLVESTER_TOL = 1e-10
UN_COND_LIMIT = 1e13
ROUTES = ("z7", "tau")


def _empty(side: str) -> MatrixTriplet:
    return MatrixTriplet(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), side, ())


def _expanded(triplet, side: str) -> MatrixTriplet:
    mt = as_matrix_triplet(triplet)
    if mt is None:
        return _empty(side)
    if mt.side != side:
        raise InputError(f"expected an {side} triplet, got {mt.side}")
    return mt


@dataclass(frozen=True, eq=False)
class SylvesterPair:
    """Upsilon (N x Nbar) and Upsilonbar (Nbar x N)."""

    Upsilon: np.ndarray
    Upsilonbar: np.ndarray


def _stein(P: np.ndarray, Q: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve X - P X Q = rhs through the Kronecker form."""
    r, c = rhs.shape
    if r == 0 or c == 0:
        return np.zeros((r, c), dtype=np.complex128)
    K = np.eye(r * c, dtype=np.complex128) - np.kron(Q.T, P)
    x = np.linalg.solve(K, rhs.reshape(-1, order="F"))
    return x.reshape((r, c), order="F")


def sylvester(inside, outside) -> SylvesterPair:
    """Solve Upsilon - A Upsilon Abar^{-1} = B Cbar and Upsilonbar - Abar^{-1} Upsilonbar A = Bbar C."""
    ins, out = _expanded(inside, "inside"), _expanded(outside, "outside")
    A, B, C = ins.A, ins.B, ins.C
    Ab, Bb, Cb = out.A, out.B, out.C
    Abinv = np.linalg.inv(Ab) if out.order else Ab
    U = _stein(A, Abinv, B @ Cb)
    Ub = _stein(Abinv, A, Bb @ C)
    res = max(
        float(np.abs(U - A @ U @ Abinv - B @ Cb).max()) if U.size else 0.0,
        float(np.abs(Ub - Abinv @ Ub @ A - Bb @ C).max()) if Ub.size else 0.0,
    )
    if res > SYLVESTER_TOL:
        raise IllConditioned(f"Sylvester residual {res:.2e}")
    return SylvesterPair(U, Ub)


@dataclass(frozen=True, eq=False)
class TimePropagators:
    """E = exp(-i t (A - A^{-1})^2) and Ebar = exp(+i t (Abar - Abar^{-1})^2)."""

    E: np.ndarray
    Ebar: np.ndarray
    t: float


def propagators(inside, outside, t: float) -> TimePropagators:
    ins, out = _expanded(inside, "inside"), _expanded(outside, "outside")
    E = evolution_matrix(ins, t) if ins.order else np.zeros((0, 0), dtype=np.complex128)
    Eb = evolution_matrix(out, t) if out.order else np.zeros((0, 0), dtype=np.complex128)
    return TimePropagators(E, Eb, float(t))


class _Closed:
    """Shared matrices of the closed-form formulas at a fixed time."""

    def __init__(self, inside, outside, t: float, sylv: SylvesterPair | None = None):
        ins, out = _expanded(inside, "inside"), _expanded(outside, "outside")
        self.N, self.Nb = ins.order, out.order
        self.A, self.B, self.C = ins.A, ins.B, ins.C
        self.Ab, self.Bb, self.Cb = out.A, out.B, out.C
        self.Ainv = np.linalg.inv(self.A) if self.N else self.A
        self.Abinv = np.linalg.inv(self.Ab) if self.Nb else self.Ab
        prop = propagators(ins, out, t)
        self.E, self.Eb = prop.E, prop.Ebar
        s = sylv or sylvester(ins, out)
        self.Ups, self.Upsb = s.Upsilon, s.Upsilonbar
        self.IN = np.eye(self.N, dtype=np.complex128)
        self.INb = np.eye(self.Nb, dtype=np.complex128)
        self._fac = None
        self._left: dict[int, np.ndarray] = {}
        self._leftbar: dict[int, np.ndarray] = {}

    def Ap(self, p: int) -> np.ndarray:
        return np.linalg.matrix_power(self.A if p >= 0 else self.Ainv, abs(p))

    def Abm(self, p: int) -> np.ndarray:
        """Abar^{-p}."""
        return np.linalg.matrix_power(self.Abinv if p >= 0 else self.Ab, abs(p))

    def U(self, n: int) -> np.ndarray:
        return self.INb - self.Eb @ self.Abm(n + 2) @ self.Upsb @ self.E @ self.Ap(2 * n + 1) @ self.Ups @ self.Abm(n + 1)

    def Ubar(self, n: int) -> np.ndarray:
        return self.IN - self.E @ self.Ap(n) @ self.Ups @ self.Eb @ self.Abm(2 * n + 3) @ self.Upsb @ self.Ap(n + 1)

    def _factors(self):
        """Inverses of G, H, G', H' for the rescaled forms, or None when they do not exist."""
        if self._fac is None:
            self._fac = False
            if self.N and self.N == self.Nb:
                G = self.Eb @ self.Abinv @ self.Abinv @ self.Upsb @ self.E
                H = self.Ups @ self.Abinv
                Gb = self.E @ self.Ups @ self.Eb
                Hb = self.Upsb @ self.A
                if max(np.linalg.cond(x) for x in (G, H, Gb, Hb)) < UN_COND_LIMIT:
                    self._fac = tuple(np.linalg.inv(x) for x in (G, H, Gb, Hb))
        return self._fac or None

    def _form(self, n: int, bar: bool) -> tuple[str, np.ndarray]:
        """Pick the better conditioned representation of Cbar Abar^{-n} U_n^{-1} (or C A^n Ubar_n^{-1}).

        ("direct", row) holds the row itself. ("scaled", Q) holds
        Q = -Cbar H^{-1} W^{-1} with W = I - A^{-2n-1} G^{-1} Abar^{2n} H^{-1},
        so that the row equals Q A^{-2n-1} G^{-1} Abar^n; the barred row is
        Q' A-free: Q' Abar^{2n+3} G'^{-1} A^{-n} with Q' = -C H'^{-1} W'^{-1}.
        Below the support U_n is the identity plus a huge, nearly low-rank
        term, while W is close to the identity. Keeping the scaled factors
        apart lets the large powers cancel exactly in later products.
        """
        cache = self._leftbar if bar else self._left
        if n not in cache:
            if bar:
                forms = [("direct", self.C @ self.Ap(n), self.Ubar(n))]
            else:
                forms = [("direct", self.Cb @ self.Abm(n), self.U(n))]
            fac = self._factors()
            if fac is not None:
                Gi, Hi, Gbi, Hbi = fac
                if bar:
                    W = self.IN - self.Abm(-2 * n - 3) @ Gbi @ self.Ap(-2 * n) @ Hbi
                    forms.append(("scaled", -self.C @ Hbi, W))
                else:
                    W = self.IN - self.Ap(-2 * n - 1) @ Gi @ self.Abm(-2 * n) @ Hi
                    forms.append(("scaled", -self.Cb @ Hi, W))
            conds = [np.linalg.cond(W) if W.size else 1.0 for _, _, W in forms]
            kind, row, W = forms[int(np.argmin(conds))]
            cache[n] = (kind, _solve_right(row, W, n))
        return cache[n]

    def left(self, n: int) -> np.ndarray:
        """Cbar Abar^{-n} U_n^{-1}."""
        return self.left_E(n, 0)

    def leftbar(self, n: int) -> np.ndarray:
        """C A^n Ubar_n^{-1}."""
        return self.leftbar_E(n, 0) @ np.linalg.inv(self.E)

    def left_E(self, n: int, k: int) -> np.ndarray:
        """Cbar Abar^{-n} U_n^{-1} Ebar Abar^{-k}."""
        kind, row = self._form(n, False)
        if kind == "direct":
            return row @ self.Eb @ self.Abm(k)
        Gi = self._factors()[0]
        return row @ self.Ap(-2 * n - 1) @ Gi @ self.Eb @ self.Abm(k - n)

    def left_G(self, n: int, p: int) -> np.ndarray:
        """Cbar Abar^{-n} U_n^{-1} Ebar Abar^{-n-2} Upsilonbar E A^p."""
        kind, row = self._form(n, False)
        if kind == "direct":
            return row @ self.Eb @ self.Abm(n + 2) @ self.Upsb @ self.E @ self.Ap(p)
        return row @ self.Ap(p - 2 * n - 1)

    def leftbar_E(self, n: int, k: int) -> np.ndarray:
        """C A^n Ubar_n^{-1} E A^k."""
        kind, row = self._form(n, True)
        if kind == "direct":
            return row @ self.E @ self.Ap(k)
        Gbi = self._factors()[2]
        return row @ self.Abm(-2 * n - 3) @ Gbi @ self.E @ self.Ap(k - n)

    def leftbar_G(self, n: int, p: int) -> np.ndarray:
        """C A^n Ubar_n^{-1} E A^n Upsilon Ebar Abar^{-p}."""
        kind, row = self._form(n, True)
        if kind == "direct":
            return row @ self.E @ self.Ap(n) @ self.Ups @ self.Eb @ self.Abm(p)
        return row @ self.Abm(p - 2 * n - 3)


def _solve_right(row: np.ndarray, U: np.ndarray, n: int) -> np.ndarray:
    """row @ U^{-1}, surfacing singular U_n."""
    if U.size == 0:
        return row
    cond = np.linalg.cond(U)
    if not np.isfinite(cond) or cond > UN_COND_LIMIT:
        raise SingularUn(f"U_n is singular at n = {n} (condition {cond:.2e})")
    return np.linalg.solve(U.T, row.T).T


def _scalar(x: np.ndarray) -> complex:
    return complex(x[0, 0]) if x.size else 0j


@dataclass(frozen=True, eq=False)
class ExplicitTables:
    """Closed-form components at site n for the requested m (m > n)."""

    n: int
    m: np.ndarray
    first: np.ndarray
    second: np.ndarray
    bar_first: np.ndarray
    bar_second: np.ndarray


def explicit_solution_tables(inside, outside, t: float, n: int, m, sylv: SylvesterPair | None = None) -> ExplicitTables:
    """Closed-form solution of the standard Marchenko system with triplet-only kernels.

    [M_nm]_1 = -Cbar Abar^{-n} U_n^{-1} Ebar Abar^{-m-1} Bbar,
    [M_nm]_2 = C A^n Ubar_n^{-1} E A^n Upsilon Ebar Abar^{-n-m-2} Bbar,
    [Mbar_nm]_1 = Cbar Abar^{-n} U_n^{-1} Ebar Abar^{-n-2} Upsilonbar E A^{n+m} B,
    [Mbar_nm]_2 = -C A^n Ubar_n^{-1} E A^{m-1} B.
    The same formulas apply to uv triplets.
    """
    cl = _Closed(inside, outside, t, sylv)
    m = np.atleast_1d(np.asarray(m, dtype=np.int64))
    out = {k: np.zeros(m.size, dtype=np.complex128) for k in ("f", "s", "bf", "bs")}
    for i, mm in enumerate(m):
        mm = int(mm)
        if cl.Nb:
            out["f"][i] = -_scalar(cl.left_E(n, mm + 1) @ cl.Bb)
            out["bf"][i] = _scalar(cl.left_G(n, n + mm) @ cl.B) if cl.N else 0j
        if cl.N:
            out["s"][i] = _scalar(cl.leftbar_G(n, n + mm + 2) @ cl.Bb) if cl.Nb else 0j
            out["bs"][i] = -_scalar(cl.leftbar_E(n, mm - 1) @ cl.B)
    return ExplicitTables(n, m, out["f"], out["s"], out["bf"], out["bs"])


def _row_sums(cl: _Closed, n: int) -> tuple[complex, complex, complex, complex]:
    """Closed-form row sums over m = n, n + 2, ..., with the identity diagonal block.

    Entries with m - n odd vanish exactly but are large at negative n in
    floating point, so the geometric series run over even offsets only.
    """
    inv2 = np.linalg.inv(cl.INb - cl.Abinv @ cl.Abinv) if cl.Nb else cl.INb
    invA2 = np.linalg.inv(cl.IN - cl.A @ cl.A) if cl.N else cl.IN
    s1 = -_scalar(cl.left_E(n, n + 3) @ inv2 @ cl.Bb) if cl.Nb else 0j
    s2 = 1.0 + (_scalar(cl.leftbar_G(n, 2 * n + 4) @ inv2 @ cl.Bb) if cl.N and cl.Nb else 0j)
    sb1 = 1.0 + (_scalar(cl.left_G(n, 2 * n + 2) @ invA2 @ cl.B) if cl.N and cl.Nb else 0j)
    sb2 = -_scalar(cl.leftbar_E(n, n + 1) @ invA2 @ cl.B) if cl.N else 0j
    return s1, s2, sb1, sb2


def _cheaper(forms, n: int) -> np.ndarray:
    """Evaluate row @ W^{-1} @ tail for the candidate with the best conditioned W."""
    conds = [np.linalg.cond(W) for _, W, _ in forms]
    row, W, tail = forms[int(np.argmin(conds))]
    return _solve_right(row, W, n) @ tail


def _tau(cl: _Closed, n: int) -> complex:
    """tau_n = -Cbar I2 I1 Abar^{-n-1} V_n^{-1} Ebar Abar^{-n-1} Bbar.

    The diagonal value equals the closed form at m = n + 1. Below the support
    V_n = I + Abar^{-n} G A^{2n+1} H Abar^{-n} is evaluated through
    W = I + A^{-2n-1} G^{-1} Abar^{2n} H^{-1} instead.
    """
    if not cl.Nb:
        return 0j
    I2 = np.linalg.inv(cl.INb - cl.Abinv @ cl.Abinv)
    I1 = np.linalg.inv(cl.INb - cl.Abinv)
    invA = np.linalg.inv(cl.IN - cl.A) if cl.N else cl.IN
    A2 = cl.IN - cl.Ainv @ cl.Ainv
    G = cl.Eb @ cl.Abinv @ (cl.INb - cl.Abinv) @ cl.Upsb @ A2 @ cl.E @ invA
    H = cl.Ups @ I2 @ cl.Abinv
    lead = cl.Cb @ I2 @ I1
    V = cl.INb + cl.Abm(n) @ G @ cl.Ap(2 * n + 1) @ H @ cl.Abm(n)
    forms = [(lead @ cl.Abm(n + 1), V, cl.Eb @ cl.Abm(n + 1))]
    if cl.N == cl.Nb and np.linalg.cond(G) < UN_COND_LIMIT and np.linalg.cond(H) < UN_COND_LIMIT:
        Gi, Hi = np.linalg.inv(G), np.linalg.inv(H)
        W = cl.IN + cl.Ap(-2 * n - 1) @ Gi @ cl.Abm(-2 * n) @ Hi
        forms.append((lead @ cl.Abinv @ Hi, W, cl.Ap(-2 * n - 1) @ Gi @ cl.Eb @ cl.Abinv))
    return -_scalar(_cheaper(forms, n) @ cl.Bb)


def _taubar(cl: _Closed, n: int) -> complex:
    """taubar_n = -C A^{n-1} (I - A)^{-1} Vbar_n^{-1} E A^{n+1} B, rescaled below the support like tau_n."""
    if not cl.N:
        return 0j
    invA = np.linalg.inv(cl.IN - cl.A)
    I1 = np.linalg.inv(cl.INb - cl.Abinv) if cl.Nb else cl.INb
    G = cl.E @ cl.A @ (cl.IN - cl.A) @ cl.Ups @ cl.Eb @ I1
    H = cl.Upsb @ cl.Ainv
    lead = cl.C @ cl.Ainv @ invA
    Vb = cl.IN + cl.Ap(n) @ G @ cl.Abm(2 * n + 3) @ H @ cl.Ap(n)
    forms = [(lead @ cl.Ap(n), Vb, cl.E @ cl.Ap(n + 1))]
    if cl.N == cl.Nb and np.linalg.cond(G) < UN_COND_LIMIT and np.linalg.cond(H) < UN_COND_LIMIT:
        Gi, Hi = np.linalg.inv(G), np.linalg.inv(H)
        W = cl.IN + cl.Abm(-2 * n - 3) @ Gi @ cl.Ap(-2 * n) @ Hi
        forms.append((lead @ Hi, W, cl.Abm(-2 * n - 3) @ Gi @ cl.E @ cl.A))
    return -_scalar(_cheaper(forms, n) @ cl.B)


def soliton_qr(
    inside,
    outside,
    t: float = 0.0,
    window: tuple[int, int] = DEFAULT_WINDOW,
    route: str = "z7",
) -> PotentialPair:
    """Reflectionless q_n(t), r_n(t) on ``window`` from qr triplets.

    ``route="z7"`` applies the row-sum quotients to the closed-form Marchenko
    solution (with geometric sums in closed form); ``route="tau"`` uses the
    differences q_n = tau_n - tau_{n+1}, r_n = taubar_{n-1} - taubar_n.
    """
    if route not in ROUTES:
        raise InputError(f"route must be one of {ROUTES}")
    lo, hi = int(window[0]), int(window[1])
    cl = _Closed(inside, outside, t)
    n = np.arange(lo, hi + 1)
    if route == "z7":
        sums = {k: _row_sums(cl, k) for k in range(lo - 1, hi + 1)}
        q = np.empty(n.size, dtype=np.complex128)
        r = np.empty(n.size, dtype=np.complex128)
        for i, k in enumerate(n):
            s1, s2, sb1, sb2 = sums[k]
            q[i] = s1 * s2 / (sb1 * s2 - s1 * sb2)
            r[i] = sums[k - 1][3] / sums[k - 1][1] - sb2 / s2
    else:
        tau = np.array([_tau(cl, k) for k in range(lo, hi + 2)])
        taubar = np.array([_taubar(cl, k) for k in range(lo - 1, hi + 1)])
        q = tau[:-1] - tau[1:]
        r = taubar[:-1] - taubar[1:]
    pair = PotentialPair("qr", lo, q, r)
    check_admissible(pair)
    return pair


def soliton_uv(inside_uv, outside_uv, t: float = 0.0, window: tuple[int, int] = DEFAULT_WINDOW) -> PotentialPair:
    """u_n = -Cbar Abar^{-n} U_n^{-1} Ebar Abar^{-n-3} Bbar and v_n = -C A^n Ubar_n^{-1} E A^{n+1} B."""
    lo, hi = int(window[0]), int(window[1])
    cl = _Closed(inside_uv, outside_uv, t)
    u = np.zeros(hi - lo + 1, dtype=np.complex128)
    v = np.zeros(hi - lo + 1, dtype=np.complex128)
    for i, n in enumerate(range(lo, hi + 1)):
        if cl.Nb:
            u[i] = -_scalar(cl.left_E(n, n + 3) @ cl.Bb)
        if cl.N:
            v[i] = -_scalar(cl.leftbar_E(n, n + 1) @ cl.B)
    return PotentialPair("uv", lo, u, v)


@dataclass(frozen=True, eq=False)
class TransportedTriplets:
    """uv and ps triplets with the matching Sylvester solutions."""

    inside_uv: BoundStateTriplet | None
    outside_uv: BoundStateTriplet | None
    inside_ps: BoundStateTriplet | None
    outside_ps: BoundStateTriplet | None
    sylvester_qr: SylvesterPair
    sylvester_uv: SylvesterPair
    sylvester_ps: SylvesterPair


def transport_triplets(inside_qr, outside_qr, D_inf: complex, E_inf: complex) -> TransportedTriplets:
    """Carry qr triplets to the uv and ps systems.

    Upsilon^{ps} = (E/D) Upsilon, Upsilonbar^{ps} = (D/E) Upsilonbar,
    Upsilon^{uv} = (E/D) Upsilon (I - Abar^{-2})^{-1} and
    Upsilonbar^{uv} = (D/E) Upsilonbar (I - A^{-2}).
    """
    conv = {
        (side, system): convert_triplet(trip, "qr", system, D_inf, E_inf)
        for side, trip in (("inside", inside_qr), ("outside", outside_qr))
        for system in ("uv", "ps")
    }
    s = sylvester(inside_qr, outside_qr)
    ins, out = _expanded(inside_qr, "inside"), _expanded(outside_qr, "outside")
    ratio = E_inf / D_inf
    s_ps = SylvesterPair(ratio * s.Upsilon, s.Upsilonbar / ratio)
    if ins.order and out.order:
        Abinv = np.linalg.inv(out.A)
        Ainv = np.linalg.inv(ins.A)
        U_uv = ratio * s.Upsilon @ np.linalg.inv(np.eye(out.order) - Abinv @ Abinv)
        Ub_uv = s.Upsilonbar @ (np.eye(ins.order) - Ainv @ Ainv) / ratio
    else:
        U_uv, Ub_uv = ratio * s.Upsilon, s.Upsilonbar / ratio
    return TransportedTriplets(
        conv[("inside", "uv")],
        conv[("outside", "uv")],
        conv[("inside", "ps")],
        conv[("outside", "ps")],
        s,
        SylvesterPair(U_uv, Ub_uv),
        s_ps,
    )


def U_matrices(inside, outside, t: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """U_n (Nbar x Nbar) and Ubar_n (N x N) at time t."""
    cl = _Closed(inside, outside, t)
    return cl.U(n), cl.Ubar(n)
