"""The three discrete linear systems, their Jost solutions and cumulative data.

Kinds
-----
``qr``
    X_n = [[z, (z - 1/z) q_n], [z r_n, 1/z + (z - 1/z) q_n r_n]], det X_n = 1.
``uv`` and ``ps``
    X_n = [[z, z u_n], [v_n / z, 1/z]], det X_n = 1 - u_n v_n (same form with p, s).

A solution satisfies Psi_n = X_n Psi_{n+1}. Potentials are finitely supported
on [n_min, n_max]; outside that window X_n = diag(z, 1/z) and the Jost
asymptotics hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import chain_apply
from .errors import (
    AdmissibilityViolation,
    InputError,
    SingularTransferMatrix,
    SpectralDomainError,
    ZeroSpectralParameter,
)
from .grid import SpectralGrid, check_aliasing, grid_coefficients

KINDS = ("qr", "uv", "ps")
DEFAULT_PAD = 4
ADMISSIBILITY_TOL = 1e-14
PARITY_FLOOR = 1e-13


def _check_kind(kind: str) -> str:
    if kind not in KINDS:
        raise InputError(f"unknown system kind {kind!r}; expected one of {KINDS}")
    return kind


@dataclass(frozen=True)
class LatticeWindow:
    """Support bounds plus the padding used for asymptotic reads."""

    n_min: int
    n_max: int
    pad: int = DEFAULT_PAD

    def __post_init__(self):
        if self.n_min > self.n_max:
            raise InputError(f"empty window [{self.n_min}, {self.n_max}]")
        if self.pad < 2:
            raise InputError(f"pad must be >= 2, got {self.pad}")

    @property
    def lo(self) -> int:
        return self.n_min - self.pad

    @property
    def hi(self) -> int:
        return self.n_max + self.pad

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)


@dataclass(frozen=True, eq=False)
class PotentialPair:
    """A finitely supported pair of complex sequences on [n_min, n_max].

    ``first`` holds q, u or p and ``second`` holds r, v or s depending on
    ``kind``. Values outside the stored window are exactly zero.
    """

    kind: str
    n_min: int
    first: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        _check_kind(self.kind)
        first = np.atleast_1d(np.asarray(self.first, dtype=np.complex128)).copy()
        second = np.atleast_1d(np.asarray(self.second, dtype=np.complex128)).copy()
        if first.ndim != 1 or first.shape != second.shape or first.size == 0:
            raise InputError("first and second must be 1-D arrays of equal nonzero length")
        if not (np.all(np.isfinite(first)) and np.all(np.isfinite(second))):
            raise InputError("potential values must be finite")
        first.flags.writeable = False
        second.flags.writeable = False
        object.__setattr__(self, "n_min", int(self.n_min))
        object.__setattr__(self, "first", first)
        object.__setattr__(self, "second", second)

    @classmethod
    def zeros(cls, kind: str, n_min: int, n_max: int) -> "PotentialPair":
        size = n_max - n_min + 1
        return cls(kind, n_min, np.zeros(size), np.zeros(size))

    @classmethod
    def from_sites(cls, kind: str, first: dict, second: dict | None = None) -> "PotentialPair":
        """Build a pair from ``{n: value}`` dictionaries."""
        second = second or {}
        keys = list(first) + list(second)
        if not keys:
            return cls.zeros(kind, 0, 0)
        n_min, n_max = min(keys), max(keys)
        a = np.zeros(n_max - n_min + 1, dtype=np.complex128)
        b = np.zeros_like(a)
        for n, val in first.items():
            a[n - n_min] = val
        for n, val in second.items():
            b[n - n_min] = val
        return cls(kind, n_min, a, b)

    @property
    def n_max(self) -> int:
        return self.n_min + self.first.size - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def window(self, pad: int = DEFAULT_PAD) -> LatticeWindow:
        return LatticeWindow(self.n_min, self.n_max, pad)

    def values(self, n) -> tuple[np.ndarray, np.ndarray]:
        """Return (first_n, second_n) at integer sites ``n``, zero outside the window."""
        n = np.asarray(n, dtype=np.int64)
        idx = n - self.n_min
        inside = (idx >= 0) & (idx < self.first.size)
        safe = np.where(inside, idx, 0)
        a = np.where(inside, self.first[safe], 0.0)
        b = np.where(inside, self.second[safe], 0.0)
        return a, b

    def on(self, n_lo: int, n_hi: int) -> "PotentialPair":
        """The same pair stored on [n_lo, n_hi]; values outside that range are dropped."""
        a, b = self.values(np.arange(n_lo, n_hi + 1))
        return PotentialPair(self.kind, n_lo, a, b)

    def trimmed(self, tol: float = 0.0) -> "PotentialPair":
        """Drop leading and trailing sites where both entries are at most ``tol``."""
        mag = np.maximum(np.abs(self.first), np.abs(self.second))
        keep = np.flatnonzero(mag > tol)
        if keep.size == 0:
            return PotentialPair.zeros(self.kind, self.n_min, self.n_min)
        return self.on(self.n_min + int(keep[0]), self.n_min + int(keep[-1]))

    def max_abs_difference(self, other: "PotentialPair") -> float:
        """Largest pointwise deviation over the union of both windows."""
        lo = min(self.n_min, other.n_min)
        hi = max(self.n_max, other.n_max)
        n = np.arange(lo, hi + 1)
        a1, b1 = self.values(n)
        a2, b2 = other.values(n)
        return float(max(np.max(np.abs(a1 - a2)), np.max(np.abs(b1 - b2))))

    def with_kind(self, kind: str) -> "PotentialPair":
        return PotentialPair(kind, self.n_min, self.first, self.second)

    def __repr__(self) -> str:
        return f"PotentialPair(kind={self.kind!r}, n_min={self.n_min}, n_max={self.n_max})"


def admissibility_factors(pair: PotentialPair) -> dict[str, np.ndarray]:
    """Factors that must stay nonzero, evaluated on n_min - 1 .. n_max."""
    n = np.arange(pair.n_min - 1, pair.n_max + 1)
    a, b = pair.values(n)
    if pair.kind == "qr":
        _, b_next = pair.values(n + 1)
        return {"1-qr": 1.0 - a * b, "1+q r_next": 1.0 + a * b_next}
    return {"1-" + pair.kind: 1.0 - a * b}


def check_admissible(pair: PotentialPair, tol: float = ADMISSIBILITY_TOL) -> None:
    """Raise :class:`AdmissibilityViolation` if any factor vanishes."""
    n = np.arange(pair.n_min - 1, pair.n_max + 1)
    for name, vals in admissibility_factors(pair).items():
        bad = np.flatnonzero(np.abs(vals) <= tol)
        if bad.size:
            raise AdmissibilityViolation(f"factor {name} vanishes at n = {int(n[bad[0]])}")


def _entries(kind: str, a, b, z):
    """Entries of X_n; ``a``, ``b`` are column vectors over sites, ``z`` a row vector."""
    zi = 1.0 / z
    if kind == "qr":
        w = z - zi
        m11 = np.broadcast_to(z, np.broadcast_shapes(a.shape, z.shape))
        return m11, w * a, z * b, zi + w * a * b
    shape = np.broadcast_shapes(a.shape, z.shape)
    return np.broadcast_to(z, shape), z * a, b * zi, np.broadcast_to(zi, shape)


def _inverse_entries(kind: str, a, b, z):
    m11, m12, m21, m22 = _entries(kind, a, b, z)
    det = m11 * m22 - m12 * m21
    if kind == "qr":
        return m22, -m12, -m21, m11
    return m22 / det, -m12 / det, -m21 / det, m11 / det


def transfer_matrix(kind: str, pair: PotentialPair, n: int, z: complex) -> np.ndarray:
    """The 2x2 matrix X_n(z) mapping Psi_{n+1} to Psi_n."""
    _check_kind(kind)
    z = complex(z)
    if z == 0:
        raise ZeroSpectralParameter("the spectral parameter must be nonzero")
    a, b = pair.values(np.array([n]))
    m = _entries(kind, a[:, None], b[:, None], np.array([[z]]))
    return np.array([[m[0][0, 0], m[1][0, 0]], [m[2][0, 0], m[3][0, 0]]], dtype=np.complex128)


JOST_MEMBERS = ("psi", "phi", "psibar", "phibar")


@dataclass(frozen=True, eq=False)
class JostFamily:
    """Jost solutions sampled on the sites ``n_lo .. n_hi`` and spectral points ``z``.

    Each member is an array of shape (n_sites, n_z, 2), or None if it was not
    requested. Index ``i`` corresponds to site ``n_lo + i``.
    """

    kind: str
    z: np.ndarray
    n_lo: int
    psi: np.ndarray | None = None
    phi: np.ndarray | None = None
    psibar: np.ndarray | None = None
    phibar: np.ndarray | None = None

    @property
    def n_hi(self) -> int:
        member = next(m for m in (self.psi, self.phi, self.psibar, self.phibar) if m is not None)
        return self.n_lo + member.shape[0] - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)

    def at(self, name: str, n) -> np.ndarray:
        """Member ``name`` at site(s) ``n``."""
        arr = getattr(self, name)
        if arr is None:
            raise InputError(f"Jost member {name!r} was not computed")
        idx = np.asarray(n) - self.n_lo
        if np.any(idx < 0) or np.any(idx >= arr.shape[0]):
            raise InputError(f"site {n} outside the evaluated range [{self.n_lo}, {self.n_hi}]")
        return arr[idx]


def _allowed_members(z: np.ndarray) -> set[str]:
    mod = np.abs(z)
    allowed = set(JOST_MEMBERS)
    if np.any(mod > 1 + 1e-12):
        allowed -= {"psi", "phi"}
    if np.any(mod < 1 - 1e-12):
        allowed -= {"psibar", "phibar"}
    return allowed


def jost_solutions(
    kind: str,
    pair: PotentialPair,
    z,
    pad: int = DEFAULT_PAD,
    members=None,
    backend: str | None = None,
) -> JostFamily:
    """Jost solutions by transfer-matrix recursion.

    psi and psibar are normalized at n -> +infinity and obtained by backward
    recursion from n_max + pad. phi and phibar are normalized at
    n -> -infinity and obtained by forward recursion with X_n^{-1} from
    n_min - pad.

    Parameters
    ----------
    kind : {"qr", "uv", "ps"}
    pair : PotentialPair
    z : complex or array_like
        Nonzero spectral points. Points strictly inside the unit circle only
        admit psi and phi; points strictly outside only psibar and phibar.
    pad : int
        Extra sites on each side of the support.
    members : iterable of str, optional
        Subset of ("psi", "phi", "psibar", "phibar"). Defaults to every
        member allowed by the location of ``z``.
    """
    _check_kind(kind)
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel()
    if np.any(z == 0):
        raise ZeroSpectralParameter("the spectral parameter must be nonzero")
    allowed = _allowed_members(z)
    if members is None:
        members = [m for m in JOST_MEMBERS if m in allowed]
    members = list(members)
    for m in members:
        if m not in JOST_MEMBERS:
            raise InputError(f"unknown Jost member {m!r}")
        if m not in allowed:
            raise SpectralDomainError(f"{m} has no analytic extension to the requested z")
    win = pair.window(pad)
    lo, hi = win.lo, win.hi
    n = np.arange(lo, hi)  # matrices X_lo .. X_{hi-1}
    a, b = pair.values(n)
    zrow = z[None, :]
    out = {}
    if {"psi", "psibar"} & set(members):
        m = _entries(kind, a[:, None], b[:, None], zrow)
        if "psi" in members:
            seed = np.stack([np.zeros_like(z), z**hi], axis=-1)
            out["psi"] = chain_apply(*m, seed, backward=True, backend=backend)
        if "psibar" in members:
            seed = np.stack([z ** (-hi), np.zeros_like(z)], axis=-1)
            out["psibar"] = chain_apply(*m, seed, backward=True, backend=backend)
    if {"phi", "phibar"} & set(members):
        if kind != "qr":
            det = 1.0 - a * b
            bad = np.flatnonzero(np.abs(det) <= ADMISSIBILITY_TOL)
            if bad.size:
                raise SingularTransferMatrix(f"X_n is singular at n = {int(n[bad[0]])}")
        m = _inverse_entries(kind, a[:, None], b[:, None], zrow)
        if "phi" in members:
            seed = np.stack([z ** (-lo), np.zeros_like(z)], axis=-1)
            out["phi"] = chain_apply(*m, seed, backward=False, backend=backend)
        if "phibar" in members:
            seed = np.stack([np.zeros_like(z), z**lo], axis=-1)
            out["phibar"] = chain_apply(*m, seed, backward=False, backend=backend)
    return JostFamily(kind=kind, z=z, n_lo=lo, **out)


@dataclass(frozen=True, eq=False)
class CumulativeData:
    """Running products and sums of the potentials.

    Arrays are stored for n = n_start .. n_max, with n_start = n_min - 1.
    For n < n_start the products equal 1 and the sums vanish; for n > n_max
    every quantity equals its limit. E_n, S_n and Q_n are only populated for
    kind ``qr``.
    """

    kind: str
    n_start: int
    D: np.ndarray
    E: np.ndarray | None = None
    S: np.ndarray | None = None
    Q: np.ndarray | None = None
    extras: dict = field(default_factory=dict)

    @property
    def n_end(self) -> int:
        return self.n_start + self.D.size - 1

    def _lookup(self, arr, n, before):
        n = np.asarray(n, dtype=np.int64)
        idx = np.clip(n - self.n_start, 0, arr.size - 1)
        return np.where(n < self.n_start, before, arr[idx])

    def D_at(self, n):
        return self._lookup(self.D, n, 1.0)

    def E_at(self, n):
        return self._lookup(self.E, n, 1.0)

    def S_at(self, n):
        return self._lookup(self.S, n, 0.0)

    def Q_at(self, n):
        return self._lookup(self.Q, n, 0.0)

    @property
    def D_inf(self) -> complex:
        return complex(self.D[-1])

    @property
    def E_inf(self) -> complex:
        return complex(self.E[-1]) if self.E is not None else 1.0 + 0j

    @property
    def S_inf(self) -> complex:
        return complex(self.S[-1]) if self.S is not None else 0j

    @property
    def Q_inf(self) -> complex:
        return complex(self.Q[-1]) if self.Q is not None else 0j


def cumulative_data(pair: PotentialPair) -> CumulativeData:
    """Products D_n, E_n and sums S_n, Q_n of a potential pair."""
    check_admissible(pair)
    n = np.arange(pair.n_min - 1, pair.n_max + 1)
    a, b = pair.values(n)
    D = np.cumprod(1.0 - a * b)
    if pair.kind != "qr":
        return CumulativeData(kind=pair.kind, n_start=int(n[0]), D=D)
    a1, b1 = pair.values(n + 1)
    _, b2 = pair.values(n + 2)
    E = np.cumprod(1.0 + a * b1)
    core = a - a1 - a * a1 * b1
    S = np.cumsum(b * core / ((1.0 - a * b) * (1.0 - a1 * b1)))
    Q = np.cumsum(b2 * core / ((1.0 + a * b1) * (1.0 + a1 * b2)))
    return CumulativeData(kind="qr", n_start=int(n[0]), D=D, E=E, S=S, Q=Q)


@dataclass(frozen=True, eq=False)
class SeriesTables:
    """Coefficients of psi_n = sum_l K_{nl} z^l and psibar_n = sum_l Kbar_{nl} z^{-l}.

    ``K[i, j]`` is the 2-vector K_{n, l} with n = n_values[i], l = l_values[j].
    """

    kind: str
    n_values: np.ndarray
    l_values: np.ndarray
    K: np.ndarray
    Kbar: np.ndarray


def series_coefficients(
    kind: str,
    pair: PotentialPair,
    grid: SpectralGrid,
    n_range: tuple[int, int],
    l_range: tuple[int, int],
    pad: int = DEFAULT_PAD,
) -> SeriesTables:
    """Grid Fourier coefficients of psi_n and psibar_n.

    K_{nl} = (1/M) sum_m psi_n(z_m) z_m^{-l} and
    Kbar_{nl} = (1/M) sum_m psibar_n(z_m) z_m^{l}. Entries with n + l odd are
    zero in exact arithmetic and are set to exact zero when below roundoff.
    """
    n_lo, n_hi = n_range
    l_lo, l_hi = l_range
    if 2 * (l_hi - l_lo + 1) > grid.M:
        from .errors import GridTooCoarse

        raise GridTooCoarse(f"l range of {l_hi - l_lo + 1} values needs M >= {2 * (l_hi - l_lo + 1)}")
    win_lo = min(pair.n_min, n_lo) - pad
    win_hi = max(pair.n_max, n_hi) + pad
    work = pair.on(win_lo + pad, win_hi - pad)
    fam = jost_solutions(kind, work, grid.z, pad=pad, members=("psi", "psibar"))
    n_values = np.arange(n_lo, n_hi + 1)
    l_values = np.arange(l_lo, l_hi + 1)
    psi = np.moveaxis(fam.at("psi", n_values), 1, 2)  # (n, comp, z)
    psibar = np.moveaxis(fam.at("psibar", n_values), 1, 2)
    # psi_n carries powers n .. 2 * hi - n; psibar_n powers -(2 * hi - n) .. -n
    span_top = 2 * fam.n_hi
    for i, n in enumerate(n_values):
        check_aliasing(psi[i], -1, (int(n), span_top - int(n)))
        check_aliasing(psibar[i], +1, (int(n), span_top - int(n)))
    K = np.moveaxis(grid_coefficients(psi, l_values, sign=-1), 1, 2)
    Kbar = np.moveaxis(grid_coefficients(psibar, l_values, sign=+1), 1, 2)
    odd = ((n_values[:, None] + l_values[None, :]) % 2).astype(bool)
    for tab in (K, Kbar):
        small = odd[..., None] & (np.abs(tab) < PARITY_FLOOR)
        tab[small] = 0.0
    return SeriesTables(kind=kind, n_values=n_values, l_values=l_values, K=K, Kbar=Kbar)
