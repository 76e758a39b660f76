"""Bound states encoded as matrix triplets (A, B, C).

A block with eigenvalue z_j and size m_j has A_j = z_j I + N (ones on the
first superdiagonal), B_j = e_{m_j} and C_j = [c_{m_j-1}, ..., c_0]. Each
block stands for the pair of poles +-z_j. Its kernel contribution is
C A^{k-1} B for even k and zero for odd k (inside), or C Abar^{-k-1} B for
even k (outside).

For closed-form formulas the pair is expanded into an explicit matrix triplet
with blocks at z_j and -z_j, each carrying half of the norming row; the row at
-z_j is C_j diag((-1)^{m_j}, ..., (-1)^1).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.linalg import expm
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InputError, MissingOrder, MultiplePoleDetected, NoConvergence
from .grid import SpectralGrid
from .lattice import PotentialPair, check_admissible, jost_solutions

SIDES = ("inside", "outside")


@dataclass(frozen=True, eq=False)
class TripletBlock:
    """One Jordan block: eigenvalue ``z`` and norming row ``C = [c_{m-1}, ..., c_0]``."""

    z: complex
    C: np.ndarray

    def __post_init__(self):
        C = np.atleast_1d(np.asarray(self.C, dtype=np.complex128)).copy()
        if C.ndim != 1 or C.size == 0:
            raise InputError("a block needs a nonempty 1-D norming row")
        C.flags.writeable = False
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "z", complex(self.z))

    @property
    def m(self) -> int:
        return self.C.size


def jordan_block(z: complex, m: int) -> np.ndarray:
    return complex(z) * np.eye(m, dtype=np.complex128) + np.eye(m, k=1, dtype=np.complex128)


def sign_pattern(m: int) -> np.ndarray:
    """Diagonal of diag((-1)^m, ..., (-1)^1) relating rows at -z_j and z_j."""
    return (-1.0) ** (m - np.arange(m))


@dataclass(frozen=True, eq=False)
class MatrixTriplet:
    """A literal triplet of matrices, used as given by closed-form formulas."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    side: str = "inside"
    sizes: tuple | None = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.complex128)
        A = A.reshape(0, 0) if A.size == 0 else np.atleast_2d(A)
        B = np.asarray(self.B, dtype=np.complex128).reshape(A.shape[0], 1)
        C = np.asarray(self.C, dtype=np.complex128).reshape(1, A.shape[0])
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        if self.side not in SIDES:
            raise InputError(f"side must be one of {SIDES}")

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def matrices(self) -> "MatrixTriplet":
        return self

    def with_C(self, C) -> "MatrixTriplet":
        return MatrixTriplet(self.A, self.B, C, self.side, self.sizes)


@dataclass(frozen=True, eq=False)
class BoundStateTriplet:
    """Bound states on one side of the unit circle, one block per +-z_j pair."""

    side: str
    blocks: tuple = ()

    def __post_init__(self):
        if self.side not in SIDES:
            raise InputError(f"side must be one of {SIDES}, got {self.side!r}")
        blocks = tuple(b if isinstance(b, TripletBlock) else TripletBlock(*b) for b in self.blocks)
        for b in blocks:
            r = abs(b.z)
            if self.side == "inside" and not (0 < r < 1):
                raise InputError(f"inside eigenvalue {b.z} must satisfy 0 < |z| < 1")
            if self.side == "outside" and not (r > 1):
                raise InputError(f"outside eigenvalue {b.z} must satisfy |z| > 1")
        for i, b in enumerate(blocks):
            for c in blocks[i + 1 :]:
                if abs(b.z - c.z) < 1e-12 or abs(b.z + c.z) < 1e-12:
                    raise InputError(f"eigenvalues {b.z} and {c.z} coincide up to sign")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def empty(cls, side: str) -> "BoundStateTriplet":
        return cls(side, ())

    @classmethod
    def simple(cls, side: str, zs, cs) -> "BoundStateTriplet":
        return cls(side, tuple(TripletBlock(z, [c]) for z, c in zip(zs, cs)))

    @property
    def order(self) -> int:
        return sum(b.m for b in self.blocks)

    @property
    def is_empty(self) -> bool:
        return not self.blocks

    @property
    def A(self) -> np.ndarray:
        return _block_diag([jordan_block(b.z, b.m) for b in self.blocks])

    @property
    def B(self) -> np.ndarray:
        cols = [np.eye(b.m, dtype=np.complex128)[:, -1:] for b in self.blocks]
        return np.vstack(cols) if cols else np.zeros((0, 1), dtype=np.complex128)

    @property
    def C(self) -> np.ndarray:
        rows = [b.C for b in self.blocks]
        return np.concatenate(rows)[None, :] if rows else np.zeros((1, 0), dtype=np.complex128)

    def matrices(self) -> MatrixTriplet:
        """The assembled (A, B, C) of the +z_j representatives."""
        return MatrixTriplet(self.A, self.B, self.C, self.side, tuple(b.m for b in self.blocks))

    def expanded(self) -> MatrixTriplet:
        """Explicit triplet with blocks at z_j and -z_j, each with half the norming row."""
        mats, cols, rows = [], [], []
        for b in self.blocks:
            for sign, row in ((1.0, b.C), (-1.0, b.C * sign_pattern(b.m))):
                mats.append(jordan_block(sign * b.z, b.m))
                cols.append(np.eye(b.m, dtype=np.complex128)[:, -1:])
                rows.append(0.5 * row)
        if not mats:
            return MatrixTriplet(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), self.side, ())
        sizes = tuple(m.shape[0] for m in mats)
        return MatrixTriplet(_block_diag(mats), np.vstack(cols), np.concatenate(rows)[None, :], self.side, sizes)

    def with_rows(self, rows) -> "BoundStateTriplet":
        """Same eigenvalues with new norming rows (one per block)."""
        return BoundStateTriplet(self.side, tuple(TripletBlock(b.z, r) for b, r in zip(self.blocks, rows)))

    def map_rows(self, fn) -> "BoundStateTriplet":
        """Apply ``fn(block) -> new row`` to every block."""
        return self.with_rows([fn(b) for b in self.blocks])


def _block_diag(mats) -> np.ndarray:
    size = sum(m.shape[0] for m in mats)
    out = np.zeros((size, size), dtype=np.complex128)
    i = 0
    for m in mats:
        k = m.shape[0]
        out[i : i + k, i : i + k] = m
        i += k
    return out


def block_exponential(J: np.ndarray, c: complex) -> np.ndarray:
    """exp(c (J - J^{-1})^2) for one Jordan block J, by the finite nilpotent Taylor series."""
    m = J.shape[0]
    X = J - np.linalg.inv(J)
    X = X @ X
    w = X[0, 0]
    N = c * (X - w * np.eye(m))
    out = np.eye(m, dtype=np.complex128)
    term = np.eye(m, dtype=np.complex128)
    for k in range(1, m):
        term = term @ N / k
        out = out + term
    return np.exp(c * w) * out


def evolution_matrix(triplet, t: float) -> np.ndarray:
    """exp(-i t (A - A^{-1})^2) inside, exp(+i t (Abar - Abar^{-1})^2) outside, blockwise."""
    mt = triplet.matrices()
    c = -1j * t if mt.side == "inside" else 1j * t
    if mt.sizes is None:
        # decoupled diagonal blocks are exponentiated separately; expm on the
        # whole matrix loses accuracy when the blocks differ widely in scale
        out = np.zeros((mt.order, mt.order), dtype=np.complex128)
        for idx in _components(mt.A):
            sub = mt.A[np.ix_(idx, idx)]
            X = sub - np.linalg.inv(sub)
            out[np.ix_(idx, idx)] = expm(c * X @ X)
        return out
    out = np.zeros((mt.order, mt.order), dtype=np.complex128)
    i = 0
    for k in mt.sizes:
        out[i : i + k, i : i + k] = block_exponential(mt.A[i : i + k, i : i + k], c)
        i += k
    return out


def _components(A: np.ndarray) -> list[np.ndarray]:
    """Index sets of the connected components of the sparsity pattern of A."""
    _, labels = connected_components(csr_matrix(A != 0), directed=False)
    return [np.flatnonzero(labels == lab) for lab in np.unique(labels)]


def evolve_triplet(triplet, t: float):
    """Norming rows after time t: C -> C E(t) blockwise; A and B unchanged."""
    if triplet is None or t == 0:
        return triplet
    if isinstance(triplet, BoundStateTriplet):
        c = -1j * t if triplet.side == "inside" else 1j * t
        return triplet.map_rows(lambda b: b.C @ block_exponential(jordan_block(b.z, b.m), c))
    return triplet.with_C(triplet.C @ evolution_matrix(triplet, t))


def as_matrix_triplet(triplet) -> MatrixTriplet | None:
    """Expanded matrices of a block triplet; literal triplets pass through."""
    if triplet is None:
        return None
    if isinstance(triplet, BoundStateTriplet):
        return triplet.expanded()
    return triplet


def matrix_power(A: np.ndarray, p: int, inverse: np.ndarray | None = None) -> np.ndarray:
    """A**p by repeated multiplication; negative ``p`` uses the inverse."""
    if p < 0:
        base = inverse if inverse is not None else np.linalg.inv(A)
        p = -p
    else:
        base = A
    out = np.eye(A.shape[0], dtype=np.complex128)
    for _ in range(p):
        out = out @ base
    return out


def kernel_contribution(triplet, k: int) -> complex:
    """Bound-state part of the Marchenko kernel at index ``k``.

    Inside: C A^{k-1} B. Outside: C Abar^{-k-1} B. For a block triplet the
    value is zero at odd k.
    """
    if triplet is None:
        return 0j
    if isinstance(triplet, BoundStateTriplet):
        if k % 2:
            return 0j
        if triplet.is_empty:
            return 0j
    mt = triplet.matrices()
    if mt.order == 0:
        return 0j
    p = k - 1 if mt.side == "inside" else -k - 1
    return complex((mt.C @ matrix_power(mt.A, p) @ mt.B)[0, 0])


def kernel_contributions(triplet, k_values) -> np.ndarray:
    """:func:`kernel_contribution` over an increasing range of integers ``k_values``."""
    k_values = np.asarray(k_values, dtype=np.int64)
    out = np.zeros(k_values.size, dtype=np.complex128)
    if triplet is None:
        return out
    mt = triplet.matrices()
    if mt.order == 0:
        return out
    even_only = isinstance(triplet, BoundStateTriplet)
    inverse = np.linalg.inv(mt.A)
    step_inside = mt.side == "inside"
    for i, k in enumerate(k_values):
        if even_only and k % 2:
            continue
        p = k - 1 if step_inside else -k - 1
        out[i] = (mt.C @ matrix_power(mt.A, p, inverse) @ mt.B)[0, 0]
    return out


@dataclass(frozen=True)
class BoundStateRaw:
    """Residues t_1..t_m of the transmission coefficient and dependency constants gamma_0..gamma_{m-1}."""

    z: complex
    t: tuple
    gamma: tuple

    @property
    def m(self) -> int:
        return len(self.t)


def norming_row(raw: BoundStateRaw, side: str) -> np.ndarray:
    """Norming row [c_{m-1}, ..., c_0] of one pole.

    c_k = -2 sum_{l=0}^{m-1-k} t_{k+1+l} gamma_l / l! inside the circle, with
    +2 instead of -2 outside.
    """
    m = raw.m
    if len(raw.gamma) != m:
        raise InputError("need as many dependency constants as residues")
    if abs(raw.t[-1]) == 0:
        raise MissingOrder(f"leading residue vanishes at z = {raw.z}")
    sign = -2.0 if side == "inside" else 2.0
    c = np.zeros(m, dtype=np.complex128)
    for k in range(m):
        c[k] = sign * sum(raw.t[k + l] * raw.gamma[l] / factorial(l) for l in range(m - k))
    return c[::-1]


def norming_constants(raws, side: str) -> BoundStateTriplet:
    """Triplet assembled from residues and dependency constants of each pole."""
    return BoundStateTriplet(side, tuple(TripletBlock(r.z, norming_row(r, side)) for r in raws))


# --- conversion between systems -------------------------------------------------


def _factor(block: TripletBlock, side: str, system: str, D: complex, E: complex) -> np.ndarray:
    """Right factor F with C^{system} = C^{qr} F for one block."""
    m = block.m
    eye = np.eye(m, dtype=np.complex128)
    if system == "qr":
        return eye
    ratio = D / E if side == "inside" else E / D
    if system == "ps":
        return ratio * eye
    Ainv2 = matrix_power(jordan_block(block.z, m), -2)
    if side == "inside":
        return ratio * (eye - Ainv2)
    return ratio * np.linalg.inv(eye - Ainv2)


def convert_triplet(triplet, source: str, target: str, D_inf: complex, E_inf: complex):
    """Convert norming rows between the qr, uv and ps systems.

    A and B are unchanged. Inside the circle C^{ps} = (D/E) C^{qr} and
    C^{uv} = (D/E) C^{qr} (I - A^{-2}); outside Cbar^{ps} = (E/D) Cbar^{qr} and
    Cbar^{uv} = (E/D) Cbar^{qr} (I - Abar^{-2})^{-1}. D and E are the qr
    constants.
    """
    if triplet is None:
        return None
    for s in (source, target):
        if s not in ("qr", "uv", "ps"):
            raise InputError(f"unknown system {s!r}")
    if source == target:
        return triplet
    side = triplet.side

    def row(b: TripletBlock):
        F_src = _factor(b, side, source, D_inf, E_inf)
        F_dst = _factor(b, side, target, D_inf, E_inf)
        return b.C @ np.linalg.solve(F_src, F_dst)

    if isinstance(triplet, BoundStateTriplet):
        return triplet.map_rows(row)
    raise InputError("convert_triplet expects a BoundStateTriplet")


# --- simple-pole finder -------------------------------------------------------------


@dataclass(frozen=True)
class SimplePole:
    """A simple pole z of the transmission coefficient with residue t and dependency constant gamma."""

    z: complex
    t: complex
    gamma: complex

    def raw(self) -> BoundStateRaw:
        return BoundStateRaw(self.z, (self.t,), (self.gamma,))


def _polynomial(values: np.ndarray, grid: SpectralGrid, inverse: bool) -> np.ndarray:
    """Coefficients alpha_j of values(z) = sum_j alpha_j w^j, w = z^2 (or z^-2)."""
    M = grid.M
    sign = 1 if not inverse else -1
    # coefficient of z^{2j} (or z^{-2j})
    from .grid import grid_coefficients

    j = np.arange(0, M // 4)
    coeffs = grid_coefficients(values, -sign * 2 * j, sign=1)
    mag = np.abs(coeffs)
    keep = np.flatnonzero(mag > 1e-15 * max(1.0, mag.max()))
    top = int(keep[-1]) if keep.size else 0
    return coeffs[: top + 1]


def _polynomial_derivative(coeffs: np.ndarray, z: complex, inverse: bool) -> complex:
    """d/dz of sum_j alpha_j z^{2j} (or z^{-2j})."""
    j = np.arange(coeffs.size)
    if inverse:
        return complex(np.sum(coeffs * (-2 * j) * z ** (-2 * j - 1.0)))
    return complex(np.sum(coeffs[1:] * (2 * j[1:]) * z ** (2 * j[1:] - 1.0)))


def _winding(values: np.ndarray) -> int:
    ang = np.unwrap(np.angle(np.append(values, values[0])))
    return int(round((ang[-1] - ang[0]) / (2 * np.pi)))


def _wronskian(pair, z, outside: bool):
    """a(z) = det[phi psi] inside, b(z) = det[psibar phibar] outside, with their Jost values."""
    members = ("psibar", "phibar") if outside else ("phi", "psi")
    fam = jost_solutions("qr", pair, np.atleast_1d(z), members=members)
    if outside:
        u, v = fam.psibar, fam.phibar
    else:
        u, v = fam.phi, fam.psi
    det = u[:, :, 0] * v[:, :, 1] - u[:, :, 1] * v[:, :, 0]
    return det[0], fam


def _newton(pair, z0, outside, tol=1e-12, max_iter=100, h=1e-6):
    z = complex(z0)
    for _ in range(max_iter):
        f = _wronskian(pair, z, outside)[0][0]
        fp = (_wronskian(pair, z + h, outside)[0][0] - _wronskian(pair, z - h, outside)[0][0]) / (2 * h)
        if fp == 0:
            raise NoConvergence(f"zero derivative during Newton iteration at {z}")
        step = f / fp
        z -= step
        if abs(step) < tol * max(1.0, abs(z)):
            return z
    raise NoConvergence(f"Newton iteration from {z0} did not converge")


def _canonical(z: complex) -> complex:
    if z.imag < -1e-14 or (abs(z.imag) <= 1e-14 and z.real < 0):
        return -z
    return z


def find_simple_poles(
    pair: PotentialPair,
    grid: SpectralGrid | None = None,
    derivative_threshold: float = 1e-6,
) -> tuple[list[SimplePole], list[SimplePole]]:
    """Simple poles of T inside and of Tbar outside the unit circle.

    a(z) = det[phi_n psi_n] = 1/T is an even polynomial in z for compactly
    supported potentials (and b(z) = 1/Tbar an even polynomial in 1/z). Its
    roots are taken from the companion matrix of the grid Taylor coefficients,
    polished by Newton iteration on the Wronskian itself and checked against
    the winding number of a on the unit circle.

    Returns
    -------
    (inside, outside) : lists of SimplePole
        One representative per +-z pair (Im z >= 0, ties broken by Re z > 0).
    """
    if pair.kind != "qr":
        raise InputError("the pole finder works on qr pairs")
    check_admissible(pair)
    grid = grid or SpectralGrid(max(256, 1 << int(np.ceil(np.log2(8 * (pair.n_max - pair.n_min + 20))))))
    results = []
    for outside in (False, True):
        values = _wronskian(pair, grid.z, outside)[0]
        coeffs = _polynomial(values, grid, inverse=outside)
        winding = _winding(values)
        expected = abs(winding) // 2
        roots_w = np.roots(coeffs[::-1]) if coeffs.size > 1 else np.array([])
        roots_w = roots_w[np.abs(roots_w) < 1.0 - 1e-9]
        # a multiple root splits into a cluster of size about eps^(1/m)
        gaps = np.abs(roots_w[:, None] - roots_w[None, :]) + np.eye(roots_w.size)
        if roots_w.size > 1 and gaps.min() < 1e-4:
            raise MultiplePoleDetected(f"clustered roots near w = {roots_w[np.argmin(gaps.min(axis=1))]}")
        poles = []
        for w in roots_w:
            z0 = np.sqrt(complex(w))
            z0 = 1.0 / z0 if outside else z0
            z = _canonical(_newton(pair, z0, outside))
            if any(abs(z - p.z) < 1e-8 for p in poles):
                continue
            fp = _polynomial_derivative(coeffs, z, outside)
            if abs(fp) < derivative_threshold:
                raise MultiplePoleDetected(f"|a'(z)| = {abs(fp):.2e} at z = {z}")
            poles.append(SimplePole(z=z, t=1.0 / fp, gamma=_dependency(pair, z, outside)))
        if len(poles) != expected:
            raise NoConvergence(
                f"found {len(poles)} {'outside' if outside else 'inside'} pole pairs, winding number implies {expected}"
            )
        poles.sort(key=lambda p: (abs(p.z), np.angle(p.z)))
        results.append(poles)
    return results[0], results[1]


def _dependency(pair, z, outside):
    """gamma with phi = gamma psi (inside) or phibar = gamma psibar (outside) at z."""
    _, fam = _wronskian(pair, z, outside)
    if outside:
        num, den = fam.phibar[:, 0, :], fam.psibar[:, 0, :]
    else:
        num, den = fam.phi[:, 0, :], fam.psi[:, 0, :]
    n_ref = int(np.argmax(np.sum(np.abs(den) ** 2, axis=1)))
    d = den[n_ref]
    return complex(np.vdot(d, num[n_ref]) / np.vdot(d, d))


def triplets_from_potential(pair: PotentialPair, grid: SpectralGrid | None = None):
    """Inside and outside triplets of simple bound states of a qr pair."""
    inside, outside = find_simple_poles(pair, grid)
    return (
        norming_constants([p.raw() for p in inside], "inside"),
        norming_constants([p.raw() for p in outside], "outside"),
    )
