"""Maps among the (q, r), (u, v) and (p, s) systems.

The forward maps are

    u_n = q_n E_{n-1} / D_n
    v_n = (-r_n + r_{n+1} - q_n r_n r_{n+1}) D_{n-1} / E_n
    p_n = (q_n - q_{n+1} - q_n q_{n+1} r_{n+1}) E_{n-1} / D_{n+1}
    s_n = r_{n+1} D_n / E_n

with D_n, E_n the running products of 1 - q_j r_j and 1 + q_j r_{j+1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, DivisionByZeroFactor, InputError, SingularFactor
from .lattice import (
    CumulativeData,
    JostFamily,
    PotentialPair,
    check_admissible,
    cumulative_data,
)

SINGULAR_Z_TOL = 1e-12


def _require_qr(pair: PotentialPair) -> None:
    if pair.kind != "qr":
        raise InputError(f"expected a qr pair, got kind {pair.kind!r}")


def qr_to_uv(pair: PotentialPair) -> PotentialPair:
    """The (u, v) pair attached to a (q, r) pair; the window grows by one site on the left."""
    _require_qr(pair)
    check_admissible(pair)
    cum = cumulative_data(pair)
    n = np.arange(pair.n_min - 1, pair.n_max + 1)
    q, r = pair.values(n)
    _, r1 = pair.values(n + 1)
    u = q * cum.E_at(n - 1) / cum.D_at(n)
    v = (-r + r1 - q * r * r1) * cum.D_at(n - 1) / cum.E_at(n)
    return PotentialPair("uv", int(n[0]), u, v)


def qr_to_ps(pair: PotentialPair) -> PotentialPair:
    """The (p, s) pair attached to a (q, r) pair; the window grows by one site on the left."""
    _require_qr(pair)
    check_admissible(pair)
    cum = cumulative_data(pair)
    n = np.arange(pair.n_min - 1, pair.n_max + 1)
    q, r = pair.values(n)
    q1, r1 = pair.values(n + 1)
    p = (q - q1 - q * q1 * r1) * cum.E_at(n - 1) / cum.D_at(n + 1)
    s = r1 * cum.D_at(n) / cum.E_at(n)
    return PotentialPair("ps", int(n[0]), p, s)


def _as_sequence(obj, component: str, n_min: int | None):
    if isinstance(obj, PotentialPair):
        return obj.n_min, getattr(obj, component)
    arr = np.atleast_1d(np.asarray(obj, dtype=np.complex128))
    return (0 if n_min is None else int(n_min)), arr


def _us_window(u, s, n_min):
    u_lo, u_vals = _as_sequence(u, "first", n_min)
    s_lo, s_vals = _as_sequence(s, "second", n_min)
    lo = min(u_lo, s_lo)
    hi = max(u_lo + u_vals.size - 1, s_lo + s_vals.size - 1) + 1
    n = np.arange(lo - 1, hi + 2)

    def take(start, vals, m):
        idx = m - start
        ok = (idx >= 0) & (idx < vals.size)
        return np.where(ok, vals[np.where(ok, idx, 0)], 0.0)

    return n, (lambda m: take(u_lo, u_vals, m)), (lambda m: take(s_lo, s_vals, m))


@dataclass(frozen=True)
class ProductsFromUS:
    """D_n and E_n of the (q, r) pair recovered from u and s."""

    n: np.ndarray
    D: np.ndarray
    E: np.ndarray


def products_from_us(u, s, n_min: int | None = None) -> ProductsFromUS:
    """Running products D_n = 1 / prod_{k<n} (1 + u_{k+1} s_k) and E_n = 1 / prod_{k<=n} (1 - u_k s_k)."""
    n, U, S = _us_window(u, s, n_min)
    f_minus = 1.0 - U(n) * S(n)
    f_plus = 1.0 + U(n + 1) * S(n)
    if np.any(np.abs(f_minus) < 1e-14) or np.any(np.abs(f_plus) < 1e-14):
        raise DivisionByZeroFactor("a factor 1 - u_k s_k or 1 + u_{k+1} s_k vanishes")
    # D_n uses factors with k <= n - 1
    D = 1.0 / np.concatenate([[1.0], np.cumprod(f_plus)[:-1]])
    E = 1.0 / np.cumprod(f_minus)
    return ProductsFromUS(n=n, D=D, E=E)


def us_to_qr(u, s, n_min: int | None = None) -> PotentialPair:
    """Recover (q, r) from u (of the uv pair) and s (of the ps pair).

    ``u`` and ``s`` may be PotentialPair objects (their ``first`` and
    ``second`` components are used) or arrays starting at ``n_min``.
    """
    n, U, S = _us_window(u, s, n_min)
    f_minus = 1.0 - U(n) * S(n)
    f_plus = 1.0 + U(n + 1) * S(n)
    g_plus = 1.0 + U(n) * S(n - 1)
    if np.any(np.abs(f_minus) < 1e-14) or np.any(np.abs(f_plus) < 1e-14):
        raise DivisionByZeroFactor("a factor 1 - u_k s_k or 1 + u_{k+1} s_k vanishes")
    ratio_q = np.concatenate([[1.0], np.cumprod(f_minus / f_plus)[:-1]])
    ratio_r = np.concatenate([[1.0], np.cumprod(g_plus / f_minus)[:-1]])
    q = U(n) * ratio_q
    r = S(n - 1) * ratio_r
    return PotentialPair("qr", int(n[0]), q, r).trimmed()


def _sigma(z):
    z = np.asarray(z, dtype=np.complex128)
    w = 1.0 - 1.0 / z**2
    if np.any(np.abs(w) < SINGULAR_Z_TOL):
        raise SingularFactor("the factor 1/(1 - 1/z^2) is singular at z = +-1")
    return 1.0 / w


def _gamma(pair, cum, n, z, system):
    """Per-site 2x2 multipliers taking the partner system's Jost values to qr values."""
    q, r = pair.values(n)
    E1 = cum.E_at(n - 1)[:, None]
    D1 = cum.D_at(n - 1)[:, None]
    D0 = cum.D_at(n)[:, None]
    zz = np.asarray(z)[None, :]
    shape = (n.size, zz.shape[1])
    if system == "uv":
        g11 = np.broadcast_to((1.0 - 1.0 / zz**2) / E1, shape)
        g12 = np.zeros(shape, dtype=np.complex128)
    else:
        g11 = np.broadcast_to(1.0 / E1, shape)
        g12 = np.broadcast_to(-q[:, None] / D0, shape)
    g21 = np.broadcast_to(r[:, None] / E1, shape)
    g22 = np.broadcast_to(1.0 / D1, shape)
    return g11, g12, g21, g22


def _apply(mats, vec, inverse=False):
    g11, g12, g21, g22 = mats
    if inverse:
        det = g11 * g22 - g12 * g21
        g11, g12, g21, g22 = g22 / det, -g12 / det, -g21 / det, g11 / det
    out = np.empty_like(vec)
    out[..., 0] = g11 * vec[..., 0] + g12 * vec[..., 1]
    out[..., 1] = g21 * vec[..., 0] + g22 * vec[..., 1]
    return out


DIRECTIONS = ("uv->qr", "ps->qr", "qr->uv", "qr->ps")


def relate_jost(direction: str, jost: JostFamily, cumulative: CumulativeData, pair: PotentialPair) -> JostFamily:
    """Map a Jost family between the qr system and the uv or ps system.

    Parameters
    ----------
    direction : {"uv->qr", "ps->qr", "qr->uv", "qr->ps"}
    jost : JostFamily
        Family of the source system.
    cumulative : CumulativeData
        Cumulative data of the qr pair.
    pair : PotentialPair
        The qr pair.
    """
    if direction not in DIRECTIONS:
        raise InputError(f"direction must be one of {DIRECTIONS}")
    _require_qr(pair)
    src, dst = direction.split("->")
    system = "uv" if "uv" in (src, dst) else "ps"
    if jost.kind != src:
        raise InputError(f"family kind {jost.kind!r} does not match direction {direction!r}")
    n = jost.sites
    z = jost.z
    mats = _gamma(pair, cumulative, n, z, system)
    D, E = cumulative.D_inf, cumulative.E_inf
    if system == "uv":
        sig = _sigma(z)[None, :]
        scale = {"psi": D, "phi": sig, "psibar": E * sig, "phibar": 1.0}
    else:
        scale = {"psi": D, "phi": 1.0, "psibar": E, "phibar": 1.0}
    to_qr = dst == "qr"
    out = {}
    for name in ("psi", "phi", "psibar", "phibar"):
        vec = getattr(jost, name)
        if vec is None:
            continue
        c = np.asarray(scale[name])
        c = c[..., None] if c.ndim else c
        if to_qr:
            out[name] = c * _apply(mats, vec)
        else:
            out[name] = _apply(mats, vec / c, inverse=True)
    return JostFamily(kind=dst, z=z, n_lo=jost.n_lo, **out)


def relate_scattering(data_qr):
    """Predict the uv and ps scattering data from qr scattering data.

    Returns
    -------
    (ScatteringData, ScatteringData)
        Predictions for the uv and ps pairs obtained by :func:`qr_to_uv` and
        :func:`qr_to_ps`. Bound-state triplets are converted as well.
    """
    from .boundstates import convert_triplet

    if data_qr.kind != "qr":
        raise InputError("relate_scattering expects qr data")
    D, E = data_qr.D_inf, data_qr.E_inf
    z = data_qr.grid.z
    w = 1.0 - 1.0 / z**2
    T, Tb = data_qr.T_r, data_qr.Tbar_r
    common = dict(T_l=D * T, T_r=T / E, Tbar_l=E * Tb, Tbar_r=Tb / D)
    uv = data_qr.replace(
        kind="uv",
        R=w * (D / E) * data_qr.R,
        Rbar=(E / D) * data_qr.Rbar / w,
        L=data_qr.L / w,
        Lbar=w * data_qr.Lbar,
        D_inf=1.0 / (D * E),
        E_inf=None,
        inside=convert_triplet(data_qr.inside, "qr", "uv", D, E),
        outside=convert_triplet(data_qr.outside, "qr", "uv", D, E),
        extras={},
        **common,
    )
    ps = data_qr.replace(
        kind="ps",
        R=(D / E) * data_qr.R,
        Rbar=(E / D) * data_qr.Rbar,
        L=data_qr.L,
        Lbar=data_qr.Lbar,
        D_inf=1.0 / (D * E),
        E_inf=None,
        inside=convert_triplet(data_qr.inside, "qr", "ps", D, E),
        outside=convert_triplet(data_qr.outside, "qr", "ps", D, E),
        extras={},
        **common,
    )
    return uv, ps


@dataclass(frozen=True, eq=False)
class JostAtOne:
    """Values [psibar_n(1) psi_n(1)] for n = n_lo .. n_lo + len - 1.

    ``values[i, :, 0]`` is psibar and ``values[i, :, 1]`` is psi at site n_lo + i.
    """

    kind: str
    n_lo: int
    values: np.ndarray

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_lo + self.values.shape[0])


def jost_at_one(kind: str, pair: PotentialPair, n_range: tuple[int, int] | None = None) -> JostAtOne:
    """Closed-form values at z = 1 of psibar and psi for the chosen system.

    ``pair`` is always the (q, r) pair; ``kind`` selects whose Jost solutions
    (those of qr, or of the uv or ps pair derived from it) are returned.
    """
    _require_qr(pair)
    cum = cumulative_data(pair)
    if n_range is None:
        n_range = (pair.n_min - 2, pair.n_max + 2)
    n = np.arange(n_range[0], n_range[1] + 1)
    hi = max(pair.n_max, int(n[-1])) + 1
    q_all, r_all = pair.values(np.arange(min(pair.n_min, int(n[0])), hi + 1))
    start = min(pair.n_min, int(n[0]))
    tail_q = np.cumsum(q_all[::-1])[::-1]  # sum_{j >= m} q_j
    tail_r = np.cumsum(r_all[::-1])[::-1]

    def tail(arr, m):
        idx = m - start
        return np.where(idx < arr.size, arr[np.minimum(idx, arr.size - 1)], 0.0)

    q, r = pair.values(n)
    D, E = cum.D_inf, cum.E_inf
    vals = np.zeros((n.size, 2, 2), dtype=np.complex128)
    if kind == "qr":
        vals[:, 0, 0] = 1.0
        vals[:, 1, 0] = tail(tail_r, n)
        vals[:, 1, 1] = 1.0
    elif kind == "uv":
        Sq = tail(tail_q, n)
        vals[:, 0, 0] = cum.E_at(n - 1) / E
        vals[:, 1, 0] = -r * cum.D_at(n - 1) / E
        vals[:, 0, 1] = cum.E_at(n - 1) / D * Sq
        vals[:, 1, 1] = cum.D_at(n - 1) / D * (1.0 - r * Sq)
    elif kind == "ps":
        Sr = tail(tail_r, n + 1)
        vals[:, 0, 0] = cum.E_at(n - 1) / E * (1.0 + q * Sr)
        vals[:, 1, 0] = cum.D_at(n) / E * Sr
        vals[:, 0, 1] = q * cum.E_at(n - 1) / D
        vals[:, 1, 1] = cum.D_at(n) / D
    else:
        raise InputError(f"unknown kind {kind!r}")
    return JostAtOne(kind=kind, n_lo=int(n[0]), values=vals)


def recover_qr_at_one(jost1: JostAtOne, D_inf: complex, E_inf: complex, tol: float = 1e-300) -> PotentialPair:
    """Recover (q, r) from z = 1 values of the uv or ps Jost solutions."""
    v = jost1.values
    pb1, pb2 = v[:, 0, 0], v[:, 1, 0]
    p1, p2 = v[:, 0, 1], v[:, 1, 1]
    cross = pb1 * p2 - pb2 * p1
    if np.any(np.abs(cross) <= tol):
        raise DegenerateDenominator("psibar_1 psi_2 - psibar_2 psi_1 vanishes")
    DE = D_inf / E_inf
    if jost1.kind == "uv":
        if np.any(np.abs(pb1) <= tol):
            raise DegenerateDenominator("[psibar(1)]_1 vanishes")
        ratio = p1 / pb1
        q = DE * (ratio[:-1] - ratio[1:])
        r = -(pb1 * pb2 / cross)[:-1] / DE
        return PotentialPair("qr", jost1.n_lo, q, r)
    if jost1.kind == "ps":
        if np.any(np.abs(p2) <= tol):
            raise DegenerateDenominator("[psi(1)]_2 vanishes")
        q = (DE * p1 * p2 / cross)[1:]
        ratio = pb2 / p2
        r = (ratio[:-1] - ratio[1:]) / DE
        return PotentialPair("qr", jost1.n_lo + 1, q, r)
    raise InputError("recovery at z = 1 is defined for the uv and ps systems only")
