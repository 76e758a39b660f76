"""Time evolution of scattering data, the inverse scattering transform and PDE residuals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .boundstates import evolve_triplet
from .errors import AdmissibilityViolation, InputError
from .grid import SpectralGrid
from .lattice import PotentialPair, check_admissible
from .marchenko import DEFAULT_WINDOW, invert
from .scattering import ScatteringData, limits_from_grid, scatter

DEFAULT_H = 1e-4
TRIM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EvolvedData:
    """Scattering data ``base`` evolved by time ``t``.

    Repeated evolution accumulates ``t`` on the same base, so the group
    property holds exactly.
    """

    base: ScatteringData
    t: float

    @property
    def data(self) -> ScatteringData:
        d = self.base
        if self.t == 0:
            return d
        w = (d.z - 1.0 / d.z) ** 2
        down = np.exp(-1j * self.t * w)
        up = np.exp(1j * self.t * w)
        return d.replace(
            R=d.R * down,
            Rbar=d.Rbar * up,
            L=d.L * up,
            Lbar=d.Lbar * down,
            inside=evolve_triplet(d.inside, self.t),
            outside=evolve_triplet(d.outside, self.t),
            t=d.t + self.t,
        )


def evolve(data: ScatteringData | EvolvedData, t: float) -> EvolvedData:
    """R -> R e^{-it(z-1/z)^2}, Rbar -> Rbar e^{it(z-1/z)^2}, L and Lbar the other way, C -> C E(t).

    Transmission coefficients, A, B and D_inf, E_inf are unchanged.
    """
    if isinstance(data, EvolvedData):
        return EvolvedData(data.base, data.t + float(t))
    return EvolvedData(data, float(t))


def default_window(pair: PotentialPair, pad: int = 4) -> tuple[int, int]:
    return min(DEFAULT_WINDOW[0], pair.n_min - pad), max(DEFAULT_WINDOW[1], pair.n_max + pad)


def ist_solve(
    pair0: PotentialPair,
    t: float,
    method: str = "a",
    window: tuple[int, int] | None = None,
    grid: SpectralGrid | None = None,
    bound_states="auto",
) -> PotentialPair:
    """q_n(t), r_n(t) by direct scattering, evolution and inversion."""
    if pair0.kind != "qr":
        raise InputError("ist_solve expects a qr pair")
    check_admissible(pair0)
    window = window or default_window(pair0)
    data = scatter("qr", pair0, grid, bound_states=bound_states)
    return invert(evolve(data, t).data, method, window, trim=TRIM_TOL)


@dataclass(frozen=True, eq=False)
class ResidualReport:
    """Residuals of the two evolution equations at sites n, plus their max norm."""

    n: np.ndarray
    first: np.ndarray
    second: np.ndarray
    h: float

    @property
    def max_norm(self) -> float:
        if not self.n.size:
            return 0.0
        return float(max(np.abs(self.first).max(), np.abs(self.second).max()))


def _rhs_qr(pair: PotentialPair, n: np.ndarray):
    q, r = pair.values(n)
    qp, rp = pair.values(n + 1)
    qm, rm = pair.values(n - 1)
    den = {
        "1 - q_{n+1} r_{n+1}": 1 - qp * rp,
        "1 - q_n r_n": 1 - q * r,
        "1 + q_n r_{n+1}": 1 + q * rp,
        "1 + q_{n-1} r_n": 1 + qm * r,
        "1 - q_{n-1} r_{n-1}": 1 - qm * rm,
    }
    for name, d in den.items():
        if np.any(np.abs(d) < 1e-14):
            raise AdmissibilityViolation(f"{name} vanishes")
    fq = qp / den["1 - q_{n+1} r_{n+1}"] - q / den["1 - q_n r_n"] - q / den["1 + q_n r_{n+1}"] + qm / den["1 + q_{n-1} r_n"]
    fr = -rp / den["1 + q_n r_{n+1}"] + r / den["1 + q_{n-1} r_n"] + r / den["1 - q_n r_n"] - rm / den["1 - q_{n-1} r_{n-1}"]
    return fq, fr


def _rhs_uv(pair: PotentialPair, n: np.ndarray):
    u, v = pair.values(n)
    up, vp = pair.values(n + 1)
    um, vm = pair.values(n - 1)
    fu = um - 2 * u + up - um * u * v - u * up * v
    fv = -vm + 2 * v - vp + u * vm * v + u * v * vp
    return fu, fv


def pde_residual(
    sampler: Callable[[float], PotentialPair],
    t: float,
    h: float = DEFAULT_H,
    window: tuple[int, int] = DEFAULT_WINDOW,
) -> ResidualReport:
    """Central-difference residual of the semi-discrete evolution equations.

    ``sampler(t)`` returns the pair at time t. qr samplers are checked against
    the derivative NLS lattice system, uv/ps samplers against its uv analogue.
    Each equation reads i d/dt a_n + F_n(a, b) = 0.
    """
    lo, hi = int(window[0]), int(window[1])
    n = np.arange(lo, hi + 1)
    p_minus, p0, p_plus = sampler(t - h), sampler(t), sampler(t + h)
    rhs = _rhs_qr if p0.kind == "qr" else _rhs_uv
    a_m, b_m = p_minus.values(n)
    a_p, b_p = p_plus.values(n)
    fa, fb = rhs(p0, n)
    res_a = 1j * (a_p - a_m) / (2 * h) + fa
    res_b = 1j * (b_p - b_m) / (2 * h) + fb
    return ResidualReport(n, res_a, res_b, h)


def residual_order(
    sampler: Callable[[float], PotentialPair],
    t: float,
    h: float = DEFAULT_H,
    window: tuple[int, int] = DEFAULT_WINDOW,
    halvings: int = 2,
) -> tuple[float, list[float]]:
    """Least-squares slope of log(residual) against log(h) over h, h/2, ..."""
    hs = [h / 2**k for k in range(halvings + 1)]
    norms = [pde_residual(sampler, t, hh, window).max_norm for hh in hs]
    slope = float(np.polyfit(np.log(hs), np.log(norms), 1)[0])
    return slope, norms


@dataclass(frozen=True)
class ConservationReport:
    """Worst drift, relative to the first member, of T on the grid and of D_inf, E_inf."""

    T_drift: float
    D_drift: float
    E_drift: float
    times: tuple


def conserved_check(family, grid: SpectralGrid | None = None) -> ConservationReport:
    """Drift of the transmission coefficient and of D_inf, E_inf across a family of pairs.

    ``family`` is a sequence of (t, qr pair). Every member is scattered on
    the same grid.
    """
    family = list(family)
    if not family:
        return ConservationReport(0.0, 0.0, 0.0, ())
    grid = grid or SpectralGrid.default()
    datas = []
    for _, pair in family:
        d = scatter("qr", pair, grid, bound_states="none")
        grid = d.grid
        datas.append(d)
    # regrid earlier members if the grid was doubled along the way
    datas = [scatter("qr", p, grid, bound_states="none") if d.grid.M != grid.M else d for (_, p), d in zip(family, datas)]
    ref = datas[0]
    ref_lim = limits_from_grid(ref)
    T_drift = D_drift = E_drift = 0.0
    for d in datas[1:]:
        lim = limits_from_grid(d)
        T_drift = max(T_drift, float(np.abs(d.T - ref.T).max()))
        D_drift = max(D_drift, abs(lim.D_inf - ref_lim.D_inf))
        E_drift = max(E_drift, abs(lim.E_inf - ref_lim.E_inf))
    return ConservationReport(T_drift, D_drift, E_drift, tuple(t for t, _ in family))
