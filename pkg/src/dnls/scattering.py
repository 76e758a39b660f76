"""Scattering coefficients on the spectral grid and their identities."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GridTooCoarse, InputError, NonDecayingSolution
from .grid import SpectralGrid, grid_coefficients
from .lattice import (
    DEFAULT_PAD,
    PotentialPair,
    check_admissible,
    cumulative_data,
    jost_solutions,
)

MAX_GRID = 1 << 16
SETTLE_TOL = 1e-10
WRONSKIAN_TOL = 1e-8
ALIAS_TOL = 1e-14

COEFFICIENTS = ("T_l", "T_r", "Tbar_l", "Tbar_r", "R", "Rbar", "L", "Lbar")


@dataclass(frozen=True, eq=False)
class ScatteringData:
    """Grid samples of the eight scattering coefficients plus bound-state data.

    For kind ``qr`` the left and right transmission coefficients coincide and
    ``D_inf``/``E_inf`` are the products of 1 - q_n r_n and 1 + q_n r_{n+1}.
    For kinds ``uv``/``ps`` ``D_inf`` is the product of 1 - u_n v_n (or
    1 - p_n s_n) and ``E_inf`` is None.
    """

    kind: str
    grid: SpectralGrid
    T_l: np.ndarray
    T_r: np.ndarray
    Tbar_l: np.ndarray
    Tbar_r: np.ndarray
    R: np.ndarray
    Rbar: np.ndarray
    L: np.ndarray
    Lbar: np.ndarray
    D_inf: complex
    E_inf: complex | None = None
    inside: object | None = None
    outside: object | None = None
    t: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def T(self) -> np.ndarray:
        return self.T_r

    @property
    def Tbar(self) -> np.ndarray:
        return self.Tbar_r

    @property
    def z(self) -> np.ndarray:
        return self.grid.z

    def replace(self, **changes) -> "ScatteringData":
        return replace(self, **changes)

    def coefficients(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in COEFFICIENTS}


def _reads(kind, pair, grid, pad, offset=0):
    """Asymptotic reads at n_min - pad + offset and n_max + pad - offset."""
    z = grid.z
    fam = jost_solutions(kind, pair, z, pad=pad)
    n0 = pair.n_min - pad + offset
    n1 = pair.n_max + pad - offset
    psi0, psibar0 = fam.at("psi", n0), fam.at("psibar", n0)
    phi1, phibar1 = fam.at("phi", n1), fam.at("phibar", n1)
    zp0, zm0 = z**n0, z ** (-n0)
    zp1, zm1 = z**n1, z ** (-n1)
    reads = {
        "inv_T_l": psi0[:, 1] * zm0,
        "L_over_T_l": psi0[:, 0] * zp0,
        "inv_Tbar_l": psibar0[:, 0] * zp0,
        "Lbar_over_Tbar_l": psibar0[:, 1] * zm0,
        "inv_T_r": phi1[:, 0] * zp1,
        "R_over_T_r": phi1[:, 1] * zm1,
        "Rbar_over_Tbar_r": phibar1[:, 0] * zp1,
        "inv_Tbar_r": phibar1[:, 1] * zm1,
    }
    return fam, reads


def _resolved(samples: np.ndarray) -> bool:
    """True when the Fourier tail near the Nyquist band is at roundoff level."""
    M = samples.size
    coeffs = np.fft.fft(samples) / M
    k = np.fft.fftfreq(M, d=1.0 / M)
    band = np.abs(k) >= 3 * M // 8
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    return float(np.max(np.abs(coeffs[band]))) <= ALIAS_TOL * scale


def scatter(
    kind: str,
    pair: PotentialPair,
    grid: SpectralGrid | None = None,
    pad: int = DEFAULT_PAD,
    bound_states="auto",
) -> ScatteringData:
    """Direct scattering: read the coefficients from Jost asymptotics.

    Parameters
    ----------
    kind : {"qr", "uv", "ps"}
    pair : PotentialPair
    grid : SpectralGrid, optional
        Defaults to ``SpectralGrid.default()``. The grid is doubled while the
        reflection coefficients are not resolved.
    bound_states : "auto", "none" or (inside, outside)
        ``"auto"`` runs the simple-pole finder for kind ``qr``.
    """
    check_admissible(pair)
    grid = grid or SpectralGrid.default()
    while True:
        fam, reads = _reads(kind, pair, grid, pad)
        _, reads2 = _reads(kind, pair, grid, pad, offset=1)
        for key, val in reads.items():
            scale = max(1.0, float(np.max(np.abs(val))))
            if np.max(np.abs(val - reads2[key])) > SETTLE_TOL * scale:
                raise NonDecayingSolution(f"{key} changes between the last two asymptotic sites")
        T_l = 1.0 / reads["inv_T_l"]
        T_r = 1.0 / reads["inv_T_r"]
        Tbar_l = 1.0 / reads["inv_Tbar_l"]
        Tbar_r = 1.0 / reads["inv_Tbar_r"]
        R = reads["R_over_T_r"] * T_r
        Rbar = reads["Rbar_over_Tbar_r"] * Tbar_r
        L = reads["L_over_T_l"] * T_l
        Lbar = reads["Lbar_over_Tbar_l"] * Tbar_l
        if (_resolved(R) and _resolved(Rbar)) or grid.M >= MAX_GRID:
            break
        grid = grid.doubled()
    if not (_resolved(R) and _resolved(Rbar)):
        raise GridTooCoarse(f"reflection coefficients unresolved at M = {grid.M}")
    cum = cumulative_data(pair)
    extras = {}
    if kind == "qr":
        n = pair.n_min
        phi, psi = fam.at("phi", n), fam.at("psi", n)
        psibar, phibar = fam.at("psibar", n), fam.at("phibar", n)
        w = phi[:, 0] * psi[:, 1] - phi[:, 1] * psi[:, 0]
        wbar = psibar[:, 0] * phibar[:, 1] - psibar[:, 1] * phibar[:, 0]
        dev = max(
            float(np.max(np.abs(w - reads["inv_T_l"]))),
            float(np.max(np.abs(w - reads["inv_T_r"]))),
            float(np.max(np.abs(wbar - reads["inv_Tbar_l"]))),
            float(np.max(np.abs(wbar - reads["inv_Tbar_r"]))),
        )
        scale = max(1.0, float(np.max(np.abs(w))), float(np.max(np.abs(wbar))))
        if dev > WRONSKIAN_TOL * scale:
            raise NonDecayingSolution(f"Wronskian and asymptotic transmission reads differ by {dev:.2e}")
        extras["wronskian_deviation"] = dev
    data = ScatteringData(
        kind=kind,
        grid=grid,
        T_l=T_l,
        T_r=T_r,
        Tbar_l=Tbar_l,
        Tbar_r=Tbar_r,
        R=R,
        Rbar=Rbar,
        L=L,
        Lbar=Lbar,
        D_inf=cum.D_inf,
        E_inf=cum.E_inf if kind == "qr" else None,
        extras=extras,
    )
    if isinstance(bound_states, tuple):
        inside, outside = bound_states
        return data.replace(inside=inside, outside=outside)
    if bound_states == "auto" and kind == "qr":
        from .boundstates import triplets_from_potential

        inside, outside = triplets_from_potential(pair)
        return data.replace(inside=inside, outside=outside)
    if bound_states not in ("auto", "none"):
        raise InputError(f"bound_states must be 'auto', 'none' or a pair, got {bound_states!r}")
    return data


def _grid_mean(f: np.ndarray) -> complex:
    return complex(np.mean(f))


def verify_identities(data: ScatteringData) -> dict[str, float]:
    """Worst absolute violation, over the grid, of each scattering identity."""
    T_l, T_r, Tb_l, Tb_r = data.T_l, data.T_r, data.Tbar_l, data.Tbar_r
    R, Rb, L, Lb = data.R, data.Rbar, data.L, data.Lbar
    report: dict[str, float] = {}

    def put(name, residual):
        report[name] = float(np.max(np.abs(residual)))

    if data.kind == "qr":
        put("T_l = T_r", T_l - T_r)
        put("Tbar_l = Tbar_r", Tb_l - Tb_r)
        put("L/T = -Rbar/Tbar", L / T_l + Rb / Tb_r)
        put("Lbar/Tbar = -R/T", Lb / Tb_l + R / T_r)
        put("T Tbar = 1 - L Lbar", T_r * Tb_r - (1.0 - L * Lb))
        put("T Tbar = 1 - R Rbar", T_r * Tb_r - (1.0 - R * Rb))
        put("1/T(0) = D_inf", _grid_mean(1.0 / T_r) - data.D_inf)
        put("1/Tbar(inf) = E_inf", _grid_mean(1.0 / Tb_r) - data.E_inf)
    else:
        D = data.D_inf
        put("T_r = D_inf T_l", T_r - D * T_l)
        put("Tbar_r = D_inf Tbar_l", Tb_r - D * Tb_l)
        put("T_r Tbar_r = D_inf (1 - R Rbar)", T_r * Tb_r - D * (1.0 - R * Rb))
        put("T_l Tbar_l = (1 - L Lbar)/D_inf", T_l * Tb_l - (1.0 - L * Lb) / D)
        put("L/T_l = -D_inf Rbar/Tbar_r", L / T_l + D * Rb / Tb_r)
        put("Lbar/Tbar_l = -D_inf R/T_r", Lb / Tb_l + D * R / T_r)
        put("1/T_l(0) = 1", _grid_mean(1.0 / T_l) - 1.0)
        put("1/T_r(0) = 1/D_inf", _grid_mean(1.0 / T_r) - 1.0 / D)
    # 2x2 compatibility product of the right and left connection matrices
    a11, a12, a21, a22 = 1.0 / T_r, R / T_r, Rb / Tb_r, 1.0 / Tb_r
    b11, b12, b21, b22 = 1.0 / Tb_l, Lb / Tb_l, L / T_l, 1.0 / T_l
    prod = np.stack(
        [a11 * b11 + a12 * b21 - 1.0, a11 * b12 + a12 * b22, a21 * b11 + a22 * b21, a21 * b12 + a22 * b22 - 1.0]
    )
    put("connection product = I", prod)
    anti = data.grid.antipode_index()
    worst = 0.0
    for vals in data.coefficients().values():
        worst = max(worst, float(np.max(np.abs(vals[anti] - vals))))
    report["even in z"] = worst
    return report


@dataclass(frozen=True)
class TransmissionLimits:
    """Constants in the small-z and large-z expansions of the transmission coefficients.

    For kind ``qr``: 1/T = D_inf (1 + S_inf z^2 + ...) near 0 and
    1/Tbar = E_inf (1 + Q_inf z^-2 + ...) near infinity.
    For kinds ``uv``/``ps``: T_l = 1 - z^2 low_sum + ..., Tbar_l = 1 - z^-2 high_sum + ...,
    T_r = D_inf T_l and Tbar_r = D_inf Tbar_l.
    """

    kind: str
    D_inf: complex
    E_inf: complex | None = None
    S_inf: complex | None = None
    Q_inf: complex | None = None
    low_sum: complex | None = None
    high_sum: complex | None = None

    @property
    def inv_T_at_0(self) -> complex:
        return self.D_inf if self.kind == "qr" else 1.0 + 0j

    @property
    def inv_Tbar_at_inf(self) -> complex:
        return self.E_inf if self.kind == "qr" else 1.0 + 0j


def transmission_limits(pair: PotentialPair, kind: str | None = None) -> TransmissionLimits:
    """Limits of the transmission coefficients at z = 0 and z = infinity from the potentials."""
    kind = kind or pair.kind
    cum = cumulative_data(pair.with_kind(kind))
    if kind == "qr":
        return TransmissionLimits("qr", cum.D_inf, cum.E_inf, cum.S_inf, cum.Q_inf)
    n = np.arange(pair.n_min - 1, pair.n_max + 1)
    a, b = pair.values(n)
    a1, b1 = pair.values(n + 1)
    return TransmissionLimits(kind, cum.D_inf, low_sum=complex(np.sum(a1 * b)), high_sum=complex(np.sum(a * b1)))


def limits_from_grid(data: ScatteringData) -> TransmissionLimits:
    """The same constants estimated from grid samples via mean-value coefficients.

    1/T is analytic inside the circle and 1/Tbar outside, so their Taylor
    coefficients are grid Fourier coefficients.
    """
    if data.kind == "qr":
        a = 1.0 / data.T_r
        abar = 1.0 / data.Tbar_r
        D = _grid_mean(a)
        E = _grid_mean(abar)
        S = complex(grid_coefficients(a, np.array([-2]), sign=1)[0]) / D
        Q = complex(grid_coefficients(abar, np.array([2]), sign=1)[0]) / E
        return TransmissionLimits("qr", D, E, S, Q)
    low = complex(grid_coefficients(1.0 / data.T_l, np.array([-2]), sign=1)[0])
    high = complex(grid_coefficients(1.0 / data.Tbar_l, np.array([2]), sign=1)[0])
    D = _grid_mean(1.0 / data.T_l) / _grid_mean(1.0 / data.T_r)
    return TransmissionLimits(data.kind, D, low_sum=low, high_sum=high)


def fourier_coefficients(samples, k_values, bar: bool = False, tol: float = 1e-13) -> np.ndarray:
    """Grid Fourier coefficients of a function sampled on the spectral grid.

    Returns (1/M) sum_m f(z_m) z_m^k for each k, or with z_m^{-k} when
    ``bar`` is True. Odd-k entries are set to exact zero when the samples are
    even in z.

    Raises
    ------
    GridTooCoarse
        If the requested span exceeds M/2 or the spectrum has not decayed in
        the band farthest from the origin.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    M = samples.size
    k_values = np.atleast_1d(np.asarray(k_values, dtype=np.int64))
    if k_values.size and 2 * int(k_values.max() - k_values.min() + 1) > M:
        raise GridTooCoarse(f"k span {int(k_values.max() - k_values.min() + 1)} needs M >= twice that")
    coeffs = np.fft.fft(samples) / M
    k = np.fft.fftfreq(M, d=1.0 / M)
    band = np.abs(k) >= 3 * M // 8
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    if M >= 64 and float(np.max(np.abs(coeffs[band]))) > tol * scale:
        raise GridTooCoarse("Fourier coefficients have not decayed near the Nyquist band")
    out = grid_coefficients(samples, k_values, sign=-1 if bar else 1)
    anti = (np.arange(M) + M // 2) % M
    if np.max(np.abs(samples[anti] - samples)) <= 1e-12 * scale:
        out[k_values % 2 != 0] = 0.0
    return out
