"""Uniform half-shifted grid on the unit circle and grid Fourier transforms."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarse, InputError

DEFAULT_GRID_SIZE = 1024


def default_grid_size() -> int:
    """Grid size from ``DNLS_GRID`` or the built-in default."""
    raw = os.environ.get("DNLS_GRID")
    if raw is None or raw.strip() == "":
        return DEFAULT_GRID_SIZE
    try:
        return int(raw)
    except ValueError as exc:
        raise InputError(f"DNLS_GRID must be an integer, got {raw!r}") from exc


@dataclass(frozen=True)
class SpectralGrid:
    """M points z_m = exp(i pi (2m + 1) / M) on the unit circle.

    The half-step shift keeps z = +1 and z = -1 off the grid, and for even M
    the point -z_m is again a grid point (index m + M/2).
    """

    M: int = DEFAULT_GRID_SIZE

    def __post_init__(self):
        M = int(self.M)
        if M < 4 or M & (M - 1):
            raise InputError(f"grid size must be a power of two >= 4, got {self.M}")
        object.__setattr__(self, "M", M)

    @classmethod
    def default(cls) -> "SpectralGrid":
        return cls(default_grid_size())

    @property
    def theta(self) -> np.ndarray:
        return np.pi * (2 * np.arange(self.M) + 1) / self.M

    @property
    def z(self) -> np.ndarray:
        return np.exp(1j * self.theta)

    def antipode_index(self) -> np.ndarray:
        """Index of -z_m for every m."""
        return (np.arange(self.M) + self.M // 2) % self.M

    def doubled(self) -> "SpectralGrid":
        return SpectralGrid(2 * self.M)


def grid_coefficients(samples: np.ndarray, k: np.ndarray, sign: int = 1) -> np.ndarray:
    """Return (1/M) sum_m samples[..., m] * z_m**(sign * k) for integer ``k``.

    Evaluated with one FFT along the last axis, so any set of ``k`` is cheap.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    M = samples.shape[-1]
    k = np.asarray(k, dtype=np.int64)
    if sign > 0:
        spectrum = np.fft.ifft(samples, axis=-1)
        phase = np.exp(1j * np.pi * k / M)
    else:
        spectrum = np.fft.fft(samples, axis=-1) / M
        phase = np.exp(-1j * np.pi * k / M)
    return spectrum[..., k % M] * phase


def check_aliasing(samples: np.ndarray, sign: int, support: tuple[int, int], tol: float = 1e-13) -> None:
    """Raise :class:`GridTooCoarse` if coefficients outside ``support`` are not negligible.

    ``support`` is the inclusive range of exponents that may legitimately
    carry weight. The complementary band of the FFT must be at roundoff level.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    M = samples.shape[-1]
    lo, hi = support
    if hi - lo + 1 > M // 2:
        raise GridTooCoarse(f"coefficient span {hi - lo + 1} needs more than M/2 = {M // 2} points")
    outside = np.arange(hi + 1, lo + M)
    inside = np.arange(lo, hi + 1)
    c_out = grid_coefficients(samples, outside, sign)
    c_in = grid_coefficients(samples, inside, sign)
    scale = max(1.0, float(np.max(np.abs(c_in))) if c_in.size else 0.0)
    worst = float(np.max(np.abs(c_out))) if c_out.size else 0.0
    if worst > tol * scale:
        raise GridTooCoarse(
            f"aliased Fourier tail {worst:.3e} exceeds {tol:.1e} x {scale:.3e} on a grid of {M} points"
        )
