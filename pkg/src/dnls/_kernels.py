"""Hot loops for the transfer-matrix recursion.

Two interchangeable implementations are provided. The numba version loops
over sites and grid points explicitly; the numpy version loops over sites and
vectorizes over grid points. The active backend is chosen by the environment
variable ``DNLS_BACKEND`` (``numba`` or ``numpy``); numba is used by default
when it can be imported.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")


def active_backend() -> str:
    """Return the backend selected by ``DNLS_BACKEND``."""
    name = os.environ.get("DNLS_BACKEND", "numba" if HAVE_NUMBA else "numpy").lower()
    if name not in BACKENDS:
        raise ValueError(f"DNLS_BACKEND must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name


def _chain_numpy(m11, m12, m21, m22, seed, backward):
    n_sites, n_z = m11.shape
    out = np.empty((n_sites + 1, n_z, 2), dtype=np.complex128)
    if backward:
        out[n_sites] = seed
        for i in range(n_sites - 1, -1, -1):
            x0 = out[i + 1, :, 0]
            x1 = out[i + 1, :, 1]
            out[i, :, 0] = m11[i] * x0 + m12[i] * x1
            out[i, :, 1] = m21[i] * x0 + m22[i] * x1
    else:
        out[0] = seed
        for i in range(n_sites):
            x0 = out[i, :, 0]
            x1 = out[i, :, 1]
            out[i + 1, :, 0] = m11[i] * x0 + m12[i] * x1
            out[i + 1, :, 1] = m21[i] * x0 + m22[i] * x1
    return out


if HAVE_NUMBA:

    @nb.njit(cache=True, fastmath=False)
    def _chain_numba(m11, m12, m21, m22, seed, backward):
        """Apply a chain of 2x2 matrices to one seed vector per grid point."""
        n_sites, n_z = m11.shape
        out = np.empty((n_sites + 1, n_z, 2), dtype=np.complex128)
        first = n_sites if backward else 0
        for j in range(n_z):
            out[first, j, 0] = seed[j, 0]
            out[first, j, 1] = seed[j, 1]
        for step in range(n_sites):
            # site i reads row src and writes row dst; the inner loop runs along contiguous rows
            i = n_sites - 1 - step if backward else step
            src = i + 1 if backward else i
            dst = i if backward else i + 1
            for j in range(n_z):
                x0 = out[src, j, 0]
                x1 = out[src, j, 1]
                out[dst, j, 0] = m11[i, j] * x0 + m12[i, j] * x1
                out[dst, j, 1] = m21[i, j] * x0 + m22[i, j] * x1
        return out

else:  # pragma: no cover
    _chain_numba = None


def chain_apply(m11, m12, m21, m22, seed, backward, backend=None):
    """Propagate a seed through a chain of 2x2 matrices.

    Parameters
    ----------
    m11, m12, m21, m22 : ndarray, shape (n_sites, n_z)
        Matrix entries for each site and grid point.
    seed : ndarray, shape (n_z, 2)
        Starting vector per grid point.
    backward : bool
        If True, ``out[-1] = seed`` and ``out[i] = X_i out[i + 1]``.
        Otherwise ``out[0] = seed`` and ``out[i + 1] = X_i out[i]``.
    backend : {"numba", "numpy"}, optional
        Overrides the environment selection.

    Returns
    -------
    ndarray, shape (n_sites + 1, n_z, 2)
    """
    args = [np.ascontiguousarray(a, dtype=np.complex128) for a in (m11, m12, m21, m22)]
    seed = np.ascontiguousarray(seed, dtype=np.complex128)
    name = backend or active_backend()
    if name == "numba" and HAVE_NUMBA:
        return _chain_numba(*args, seed, bool(backward))
    return _chain_numpy(*args, seed, bool(backward))
