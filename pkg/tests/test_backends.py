import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnls import _kernels, fixtures
from dnls.grid import SpectralGrid
from dnls.scattering import scatter


@given(st.integers(0, 2**31 - 1), st.integers(1, 20), st.integers(1, 9), st.booleans())
@settings(max_examples=40, deadline=None)
def test_backends_agree(seed, n_sites, n_z, backward):
    rng = np.random.default_rng(seed)
    m = [rng.normal(size=(n_sites, n_z)) + 1j * rng.normal(size=(n_sites, n_z)) for _ in range(4)]
    s = rng.normal(size=(n_z, 2)) + 1j * rng.normal(size=(n_z, 2))
    a = _kernels.chain_apply(*m, s, backward, backend="numba")
    b = _kernels.chain_apply(*m, s, backward, backend="numpy")
    assert np.allclose(a, b, rtol=1e-13, atol=0)


def test_environment_selects_backend(monkeypatch):
    monkeypatch.setenv("DNLS_BACKEND", "numpy")
    assert _kernels.active_backend() == "numpy"
    slow = scatter("qr", fixtures.p3(), SpectralGrid(128))
    monkeypatch.setenv("DNLS_BACKEND", "numba")
    assert _kernels.active_backend() == ("numba" if _kernels.HAVE_NUMBA else "numpy")
    fast = scatter("qr", fixtures.p3(), SpectralGrid(128))
    assert np.abs(slow.T - fast.T).max() <= 1e-14
    monkeypatch.setenv("DNLS_BACKEND", "fortran")
    with pytest.raises(ValueError):
        _kernels.active_backend()
