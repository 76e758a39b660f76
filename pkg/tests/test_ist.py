import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnls import fixtures
from dnls.errors import InputError
from dnls.grid import SpectralGrid
from dnls.ist import conserved_check, evolve, ist_solve, pde_residual, residual_order
from dnls.scattering import scatter
from dnls.soliton import soliton_qr
from dnls.transforms import qr_to_uv

from conftest import assert_close

GRID = SpectralGrid(512)


@pytest.fixture(scope="module")
def p3_data():
    return scatter("qr", fixtures.p3(), GRID)


def test_evolve_zero_time_is_identity(p3_data):
    d = evolve(p3_data, 0.0).data
    for name, vals in p3_data.coefficients().items():
        assert np.array_equal(getattr(d, name), vals), name


@given(st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=25, deadline=None)
def test_evolution_group_and_modulus(t, s):
    d = scatter("qr", fixtures.p3(), SpectralGrid(256))
    two_step = evolve(evolve(d, t), s).data
    one_step = evolve(d, t + s).data
    assert_close(two_step.R, one_step.R, 1e-12)
    assert_close(two_step.Lbar, one_step.Lbar, 1e-12)
    assert_close(np.abs(one_step.R), np.abs(d.R), 1e-14)
    assert np.array_equal(one_step.T, d.T)


def test_ist_zero_time_round_trip(p3_data):
    back = ist_solve(fixtures.p3(), 0.0, window=(-8, 8), grid=GRID)
    assert back.max_abs_difference(fixtures.p3()) <= 1e-10


def test_ist_zero_pair():
    out = ist_solve(fixtures.zero_pair(), 1.3, window=(-4, 4), grid=SpectralGrid(256))
    assert np.abs(out.first).max() <= 1e-14 and np.abs(out.second).max() <= 1e-14


def test_ist_one_soliton_matches_closed_form():
    inside, outside = fixtures.one_soliton()
    pair = soliton_qr(inside, outside, 0.0, (-40, 40)).trimmed(1e-17)
    got = ist_solve(pair, 0.5, window=(-10, 10))
    want = soliton_qr(inside, outside, 0.5, (-10, 10))
    assert got.max_abs_difference(want) <= 1e-7


def test_ist_requires_qr():
    with pytest.raises(InputError):
        ist_solve(fixtures.zero_pair("uv"), 0.1)


def test_pde_residual_zero_pair():
    rep = pde_residual(lambda t: fixtures.zero_pair(), 0.0, window=(-3, 3))
    assert rep.max_norm == 0


@pytest.mark.parametrize("kind", ["qr", "uv"])
def test_soliton_residual_is_second_order(kind):
    inside, outside = fixtures.two_soliton()

    def sampler(t):
        pair = soliton_qr(inside, outside, t, (-40, 40))
        return qr_to_uv(pair) if kind == "uv" else pair

    window = (-8, 8) if kind == "qr" else (-6, 6)
    slope, norms = residual_order(sampler, 0.2, 1e-3, window)
    assert abs(slope - 2) <= 0.1 and norms[-1] <= 1e-6


def test_conserved_check_families():
    rep = conserved_check([(0.0, fixtures.zero_pair()), (1.0, fixtures.zero_pair())], SpectralGrid(256))
    assert rep.T_drift == 0 and rep.D_drift == 0
    assert conserved_check([]).times == ()
    inside, outside = fixtures.one_soliton()
    fam = [(t, soliton_qr(inside, outside, t, (-40, 40)).trimmed(1e-17)) for t in (0.0, 0.5, 1.0)]
    rep = conserved_check(fam)
    assert rep.T_drift <= 1e-10 and rep.D_drift <= 1e-12 and rep.E_drift <= 1e-12
