import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnls import fixtures
from dnls.errors import InputError
from dnls.grid import SpectralGrid
from dnls.lattice import PotentialPair, cumulative_data, jost_solutions
from dnls.scattering import scatter
from dnls.transforms import (
    jost_at_one,
    products_from_us,
    qr_to_ps,
    qr_to_uv,
    recover_qr_at_one,
    relate_jost,
    relate_scattering,
    us_to_qr,
)

from conftest import assert_close

seeds = st.integers(0, 2**31 - 1)


def _value(pair, n, which):
    a, b = pair.values([n])
    return complex((a if which == 0 else b)[0])


def test_zero_maps():
    z = fixtures.zero_pair()
    assert qr_to_uv(z).max_abs_difference(PotentialPair.zeros("uv", 0, 0)) == 0
    assert qr_to_ps(z).max_abs_difference(PotentialPair.zeros("ps", 0, 0)) == 0
    assert us_to_qr([0.0], [0.0]).max_abs_difference(z) == 0


def test_qr_to_uv_examples():
    uv = qr_to_uv(PotentialPair.from_sites("qr", {0: 0.5}, {0: 0.0}))
    assert abs(_value(uv, 0, 0) - 0.5) < 1e-15
    assert np.all(uv.second == 0)
    uv = qr_to_uv(PotentialPair.from_sites("qr", {0: 0.5}, {0: 0.4}))
    assert abs(_value(uv, 0, 0) - 0.625) < 1e-15
    assert abs(_value(uv, -1, 1) - 0.4) < 1e-15


def test_qr_to_ps_examples():
    ps = qr_to_ps(PotentialPair.from_sites("qr", {1: 0.0}, {1: 0.3}))
    assert abs(_value(ps, 0, 1) - 0.3) < 1e-15
    assert np.all(ps.first == 0)
    ps = qr_to_ps(PotentialPair.from_sites("qr", {0: 0.5}, {0: 0.0}))
    assert abs(_value(ps, 0, 0) - 0.5) < 1e-15
    assert abs(_value(ps, -1, 0) + 0.5) < 1e-15
    assert np.all(ps.second == 0)


def test_us_to_qr_single_site():
    pair = us_to_qr([0.5], [0.0], n_min=0)
    assert abs(_value(pair, 0, 0) - 0.5) < 1e-15
    assert np.all(pair.second == 0)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_composition_and_products(seed):
    pair = fixtures.random_pair(seed)
    uv, ps = qr_to_uv(pair), qr_to_ps(pair)
    assert us_to_qr(uv, ps).max_abs_difference(pair) <= 1e-12
    n = np.arange(pair.n_min - 3, pair.n_max + 3)
    q, r = pair.values(n)
    _, r1 = pair.values(n + 1)
    q1, _ = pair.values(n + 1)
    u, v = uv.values(n)
    p, s = ps.values(n)
    assert_close((1 - u * v) * (1 - q * r) * (1 + q * r1), 1.0, 1e-12)
    assert_close((1 - p * s) * (1 - q1 * r1) * (1 + q * r1), 1.0, 1e-12)
    cum = cumulative_data(pair)
    assert abs(cumulative_data(uv).D_inf * cum.D_inf * cum.E_inf - 1) <= 1e-12
    assert abs(cumulative_data(ps).D_inf * cum.D_inf * cum.E_inf - 1) <= 1e-12
    prods = products_from_us(uv, ps)
    assert_close(prods.D, cum.D_at(prods.n), 1e-12)
    assert_close(prods.E, cum.E_at(prods.n), 1e-12)


@pytest.mark.parametrize("direction", ["ps->qr", "uv->qr", "qr->ps", "qr->uv"])
def test_relate_jost_against_direct(direction, p3):
    src, dst = direction.split("->")
    pairs = {"qr": p3, "uv": qr_to_uv(p3), "ps": qr_to_ps(p3)}
    z = np.exp(1j * np.linspace(0.2, 3.0, 9))
    fam_src = jost_solutions(src, pairs[src].on(-8, 8), z, pad=2)
    fam_dst = jost_solutions(dst, pairs[dst].on(-8, 8), z, pad=2)
    got = relate_jost(direction, fam_src, cumulative_data(p3), p3)
    for name in ("psi", "phi", "psibar", "phibar"):
        assert_close(getattr(got, name), getattr(fam_dst, name), 1e-10, name)


def test_relate_jost_errors(p3):
    fam = jost_solutions("qr", p3, 1j)
    with pytest.raises(InputError):
        relate_jost("uv->ps", fam, cumulative_data(p3), p3)
    with pytest.raises(InputError):
        relate_jost("uv->qr", fam, cumulative_data(p3), p3)


def test_relate_scattering_single_site():
    grid = SpectralGrid(256)
    pair = PotentialPair.from_sites("qr", {0: 0.5}, {0: 0.0})
    uv_pred, _ = relate_scattering(scatter("qr", pair, grid))
    assert_close(uv_pred.L, 0.5 * grid.z**2, 1e-14)
    uv_direct = scatter("uv", qr_to_uv(pair), grid)
    assert_close(uv_pred.L, uv_direct.L, 1e-14)


def test_relate_scattering_p3(p3):
    grid = SpectralGrid(1024)
    uv_pred, ps_pred = relate_scattering(scatter("qr", p3, grid))
    uv, ps = scatter("uv", qr_to_uv(p3), grid), scatter("ps", qr_to_ps(p3), grid)
    for pred, direct in ((uv_pred, uv), (ps_pred, ps)):
        for name, vals in direct.coefficients().items():
            assert_close(getattr(pred, name), vals, 1e-10, name)
        assert abs(pred.D_inf - direct.D_inf) <= 1e-12


@pytest.mark.parametrize("kind", ["qr", "uv", "ps"])
def test_jost_at_one_matches_recursion(kind, p3):
    src = {"qr": p3, "uv": qr_to_uv(p3), "ps": qr_to_ps(p3)}[kind]
    j1 = jost_at_one(kind, p3, (-7, 7))
    fam = jost_solutions(kind, src, 1.0 + 0j)
    direct = np.array([np.stack([fam.at("psibar", n)[0], fam.at("psi", n)[0]], -1) for n in range(-7, 8)])
    assert_close(j1.values, direct, 1e-13)


def test_jost_at_one_free():
    j1 = jost_at_one("uv", fixtures.zero_pair(), (-3, 3))
    assert_close(j1.values, np.broadcast_to(np.eye(2), j1.values.shape), 0.0)


@pytest.mark.parametrize("kind", ["uv", "ps"])
def test_recover_at_one(kind, p3):
    cum = cumulative_data(p3)
    rec = recover_qr_at_one(jost_at_one(kind, p3, (-8, 8)), cum.D_inf, cum.E_inf)
    assert rec.max_abs_difference(p3) <= 1e-13
    free = recover_qr_at_one(jost_at_one(kind, fixtures.zero_pair(), (-3, 3)), 1.0, 1.0)
    assert np.all(free.first == 0) and np.all(free.second == 0)


def test_transforms_require_qr():
    with pytest.raises(InputError):
        qr_to_uv(fixtures.zero_pair("uv"))
