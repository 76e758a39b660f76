import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnls import fixtures
from dnls.boundstates import MatrixTriplet, as_matrix_triplet
from dnls.errors import InputError
from dnls.lattice import cumulative_data
from dnls.marchenko import MarchenkoTables, kernel_from_triplets, standard_residual
from dnls.scattering import scatter
from dnls.soliton import (
    U_matrices,
    explicit_solution_tables,
    propagators,
    soliton_qr,
    soliton_uv,
    sylvester,
    transport_triplets,
)
from dnls.transforms import qr_to_uv

from conftest import assert_close
from oracles import soliton_qr_reference


def _scalar_triplets(c=1.0):
    one = np.ones((1, 1), dtype=complex)
    return (
        MatrixTriplet(0.5 * one, one, c * one, "inside"),
        MatrixTriplet(2.0 * one, one, one, "outside"),
    )


def test_sylvester_scalar_examples():
    s = sylvester(*_scalar_triplets())
    assert_close(s.Upsilon, [[4 / 3]], 1e-15)
    assert_close(s.Upsilonbar, [[4 / 3]], 1e-15)
    assert np.all(sylvester(*_scalar_triplets(0.0)).Upsilonbar == 0)


def test_sylvester_residual(family):
    _, (inside, outside) = family
    s = sylvester(inside, outside)
    A = as_matrix_triplet(inside)
    Ab = as_matrix_triplet(outside)
    Abinv = np.linalg.inv(Ab.A)
    assert_close(s.Upsilon - A.A @ s.Upsilon @ Abinv, A.B @ Ab.C, 1e-12)
    assert_close(s.Upsilonbar - Abinv @ s.Upsilonbar @ A.A, Ab.B @ A.C, 1e-12)


def test_propagators_examples():
    inside, outside = _scalar_triplets()
    p0 = propagators(*fixtures.one_soliton(), 0.0)
    assert_close(p0.E, np.eye(2), 0.0)
    assert_close(p0.Ebar, np.eye(2), 0.0)
    p1 = propagators(inside, outside, 1.0)
    assert_close(p1.E, [[np.exp(-2.25j)]], 1e-15)
    assert_close(p1.Ebar, [[np.exp(2.25j)]], 1e-15)


@given(st.sampled_from(sorted(fixtures.SOLITON_FAMILIES)), st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=30, deadline=None)
def test_propagator_group(name, t, s):
    inside, outside = fixtures.SOLITON_FAMILIES[name]()
    a, b, ab = (propagators(inside, outside, x) for x in (t, s, t + s))
    assert_close(a.E @ b.E, ab.E, 1e-12)
    assert_close(a.Ebar @ b.Ebar, ab.Ebar, 1e-12)


def test_empty_triplets_give_zero():
    pair = soliton_qr(None, None, 0.3, (-5, 5))
    assert np.all(pair.first == 0) and np.all(pair.second == 0)


@pytest.mark.parametrize("t", [0.0, 0.4])
def test_matches_extended_precision_reference(family, t):
    _, (inside, outside) = family
    q, r = soliton_qr_reference(inside, outside, t, range(-8, 9))
    pair = soliton_qr(inside, outside, t, (-8, 8))
    assert_close(pair.first, q, 1e-12)
    assert_close(pair.second, r, 1e-12)


@pytest.mark.parametrize("t", [0.0, 0.7])
def test_tau_route_matches_row_sums(family, t):
    _, (inside, outside) = family
    a = soliton_qr(inside, outside, t, (-20, 20))
    b = soliton_qr(inside, outside, t, (-20, 20), route="tau")
    assert a.max_abs_difference(b) <= 1e-10


def test_route_validation():
    with pytest.raises(InputError):
        soliton_qr(*fixtures.one_soliton(), route="other")


def test_reflection_vanishes(family):
    _, (inside, outside) = family
    pair = soliton_qr(inside, outside, 0.0, (-60, 60)).trimmed(1e-17)
    d = scatter("qr", pair, bound_states="none")
    assert np.abs(d.R).max() <= 1e-8 and np.abs(d.Rbar).max() <= 1e-8


def test_soliton_uv_matches_transform(family):
    _, (inside, outside) = family
    pair = soliton_qr(inside, outside, 0.0, (-60, 60))
    cum = cumulative_data(pair)
    tr = transport_triplets(inside, outside, cum.D_inf, cum.E_inf)
    got = soliton_uv(tr.inside_uv, tr.outside_uv, 0.0, (-15, 15))
    want = qr_to_uv(pair).on(-15, 15)
    assert got.max_abs_difference(want) <= 1e-9


def test_transport_unit_limits():
    tr = transport_triplets(*fixtures.one_soliton(), 1.0, 1.0)
    assert_close(tr.inside_uv.C, [[-3.0]], 1e-15)
    assert_close(tr.outside_uv.C, [[4 / 3]], 1e-15)
    assert_close(tr.inside_ps.C, [[1.0]], 1e-15)
    assert_close(tr.sylvester_ps.Upsilon, tr.sylvester_qr.Upsilon, 0.0)


@pytest.mark.parametrize("n", [-12, -3, 0, 6])
def test_explicit_tables_satisfy_marchenko(family, n):
    _, (inside, outside) = family
    kern = kernel_from_triplets(inside, outside, (-80, 220))
    m = n + 2 * np.arange(1, 61)
    ex = explicit_solution_tables(inside, outside, 0.0, n, m)
    one, zero = np.array([1.0 + 0j]), np.array([0j])
    tab = MarchenkoTables(
        "qr",
        n,
        np.concatenate([zero, ex.first]),
        np.concatenate([one, ex.second]),
        np.concatenate([one, ex.bar_first]),
        np.concatenate([zero, ex.bar_second]),
    )
    scale = max(1.0, float(np.abs(kern.at(2 * n + 2))), float(np.abs(kern.atbar(2 * n + 2))))
    assert standard_residual(kern, tab) <= 1e-10 * scale


def test_U_matrices_tend_to_identity():
    inside, outside = fixtures.one_soliton()
    U, Ub = U_matrices(inside, outside, 0.0, 40)
    assert_close(U, np.eye(2), 1e-12)
    assert_close(Ub, np.eye(2), 1e-12)
