"""One test per acceptance criterion, each at its stated tolerance.

Every test prints a single PASS/FAIL line, collected again in the terminal
summary.
"""

import time

import numpy as np
from conftest import record

from dnls import fixtures
from dnls.boundstates import (
    BoundStateTriplet,
    MatrixTriplet,
    TripletBlock,
    find_simple_poles,
    jordan_block,
    kernel_contributions,
    sign_pattern,
    triplets_from_potential,
)
from dnls.grid import SpectralGrid
from dnls.ist import conserved_check, ist_solve, residual_order
from dnls.lattice import PotentialPair, cumulative_data, jost_solutions
from dnls.marchenko import (
    METHODS,
    build_kernels,
    diagonal_prediction,
    diagonal_value,
    invert,
    kernel_from_triplets,
    kernels_for_uv_and_ps,
    row_sum_matrix,
    row_sum_prediction,
    solve_standard,
)
from dnls.scattering import COEFFICIENTS, limits_from_grid, scatter, verify_identities
from dnls.soliton import explicit_solution_tables, soliton_qr
from dnls.transforms import qr_to_ps, qr_to_uv, relate_jost, relate_scattering

WINDOW = (-32, 32)


def _identity_fixtures():
    """(label, kind, pair) for every admissible fixture of the identity suite."""
    p3 = fixtures.p3()
    one = soliton_qr(*fixtures.one_soliton(), 0.0, WINDOW).trimmed(1e-16)
    out = [
        ("zero", "qr", fixtures.zero_pair()),
        ("qr single site", "qr", PotentialPair.from_sites("qr", {0: 0.5}, {0: 0.4})),
        ("uv single site", "uv", PotentialPair.from_sites("uv", {0: 0.5}, {})),
        ("P3", "qr", p3),
        ("P3 uv", "uv", qr_to_uv(p3)),
        ("P3 ps", "ps", qr_to_ps(p3)),
        ("one-soliton", "qr", one),
    ]
    out += [(f"random {i}", "qr", p) for i, p in enumerate(fixtures.roundtrip_pairs(seed=11, count=5))]
    return out


def test_criterion_1_roundtrip_inversion():
    tol, budget = 1e-8, 60.0
    grid = SpectralGrid(1024)
    start = time.perf_counter()
    worst = dict.fromkeys(METHODS, 0.0)
    for pair in fixtures.roundtrip_pairs(seed=0, count=20):
        data = scatter("qr", pair, grid)
        assert data.inside.is_empty and data.outside.is_empty
        for method in METHODS:
            err = invert(data, method, WINDOW).max_abs_difference(pair)
            worst[method] = max(worst[method], err)
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= tol and elapsed <= budget
    detail = ", ".join(f"{m}={e:.1e}" for m, e in worst.items())
    record(1, ok, f"round trip, 20 pairs, max error {detail}; {elapsed:.1f} s (tol {tol:g}, {budget:g} s)")
    assert ok


def test_criterion_2_identity_suite():
    tol = 1e-10
    worst, where = 0.0, ""
    for label, kind, pair in _identity_fixtures():
        report = verify_identities(scatter(kind, pair, bound_states="none"))
        name, value = max(report.items(), key=lambda kv: kv[1])
        if value > worst:
            worst, where = value, f"{label}: {name}"
    ok = worst <= tol
    record(2, ok, f"identity suite max violation {worst:.1e} ({where}) (tol {tol:g})")
    assert ok


def _jost_agreement(pair, z):
    cum = cumulative_data(pair)
    jq = jost_solutions("qr", pair, z)
    worst = 0.0
    for system, transform in (("uv", qr_to_uv), ("ps", qr_to_ps)):
        related = relate_jost(f"{system}->qr", jost_solutions(system, transform(pair), z), cum, pair)
        lo, hi = max(related.n_lo, jq.n_lo) + 1, min(related.n_hi, jq.n_hi) - 1
        for name in ("psi", "phi", "psibar", "phibar"):
            for n in range(lo, hi + 1):
                worst = max(worst, float(np.abs(related.at(name, n) - jq.at(name, n)).max()))
    return worst


def _product_identities(pair):
    n = np.arange(pair.n_min - 2, pair.n_max + 3)
    q, r = pair.values(n)
    q1, r1 = pair.values(n + 1)
    uv, ps = qr_to_uv(pair), qr_to_ps(pair)
    u, v = uv.values(n)
    p, s = ps.values(n)
    worst = float(np.abs((1 - u * v) * (1 - q * r) * (1 + q * r1) - 1).max())
    worst = max(worst, float(np.abs((1 - p * s) * (1 - q1 * r1) * (1 + q * r1) - 1).max()))
    cq, cuv, cps = cumulative_data(pair), cumulative_data(uv), cumulative_data(ps)
    worst = max(worst, float(np.abs(cuv.D_at(n) * cq.D_at(n) * cq.E_at(n) - 1).max()))
    worst = max(worst, float(np.abs(cps.D_at(n) * cq.D_at(n + 1) * cq.E_at(n) - 1).max()))
    worst = max(worst, abs(cuv.D_inf * cq.D_inf * cq.E_inf - 1), abs(cps.D_inf * cq.D_inf * cq.E_inf - 1))
    return worst


def test_criterion_3_cross_system_consistency():
    tol_rel, tol_prod = 1e-10, 1e-12
    grid = SpectralGrid(512)
    z = np.exp(1j * np.linspace(0.1, 3.0, 9))
    pairs = [fixtures.p3()] + fixtures.roundtrip_pairs(seed=5, count=4)
    scat = jost = prod = 0.0
    for pair in pairs:
        data = scatter("qr", pair, grid, bound_states="none")
        for predicted, kind, transform in zip(relate_scattering(data), ("uv", "ps"), (qr_to_uv, qr_to_ps)):
            direct = scatter(kind, transform(pair), grid, bound_states="none")
            for name in COEFFICIENTS:
                scat = max(scat, float(np.abs(getattr(predicted, name) - getattr(direct, name)).max()))
            scat = max(scat, abs(predicted.D_inf - direct.D_inf))
        jost = max(jost, _jost_agreement(pair, z))
        prod = max(prod, _product_identities(pair))
    ok = scat <= tol_rel and jost <= tol_rel and prod <= tol_prod
    record(
        3,
        ok,
        f"relate_scattering {scat:.1e}, relate_jost {jost:.1e} (tol {tol_rel:g}); products {prod:.1e} (tol {tol_prod:g})",
    )
    assert ok


def test_criterion_4_soliton_pde_residual():
    tol, h = 1e-6, 1e-4
    worst_res, worst_slope, lines = 0.0, 0.0, []
    for name, make in sorted(fixtures.SOLITON_FAMILIES.items()):
        inside, outside = make()

        def sampler(t, inside=inside, outside=outside):
            return soliton_qr(inside, outside, t, (WINDOW[0] - 2, WINDOW[1] + 2))

        for t in (0.0, 0.5, 1.0):
            slope, norms = residual_order(sampler, t, h, WINDOW, halvings=2)
            worst_res = max(worst_res, norms[0])
            worst_slope = max(worst_slope, abs(slope - 2.0))
            lines.append(f"{name} t={t}: {norms[0]:.1e}/{slope:.2f}")
    ok = worst_res <= tol and worst_slope <= 0.2
    record(4, ok, f"max residual {worst_res:.1e} (tol {tol:g}), max |slope-2| {worst_slope:.3f} (tol 0.2)")
    assert ok, "; ".join(lines)


def test_criterion_5_explicit_vs_numeric_marchenko():
    tol = 1e-10
    tables_err = tau_err = 0.0
    for name, make in sorted(fixtures.SOLITON_FAMILIES.items()):
        inside, outside = make()
        for t in (0.0, 0.5, 1.0):
            kernel = kernel_from_triplets(inside, outside, (-80, 300), t=t)
            for n in range(WINDOW[0], WINDOW[1] + 1):
                num = solve_standard(kernel, n)
                m = num.m[1:]
                ex = explicit_solution_tables(inside, outside, t, n, m)
                for a, b in (
                    (num.first[1:], ex.first),
                    (num.second[1:], ex.second),
                    (num.bar_first[1:], ex.bar_first),
                    (num.bar_second[1:], ex.bar_second),
                ):
                    tables_err = max(tables_err, float(np.abs(a - b).max()))
            z7 = soliton_qr(inside, outside, t, WINDOW, route="z7")
            tau = soliton_qr(inside, outside, t, WINDOW, route="tau")
            tau_err = max(tau_err, z7.max_abs_difference(tau))
    ok = tables_err <= tol and tau_err <= tol
    record(5, ok, f"closed form vs solve_standard {tables_err:.1e}, tau vs row-sum route {tau_err:.1e} (tol {tol:g})")
    assert ok


def test_criterion_6_conservation():
    tol_T, tol_DE = 1e-7, 1e-8
    times = (0.0, 0.25, 0.5, 0.75, 1.0)
    grid = SpectralGrid(1024)
    families = {
        "P3": [(t, ist_solve(fixtures.p3(), t)) for t in times],
        "one-soliton": [(t, soliton_qr(*fixtures.one_soliton(), t, WINDOW).trimmed(1e-16)) for t in times],
    }
    one0 = families["one-soliton"][0][1]
    families["one-soliton IST"] = [(t, ist_solve(one0, t)) for t in times]
    T = DE = 0.0
    for fam in families.values():
        rep = conserved_check(fam, grid)
        T = max(T, rep.T_drift)
        DE = max(DE, rep.D_drift, rep.E_drift)
    ok = T <= tol_T and DE <= tol_DE
    record(6, ok, f"T drift {T:.1e} (tol {tol_T:g}), D_inf/E_inf drift {DE:.1e} (tol {tol_DE:g}), t in [0, 1]")
    assert ok


def test_criterion_7_bound_state_closure():
    tol_z, tol_c = 1e-6, 1e-5
    inside, outside = fixtures.one_soliton()
    pair = soliton_qr(inside, outside, 0.0, WINDOW).trimmed(1e-16)
    poles_in, poles_out = find_simple_poles(pair)
    assert len(poles_in) == 1 and len(poles_out) == 1
    z_err = max(abs(poles_in[0].z - 0.5), abs(poles_out[0].z - 2.0))
    found_in, found_out = triplets_from_potential(pair)
    c_err = max(abs(found_in.blocks[0].C[0] - 1.0), abs(found_out.blocks[0].C[0] - 1.0))
    ok = z_err <= tol_z and c_err <= tol_c
    record(7, ok, f"poles +-0.5, +-2 error {z_err:.1e} (tol {tol_z:g}); norming constants {c_err:.1e} (tol {tol_c:g})")
    assert ok


def test_criterion_8_kernel_symmetry():
    k = np.arange(2, 65)
    even = k % 2 == 0
    cases = [
        ("inside", 0.5, [1.0]),
        ("inside", 0.3 + 0.4j, [1.3 - 0.2j]),
        ("inside", 0.7, [0.2, 0.5]),
        ("inside", -0.2 + 0.6j, [0.2, 0.5, 1.5 + 1j]),
        ("outside", 2.0, [1.0]),
        ("outside", 1.7 - 0.6j, [0.7, -1.1j]),
        ("outside", 1 / 0.7, [0.2, 0.5]),
    ]
    pm = odd = total = 0.0
    for side, z, C in cases:
        m = len(C)
        C = np.asarray(C, dtype=complex)
        e = np.eye(m)[:, -1:]
        plus = kernel_contributions(MatrixTriplet(jordan_block(z, m), e, 0.5 * C, side), k)
        minus = kernel_contributions(MatrixTriplet(jordan_block(-z, m), e, 0.5 * C * sign_pattern(m), side), k)
        block = kernel_contributions(BoundStateTriplet(side, (TripletBlock(z, C),)), k)
        pm = max(pm, float(np.abs(plus[even] - minus[even]).max()))
        odd = max(odd, float(np.abs(block[~even]).max()), float(np.abs((plus + minus)[~even]).max()))
        total = max(total, float(np.abs(block[even] - (plus + minus)[even]).max()))
    ok = pm == 0.0 and odd == 0.0 and total == 0.0
    record(8, ok, f"+-z contributions differ by {pm:g} (even k), odd-k kernel {odd:g}, block vs pair {total:g}; k in [2, 64]")
    assert ok


def test_criterion_9_marchenko_identities():
    tol = 1e-9
    diag = rows = 0.0
    sites = range(-12, 13)
    for pair in [fixtures.p3(), fixtures.zero_pair()] + fixtures.roundtrip_pairs(seed=9, count=3):
        data = scatter("qr", pair)
        lim = limits_from_grid(data)
        kernel = build_kernels(data, (sites[0] - 2, sites[-1] + 2))
        _, ps = kernels_for_uv_and_ps(kernel, lim.D_inf, lim.E_inf)
        ps_pair = qr_to_ps(pair)
        for n in sites:
            rows = max(rows, float(np.abs(row_sum_matrix(solve_standard(kernel, n)) - row_sum_prediction(pair, n)).max()))
            diag = max(diag, float(np.abs(diagonal_value(ps, solve_standard(ps, n)) - diagonal_prediction(ps_pair, n)).max()))
    # reflectionless fixtures with exact triplet kernels
    for name, make in sorted(fixtures.SOLITON_FAMILIES.items()):
        inside, outside = make()
        pair = soliton_qr(inside, outside, 0.0, (-60, 60))
        cum = cumulative_data(pair)
        kernel = kernel_from_triplets(inside, outside, (-80, 400))
        _, ps = kernels_for_uv_and_ps(kernel, cum.D_inf, cum.E_inf)
        ps_pair = qr_to_ps(pair)
        for n in range(WINDOW[0], WINDOW[1] + 1):
            rows = max(rows, float(np.abs(row_sum_matrix(solve_standard(kernel, n)) - row_sum_prediction(pair, n)).max()))
            diag = max(diag, float(np.abs(diagonal_value(ps, solve_standard(ps, n)) - diagonal_prediction(ps_pair, n)).max()))
    ok = diag <= tol and rows <= tol
    record(9, ok, f"diagonal identity {diag:.1e}, row-sum identity {rows:.1e} (tol {tol:g})")
    assert ok
