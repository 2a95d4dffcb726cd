import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conic_ch import indicial as ind
from conic_ch.geometry import circle_spectrum, sphere_spectrum


def values(roots):
    return sorted(r.value.real for r in roots)


def test_q_delta_circle_alpha1():
    roots = ind.q_delta(1, circle_spectrum(1.0, 4))
    assert values(roots) == [-4, -3, -2, -1, 0, 1, 2, 3, 4]
    zero = [r for r in roots if r.value == 0]
    assert len(zero) == 1 and zero[0].multiplicity == 2


def test_q_delta_sphere():
    roots = ind.q_delta(2, sphere_spectrum(2, 10))
    assert values(roots) == sorted([-j for j in range(11)] + [j + 1 for j in range(11)])


def test_q_delta_circle_alpha08():
    got = values(ind.q_delta(1, circle_spectrum(0.8, 2)))
    assert got == pytest.approx([-2.5, -1.25, 0.0, 1.25, 2.5], abs=1e-12)


def test_q_delta_squared_examples():
    got = values(ind.q_delta_squared(1, circle_spectrum(0.8, 1)))
    assert got == pytest.approx([-3.25, -2.0, -1.25, -0.75, 0.0, 1.25], abs=1e-12)
    only0 = ind.q_delta_squared(3, circle_spectrum(1.0, 0))
    assert values(only0) == [-2.0, 0.0, 0.0, 2.0]


@given(st.integers(1, 5), st.integers(1, 8))
def test_root_pairs_sum(n, j):
    sp = sphere_spectrum(n, j)
    by = {}
    for r in ind.q_delta_squared(n, sp):
        by.setdefault((r.source_lambda, r.shifted), []).append(r)
    for (lam, shifted), rs in by.items():
        if len(rs) == 2:
            assert sum(r.value for r in rs).real == pytest.approx(n - 5 if shifted else n - 1)
        else:
            assert rs[0].multiplicity == 2


def test_q_delta_subset_and_zero():
    sp = circle_spectrum(0.7, 5)
    a, b = ind.q_delta(1, sp), ind.q_delta_squared(1, sp)
    vals_b = [r.value for r in b]
    assert all(r.value in vals_b for r in a)
    assert any(r.value == 0 for r in a)


@pytest.mark.parametrize("n,lam,lo,hi", [(1, -1, -1, 0), (1, -1.5625, -1, 0.25), (2, -2, -0.5, 0.5)])
def test_gamma_window(n, lam, lo, hi):
    w = ind.gamma_window(n, lam)
    assert abs(w.lo - lo) <= 1e-12 and abs(w.hi - hi) <= 1e-12


@given(st.integers(1, 6), st.floats(-50, -1e-3), st.floats(1.0, 2.0))
def test_gamma_window_properties(n, lam, k):
    w = ind.gamma_window(n, lam)
    assert w.lo == (n - 3) / 2 and w.hi <= (n + 1) / 2
    assert ind.gamma_window(n, lam / k).hi <= w.hi + 1e-15


def test_minimal_domain_clean():
    sp = circle_spectrum(1.0, 6)
    assert ind.minimal_domain_clean(1, sp, -0.5)
    assert not ind.minimal_domain_clean(1, sp, 0.0)
    assert ind.minimal_domain_clean(1, circle_spectrum(0.8, 6), -0.75)


def test_asymptotics_alpha1():
    terms = ind.asymptotics_space(1, ind.covering_spectrum(1, -0.5, 1.0), -0.5)
    assert sorted(t.rho.real for t in terms) == [-2.0, -1.0]
    assert all(t.max_log_power == 3 for t in terms)


def test_asymptotics_alpha08():
    terms = ind.asymptotics_space(1, ind.covering_spectrum(1, 0.2, 0.8), 0.2)
    assert sorted(t.rho.real for t in terms) == pytest.approx([-2.5, -2.0, -1.25])


def test_asymptotics_outside_window():
    with pytest.raises(ind.IndicialError):
        ind.asymptotics_space(1, circle_spectrum(1, 8), 0.5)


def test_truncated_spectrum_refused():
    with pytest.raises(ind.IndicialError):
        ind.asymptotics_space(1, circle_spectrum(0.8, 2), 0.2)


@given(st.floats(-0.95, -0.05))
def test_strip_terms_inside(gamma):
    terms = ind.asymptotics_space(1, ind.covering_spectrum(1, gamma, 1.0), gamma)
    lo, hi = ind.strip(1, gamma)
    assert all(lo - 1e-12 <= t.rho.real < hi for t in terms)


def test_delta0():
    terms = [ind.AsymptoticTerm(-1.0), ind.AsymptoticTerm(-2.0)]
    assert ind.delta0(terms, -0.5, 1) == pytest.approx((0.5, 0.45))
    assert ind.delta0([], 0.0, 1) == (2.0, 1.8)
    sup, _ = ind.delta0([ind.AsymptoticTerm(-1.25)], 0.2, 1)
    assert sup == pytest.approx(0.05)


def test_report_and_json():
    rep = ind.report(1, ind.covering_spectrum(1, -0.5, 1.0), -0.5)
    assert tuple(rep.gamma_window) == (-1.0, 0.0)
    assert rep.delta0_sup == 0.5
    d = rep.to_dict()
    for key in ("q_delta", "q_delta2", "gamma_window", "terms", "delta0_sup", "delta0_chosen",
                "minimal_domain_clean"):
        assert key in d
    ok = ind.report(1, ind.covering_spectrum(1, 0.1, 0.8), 0.1)
    assert 0.1 in ok.gamma_window
    with pytest.raises(ind.IndicialError):
        ind.report(1, circle_spectrum(1.0, 8), 0.5)


def test_weighted_index_validation():
    with pytest.raises(ind.IndicialError):
        ind.WeightedIndex(-1, 0)
    with pytest.raises(ind.IndicialError):
        ind.WeightedIndex(1, 0, 1.0)
    assert math.isfinite(ind.WeightedIndex(2, 1.5).gamma)
