import math

import pytest

import supermem


def test_fixed_point_values():
    t = supermem.fixed_point(0.5, 1, 10)
    assert t.a_at(1) == pytest.approx(0.5)
    assert t.a_at(2) == pytest.approx(0.25)
    assert t.a_at(3) == pytest.approx(1.0 / 24)
    assert t.alpha == pytest.approx((3 + math.sqrt(5)) / 2)


def test_cutoff_and_tilde():
    t = supermem.fixed_point(0.5, 1, 20)
    d = supermem.cutoff_d(t, 1e6)
    assert d == 4
    assert supermem.tilde_a(t, 1e6, d) > 0


def test_ode_and_mu():
    ts, xs = supermem.integrate([0.0, 0.0, 0.0], 0.5, 1, 1.0, 1e-9)
    assert ts[0] == 0.0
    assert ts[-1] == pytest.approx(1.0)
    x1 = xs[-1][0]
    assert 0 < x1 <= 0.5
    assert supermem.mu_of([0.5], 2, 1) == pytest.approx(0.5)


def test_stationary_matches_mu():
    pi = supermem.stationary([0.5], 0.3, 2, 10)
    assert sum(pi) == pytest.approx(1.0)
    assert sum(pi[1:]) == pytest.approx(supermem.mu_of([0.5], 2, 1), abs=1e-10)


def test_simulate_smoke():
    out = supermem.simulate(0.5, 2, 50, 1.0, 123)
    assert out["arrivals"] >= 0
    assert out["t"][-1] == pytest.approx(1.0)
    again = supermem.simulate(0.5, 2, 50, 1.0, 123)
    assert out["z"] == again["z"]


def test_hypothesis_report_text():
    text = supermem.hypothesis_report(0.5, 1, math.log(1e6), 1.0, 4.0)
    assert "flet_ok" in text
