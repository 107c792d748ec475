import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zerofree import maps
from zerofree.maps import MapError, build_strip_map, build_wedge_map, certify_map, strip_params, wedge_params


@pytest.mark.parametrize("rho", ["0.5", "0.25", "0.125", "0.1"])
def test_strip_params_match_oracle(rho, oracles):
    ref = oracles["strip"][rho]
    p = strip_params(float(rho))
    assert p["N_degree"] == ref["N_degree"]
    assert p["alpha"] == pytest.approx(ref["alpha"], rel=1e-14)
    assert p["sigma_norm"] == pytest.approx(ref["sigma_norm"], rel=1e-12)
    assert p["beta_radius"] == pytest.approx(ref["beta_radius"], rel=1e-13)


def test_strip_half():
    p = strip_params(0.5)
    assert p["alpha"] == pytest.approx(1 - math.exp(-2), rel=1e-15)
    assert p["N_degree"] == math.floor(3 * math.e**3) == 60


@pytest.mark.parametrize("rho", [0.5, 0.25, 0.125, 0.1, 1 / 16, 1 / 32])
def test_strip_degree_growth(rho, oracles):
    # rho log N -> 1 + rho + rho log(1 + 1/rho): exponential in 1/rho with unit rate
    N = oracles["strip"][str(rho)]["N_degree"]
    assert rho * math.log(N) == pytest.approx(1 + rho + rho * math.log1p(1 / rho), abs=rho / N + 1e-12)
    if rho <= 1 / 16:
        assert 0.8 <= rho * math.log(N) <= 1.3


@pytest.mark.parametrize("rho", [0.5, 0.25, 0.1])
def test_strip_normalization_and_image(rho):
    m = build_strip_map(rho, 40)
    assert m(0.0) == 0 and m.series[0] == 0
    assert abs(m(1.0) - 1) < 1e-12
    z = m.valid_radius * np.exp(2j * np.pi * np.linspace(0, 1, 400))
    w = m(z)
    assert np.abs(w.imag).max() <= 2 * rho
    assert w.real.min() >= -rho and w.real.max() <= 1 + 2 * rho


def test_strip_partial_sums_converge_at_one():
    m = build_strip_map(0.5, 80)
    vals = [abs(m.series.truncate(K)(1.0) - 1) for K in (10, 20, 40, 60)]
    assert vals == sorted(vals, reverse=True) and vals[-1] < 1e-14


def test_strip_tail_matches_direct_sum(monkeypatch):
    p = strip_params(0.25)
    z = np.array([0.3 + 0.2j, 1.0, p["beta_radius"] * np.exp(0.3j), 0])
    direct = maps.strip_eval(p, z)
    monkeypatch.setattr(maps, "DIRECT_SUM_MAX", 10)
    q = strip_params(0.25)
    assert q["sigma_norm"] == pytest.approx(p["sigma_norm"], rel=1e-13)
    np.testing.assert_allclose(maps.strip_eval(q, z), direct, atol=1e-12)


@pytest.mark.parametrize("rho", ["0.5", "0.25", "0.1"])
def test_wedge_radius(rho, oracles):
    assert wedge_params(float(rho))["R"] == pytest.approx(oracles["wedge_R"][rho], abs=1e-12)
    assert wedge_params(0.2, 0.1)["R"] == pytest.approx(oracles["wedge_R_dtheta"]["0.2,0.1"], abs=1e-12)


def test_wedge_half():
    p = wedge_params(0.5)
    assert p["p"] == 1 and p["M"] == pytest.approx(math.sqrt(5))
    assert p["R"] == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)
    m = build_wedge_map(0.5, 0.0, 60)
    assert m(1.0) == pytest.approx(1, abs=1e-12)
    assert m.series(1.0) == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize("rho,dt", [(0.5, 0.0), (0.25, 0.0), (0.2, 0.1), (0.5, 0.3)])
def test_wedge_series_matches_direct(rho, dt):
    m = build_wedge_map(rho, dt, 400)
    rng = np.random.default_rng(7)
    r = (1 + m.valid_radius) / 2
    z = r * np.sqrt(rng.random(100)) * np.exp(2j * np.pi * rng.random(100))
    assert np.abs(m(z) - m.series(z)).max() < 1e-8


@given(st.floats(0.05, 0.95), st.floats(0, 1.2))
def test_wedge_maps_zero_and_one(rho, dt):
    p = wedge_params(rho, dt)
    assert maps.wedge_eval(p, 0.0) == 0
    assert maps.wedge_eval(p, 1.0) == pytest.approx(1, abs=1e-9)


def test_certify_examples():
    c = certify_map(build_strip_map(0.3, 20), samples=2000)
    assert c.violations == 0 and c.min_margin > 0
    c = certify_map(build_wedge_map(0.2, 0.1, 20), samples=2000)
    assert c.violations == 0
    empty = certify_map(build_strip_map(0.3, 5), samples=0)
    assert empty.samples == 0 and empty.violations == 0


def test_wedge_distance_sign():
    p = wedge_params(0.5, 0.2)
    d = maps.wedge_distance(p, np.array([2j, 0.0, 1.0]))
    assert d[0] < 0 and d[1] == pytest.approx(0.5) and d[2] > 0


def test_bad_parameters():
    for f in (lambda: strip_params(1.2), lambda: wedge_params(0.0), lambda: wedge_params(0.5, 2.0)):
        with pytest.raises(MapError):
            f()
