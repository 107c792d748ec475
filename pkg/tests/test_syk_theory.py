import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zerofree.syk_theory import (
    F, SaddleError, action, critical_point, dominance_scan, harmonicity_check, large_q_green, solve_cstar,
    zero_free_prediction,
)

bs = st.complex_numbers(max_magnitude=6, allow_nan=False, allow_infinity=False).filter(
    lambda b: abs(b.real) > 0.05 or abs(b.imag) < 1.2)


def test_critical_point(oracles):
    cp = critical_point()
    ref = oracles["critical"]
    assert cp.y == pytest.approx(ref["y"], abs=1e-13)
    assert cp.c0 == pytest.approx(1j * ref["c0_im"], abs=1e-12)
    assert cp.b0 == pytest.approx(1j * ref["b0_im"], abs=1e-12)
    assert abs(cp.b0 - 1.3255j) < 1e-3 and abs(cp.c0 - 2.3994j) < 1e-3


def test_small_b(oracles):
    s = solve_cstar(0.1)
    assert s.c_star == pytest.approx(complex(*oracles["cstar"]["0.1"]), abs=1e-13)
    assert round(s.c_star.real, 7) == 0.0998753
    assert solve_cstar(1 + 1j).c_star == pytest.approx(complex(*oracles["cstar"]["1+1j"]), abs=1e-12)


def test_large_real_b():
    c = solve_cstar(50).c_star
    assert math.pi - 0.3 <= c.real <= math.pi


def test_b_zero():
    s = solve_cstar(0)
    assert s.c_star == 0 and s.action == 0


@given(bs)
def test_conjugation(b):
    a, c = solve_cstar(b), solve_cstar(np.conj(b))
    assert abs(a.c_star - np.conj(c.c_star)) < 1e-10 * (1 + abs(a.c_star))
    assert a.residual < 1e-10 * (1 + abs(b))


@given(st.complex_numbers(max_magnitude=0.3, allow_nan=False, allow_infinity=False))
def test_near_zero_branch(b):
    # c = b - b^3/8 + O(b^5)
    assert abs(solve_cstar(b).c_star - b) <= abs(b) ** 3 / 4 + 1e-15


def test_excluded_ray():
    with pytest.raises(SaddleError):
        solve_cstar(2j)


def test_zero_free_prediction(oracles):
    assert zero_free_prediction(1.0).half_height == pytest.approx(oracles["large_q_half_height"]["1"], abs=1e-12)
    assert zero_free_prediction(2.0).half_height == pytest.approx(oracles["large_q_half_height"]["2"], abs=1e-12)
    region = zero_free_prediction(1.0)
    assert region.contains(1j) and not region.contains(2j) and region.contains(0.01 + 5j)
    np.testing.assert_array_equal(region.contains(np.array([1j, 2j])), [True, False])
    with pytest.raises(SaddleError):
        zero_free_prediction(0.0)


def test_harmonicity():
    assert harmonicity_check() < 0.05
    assert harmonicity_check(func=lambda b: np.real(b**2)) < 1e-10
    with pytest.raises(SaddleError):
        harmonicity_check(re_range=(-0.2, 0.2), im_range=(1.0, 2.0))
    with pytest.raises(SaddleError):
        harmonicity_check(h=0.05)


def test_green_function():
    beta = 2.0
    c = solve_cstar(beta).c_star
    assert large_q_green(c, beta, 0.0) == pytest.approx(0, abs=1e-14)
    h = 1e-5
    d = (large_q_green(c, beta, beta / 2 + h) - large_q_green(c, beta, beta / 2 - h)) / (2 * h)
    assert abs(d) < 1e-6
    for tau in np.linspace(0, beta, 7):
        assert abs(large_q_green(1e-8, beta, tau)) < 1e-15
    with pytest.raises(SaddleError):
        large_q_green(c, beta, 3.0)


def test_action_and_equation():
    s = solve_cstar(2.0)
    assert abs(F(s.c_star, 2.0)) < 1e-13
    assert s.action == pytest.approx(action(s.c_star))


def test_dominance_scan_runs():
    out = dominance_scan(2.0)
    assert out["c_star_dominant"] in (True, False)
    assert out["c_star"] == solve_cstar(2.0).c_star
