import colorsys
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zerofree.codes import repetition, toric
from zerofree.ed import Spectrum, diagonalize
from zerofree.ensembles import klocal_pauli
from zerofree.zeros import (
    BoundaryError, Levels, Rectangle, ZeroError, count_zeros_rectangle, evaluate_grid, grid_csv, hsv_to_rgb,
    jensen_zero_bound, locate_zeros, match_zeros, newton_zero, render_map,
)

HZ = Spectrum(np.array([-1.0, 1.0]), 2)


def test_count_examples():
    assert count_zeros_rectangle(HZ, Rectangle(-0.5, 0.5, 1, 2)).n == 1
    assert count_zeros_rectangle(HZ, Rectangle(0.5, 1.5, 0, 0.5)).n == 0
    rep = diagonalize(repetition(3).hamiltonian())
    c = count_zeros_rectangle(rep, Rectangle(-0.5, 0.5, 1, 2))
    assert c.n == 2 and abs(float(c) - 2) < 1e-2


def test_boundary_dilation_and_failure():
    # the bottom edge Im = pi/2 runs through the zero
    r = Rectangle(-0.5, 0.5, math.pi / 2, 3)
    c = count_zeros_rectangle(HZ, r)
    assert c.dilations >= 1 and c.n == 1
    with pytest.raises(BoundaryError, match="dilations"):
        count_zeros_rectangle(HZ, r, max_dilations=0)


def test_jensen_examples():
    assert jensen_zero_bound(HZ, 1.0, 0.5) < 0.01
    assert jensen_zero_bound(HZ, 2.0, 1.7) >= 1
    assert jensen_zero_bound(Spectrum(np.array([0.0]), 1), 2.0, 1.0) == 0
    with pytest.raises(ZeroError):
        jensen_zero_bound(HZ, 1.0, 2.0)


def test_locate_single_qubit():
    atlas = locate_zeros(HZ, Rectangle(-1, 1, 0, 2))
    assert atlas.total == 1 and len(atlas.zeros) == 1
    z = atlas.zeros[0]
    assert z.resolved and z.multiplicity == 1
    assert abs(z.location - 1j * math.pi / 2) < 1e-9


def test_empty_atlas():
    atlas = locate_zeros(HZ, Rectangle(0.5, 1.5, 0, 0.5))
    assert atlas.total == 0 and atlas.zeros == [] and atlas.to_dict()["zeros"] == []


def test_multiple_zero_refinement():
    lv = Levels.from_spectrum(diagonalize(toric(2).hamiltonian()))
    beta, res, _, ok = newton_zero(lv, 0.05 + 1.5j, m=6)
    assert ok and abs(beta - 1j * math.pi / 2) < 1e-8


def spectra():
    return st.integers(0, 200).map(lambda s: diagonalize(klocal_pauli(4, 2, 3, s)))


@given(spectra())
def test_count_consistency_and_conjugate_symmetry(s):
    r = Rectangle(-2.03, 2.01, -3.02, 3.07)
    atlas = locate_zeros(s, r)
    assert sum(z.multiplicity for z in atlas.zeros) == atlas.total
    locs = atlas.locations()
    for z in atlas.zeros:
        assert z.resolved
        if abs(z.location.imag) < 3.0:
            assert np.min(np.abs(locs - np.conj(z.location))) < 1e-8


def test_resolved_residuals():
    s = diagonalize(klocal_pauli(5, 2, 3, 11))
    atlas = locate_zeros(s, Rectangle(-3.01, 3.02, -4.03, 4.01))
    lv = Levels.from_spectrum(s)
    for z in atlas.zeros:
        assert z.resolved and lv.ratio(z.location) < 1e-9


def test_match_zeros():
    d = match_zeros(np.array([1j, 2j]), np.array([2.01j, 1.02j]))
    np.testing.assert_allclose(sorted(d), [0.01, 0.02], atol=1e-12)


def test_ppm_header_and_size():
    img = render_map(HZ, Rectangle(-1, 1, -1, 1), resolution=2)
    header = b"P6 2 2 255\n"
    assert img.startswith(header) and len(img) == len(header) + 12


def test_row_minimum_at_zero():
    r = Rectangle(-1, 1, math.pi / 2 - 0.5, math.pi / 2 + 0.5)
    g = evaluate_grid(HZ, r, (41, 41))
    row = g["logz"].real[20]
    assert abs(g["im"][20] - math.pi / 2) < 1e-12
    assert np.argmin(row) == np.argmin(np.abs(g["re"]))


def test_hue_independent_of_gamma():
    r = Rectangle(-1, 1, -1, 2)
    a = np.frombuffer(render_map(HZ, r, 8, gamma=0.1)[len(b"P6 8 8 255\n"):], np.uint8).reshape(-1, 3) / 255
    b = np.frombuffer(render_map(HZ, r, 8, gamma=0.5)[len(b"P6 8 8 255\n"):], np.uint8).reshape(-1, 3) / 255
    for p, q in zip(a, b):
        hp, sp, vp = colorsys.rgb_to_hsv(*p)
        hq, sq, vq = colorsys.rgb_to_hsv(*q)
        if min(vp, vq) > 0.2:
            assert min(abs(hp - hq), 1 - abs(hp - hq)) < 0.02


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_hsv_matches_colorsys(h, s, v):
    np.testing.assert_allclose(hsv_to_rgb(h, s, v), colorsys.hsv_to_rgb(h, s, v), atol=1e-12)


def test_grid_csv_format():
    g = evaluate_grid(HZ, Rectangle(-1, 1, -1, 1), (2, 1))
    lines = grid_csv(g).splitlines()
    assert lines[0] == "beta_re,beta_im,log_abs_z,arg_z" and len(lines) == 3
    assert float(lines[1].split(",")[0]) == -0.5


def test_jobs_do_not_change_results():
    s = diagonalize(klocal_pauli(5, 2, 3, 4))
    r = Rectangle(-3.01, 3.02, -4.03, 4.01)
    a, b = locate_zeros(s, r, jobs=1), locate_zeros(s, r, jobs=4)
    assert a.zeros_json() == b.zeros_json()
    assert render_map(s, r, 16, jobs=1) == render_map(s, r, 16, jobs=3)


def test_bad_rectangle():
    with pytest.raises(ZeroError):
        Rectangle(1, 0, 0, 1)
    with pytest.raises(ZeroError):
        evaluate_grid(HZ, Rectangle(0, 1, 0, 1), 0)
