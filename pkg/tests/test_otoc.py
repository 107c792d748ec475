import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zerofree.ed import otoc_exact
from zerofree.ensembles import klocal_pauli, pauli_chain
from zerofree.operators import PAULI, DimensionCapError, Monomial, OperatorSum
from zerofree.otoc import (
    OtocError, OtocGateError, OtocTask, ad_norm_bound, ball, estimate_otoc, interaction_graph, lr_baseline,
    lr_radius, otoc_series, restrict, sigma_eta, strip_certificate,
)


@pytest.fixture(scope="module")
def chain6():
    return pauli_chain(6, J=1.0, seed=1)


def test_sigma_eta(oracles):
    assert sigma_eta(0.5, 1, 2, 1.0, 2) == pytest.approx(oracles["sigma_eta"], rel=1e-14)
    assert round(sigma_eta(0.5, 1, 2, 1.0, 2), 5) == 0.02294
    assert sigma_eta(1 - 1e-12, 1, 2, 1.0, 2) < 1e-12
    assert sigma_eta(0.3, 2, 2, 2.0, 3) == pytest.approx(sigma_eta(0.3, 2, 2, 1.0, 3) / 2)


def test_task_validation(chain6):
    with pytest.raises(OtocError):
        OtocTask(chain6, 2, 2)
    with pytest.raises(OtocError):
        OtocTask(chain6, 0, 9)
    with pytest.raises(OtocError):
        OtocTask(chain6, 0, 2, k=1)
    task = OtocTask(chain6, 0, 2)
    assert (task.k, task.D) == (2, 2) and task.J == pytest.approx(1.0)
    assert task.c0 == pytest.approx(8.0)


def test_series_trivial(chain6):
    f = otoc_series(OtocTask(chain6, 0, 2, L=2), 12)
    assert f[0] == pytest.approx(1, abs=1e-14)
    zero = OperatorSum(PAULI, 4, {})
    g = otoc_series(OtocTask(zero, 0, 1), 8)
    np.testing.assert_allclose(g.coeffs, np.r_[1, np.zeros(8)], atol=1e-15)


def test_series_matches_exact(chain6):
    f = otoc_series(OtocTask(chain6, 0, 2), 30)
    assert abs(f(0.3) - otoc_exact(chain6, 0, 2, 1, 0.3)) < 1e-8


def test_series_error_decreases_with_K(chain6):
    task = OtocTask(chain6, 0, 2)
    ex = otoc_exact(chain6, 0, 2, 1, 1.0)
    f = otoc_series(task, 40)
    errs = [abs(f.truncate(K)(1.0) - ex) for K in range(6, 41, 2)]
    above = [e for e in errs if e > 1e-12]
    assert above == sorted(above, reverse=True)
    assert errs[-1] < 1e-12


def test_series_basis_state(chain6):
    task = OtocTask(chain6, 1, 3, rho="010101")
    f = otoc_series(task, 30)
    assert abs(f(0.3) - otoc_exact(chain6, 1, 3, 1, 0.3, rho="010101")) < 1e-8


def test_estimate_t_zero(chain6):
    assert estimate_otoc(OtocTask(chain6, 0, 2, t=0.0)).value == 1


def test_gate(chain6):
    task = OtocTask(chain6, 0, 2)
    sig = sigma_eta(0.1, 1, task.k, task.J, task.D)
    with pytest.raises(OtocGateError):
        estimate_otoc(task.with_time(sig / 0.04), eta=0.1)


def test_estimate_weak_chain():
    h = pauli_chain(6, J=0.25, seed=2)
    task = OtocTask(h, 2, 3, t=0.4)
    est = estimate_otoc(task, eps=1e-3, K=1500)
    assert abs(est.value - otoc_exact(h, 2, 3, 1, 0.4)) < 1e-3
    assert est.K == 1500 and not est.capped


def test_estimate_reports_cap(chain6):
    est = estimate_otoc(OtocTask(chain6, 0, 2, t=0.1), K_cap=50)
    assert est.capped and est.K == 50 and est.K_formula > 50


@given(st.floats(-2, 2), st.integers(0, 20))
@settings(max_examples=15)
def test_real_time_otoc_bounded(t, seed):
    h = pauli_chain(5, J=1.0, seed=seed)
    assert abs(otoc_exact(h, 0, 3, 1, t)) <= 1 + 1e-9
    assert abs(otoc_exact(h, 1, 2, 2, t, rho="01100")) <= 1 + 1e-9


def test_strip_certificate(chain6):
    assert strip_certificate(OtocTask(chain6, 0, 2), samples=1000) <= 1 + 1e-9


def test_ball_and_restrict():
    h = pauli_chain(6, seed=0)
    assert interaction_graph(h)[0] == {1}
    assert ball(h, 2, 0) == [2] and ball(h, 2, 1) == [1, 2, 3] and ball(h, 0, 10) == list(range(6))
    r = restrict(h, [1, 2, 3])
    assert r.size == 3 and len(r) == 6


def test_lr_full_ball_is_exact(chain6):
    task = OtocTask(chain6, 0, 3, t=0.5)
    out = lr_baseline(task, R=5)
    assert out["ball_size"] == 6
    assert abs(out["estimate"] - otoc_exact(chain6, 0, 3, 1, 0.5)) < 1e-12


def test_lr_low_R(chain6):
    out = lr_baseline(OtocTask(chain6, 0, 3, t=0.5), R=0)
    assert out["low_R"] and out["qubits"] == [0, 3] and math.isfinite(out["estimate"])


def test_lr_improves_with_R():
    for seed in range(3):
        h = pauli_chain(10, J=1.0, seed=seed)
        task = OtocTask(h, 3, 4, t=0.5)
        ex = otoc_exact(h, 3, 4, 1, 0.5)
        e2 = abs(lr_baseline(task, R=2)["estimate"] - ex)
        e4 = abs(lr_baseline(task, R=4)["estimate"] - ex)
        assert e4 < e2


def test_lr_radius_and_cap(chain6):
    task = OtocTask(chain6, 0, 2, t=0.5)
    assert lr_radius(task, 1e-3) == math.ceil(8 * math.e * 0.5 + math.log(4e3))
    with pytest.raises(DimensionCapError):
        lr_baseline(task, R=5, cap=16)
    with pytest.raises(OtocError):
        lr_baseline(task)


def test_ad_norm_bound(chain6):
    B = Monomial.single("X", 0, 6)
    r0 = ad_norm_bound(chain6, B, 0)
    assert r0["computed_norm"] == pytest.approx(1) and r0["bound"] == 1 and r0["holds"]
    r1 = ad_norm_bound(chain6, B, 1)
    assert r1["holds"] and r1["bound"] == pytest.approx(8.0) and r1["computed_norm"] > 0
    r3 = ad_norm_bound(chain6, B, 3)
    assert r3["holds"] and r3["slack"] >= 1
    with pytest.raises(OtocError):
        ad_norm_bound(chain6, B, 9)


def test_ad_norm_bound_klocal():
    h = klocal_pauli(6, 3, 3, seed=5)
    for r in range(5):
        assert ad_norm_bound(h, Monomial.single("Z", 1, 6), r)["holds"]
