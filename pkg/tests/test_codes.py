import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zerofree.codes import (
    NO_THRESHOLD, CodeError, S_r, StabilizerCode, anticommuting_set, from_dict, max_product_energy, named_code,
    perturbed_stabilizer_partition, product_state_energy, repetition, separability_bound, stabilizer_partition, steane,
    toric,
)
from zerofree.ed import diagonalize, observable_exact, partition_exact
from zerofree.operators import PAULI, Monomial, OperatorSum
from zerofree.zeros import Levels, Rectangle, count_zeros_rectangle

CODES = [repetition(3), toric(2), steane(), repetition(5)]


def test_code_parameters():
    assert (repetition(3).m, repetition(3).k) == (2, 1)
    assert (toric(2).n, toric(2).m, toric(2).k) == (8, 6, 2)
    assert (steane().n, steane().m, steane().k) == (7, 6, 1)
    assert toric(3).k == 2


@pytest.mark.parametrize("code", CODES, ids=lambda c: c.name)
def test_closed_form_matches_ed(code):
    s = diagonalize(code.hamiltonian())
    for z in (0.7, 0.3 + 0.4j, 1.2 - 2j, -0.5 + 3j):
        ex, cf = partition_exact(s, z).value, stabilizer_partition(code, z).value
        assert abs(ex - cf) <= 1e-12 * abs(cf)


def test_closed_form_examples():
    rep = repetition(3)
    assert stabilizer_partition(rep, 0.7).value == pytest.approx(8 * math.cosh(0.7) ** 2, rel=1e-14)
    assert stabilizer_partition(rep, 0).value == pytest.approx(8)
    zero = stabilizer_partition(rep, 1j * math.pi / 2)
    assert zero.is_zero
    lv = stabilizer_partition(toric(2), 400.0)
    assert lv.log_modulus == pytest.approx(8 * math.log(2) + 6 * (400 - math.log(2)), rel=1e-14)


@pytest.mark.parametrize("code", CODES, ids=lambda c: c.name)
def test_gibbs_energy(code):
    H = code.hamiltonian()
    for beta in (0.2, 0.5, 1.3):
        # checks are rewarded: the Gibbs weight is exp(+beta H)
        assert observable_exact(-H, H, beta) == pytest.approx(code.m * math.tanh(beta), rel=1e-10)


def test_anticommuting_set_toric():
    code = toric(2)
    for q in range(code.n):
        A = Monomial.single("X", q, code.n)
        plaq = [c for c in code.all_checks() if c.label()[q] == "Z"]
        assert len(plaq) == 2
        got = [code.checks[i] for i in anticommuting_set(code, A)]
        assert all(c.label()[q] == "Z" for c in got)
        assert {c.key for c in got} == {c.key for c in plaq if c in code.checks}


def test_anticommuting_set_trivial():
    code = steane()
    assert anticommuting_set(code, Monomial.identity(PAULI, 7)) == []
    assert anticommuting_set(code, code.checks[2]) == []


def test_S_r_at_zero_delta():
    for r in range(5):
        for z in (0.3, 1 + 0.5j):
            assert S_r(r, z, 0.0) == pytest.approx((2 * np.cosh(z)) ** r, rel=1e-13)


def test_perturbed_matches_ed():
    code = repetition(3)
    A = Monomial.single("X", 0, 3)
    assert len(anticommuting_set(code, A)) == 1
    delta = 0.1
    Hp = code.hamiltonian() + OperatorSum.from_terms(PAULI, 3, [(delta, A)])
    for z in (1.0, 0.4 + 0.7j):
        ex = partition_exact(diagonalize(-Hp), z).value
        assert perturbed_stabilizer_partition(code, A, delta, z) == pytest.approx(ex, rel=1e-10)
    assert perturbed_stabilizer_partition(code, A, 0.37, 0.0) == pytest.approx(2**3)


def test_perturbed_toric_matches_ed():
    code = toric(2)
    A = Monomial.pauli("XXIIIIII")
    Hp = code.hamiltonian() + OperatorSum.from_terms(PAULI, 8, [(0.2, A)])
    ex = partition_exact(diagonalize(-Hp), 0.6 + 0.3j).value
    assert perturbed_stabilizer_partition(code, A, 0.2, 0.6 + 0.3j) == pytest.approx(ex, rel=1e-10)


def test_perturbed_rejects_stabilizer_elements():
    code = steane()
    with pytest.raises(CodeError):
        perturbed_stabilizer_partition(code, code.checks[0], 0.1, 1.0)
    with pytest.raises(CodeError):
        perturbed_stabilizer_partition(code, Monomial.identity(PAULI, 7), 0.1, 1.0)


def S_r_levels(r, delta):
    """S_r(z) = sum_j C(r, j) cosh(z w_j) as a level set sum g e^{-z E} with E = +-w_j."""
    w = np.sqrt((r - 2 * np.arange(r + 1)) ** 2 + delta**2)
    mult = np.array([math.comb(r, j) for j in range(r + 1)], dtype=float)
    E = np.r_[w, -w]
    g = np.r_[mult, mult] / 2
    u, inv = np.unique(np.round(E, 12), return_inverse=True)
    return Levels(u, np.bincount(inv, weights=g), 0.0)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_perturbed_zero_free_strip(r):
    # scan delta upward; the strip |Im z| <= 1 stays zero-free up to the first delta that fails
    box = Rectangle(-5, 5, -1, 1)
    free = [d for d in (0.0, 0.05, 0.1, 0.2) if count_zeros_rectangle(S_r_levels(r, d), box).n == 0]
    assert free[:2] == [0.0, 0.05]
    lv = S_r_levels(r, 0.1)
    assert abs(np.exp(-1.3 * lv.E) @ lv.g - S_r(r, 1.3, 0.1)) < 1e-10 * abs(S_r(r, 1.3, 0.1))


def test_toric_threshold(oracles):
    rep = separability_bound(toric(2))
    np.testing.assert_allclose(rep.vectors, np.tile([0.5, 0.0, 0.5], (8, 1)))
    assert rep.bound == pytest.approx(8 / math.sqrt(2))
    assert rep.threshold_beta == pytest.approx(oracles["toric_threshold"], abs=1e-12)
    assert abs(rep.threshold_beta - 0.88137) < 1e-5


def test_repetition_has_no_threshold():
    code = repetition(3)
    rep = separability_bound(code)
    assert rep.bound == pytest.approx(2) and not rep.has_threshold
    assert rep.to_dict()["threshold"] == {"kind": NO_THRESHOLD}
    assert max_product_energy(list(code.checks), code.signs, 3, restarts=5) == pytest.approx(2, abs=1e-6)


def test_w_star():
    rep = separability_bound(toric(2))
    assert rep.details["w_star"] == pytest.approx(1 - (2 - math.sqrt(2)) / 4 * (1 + 2 / 6))


@pytest.mark.parametrize("code", CODES, ids=lambda c: c.name)
def test_bound_holds_for_random_product_states(code):
    checks = code.all_checks()
    signs = list(code.signs) + [0] * (len(checks) - code.m)
    bound = separability_bound(code).bound
    rng = np.random.default_rng(0)
    for _ in range(300):
        v = rng.normal(size=(code.n, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        assert product_state_energy(checks, signs, v) <= bound + 1e-12


def test_code_json_round_trip():
    for code in (steane(), repetition(4)):
        back = from_dict(code.to_dict())
        assert back.checks == code.checks and back.m == code.m


def test_invalid_codes():
    with pytest.raises(CodeError):
        StabilizerCode(2, (Monomial.pauli("XI"), Monomial.pauli("ZI")), (0, 0))
    with pytest.raises(CodeError):
        StabilizerCode(2, (Monomial.pauli("ZZ"), Monomial.pauli("ZZ")), (0, 0))
    with pytest.raises(CodeError):
        named_code("surface")
