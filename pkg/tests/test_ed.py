import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import kron_label
from zerofree.ed import (
    NotHermitianError, Spectrum, cached_spectrum, cancellation_ratio, diagonalize, dlog_partition, log_partition,
    observable_exact, otoc_exact, partition_exact,
)
from zerofree.ensembles import InstanceSpec, generate, klocal_pauli, pauli_chain
from zerofree.operators import PAULI, Monomial, OperatorSum


def single(letter, n=1, site=0, c=1.0):
    return OperatorSum.from_terms(PAULI, n, [(c, Monomial.single(letter, site, n))])


def dense_from_labels(h):
    return sum(c * kron_label(m.label()) for c, m in h.monomials())


def test_eigenvalue_examples():
    np.testing.assert_allclose(diagonalize(single("Z")).eigenvalues, [-1, 1])
    rep = OperatorSum.from_terms(PAULI, 3, [(1, Monomial.pauli("ZZI")), (1, Monomial.pauli("IZZ"))])
    np.testing.assert_allclose(diagonalize(rep).eigenvalues, [-2, -2, 0, 0, 0, 0, 2, 2])


def test_partition_examples():
    s = diagonalize(single("Z"))
    v = partition_exact(s, 1.0)
    assert v.log_modulus == pytest.approx(math.log(2 * math.cosh(1)), rel=1e-14) and v.phase == 0
    z = partition_exact(s, 1j * math.pi / 2)
    assert z.is_zero and z.log_modulus == -math.inf and z.value == 0
    rep = OperatorSum.from_terms(PAULI, 3, [(1, Monomial.pauli("ZZI")), (1, Monomial.pauli("IZZ"))])
    got = partition_exact(diagonalize(rep), 0.7).value
    assert got == pytest.approx(8 * math.cosh(0.7) ** 2, rel=1e-12)


def test_observable_examples():
    h = single("Z")
    assert observable_exact(h, h, 1.0) == pytest.approx(-math.tanh(1), rel=1e-12)
    H = klocal_pauli(5, 2, 3, seed=4)
    assert observable_exact(H, single("X", 5, 2), 0.0) == pytest.approx(0, abs=1e-14)


def test_not_hermitian():
    with pytest.raises(NotHermitianError):
        diagonalize(single("Z", c=1j) + single("X"))


def test_large_beta_stays_finite():
    s = diagonalize(klocal_pauli(6, 2, 3, seed=1))
    v = partition_exact(s, 300 + 40j)
    assert math.isfinite(v.log_modulus) and math.isfinite(v.phase)
    import mpmath as mp

    ref = mp.log(mp.fsum(mp.exp(-mp.mpc(300, 40) * mp.mpf(float(e))) for e in s.eigenvalues))
    assert v.log_modulus == pytest.approx(float(mp.re(ref)), rel=1e-12)
    assert abs(math.remainder(v.phase - float(mp.im(ref)), 2 * math.pi)) < 1e-9


@given(st.integers(0, 50), st.floats(0.05, 3.0))
def test_dlog_is_minus_energy(seed, beta):
    h = klocal_pauli(5, 2, 3, seed)
    s = diagonalize(h, vectors=True)
    e = observable_exact(h, h, beta, spectrum=s)
    d = complex(dlog_partition(s.eigenvalues, np.array([beta]))[0])
    assert abs(d.real + e) <= 1e-9 * (1 + abs(e))
    fd = (log_partition(s.eigenvalues, np.array([beta + 1e-5]))[0] - log_partition(s.eigenvalues, np.array([beta - 1e-5]))[0]) / 2e-5
    assert abs(fd.real + e) <= 1e-6 * (1 + abs(e))


@given(st.integers(0, 50))
def test_real_beta_log_convex(seed):
    s = diagonalize(klocal_pauli(5, 2, 3, seed))
    b = np.linspace(-3, 3, 61)
    lz = log_partition(s.eigenvalues, b)
    assert np.all(np.abs(lz.imag) < 1e-12)
    assert np.all(np.diff(lz.real, 2) >= -1e-10)


def test_cancellation_ratio_bounds():
    E = np.array([-1.0, 1.0])
    r = cancellation_ratio(E, np.array([0.3, 1j * math.pi / 2]))
    assert r[0] == pytest.approx(1) and r[1] < 1e-15


def test_otoc_trivial_cases():
    h = pauli_chain(4, seed=2)
    assert otoc_exact(h, 0, 2, 1, 0.0) == pytest.approx(1, abs=1e-14)
    zero = OperatorSum(PAULI, 4, {})
    assert otoc_exact(zero, 0, 2, 2, 0.7) == pytest.approx(1, abs=1e-14)
    with pytest.raises(ValueError):
        otoc_exact(h, 1, 1, 1, 0.2)


def test_otoc_matches_matrix_exponential():
    n = 6
    h = pauli_chain(n, seed=5)
    H = dense_from_labels(h)
    U = expm(-1j * 0.5 * H)
    B = kron_label("X" + "I" * (n - 1))
    M = kron_label("II" + "Z" + "I" * (n - 3))
    Bt = U.conj().T @ B @ U
    Y = Bt @ M
    ref = np.trace(Y @ Y).real / 2**n
    assert otoc_exact(h, 0, 2, 1, 0.5) == pytest.approx(ref, abs=1e-10)
    # basis state
    ref0 = (Y @ Y)[0, 0].real
    assert otoc_exact(h, 0, 2, 1, 0.5, rho="0" * n) == pytest.approx(ref0, abs=1e-10)


def test_spectrum_cache(tmp_path):
    h = generate(InstanceSpec("syk", 8, q=4, seed=2))
    from zerofree.operators import to_pauli

    a = cached_spectrum(to_pauli(h), tmp_path)
    b = cached_spectrum(to_pauli(h), tmp_path)
    assert len(list(tmp_path.iterdir())) == 1
    np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)


def test_spectrum_length_checked():
    with pytest.raises(ValueError):
        Spectrum(np.zeros(3), 4)
