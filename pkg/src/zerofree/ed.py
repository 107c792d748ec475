"""Exact diagonalization and log-domain evaluation of Z at complex beta."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .operators import PAULI, DimensionCapError, OperatorError, OperatorSum, to_dense, to_pauli

DIAGONAL_CAP = 2**20
EPS = np.finfo(float).eps


class NotHermitianError(OperatorError):
    pass


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    dim: int
    eigenvectors: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.eigenvalues, dtype=float)
        object.__setattr__(self, "eigenvalues", e)
        if len(e) != self.dim:
            raise ValueError("spectrum length must equal the Hilbert dimension")

    @property
    def norm(self) -> float:
        e = self.eigenvalues
        return float(max(abs(e[0]), abs(e[-1]))) if len(e) else 0.0


@dataclass(frozen=True)
class LogValue:
    """log Z as (log|Z|, arg Z); a vanishing Z has log_modulus = -inf and is_zero set."""

    log_modulus: float
    phase: float
    is_zero: bool = False

    @property
    def value(self) -> complex:
        if self.is_zero:
            return 0j
        return complex(np.exp(self.log_modulus + 1j * self.phase))

    @property
    def log(self) -> complex:
        return complex(self.log_modulus, self.phase)


def _is_diagonal(o: OperatorSum) -> bool:
    return o.basis == PAULI and all(x == 0 for x, _ in o.terms)


def diagonal_energies(o: OperatorSum) -> np.ndarray:
    """Energies of a Z-only Pauli Hamiltonian on every computational basis state."""
    n = o.size
    if 2**n > DIAGONAL_CAP:
        raise DimensionCapError(f"dimension 2^{n} exceeds diagonal cap {DIAGONAL_CAP}")
    b = np.arange(2**n, dtype=np.int64)
    E = np.zeros(2**n)
    for (_, z), c in o.terms.items():
        if abs(c.imag) > 1e-12 * (1 + abs(c)):
            raise NotHermitianError("diagonal term with complex coefficient")
        E += c.real * (1 - 2 * (np.bitwise_count(b & z) & 1).astype(np.int64))
    return E


def diagonalize(o: OperatorSum, vectors: bool = False, cap: int | None = None) -> Spectrum:
    if _is_diagonal(o) and not vectors:
        return Spectrum(np.sort(diagonal_energies(o)), 2**o.size)
    H = to_dense(o, cap=cap) if cap else to_dense(o)
    asym = np.max(np.abs(H - H.conj().T)) if H.size else 0.0
    if asym > 1e-10 * (1 + np.max(np.abs(H))):
        raise NotHermitianError(f"operator is not Hermitian (max asymmetry {asym:.3g})")
    H = 0.5 * (H + H.conj().T)
    if vectors:
        w, v = np.linalg.eigh(H)
        return Spectrum(w, H.shape[0], v)
    return Spectrum(np.linalg.eigvalsh(H), H.shape[0])


def log_partition(E: np.ndarray, beta) -> np.ndarray:
    """Complex log Z(beta) = log sum_k exp(-beta E_k), vectorized over beta.

    Zeros are returned as -inf real part. Shifted by max_k Re(-beta E_k).
    """
    beta = np.asarray(beta, dtype=complex)
    E = np.asarray(E, dtype=float)
    out = np.empty(beta.shape, dtype=complex)
    flat_b = beta.ravel()
    flat_o = out.ravel()
    chunk = max(1, 2**22 // max(len(E), 1))
    for s in range(0, len(flat_b), chunk):
        b = flat_b[s:s + chunk, None]
        a = -b * E[None, :]
        shift = a.real.max(axis=1, keepdims=True)
        w = np.exp(a - shift)
        tot = w.sum(axis=1)
        mag = np.abs(w).sum(axis=1)
        zero = np.abs(tot) <= 8 * EPS * mag
        with np.errstate(divide="ignore"):
            val = np.log(tot) + shift[:, 0]
        val[zero] = -np.inf
        flat_o[s:s + chunk] = val
    return out


def dlog_partition(E: np.ndarray, beta) -> np.ndarray:
    """d/dbeta log Z = -sum E e^{-beta E} / sum e^{-beta E}."""
    beta = np.asarray(beta, dtype=complex)
    E = np.asarray(E, dtype=float)
    flat = beta.ravel()
    out = np.empty(flat.shape, dtype=complex)
    chunk = max(1, 2**22 // max(len(E), 1))
    for s in range(0, len(flat), chunk):
        b = flat[s:s + chunk, None]
        a = -b * E[None, :]
        w = np.exp(a - a.real.max(axis=1, keepdims=True))
        with np.errstate(divide="ignore", invalid="ignore"):
            out[s:s + chunk] = -(w * E[None, :]).sum(axis=1) / w.sum(axis=1)
    return out.reshape(beta.shape)


def cancellation_ratio(E: np.ndarray, beta) -> np.ndarray:
    """|Z(beta)| / sum_k |e^{-beta E_k}|; near zero means beta is close to a zero of Z."""
    beta = np.asarray(beta, dtype=complex)
    flat = beta.ravel()
    out = np.empty(flat.shape)
    chunk = max(1, 2**22 // max(len(E), 1))
    for s in range(0, len(flat), chunk):
        b = flat[s:s + chunk, None]
        a = -b * np.asarray(E)[None, :]
        w = np.exp(a - a.real.max(axis=1, keepdims=True))
        out[s:s + chunk] = np.abs(w.sum(axis=1)) / np.abs(w).sum(axis=1)
    return out.reshape(beta.shape)


def partition_exact(s: Spectrum, beta: complex) -> LogValue:
    if not np.isfinite(complex(beta)):
        raise ValueError("beta must be finite")
    lz = complex(log_partition(s.eigenvalues, np.array([beta]))[0])
    if np.isneginf(lz.real):
        return LogValue(-math.inf, 0.0, True)
    return LogValue(lz.real, math.remainder(lz.imag, 2 * math.pi))


def _same_system(h: OperatorSum, o: OperatorSum):
    if h.n_qubits != o.n_qubits:
        raise OperatorError(f"dimension mismatch: {h.dim} vs {o.dim}")


def _dense_pair(h: OperatorSum, o: OperatorSum):
    _same_system(h, o)
    if h.basis != o.basis:
        h, o = to_pauli(h), to_pauli(o)
    return to_dense(h), to_dense(o)


def observable_exact(h: OperatorSum, o: OperatorSum, beta: float, spectrum: Spectrum | None = None) -> float:
    """Tr(O exp(-beta H)) / Z for real beta."""
    _same_system(h, o)
    if h.basis != o.basis:
        h, o = to_pauli(h), to_pauli(o)
    s = spectrum if spectrum is not None and spectrum.eigenvectors is not None else diagonalize(h, vectors=True)
    O = to_dense(o)
    V = s.eigenvectors
    diag = np.einsum("ij,ik,kj->j", V.conj(), O, V)
    a = -float(beta) * s.eigenvalues
    w = np.exp(a - a.max())
    return float(np.real(np.dot(w, diag) / w.sum()))


# OTOC -------------------------------------------------------------------------


def single_pauli_dense(letter: str, site: int, n: int) -> np.ndarray:
    from .operators import Monomial, monomial_dense

    return monomial_dense(Monomial.single(letter, site, n), cap=2**n)


def state_matrix(rho, n: int) -> np.ndarray | None:
    """None for the maximally mixed state, else the basis projector |bits><bits|."""
    if rho is None or rho == "maximally_mixed":
        return None
    bits = rho
    if isinstance(rho, str):
        bits = [int(ch) for ch in rho]
    if len(bits) != n or any(b not in (0, 1) for b in bits):
        raise ValueError(f"unsupported state {rho!r}; expected 'maximally_mixed' or {n} bits")
    idx = int("".join(str(b) for b in bits), 2)
    return idx


def otoc_exact(h: OperatorSum, b_site: int, m_site: int, L: int, t, rho="maximally_mixed",
               b_letter: str = "X", m_letter: str = "Z", spectrum: Spectrum | None = None):
    """f_{2L}(t) = Tr[rho (B(t) M)^{2L}] with B(t) = e^{iHt} B e^{-iHt}; t may be complex."""
    if b_site == m_site:
        raise ValueError("B and M must act on distinct qubits")
    hp = to_pauli(h)
    n = hp.size
    s = spectrum if spectrum is not None and spectrum.eigenvectors is not None else diagonalize(hp, vectors=True)
    V, E = s.eigenvectors, s.eigenvalues
    B = V.conj().T @ single_pauli_dense(b_letter, b_site, n) @ V
    M = V.conj().T @ single_pauli_dense(m_letter, m_site, n) @ V
    t = complex(t)
    Bt = np.exp(1j * t * E)[:, None] * B * np.exp(-1j * t * E)[None, :]
    Y = Bt @ M
    X = np.linalg.matrix_power(Y, 2 * L)
    idx = state_matrix(rho, n)
    if idx is None:
        val = np.trace(X) / s.dim
    else:
        row = V[idx, :]  # |idx> has eigenbasis coordinates conj(row)
        val = row @ X @ row.conj()
    if t.imag == 0:
        return float(np.real(val)) if abs(np.imag(val)) < 1e-9 else complex(val)
    return complex(val)


# spectrum cache --------------------------------------------------------------


def instance_hash(o: OperatorSum) -> str:
    items = sorted((x, z, round(c.real, 17), round(c.imag, 17)) for (x, z), c in o.terms.items())
    payload = json.dumps([o.basis, o.size, items])
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def cached_spectrum(o: OperatorSum, cache_dir=None) -> Spectrum:
    if cache_dir is None:
        return diagonalize(o)
    path = Path(cache_dir) / f"spectrum-{instance_hash(o)}.json"
    if path.exists():
        d = json.loads(path.read_text())
        return Spectrum(np.array(d["eigenvalues"]), d["dim"])
    s = diagonalize(o)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"dim": s.dim, "eigenvalues": [float(f"{e:.17g}") for e in s.eigenvalues]}))
    return s
