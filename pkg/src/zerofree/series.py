"""Truncated power series and the moment -> cumulant bridge."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import MAJORANA, OperatorSum
from .ed import Spectrum, diagonalize


class SeriesError(ValueError):
    pass


class WorkCapError(SeriesError):
    pass


@dataclass(frozen=True)
class PowerSeries:
    """c_0 + c_1 z + ... + c_K z^K; coefficients beyond K are unknown, not zero."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if len(c) == 0:
            raise SeriesError("a power series needs at least one coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def K(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self):
        return len(self.coeffs)

    def truncate(self, K: int) -> "PowerSeries":
        return PowerSeries(self.coeffs[: K + 1])

    def __call__(self, z):
        """Evaluate the truncation (Horner); z may be an array."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for c in self.coeffs[::-1]:
            out = out * z + c
        return out if out.ndim else complex(out)

    def __add__(self, other):
        if isinstance(other, PowerSeries):
            K = min(self.K, other.K)
            return PowerSeries(self.coeffs[: K + 1] + other.coeffs[: K + 1])
        c = self.coeffs.copy()
        c[0] += other
        return PowerSeries(c)

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PowerSeries):
            return mul(self, other)
        return PowerSeries(self.coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PowerSeries):
            return div(self, other)
        return PowerSeries(self.coeffs / other)

    def __rtruediv__(self, other):
        return div(PowerSeries(np.r_[other, np.zeros(self.K)]), self)

    @classmethod
    def variable(cls, K: int, scale=1.0) -> "PowerSeries":
        c = np.zeros(K + 1, dtype=complex)
        if K >= 1:
            c[1] = scale
        return cls(c)

    @classmethod
    def constant(cls, value, K: int) -> "PowerSeries":
        c = np.zeros(K + 1, dtype=complex)
        c[0] = value
        return cls(c)


def _pair(a: PowerSeries, b: PowerSeries):
    K = min(a.K, b.K)
    return a.coeffs[: K + 1], b.coeffs[: K + 1], K


def mul(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    x, y, K = _pair(a, b)
    return PowerSeries(np.convolve(x, y)[: K + 1])


def div(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    x, y, K = _pair(a, b)
    if y[0] == 0:
        raise SeriesError(f"division needs a nonzero constant term, got {y[0]}")
    c = np.zeros(K + 1, dtype=complex)
    for k in range(K + 1):
        c[k] = (x[k] - np.dot(y[1 : k + 1], c[k - 1 :: -1][:k])) / y[0]
    return PowerSeries(c)


def exp(a: PowerSeries) -> PowerSeries:
    x, K = a.coeffs, a.K
    c = np.zeros(K + 1, dtype=complex)
    c[0] = np.exp(x[0])
    j = np.arange(K + 1)
    for k in range(1, K + 1):
        c[k] = np.dot(j[1 : k + 1] * x[1 : k + 1], c[k - 1 :: -1][:k]) / k
    return PowerSeries(c)


def log(a: PowerSeries) -> PowerSeries:
    """Principal log of the constant term plus the log of the normalized series."""
    x, K = a.coeffs, a.K
    if x[0] == 0:
        raise SeriesError(f"log needs a nonzero constant term, got {x[0]}")
    b = x / x[0]
    c = np.zeros(K + 1, dtype=complex)
    c[0] = np.log(x[0])
    j = np.arange(K + 1)
    for k in range(1, K + 1):
        c[k] = b[k] - np.dot(j[1:k] * c[1:k], b[k - 1 : 0 : -1]) / k
    return PowerSeries(c)


def sqrt(a: PowerSeries) -> PowerSeries:
    x, K = a.coeffs, a.K
    if x[0] == 0:
        raise SeriesError(f"sqrt needs a nonzero constant term, got {x[0]}")
    c = np.zeros(K + 1, dtype=complex)
    c[0] = np.sqrt(x[0])
    for k in range(1, K + 1):
        c[k] = (x[k] - np.dot(c[1:k], c[k - 1 : 0 : -1])) / (2 * c[0])
    return PowerSeries(c)


def power(a: PowerSeries, p) -> PowerSeries:
    """a**p with the principal branch at the constant term (Miller recurrence)."""
    x, K = a.coeffs, a.K
    if x[0] == 0:
        raise SeriesError(f"pow needs a nonzero constant term, got {x[0]}")
    c = np.zeros(K + 1, dtype=complex)
    c[0] = x[0] ** p
    j = np.arange(K + 1)
    for k in range(1, K + 1):
        w = (p + 1) * j[1 : k + 1] - k
        c[k] = np.dot(w * x[1 : k + 1], c[k - 1 :: -1][:k]) / (k * x[0])
    return PowerSeries(c)


FFT_COMPOSE_MIN = 128


def compose(a: PowerSeries, b: PowerSeries) -> PowerSeries:
    """a(b(z)) by Horner's rule; requires b(0) = 0. Long series multiply through FFTs."""
    if b.coeffs[0] != 0:
        raise SeriesError(f"compose needs an inner series with zero constant term, got {b.coeffs[0]}")
    K = min(a.K, b.K)
    inner = b.coeffs[: K + 1]
    out = np.zeros(K + 1, dtype=complex)
    out[0] = a.coeffs[K]
    if K < FFT_COMPOSE_MIN:
        for j in range(K - 1, -1, -1):
            out = np.convolve(out, inner)[: K + 1]
            out[0] += a.coeffs[j]
        return PowerSeries(out)
    nfft = 1 << (2 * K + 1).bit_length()
    fin = np.fft.fft(inner, nfft)
    for j in range(K - 1, -1, -1):
        out = np.fft.ifft(np.fft.fft(out, nfft) * fin)[: K + 1]
        out[0] += a.coeffs[j]
    return PowerSeries(out)


_OPS = {"mul": mul, "div": div, "compose": compose}
_UNARY = {"exp": exp, "log": log, "sqrt": sqrt}


def series_arith(op: str, a: PowerSeries, b=None) -> PowerSeries:
    if op in _UNARY:
        return _UNARY[op](a)
    if op == "pow":
        return power(a, b)
    if not isinstance(a, PowerSeries) and isinstance(b, PowerSeries):
        a = PowerSeries.constant(a, b.K)
    if op in ("mul", "div") and not isinstance(b, PowerSeries):
        return a * b if op == "mul" else a / b
    if op in _OPS:
        return _OPS[op](a, b)
    raise SeriesError(f"unknown series operation {op!r}")


# moments ---------------------------------------------------------------------


def cumulants_from_moments(mu_signed) -> np.ndarray:
    """kappa_r from raw moments mu'_r via the binomial recurrence (small r only)."""
    mu = np.asarray(mu_signed, dtype=float)
    kappa = np.zeros(len(mu))
    for r in range(1, len(mu)):
        kappa[r] = mu[r] - sum(math.comb(r - 1, i - 1) * kappa[i] * mu[r - i] for i in range(1, r))
    return kappa


def moments_to_cumulants(mu, K: int, dim_log: float, scaled: bool = False) -> PowerSeries:
    """Maclaurin series of log Z(t), Z(t) = Tr exp(-tH), from normalized trace moments.

    ``mu[r] = Tr(H^r)/dim``; with ``scaled`` the input is ``Tr(H^r)/dim/r!``.
    The recurrence runs on a_r = kappa_r / r! directly,
    a_r = m_r - sum_{i<r} (i/r) a_i m_{r-i}, with m_r = (-1)^r mu_r / r!,
    which is the binomial moment-cumulant recurrence divided through by r!.
    """
    mu = np.asarray(mu, dtype=complex)
    if abs(mu[0] - 1) > 1e-12:
        raise SeriesError(f"moments must be normalized (mu[0] = 1), got {mu[0]}")
    if K > len(mu) - 1:
        raise SeriesError(f"need {K + 1} moments, got {len(mu)}")
    r = np.arange(K + 1)
    if scaled:
        m = mu[: K + 1] * (-1.0) ** r
    else:
        fact = np.array([math.factorial(int(i)) for i in r], dtype=float)
        m = mu[: K + 1] * (-1.0) ** r / fact
    a = np.zeros(K + 1, dtype=complex)
    for k in range(1, K + 1):
        a[k] = m[k] - np.dot(r[1:k] * a[1:k], m[k - 1 : 0 : -1]) / k
    a[0] = dim_log
    return PowerSeries(a)


def _trace_sign(o: OperatorSum, key) -> float:
    if o.basis == MAJORANA:
        w = bin(key[0]).count("1")
        return -1.0 if (w * (w - 1) // 2) % 2 else 1.0
    return 1.0


def _pair_trace(a: OperatorSum, b: OperatorSum) -> complex:
    """Tr(A B)/dim: only matching keys contribute, P P = sign * identity."""
    small, big = (a, b) if len(a) <= len(b) else (b, a)
    tot = 0j
    for k, v in small.terms.items():
        w = big.terms.get(k)
        if w is not None:
            tot += v * w * _trace_sign(a, k)
    return tot


def moments_symbolic(h: OperatorSum, K: int, work_cap: float = 1e9) -> np.ndarray:
    half = (K + 1) // 2
    powers = [OperatorSum.identity(h.basis, h.size)]
    work = 0
    for _ in range(half):
        work += len(powers[-1]) * len(h)
        if work > work_cap:
            raise WorkCapError(f"symbolic moments exceed the work cap ({work:.3g} > {work_cap:.3g} products)")
        powers.append(powers[-1].matmul(h))
    mu = np.zeros(K + 1, dtype=complex)
    for r in range(K + 1):
        mu[r] = _pair_trace(powers[(r + 1) // 2], powers[r // 2])
    return mu


def moments_spectral(s: Spectrum, K: int, scaled: bool = False) -> np.ndarray:
    """Tr(H^r)/dim by compensated summation over eigenvalues (optionally / r!)."""
    E = s.eigenvalues
    mu = np.zeros(K + 1)
    v = np.ones_like(E)
    for r in range(K + 1):
        mu[r] = math.fsum(v) / s.dim
        v = v * E / (r + 1) if scaled else v * E
    return mu


def moments(h: OperatorSum, K: int, backend: str = "spectral", work_cap: float = 1e9,
            spectrum: Spectrum | None = None, scaled: bool = False) -> np.ndarray:
    if backend == "symbolic":
        mu = moments_symbolic(h, K, work_cap)
        if scaled:
            mu = mu / np.array([math.factorial(r) for r in range(K + 1)], dtype=float)
        return mu
    if backend == "spectral":
        s = spectrum if spectrum is not None else diagonalize(h)
        return moments_spectral(s, K, scaled)
    raise SeriesError(f"unknown moment backend {backend!r}")
