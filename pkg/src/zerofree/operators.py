"""Pauli strings, Majorana monomials and sparse operator sums.

Monomials are stored with bit masks. A Pauli string on ``n`` qubits uses the
symplectic pair ``(x, z)`` with letters I=(0,0), X=(1,0), Z=(0,1), Y=(1,1);
qubit ``j`` is bit ``j``. A Majorana monomial over ``N`` modes uses ``x`` as
the index mask (mode ``j`` is bit ``j``, zero based) and ``z = 0``; the
product is always kept in ascending index order. Majoranas are
gamma-normalized (gamma_j**2 = 1); physical fermions psi = gamma / sqrt(2)
are obtained by rescaling coefficients when ensembles are built.

Dense realization uses Jordan-Wigner with qubit 0 as the leftmost tensor
factor::

    gamma_{2j}   = Z x ... x Z x X x I x ... (X on qubit j)
    gamma_{2j+1} = Z x ... x Z x Y x I x ...

(zero based; in one-based labels gamma_{2j-1} carries X and gamma_{2j}
carries Y on qubit j).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

PAULI = "pauli"
MAJORANA = "majorana"

DENSE_CAP = 2**13

_PHASES = (1, 1j, -1, -1j)

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_I = np.eye(2, dtype=complex)
_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _LETTER.items()}


class OperatorError(ValueError):
    pass


class DimensionCapError(OperatorError):
    pass


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class Monomial:
    """A phased Pauli string or Majorana monomial.

    ``phase`` is the exponent k of i**k.
    """

    basis: str
    size: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.basis not in (PAULI, MAJORANA):
            raise OperatorError(f"unknown basis {self.basis!r}")
        if self.basis == MAJORANA:
            if self.size % 2:
                raise OperatorError(f"majorana system needs an even number of modes, got {self.size}")
            if self.z:
                raise OperatorError("majorana monomials carry no z mask")
        limit = 1 << self.size
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise OperatorError(f"index out of range for system size {self.size}")
        object.__setattr__(self, "phase", self.phase % 4)

    @property
    def key(self) -> tuple[int, int]:
        return (self.x, self.z)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def factor(self) -> complex:
        return _PHASES[self.phase]

    @property
    def weight(self) -> int:
        if self.basis == PAULI:
            return _popcount(self.x | self.z)
        return _popcount(self.x)

    def support(self) -> list[int]:
        mask = self.x | self.z
        return [j for j in range(self.size) if mask >> j & 1]

    def label(self):
        """Letter string for Pauli ("XIZY"), index list for Majorana."""
        if self.basis == PAULI:
            return "".join(_LETTER[(self.x >> j & 1, self.z >> j & 1)] for j in range(self.size))
        return self.support()

    @classmethod
    def pauli(cls, letters: str, phase: int = 0) -> "Monomial":
        x = z = 0
        for j, ch in enumerate(letters.upper()):
            try:
                bx, bz = _BITS[ch]
            except KeyError:
                raise OperatorError(f"bad Pauli letter {ch!r}") from None
            x |= bx << j
            z |= bz << j
        return cls(PAULI, len(letters), x, z, phase)

    @classmethod
    def single(cls, letter: str, site: int, n: int) -> "Monomial":
        if not 0 <= site < n:
            raise OperatorError(f"site {site} out of range for {n} qubits")
        return cls.pauli("I" * site + letter + "I" * (n - site - 1))

    @classmethod
    def majorana(cls, indices: Iterable[int], size: int, phase: int = 0) -> "Monomial":
        """Product gamma_{i1} gamma_{i2} ... in the given order (zero based)."""
        mono = cls(MAJORANA, size, 0, 0, phase)
        for i in indices:
            if not 0 <= i < size:
                raise OperatorError(f"mode {i} out of range for {size} modes")
            mono = monomial_product(mono, cls(MAJORANA, size, 1 << i))
        return mono

    @classmethod
    def identity(cls, basis: str, size: int) -> "Monomial":
        return cls(basis, size)


def _pauli_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    # cyclic X->Y->Z products pick up +i, anti-cyclic -i
    X1, Y1, Z1 = x1 & ~z1, x1 & z1, ~x1 & z1
    X2, Y2, Z2 = x2 & ~z2, x2 & z2, ~x2 & z2
    plus = _popcount((X1 & Y2) | (Y1 & Z2) | (Z1 & X2))
    minus = _popcount((Y1 & X2) | (Z1 & Y2) | (X1 & Z2))
    return plus - minus


def _majorana_sign(a: int, b: int) -> int:
    """Number of transpositions (mod 2) to merge sorted products a*b."""
    swaps = 0
    while b:
        low = b & -b
        # elements of a strictly above this element of b must be crossed
        swaps += _popcount(a & ~((low << 1) - 1))
        b ^= low
    return swaps & 1


def monomial_product(a: Monomial, b: Monomial) -> Monomial:
    if a.basis != b.basis or a.size != b.size:
        raise OperatorError(f"cannot multiply {a.basis}[{a.size}] by {b.basis}[{b.size}]")
    if a.basis == PAULI:
        ph = a.phase + b.phase + _pauli_phase(a.x, a.z, b.x, b.z)
        return Monomial(PAULI, a.size, a.x ^ b.x, a.z ^ b.z, ph)
    ph = a.phase + b.phase + 2 * _majorana_sign(a.x, b.x)
    return Monomial(MAJORANA, a.size, a.x ^ b.x, 0, ph)


def commutes(a: Monomial, b: Monomial) -> bool:
    ab = monomial_product(a, b)
    ba = monomial_product(b, a)
    return ab.phase == ba.phase


# vectorized kernels over arrays of keys; used by the symbolic moment backend


def _pauli_phase_vec(x1, z1, x2, z2):
    X1, Y1, Z1 = x1 & ~z1, x1 & z1, ~x1 & z1
    X2, Y2, Z2 = x2 & ~z2, x2 & z2, ~x2 & z2
    plus = np.bitwise_count((X1 & Y2) | (Y1 & Z2) | (Z1 & X2))
    minus = np.bitwise_count((Y1 & X2) | (Z1 & Y2) | (X1 & Z2))
    return plus.astype(np.int64) - minus.astype(np.int64)


def _majorana_sign_vec(a, b, size):
    swaps = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
    for j in range(size):
        bit = (b >> j) & 1
        above = a & ~np.int64((1 << (j + 1)) - 1)
        swaps += bit * np.bitwise_count(above).astype(np.int64)
    return swaps & 1


def _product_table(basis, size, xa, za, xb, zb):
    """Keys and phase factors for all products a_i * b_j (outer)."""
    xa, za = xa[:, None], za[:, None]
    xb, zb = xb[None, :], zb[None, :]
    if basis == PAULI:
        ph = _pauli_phase_vec(xa, za, xb, zb)
    else:
        ph = 2 * _majorana_sign_vec(xa, xb, size)
    return xa ^ xb, za ^ zb, np.asarray(_PHASES, dtype=complex)[ph % 4]


@dataclass(frozen=True)
class OperatorSum:
    """Sparse operator: canonical monomial key -> complex coefficient.

    Monomial phases are folded into the coefficient so that each key appears
    once. ``meta`` carries ensemble provenance (kind, seed, couplings, and the
    rescaling factor applied to raw couplings).
    """

    basis: str
    size: int
    terms: Mapping[tuple[int, int], complex] = field(default_factory=dict)
    meta: Mapping = field(default_factory=dict)

    @classmethod
    def from_terms(cls, basis, size, pairs, meta=None, tol=None) -> "OperatorSum":
        acc: dict[tuple[int, int], complex] = {}
        for coef, mono in pairs:
            if mono.basis != basis or mono.size != size:
                raise OperatorError("term does not match operator system")
            c = complex(coef) * mono.factor
            acc[mono.key] = acc.get(mono.key, 0) + c
        if tol is not None:
            acc = {k: v for k, v in acc.items() if abs(v) > tol}
        return cls(basis, size, acc, dict(meta or {}))

    @classmethod
    def identity(cls, basis, size, coef=1.0) -> "OperatorSum":
        return cls(basis, size, {(0, 0): complex(coef)})

    @property
    def n_qubits(self) -> int:
        return self.size if self.basis == PAULI else self.size // 2

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def __len__(self):
        return len(self.terms)

    def monomials(self):
        for (x, z), c in self.terms.items():
            yield c, Monomial(self.basis, self.size, x, z)

    def _check(self, other: "OperatorSum"):
        if self.basis != other.basis or self.size != other.size:
            raise OperatorError("operators act on different systems")

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        self._check(other)
        acc = dict(self.terms)
        for k, v in other.terms.items():
            acc[k] = acc.get(k, 0) + v
        return OperatorSum(self.basis, self.size, {k: v for k, v in acc.items() if v != 0}, self.meta)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "OperatorSum":
        return OperatorSum(self.basis, self.size, {k: v * s for k, v in self.terms.items()}, self.meta)

    def __mul__(self, other):
        if isinstance(other, OperatorSum):
            return self.matmul(other)
        return self.scale(other)

    __rmul__ = scale

    def _arrays(self):
        keys = np.array(list(self.terms.keys()), dtype=np.int64).reshape(-1, 2)
        coefs = np.array(list(self.terms.values()), dtype=complex)
        return keys[:, 0], keys[:, 1], coefs

    def matmul(self, other: "OperatorSum", tol: float = 0.0) -> "OperatorSum":
        self._check(other)
        if not self.terms or not other.terms:
            return OperatorSum(self.basis, self.size, {})
        xa, za, ca = self._arrays()
        xb, zb, cb = other._arrays()
        x, z, ph = _product_table(self.basis, self.size, xa, za, xb, zb)
        c = (ca[:, None] * cb[None, :] * ph).ravel()
        keys = x.ravel() << np.int64(32) | z.ravel() if self.size <= 31 else None
        if keys is not None:
            uniq, inv = np.unique(keys, return_inverse=True)
            summed = np.zeros(len(uniq), dtype=complex)
            np.add.at(summed, inv, c)
            mask = np.abs(summed) > tol
            terms = {(int(u >> 32), int(u & 0xFFFFFFFF)): complex(v) for u, v in zip(uniq[mask], summed[mask])}
            return OperatorSum(self.basis, self.size, terms)
        acc: dict = {}
        for xi, zi, ci in zip(x.ravel(), z.ravel(), c):
            k = (int(xi), int(zi))
            acc[k] = acc.get(k, 0) + ci
        return OperatorSum(self.basis, self.size, {k: v for k, v in acc.items() if abs(v) > tol})

    def dagger(self) -> "OperatorSum":
        out = {}
        for (x, z), c in self.terms.items():
            mono = Monomial(self.basis, self.size, x, z)
            # reversing a Majorana product of weight w costs (-1)^{w(w-1)/2}
            sign = 1
            if self.basis == MAJORANA:
                w = mono.weight
                sign = -1 if (w * (w - 1) // 2) % 2 else 1
            out[(x, z)] = np.conj(c) * sign
        return OperatorSum(self.basis, self.size, out, self.meta)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        diff = self - self.dagger()
        return all(abs(v) <= tol for v in diff.terms.values())

    def norm_bound(self) -> float:
        """Sum of |coefficients|; an upper bound on the operator norm."""
        return float(sum(abs(v) for v in self.terms.values()))

    def with_meta(self, **kw) -> "OperatorSum":
        return OperatorSum(self.basis, self.size, self.terms, {**self.meta, **kw})


def normalized_trace(o: OperatorSum) -> complex:
    return complex(o.terms.get((0, 0), 0.0))


# dense realization -----------------------------------------------------------


def _kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _majorana_letters(index: int, n_qubits: int) -> list:
    j, odd = divmod(index, 2)
    return [_Z] * j + [_Y if odd else _X] + [_I] * (n_qubits - j - 1)


def monomial_dense(m: Monomial, cap: int = DENSE_CAP) -> np.ndarray:
    n = m.size if m.basis == PAULI else m.size // 2
    if 2**n > cap:
        raise DimensionCapError(f"dimension 2^{n} exceeds cap {cap}")
    if m.basis == PAULI:
        mats = []
        for j in range(n):
            mats.append({(0, 0): _I, (1, 0): _X, (0, 1): _Z, (1, 1): _Y}[(m.x >> j & 1, m.z >> j & 1)])
        return m.factor * _kron_all(mats)
    out = np.eye(2**n, dtype=complex)
    for i in m.support():
        out = out @ _kron_all(_majorana_letters(i, n))
    return m.factor * out


def _pauli_dense_fast(x: int, z: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Permutation form of a Pauli string: P|b> = val[b] |b ^ xmask>."""
    # qubit 0 is the most significant bit of the basis index
    xm = zm = 0
    for j in range(n):
        if x >> j & 1:
            xm |= 1 << (n - 1 - j)
        if z >> j & 1:
            zm |= 1 << (n - 1 - j)
    b = np.arange(2**n, dtype=np.int64)
    ny = _popcount(x & z)
    sign = 1 - 2 * (np.bitwise_count(b & zm) & 1).astype(np.int64)
    # Y = i X Z acting on |b>: Z first gives the sign, X flips, i per Y
    val = sign * (1j**ny)
    return b ^ xm, val


def to_dense(o: OperatorSum, cap: int = DENSE_CAP) -> np.ndarray:
    n = o.n_qubits
    dim = 2**n
    if dim > cap:
        raise DimensionCapError(f"dimension {dim} exceeds cap {cap}")
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for (x, z), c in o.terms.items():
        if o.basis == PAULI:
            rows, val = _pauli_dense_fast(x, z, n)
        else:
            rows, val = _majorana_as_pauli(x, n)
        out[rows, cols] += c * val
    return out


def majorana_to_pauli(mask: int, n_qubits: int) -> tuple[int, int, int]:
    """Jordan-Wigner image (x, z, phase) of the ascending product over ``mask``."""
    mono = Monomial(PAULI, n_qubits)
    for i in range(2 * n_qubits):
        if mask >> i & 1:
            j, odd = divmod(i, 2)
            letters = "Z" * j + ("Y" if odd else "X") + "I" * (n_qubits - j - 1)
            mono = monomial_product(mono, Monomial.pauli(letters))
    return mono.x, mono.z, mono.phase


def _majorana_as_pauli(mask: int, n: int):
    x, z, ph = majorana_to_pauli(mask, n)
    rows, val = _pauli_dense_fast(x, z, n)
    return rows, val * _PHASES[ph]


def to_pauli(o: OperatorSum) -> OperatorSum:
    if o.basis == PAULI:
        return o
    n = o.n_qubits
    terms: dict = {}
    for (x, _), c in o.terms.items():
        px, pz, ph = majorana_to_pauli(x, n)
        terms[(px, pz)] = terms.get((px, pz), 0) + c * _PHASES[ph]
    return OperatorSum(PAULI, n, terms, o.meta)


# serialization ---------------------------------------------------------------


def to_json_dict(o: OperatorSum) -> dict:
    system = {"qubits": o.size} if o.basis == PAULI else {"majoranas": o.size}
    terms = []
    for c, mono in o.monomials():
        terms.append({"re": float(np.real(c)), "im": float(np.imag(c)), "monomial": mono.label()})
    return {"kind": o.meta.get("kind", "custom"), "system": system, "terms": terms, "meta": dict(o.meta)}


def from_json_dict(d: dict) -> OperatorSum:
    system = d["system"]
    if "qubits" in system:
        basis, size = PAULI, int(system["qubits"])
    elif "majoranas" in system:
        basis, size = MAJORANA, int(system["majoranas"])
    else:
        raise OperatorError("system must give 'qubits' or 'majoranas'")
    pairs = []
    for t in d["terms"]:
        mono = t["monomial"]
        if isinstance(mono, str):
            if basis != PAULI or len(mono) != size:
                raise OperatorError(f"bad Pauli label {mono!r}")
            m = Monomial.pauli(mono)
        else:
            idx = [int(i) for i in mono]
            if idx != sorted(set(idx)):
                raise OperatorError(f"majorana index list must be strictly increasing: {mono}")
            m = Monomial.majorana(idx, size)
        pairs.append((complex(t["re"], t.get("im", 0.0)), m))
    meta = dict(d.get("meta", {}))
    meta.setdefault("kind", d.get("kind", "custom"))
    return OperatorSum.from_terms(basis, size, pairs, meta)


def dumps(o: OperatorSum) -> str:
    return json.dumps(to_json_dict(o), indent=1, default=_json_default)


def loads(s: str) -> OperatorSum:
    return from_json_dict(json.loads(s))


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    raise TypeError(f"not serializable: {type(v)}")
