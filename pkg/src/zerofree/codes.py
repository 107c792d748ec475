"""Stabilizer-code Hamiltonians H = sum_i C_i: closed-form and perturbed Z, separability bounds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .ed import LogValue
from .operators import PAULI, Monomial, OperatorSum, commutes

MAX_R = 20
NO_THRESHOLD = "no-entanglement-threshold"


class CodeError(ValueError):
    pass


def _gf2_rank(rows: list[int]) -> int:
    basis: list[int] = []
    for v in rows:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
    return len(basis)


def _symplectic(m: Monomial) -> int:
    return m.x | (m.z << m.size)


@dataclass(frozen=True)
class StabilizerCode:
    """Independent commuting checks (-1)^{b_i} C_i; ``redundant`` holds dependent extras (toric)."""

    n: int
    checks: tuple
    signs: tuple
    d: int | None = None
    name: str = "custom"
    redundant: tuple = ()

    def __post_init__(self):
        if len(self.signs) != len(self.checks):
            raise CodeError("one sign per check is required")
        if any(s not in (0, 1) for s in self.signs):
            raise CodeError("signs must be 0 or 1")
        allc = list(self.checks) + list(self.redundant)
        for c in allc:
            if c.basis != PAULI or c.size != self.n:
                raise CodeError(f"checks must be {self.n}-qubit Pauli strings")
            if c.is_identity:
                raise CodeError("identity is not a valid check")
        for a, b in itertools.combinations(allc, 2):
            if not commutes(a, b):
                raise CodeError(f"checks {a.label()} and {b.label()} do not commute")
        if _gf2_rank([_symplectic(c) for c in self.checks]) != len(self.checks):
            raise CodeError("checks are not independent")

    @property
    def m(self) -> int:
        return len(self.checks)

    @property
    def k(self) -> int:
        return self.n - self.m

    @property
    def weights(self) -> list[int]:
        return [c.weight for c in self.checks]

    def all_checks(self) -> list[Monomial]:
        return list(self.checks) + list(self.redundant)

    def hamiltonian(self, include_redundant: bool = False) -> OperatorSum:
        checks = self.all_checks() if include_redundant else list(self.checks)
        signs = list(self.signs) + [0] * (len(checks) - self.m)
        pairs = [((-1.0) ** s, c) for c, s in zip(checks, signs)]
        meta = {"kind": "stabilizer", "code": self.name, "n": self.n, "k": self.k, "m": len(checks),
                "coupling_factor": [1.0, 0.0]}
        return OperatorSum.from_terms(PAULI, self.n, pairs, meta)

    def to_dict(self) -> dict:
        return {"name": self.name, "n": self.n, "k": self.k, "m": self.m, "d": self.d,
                "checks": [c.label() for c in self.checks], "signs": list(self.signs)}


def _check(letters: str) -> Monomial:
    return Monomial.pauli(letters)


def repetition(n: int) -> StabilizerCode:
    if n < 2:
        raise CodeError("repetition code needs n >= 2")
    checks = []
    for i in range(n - 1):
        lab = ["I"] * n
        lab[i] = lab[i + 1] = "Z"
        checks.append(_check("".join(lab)))
    return StabilizerCode(n, tuple(checks), (0,) * (n - 1), 1, f"repetition{n}")


def toric(L: int) -> StabilizerCode:
    """Kitaev toric code on an L x L torus; qubits on edges, one star and one plaquette kept redundant."""
    if L < 2:
        raise CodeError("toric code needs L >= 2")
    n = 2 * L * L

    def h(x, y):  # horizontal edge leaving vertex (x, y) to the right
        return 2 * ((x % L) * L + (y % L))

    def v(x, y):  # vertical edge leaving vertex (x, y) upward
        return 2 * ((x % L) * L + (y % L)) + 1

    def mono(letter, edges):
        lab = ["I"] * n
        for e in edges:
            lab[e] = letter
        return _check("".join(lab))

    stars = [mono("X", {h(x, y), h(x - 1, y), v(x, y), v(x, y - 1)}) for x in range(L) for y in range(L)]
    plaqs = [mono("Z", {h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)}) for x in range(L) for y in range(L)]
    checks = tuple(stars[:-1] + plaqs[:-1])
    return StabilizerCode(n, checks, (0,) * len(checks), L, f"toric{L}", (stars[-1], plaqs[-1]))


def steane() -> StabilizerCode:
    rows = ["IIIXXXX", "IXXIIXX", "XIXIXIX"]
    checks = tuple(_check(r) for r in rows) + tuple(_check(r.replace("X", "Z")) for r in rows)
    return StabilizerCode(7, checks, (0,) * 6, 3, "steane")


def from_dict(d: dict) -> StabilizerCode:
    checks = tuple(_check(s) for s in d["checks"])
    signs = tuple(int(s) for s in d.get("signs", [0] * len(checks)))
    n = len(d["checks"][0]) if checks else int(d["n"])
    return StabilizerCode(n, checks, signs, d.get("d"), d.get("name", "custom"))


def named_code(name: str, size: int | None = None) -> StabilizerCode:
    name = name.lower()
    if name == "repetition":
        return repetition(size or 3)
    if name == "toric":
        return toric(size or 2)
    if name == "steane":
        return steane()
    raise CodeError(f"unknown code {name!r}; expected repetition, toric or steane")


# partition functions ---------------------------------------------------------------


def stabilizer_partition(code: StabilizerCode, z) -> LogValue:
    """Z(z) = 2^{m+k} cosh(z)^m, returned as (log|Z|, arg Z)."""
    z = complex(z)
    ch = np.cosh(z)
    # |cosh z|^2 = sinh^2 x + cos^2 y; below rounding level of cosh x it is a zero
    if abs(z.real) < 300 and abs(ch) <= 8 * np.finfo(float).eps * math.cosh(z.real):
        return LogValue(-math.inf, 0.0, True)
    lc = np.log(ch)
    # log cosh z without overflow for large Re z
    if abs(z.real) > 300:
        s = z if z.real > 0 else -z
        lc = s - math.log(2) + np.log1p(np.exp(-2 * s))
    lz = code.n * math.log(2) + code.m * lc
    return LogValue(float(lz.real), math.remainder(float(lz.imag), 2 * math.pi))


def anticommuting_set(code: StabilizerCode, A: Monomial) -> list[int]:
    if A.basis != PAULI or A.size != code.n:
        raise CodeError(f"A must be a {code.n}-qubit Pauli monomial")
    return [i for i, c in enumerate(code.checks) if not commutes(c, A)]


def S_r(r: int, z, delta: float) -> complex:
    """sum over s in {+-1}^r of cosh(z sqrt(lambda(s)^2 + delta^2)), lambda(s) = sum s."""
    if r > MAX_R:
        raise CodeError(f"r = {r} exceeds the enumeration cap {MAX_R}")
    # lambda = r - 2j occurs C(r, j) times
    j = np.arange(r + 1)
    lam = r - 2 * j
    mult = np.array([math.comb(r, int(i)) for i in j], dtype=float)
    return complex(np.sum(mult * np.cosh(complex(z) * np.sqrt(lam**2 + delta**2))))


def perturbed_stabilizer_partition(code: StabilizerCode, A: Monomial, delta: float, z) -> complex:
    """Tr exp(z (H + delta A)) = 2^{|R|} cosh(z)^{|R|} 2^k S_r(z, delta), R the commuting checks."""
    S = anticommuting_set(code, A)
    r = len(S)
    if r > MAX_R:
        raise CodeError(f"r = {r} exceeds the enumeration cap {MAX_R}")
    if r == 0 and not A.is_identity:
        rows = [_symplectic(c) for c in code.checks]
        if _gf2_rank(rows + [_symplectic(A)]) == len(rows):
            raise CodeError("A lies in the stabilizer group; the block formula does not apply")
    if A.is_identity:
        raise CodeError("A must be a non-identity Pauli")
    nR = code.m - r
    z = complex(z)
    return complex((2 * np.cosh(z)) ** nR * 2**code.k * S_r(r, z, delta))


# separability ---------------------------------------------------------------------


@dataclass
class SeparabilityReport:
    vectors: np.ndarray
    bound: float
    m: int
    threshold_beta: float | None
    details: dict = field(default_factory=dict)

    @property
    def has_threshold(self) -> bool:
        return self.threshold_beta is not None

    def to_dict(self) -> dict:
        thr = ({"kind": "finite", "beta": self.threshold_beta} if self.has_threshold
               else {"kind": NO_THRESHOLD})
        return {"bound": self.bound, "m": self.m, "threshold": thr, **self.details}


def bloch_vectors(checks: list[Monomial], n: int) -> np.ndarray:
    """[v_a]_P = sum over checks acting as P on qubit a of 1/weight; columns X, Y, Z."""
    v = np.zeros((n, 3))
    col = {"X": 0, "Y": 1, "Z": 2}
    for c in checks:
        w = c.weight
        for a, letter in enumerate(c.label()):
            if letter != "I":
                v[a, col[letter]] += 1.0 / w
    return v


def separability_bound(code: StabilizerCode, include_redundant: bool = True) -> SeparabilityReport:
    """Product-state energy bound sum_a ||v_a|| and beta at which m tanh(beta) exceeds it.

    With ``include_redundant`` the bound refers to the full check set (for the
    toric code every qubit then sees two X and two Z checks) and m counts it.
    """
    checks = code.all_checks() if include_redundant else list(code.checks)
    v = bloch_vectors(checks, code.n)
    bound = float(np.linalg.norm(v, axis=1).sum())
    m = len(checks)
    thr = math.atanh(bound / m) if bound < m else None
    wmax = max(c.weight for c in code.checks)
    wstar = 1 - (2 - math.sqrt(2)) / wmax * (1 + code.k / code.m)
    return SeparabilityReport(v, bound, m, thr, {"w_star": wstar, "w_max": wmax})


def product_state_energy(checks: list[Monomial], signs, bloch: np.ndarray) -> float:
    """Tr(H rho) for a product state with Bloch vectors bloch[a] = (r_X, r_Y, r_Z)."""
    col = {"X": 0, "Y": 1, "Z": 2}
    tot = 0.0
    for c, s in zip(checks, signs):
        val = (-1.0) ** s
        for a, letter in enumerate(c.label()):
            if letter != "I":
                val *= bloch[a, col[letter]]
        tot += val
    return tot


def max_product_energy(checks: list[Monomial], signs, n: int, restarts: int = 20, seed: int = 0) -> float:
    """Product-state energy maximum by projected gradient ascent over Bloch vectors (oracle)."""
    from scipy.optimize import minimize

    rng = np.random.default_rng(seed)
    best = -np.inf

    def to_bloch(p):
        th, ph = p[:n], p[n:]
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)

    for _ in range(restarts):
        p0 = rng.uniform(0, 2 * np.pi, 2 * n)
        res = minimize(lambda p: -product_state_energy(checks, signs, to_bloch(p)), p0, method="BFGS")
        best = max(best, -res.fun)
    return float(best)

