"""Seeded Hamiltonian ensembles.

Random numbers come from Philox (counter based). Coupling number ``j`` of an
instance with seed ``s`` is drawn from its own substream ``Philox(key=[s, j])``:
two raw 64-bit words u1, u2 -> uniforms (w >> 11) * 2**-53 -> one standard
normal by Box-Muller, ``sqrt(-2 log(1 - u1)) * cos(2 pi u2)``. Couplings are
enumerated in the lexicographic order of their index tuples. This layout
does not depend on how many couplings an instance has, so instances are
reproducible across platforms and numpy versions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .operators import MAJORANA, PAULI, Monomial, OperatorSum, monomial_product

KINDS = ("syk", "klocal_pauli", "ising_pspin", "heisenberg_sk", "stabilizer", "fermi_hubbard")


class EnsembleError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceSpec:
    kind: str
    size: int  # N Majoranas (syk), else number of qubits / sites
    q: int = 4  # syk body order, p for ising_pspin, k for klocal_pauli
    J: float = 1.0
    seed: int = 0
    degree: int = 4  # D for klocal_pauli
    lattice: tuple[int, int] = (2, 2)
    t: float = 1.0
    U: float = 8.0
    mu: float = 2.0
    code: str = "repetition"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lattice"] = list(self.lattice)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InstanceSpec":
        d = dict(d)
        if "lattice" in d:
            d["lattice"] = tuple(d["lattice"])
        known = {f for f in cls.__dataclass_fields__}
        extra = {k: d.pop(k) for k in list(d) if k not in known}
        if extra:
            d.setdefault("extra", {}).update(extra)
        return cls(**d)


def substream_normal(seed: int, index: int) -> float:
    bg = np.random.Philox(key=np.array([seed & 0xFFFFFFFFFFFFFFFF, index], dtype=np.uint64))
    w = bg.random_raw(2)
    u1 = float(w[0] >> np.uint64(11)) * 2.0**-53
    u2 = float(w[1] >> np.uint64(11)) * 2.0**-53
    return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)


def substream_normals(seed: int, count: int, offset: int = 0) -> np.ndarray:
    return np.array([substream_normal(seed, offset + j) for j in range(count)])


def substream_uniform(seed: int, index: int) -> float:
    bg = np.random.Philox(key=np.array([seed & 0xFFFFFFFFFFFFFFFF, index], dtype=np.uint64))
    return float(bg.random_raw(1)[0] >> np.uint64(11)) * 2.0**-53


def syk_scale_J(q: int, J: float) -> float:
    """The rescaled coupling script-J, with script-J**2 = q J**2 / 2**(q-1)."""
    return math.sqrt(q * J**2 / 2 ** (q - 1))


def _syk(spec: InstanceSpec) -> OperatorSum:
    N, q = spec.size, spec.q
    if N % 2 or q % 2 or q < 2:
        raise EnsembleError(f"syk needs even N and even q >= 2, got N={N}, q={q}")
    if q > N:
        raise EnsembleError("q exceeds N")
    std = math.sqrt(math.factorial(q - 1) * spec.J**2 / N ** (q - 1))
    # i^{q/2} prefactor and psi = gamma / sqrt(2)
    factor = (1j ** (q // 2)) * 2.0 ** (-q / 2)
    pairs = []
    for j, idx in enumerate(itertools.combinations(range(N), q)):
        pairs.append((factor * std * substream_normal(spec.seed, j), Monomial.majorana(idx, N)))
    meta = {
        "kind": "syk", "seed": spec.seed, "N": N, "q": q, "J": spec.J,
        "J_script": syk_scale_J(q, spec.J),
        "coupling_factor": [factor.real, factor.imag],
    }
    return OperatorSum.from_terms(MAJORANA, N, pairs, meta)


def _ising_pspin(spec: InstanceSpec) -> OperatorSum:
    n, p = spec.size, spec.q
    if p < 1 or p > n:
        raise EnsembleError(f"need 1 <= p <= n, got p={p}, n={n}")
    std = spec.J * math.sqrt(math.factorial(p) / (2 * n ** (p - 1)))
    pairs = []
    for j, idx in enumerate(itertools.combinations(range(n), p)):
        z = sum(1 << i for i in idx)
        pairs.append((std * substream_normal(spec.seed, j), Monomial(PAULI, n, 0, z)))
    meta = {"kind": "ising_pspin", "seed": spec.seed, "n": n, "p": p, "J": spec.J,
            "coupling_factor": [1.0, 0.0]}
    return OperatorSum.from_terms(PAULI, n, pairs, meta)


def _heisenberg_sk(spec: InstanceSpec) -> OperatorSum:
    n = spec.size
    std = spec.J / math.sqrt(n)
    s2 = 0.25  # S = 1/2: S^a = sigma^a / 2, so S_i.S_j = (XX + YY + ZZ) / 4
    pairs = []
    for j, (a, b) in enumerate(itertools.combinations(range(n), 2)):
        Jab = std * substream_normal(spec.seed, j)
        for letter in "XYZ":
            lab = ["I"] * n
            lab[a] = lab[b] = letter
            pairs.append((s2 * Jab, Monomial.pauli("".join(lab))))
    meta = {"kind": "heisenberg_sk", "seed": spec.seed, "n": n, "J": spec.J, "spin": 0.5,
            "spin_assumed": True, "coupling_factor": [s2, 0.0]}
    return OperatorSum.from_terms(PAULI, n, pairs, meta)


def klocal_pauli(n: int, k: int, D: int, seed: int, J: float = 1.0) -> OperatorSum:
    """Random k-local Pauli Hamiltonian with every qubit in at most D terms.

    Supports are drawn greedily from shuffled k-subsets, each term is a
    uniformly random non-identity-on-support Pauli string with a coefficient
    uniform in [-J, J], so ||h_a|| <= J.
    """
    subsets = list(itertools.combinations(range(n), k))
    order = sorted(range(len(subsets)), key=lambda j: substream_uniform(seed, j))
    load = [0] * n
    pairs = []
    offset = len(subsets)
    for j in order:
        sub = subsets[j]
        if any(load[i] >= D for i in sub):
            continue
        for i in sub:
            load[i] += 1
        lab = ["I"] * n
        for r, i in enumerate(sub):
            u = substream_uniform(seed, offset + 4 * j + r)
            lab[i] = "XYZ"[min(int(3 * u), 2)]
        coef = J * (2 * substream_uniform(seed, offset + 4 * j + 3) - 1)
        pairs.append((coef, Monomial.pauli("".join(lab))))
    meta = {"kind": "klocal_pauli", "seed": seed, "n": n, "k": k, "D": D, "J": J,
            "max_degree": max(load) if load else 0, "coupling_factor": [1.0, 0.0]}
    return OperatorSum.from_terms(PAULI, n, pairs, meta)


def pauli_chain(n: int, J: float = 1.0, seed: int = 0, periodic: bool = False) -> OperatorSum:
    """Nearest-neighbour chain h_e = a XX + b YY + c ZZ with random signs and |a|+|b|+|c| = J.

    Each qubit sits in at most two edge terms (k = 2, D = 2) and ||h_e|| <= J.
    """
    edges = [(i, i + 1) for i in range(n - 1)] + ([(n - 1, 0)] if periodic and n > 2 else [])
    pairs = []
    for e, (a, b) in enumerate(edges):
        u = np.array([2 * substream_uniform(seed, 3 * e + r) - 1 for r in range(3)])
        u = J * u / max(np.abs(u).sum(), 1e-300)
        for letter, c in zip("XYZ", u):
            lab = ["I"] * n
            lab[a] = lab[b] = letter
            pairs.append((float(c), Monomial.pauli("".join(lab))))
    meta = {"kind": "pauli_chain", "seed": seed, "n": n, "k": 2, "D": 2, "J": J, "periodic": periodic,
            "coupling_factor": [1.0, 0.0]}
    return OperatorSum.from_terms(PAULI, n, pairs, meta)


def _fermi_hubbard(spec: InstanceSpec) -> OperatorSum:
    Lx, Ly = spec.lattice
    sites = Lx * Ly
    n_orb = 2 * sites
    if n_orb > 12:
        raise EnsembleError(f"lattice {Lx}x{Ly} has {n_orb} spin-orbitals, above the dense cap of 12")
    # orbital (site, spin) -> JW mode index 2*site + spin
    def orb(s, sigma):
        return 2 * s + sigma

    def c_dag(o):  # c^dagger_o = (gamma_{2o} - i gamma_{2o+1}) / 2
        return [(0.5, Monomial.majorana([2 * o], 2 * n_orb)), (-0.5j, Monomial.majorana([2 * o + 1], 2 * n_orb))]

    def c(o):
        return [(0.5, Monomial.majorana([2 * o], 2 * n_orb)), (0.5j, Monomial.majorana([2 * o + 1], 2 * n_orb))]

    def prod(A, B):
        return [(a * b, monomial_product(ma, mb)) for a, ma in A for b, mb in B]

    def number(o):
        return prod(c_dag(o), c(o))

    bonds = set()
    for x in range(Lx):
        for y in range(Ly):
            s = x * Ly + y
            for dx, dy in ((1, 0), (0, 1)):
                nx, ny = (x + dx) % Lx, (y + dy) % Ly
                t_ = nx * Ly + ny
                if t_ != s:
                    bonds.add(tuple(sorted((s, t_))))
    pairs = []
    for s, t_ in sorted(bonds):
        for sigma in (0, 1):
            a, b = orb(s, sigma), orb(t_, sigma)
            for cf, m in prod(c_dag(a), c(b)) + prod(c_dag(b), c(a)):
                pairs.append((-spec.t * cf, m))
    for s in range(sites):
        for cf, m in prod(number(orb(s, 0)), number(orb(s, 1))):
            pairs.append((spec.U * cf, m))
        for sigma in (0, 1):
            for cf, m in number(orb(s, sigma)):
                pairs.append((-spec.mu * cf, m))
    meta = {"kind": "fermi_hubbard", "lattice": [Lx, Ly], "t": spec.t, "U": spec.U, "mu": spec.mu,
            "periodic": True, "seed": spec.seed}
    return OperatorSum.from_terms(MAJORANA, 2 * n_orb, pairs, meta, tol=1e-15)


def _stabilizer(spec: InstanceSpec) -> OperatorSum:
    from . import codes

    code = codes.named_code(spec.code, spec.size)
    return code.hamiltonian().with_meta(kind="stabilizer", code=spec.code, seed=spec.seed)


def generate(spec: InstanceSpec) -> OperatorSum:
    if spec.kind == "syk":
        return _syk(spec)
    if spec.kind == "ising_pspin":
        return _ising_pspin(spec)
    if spec.kind == "heisenberg_sk":
        return _heisenberg_sk(spec)
    if spec.kind == "klocal_pauli":
        return klocal_pauli(spec.size, spec.q, spec.degree, spec.seed, spec.J)
    if spec.kind == "fermi_hubbard":
        return _fermi_hubbard(spec)
    if spec.kind == "stabilizer":
        return _stabilizer(spec)
    raise EnsembleError(f"unknown ensemble kind {spec.kind!r}; expected one of {KINDS}")


def raw_couplings(o: OperatorSum) -> np.ndarray:
    """Couplings with the construction-time rescaling undone."""
    fr, fi = o.meta.get("coupling_factor", [1.0, 0.0])
    factor = complex(fr, fi)
    vals = np.array([c / factor for c in o.terms.values()])
    if o.meta.get("kind") == "heisenberg_sk":
        # XX, YY and ZZ of one pair share a coupling
        vals = vals[::3]
    return vals.real


def coupling_stats(o: OperatorSum, min_terms: int = 30) -> dict:
    vals = raw_couplings(o)
    if len(o.terms) < min_terms:
        raise EnsembleError(f"too few terms ({len(o.terms)} < {min_terms}) for coupling statistics")
    return {"mean": float(vals.mean()), "variance": float(vals.var()), "count": int(len(vals))}


def pooled_coupling_stats(instances) -> dict:
    vals = np.concatenate([raw_couplings(o) for o in instances])
    return {"mean": float(vals.mean()), "variance": float(vals.var()), "count": int(len(vals))}


def load_spec(path) -> InstanceSpec:
    """Read an InstanceSpec from a .toml or .json file."""
    import json
    from pathlib import Path

    p = Path(path)
    text = p.read_text()
    if p.suffix == ".toml":
        import tomli

        d = tomli.loads(text)
        d = d.get("instance", d)
    else:
        d = json.loads(text)
    return InstanceSpec.from_dict(d)
