"""Short-time OTOCs f_{2L}(t) = Tr[rho (B(t) M)^{2L}] by strip-map interpolation, with exact and LR baselines."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import series as ps
from .ed import Spectrum, diagonalize, otoc_exact, single_pauli_dense, state_matrix
from .interpolate import locality, truncation_order
from .maps import strip_params
from .operators import DENSE_CAP, PAULI, DimensionCapError, Monomial, OperatorSum, to_dense, to_pauli

GATE = 0.05
AD_TOL = 1e-22
RHO_STRIP_MAX = 0.9


class OtocError(ValueError):
    pass


class OtocGateError(OtocError):
    """The strip parameter is too small for a tractable map degree."""


@dataclass(frozen=True)
class OtocTask:
    h: OperatorSum
    b_site: int
    m_site: int
    L: int = 1
    rho: object = "maximally_mixed"
    t: float = 0.0
    b_letter: str = "X"
    m_letter: str = "Z"
    k: int | None = None
    D: int | None = None
    J: float | None = None

    def __post_init__(self):
        if self.b_site == self.m_site:
            raise OtocError("B and M must act on distinct qubits")
        h = self.h if self.h.basis == PAULI else to_pauli(self.h)
        object.__setattr__(self, "h", h)
        for s in (self.b_site, self.m_site):
            if not 0 <= s < h.size:
                raise OtocError(f"site {s} outside the {h.size}-qubit system")
        if self.L < 1:
            raise OtocError("L must be a positive integer")
        k, D, J = locality(h)
        object.__setattr__(self, "k", self.k or k)
        object.__setattr__(self, "D", self.D or D)
        object.__setattr__(self, "J", self.J if self.J is not None else J)
        if self.k < k or self.D < D or self.J < J - 1e-12:
            raise OtocError(f"declared (k, D, J) = ({self.k}, {self.D}, {self.J}) is inconsistent with h ({k}, {D}, {J})")

    @property
    def c0(self) -> float:
        return 2 * self.k * self.J * self.D

    def with_time(self, t: float) -> "OtocTask":
        return OtocTask(self.h, self.b_site, self.m_site, self.L, self.rho, t, self.b_letter, self.m_letter,
                        self.k, self.D, self.J)


def sigma_eta(eta: float, L: int, k: int, J: float, D: int) -> float:
    """Half-height of the strip on which 2 - f_{2L} cannot vanish."""
    if not 0 < eta < 1:
        raise OtocError(f"eta must lie in (0, 1), got {eta}")
    return (1 - (2 - eta) ** (-1 / (2 * L))) / (2 * k * J * D)


# series ------------------------------------------------------------------------


def _eigen(task: OtocTask, spectrum: Spectrum | None):
    if spectrum is None or spectrum.eigenvectors is None:
        spectrum = diagonalize(task.h, vectors=True)
    n = task.h.size
    V, E = spectrum.eigenvectors, spectrum.eigenvalues
    B = V.conj().T @ single_pauli_dense(task.b_letter, task.b_site, n) @ V
    M = V.conj().T @ single_pauli_dense(task.m_letter, task.m_site, n) @ V
    return spectrum, V, E, B, M


def _series_product(A: list, Bs: list, K: int) -> list:
    out = []
    for r in range(K + 1):
        acc = None
        for j in range(max(0, r - len(Bs) + 1), min(r, len(A) - 1) + 1):
            term = A[j] @ Bs[r - j]
            acc = term if acc is None else acc + term
        if acc is None:
            break
        out.append(acc)
    return out


def otoc_series(task: OtocTask, K: int, scale: float = 1.0, spectrum: Spectrum | None = None) -> ps.PowerSeries:
    """Maclaurin coefficients of f_{2L}(scale * u) in u, to order K.

    In the eigenbasis ad_H acts entrywise as multiplication by E_a - E_b, so
    B(s) = sum_r (is)^r/r! ad_H^r(B) has coefficient matrices C_r = (i Delta)^r / r! * B.
    Matrices whose entries fall below AD_TOL relative to B are dropped; f is
    entire, so the dropped orders are zero to working precision.
    """
    s, V, E, B, M = _eigen(task, spectrum)
    d = s.dim
    step = 1j * scale * (E[:, None] - E[None, :])
    C = [B]
    for r in range(1, K + 1):
        nxt = step * C[-1] / r
        if np.abs(nxt).max() < AD_TOL and r > 2:
            break
        C.append(nxt)
    Y = [c @ M for c in C]
    P = Y
    for _ in range(task.L - 1):
        P = _series_product(P, Y, K)
    idx = state_matrix(task.rho, task.h.size)
    if idx is None:
        left = np.array([p.reshape(-1) for p in P])
        right = np.array([p.T.reshape(-1) for p in P])
        G = left @ right.T / d
    else:
        psi = V[idx, :].conj()
        left = np.array([psi.conj() @ p for p in P])
        right = np.array([p @ psi for p in P])
        G = left @ right.T
    f = np.zeros(K + 1, dtype=complex)
    for r in range(min(K, 2 * (len(P) - 1)) + 1):
        j = np.arange(max(0, r - len(P) + 1), min(r, len(P) - 1) + 1)
        f[r] = G[j, r - j].sum()
    return ps.PowerSeries(f)


# interpolation --------------------------------------------------------------------


@dataclass
class OtocEstimate:
    value: complex
    K: int
    K_formula: int
    capped: bool
    sigma: float
    rho_strip: float
    tail_indicator: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        v = complex(self.value)
        return {"value": [v.real, v.imag], "K": self.K, "K_formula": self.K_formula, "capped": self.capped,
                "sigma": self.sigma, "rho_strip": self.rho_strip, "tail_indicator": self.tail_indicator,
                **self.details}


def _as_real(v: complex, tol: float = 1e-9):
    return float(v.real) if abs(v.imag) < tol else complex(v)


def estimate_otoc(task: OtocTask, eps: float = 1e-3, eta: float = 0.1, K: int | None = None,
                  K_cap: int = 4000, direct: bool = False, spectrum: Spectrum | None = None) -> OtocEstimate:
    """f_{2L}(t) from F(z) = log(2 - f(t phi(z))) truncated at order K and evaluated at z = 1.

    phi is the strip polynomial with rho = sigma/(2t), so |Im t phi| <= sigma on the
    certified disk. The bound-derived K (K_formula) grows like e^{Theta(t)}; the
    order used is min(K_formula, K_cap) unless K is given. ``direct`` interpolates f itself.
    """
    t = float(task.t)
    if t == 0:
        return OtocEstimate(1.0, 0, 0, False, math.nan, math.nan, 0.0)
    sig = sigma_eta(eta, task.L, task.k, task.J, task.D)
    if sig / abs(t) < GATE:
        raise OtocGateError(f"sigma/t = {sig / abs(t):.4g} is below the gate {GATE}; time too large for the strip map")
    rho = min(sig / (2 * abs(t)), RHO_STRIP_MAX)
    par = strip_params(rho)
    # on the strip |f| <= (1 - c0 |Im s|)^{-2L} <= 2 - eta, so Re F <= log(4 - eta), F(0) = 0
    r_out = (1 + par["beta_radius"]) / 2
    K_formula = truncation_order(1.0, r_out, math.log(4 - eta), 0.0, eps / 4)
    capped = K is None and K_formula > K_cap
    if K is None:
        K = min(K_formula, K_cap)
    # work in u = s / sig so that the Cauchy bound keeps coefficients O(1)
    f = otoc_series(task, K, scale=sig, spectrum=spectrum)
    m = np.arange(1, min(K, par["N_degree"]) + 1)
    inner = np.zeros(K + 1)
    inner[m] = np.sign(t) * abs(t) / sig * np.exp(m * par["log_alpha"]) / m / par["sigma_norm"]
    inner = ps.PowerSeries(inner)
    if direct:
        terms = ps.compose(f, inner).coeffs
        val = complex(math.fsum(terms.real), math.fsum(terms.imag))
    else:
        g = ps.log(2 - f)
        terms = ps.compose(g, inner).coeffs
        val = 2 - np.exp(complex(math.fsum(terms.real), math.fsum(terms.imag)))
    tail = float(np.abs(terms[-3:]).max())
    return OtocEstimate(_as_real(val), int(K), int(K_formula), capped, sig, rho, tail,
                        {"N_degree": par["N_degree"], "direct": direct, "eta": eta})


def strip_certificate(task: OtocTask, eta: float = 0.1, samples: int = 1000, re_max: float = 1.0,
                      seed: int = 0) -> float:
    """max over sampled s, |Im s| <= sigma/2, of |f(s)| / (1 - c0 |Im s|)^{-2L}; at most 1 if the bound holds."""
    sig = sigma_eta(eta, task.L, task.k, task.J, task.D)
    rng = np.random.default_rng(seed)
    s = rng.uniform(-re_max, re_max, samples) + 1j * rng.uniform(-sig / 2, sig / 2, samples)
    spec = diagonalize(task.h, vectors=True)
    worst = 0.0
    for sv in s:
        val = otoc_exact(task.h, task.b_site, task.m_site, task.L, sv, task.rho, task.b_letter, task.m_letter, spec)
        bound = (1 - task.c0 * abs(sv.imag)) ** (-2 * task.L)
        worst = max(worst, abs(val) / bound)
    return worst


# baselines ---------------------------------------------------------------------------


def interaction_graph(h: OperatorSum) -> list[set]:
    adj = [set() for _ in range(h.size)]
    for (x, z) in h.terms:
        supp = [i for i in range(h.size) if (x | z) >> i & 1]
        for a in supp:
            adj[a].update(b for b in supp if b != a)
    return adj


def ball(h: OperatorSum, center: int, R: int) -> list[int]:
    adj = interaction_graph(h)
    dist = {center: 0}
    q = deque([center])
    while q:
        a = q.popleft()
        if dist[a] == R:
            continue
        for b in adj[a]:
            if b not in dist:
                dist[b] = dist[a] + 1
                q.append(b)
    return sorted(dist)


def restrict(h: OperatorSum, qubits: list[int]) -> OperatorSum:
    """Terms supported inside ``qubits``, relabelled onto len(qubits) qubits."""
    pos = {q: i for i, q in enumerate(qubits)}
    mask = sum(1 << q for q in qubits)
    terms = {}
    for (x, z), c in h.terms.items():
        if (x | z) & ~mask:
            continue
        nx = sum(1 << pos[q] for q in qubits if x >> q & 1)
        nz = sum(1 << pos[q] for q in qubits if z >> q & 1)
        terms[(nx, nz)] = c
    return OperatorSum(PAULI, len(qubits), terms, dict(h.meta))


def lr_radius(task: OtocTask, eps: float, v: float | None = None, mu: float = 1.0, C0: float = 4.0) -> int:
    v = task.c0 * math.e if v is None else v
    return max(0, math.ceil(v * abs(task.t) + math.log(C0 / eps) / mu))


def lr_baseline(task: OtocTask, R: int | None = None, eps: float | None = None, cap: int = DENSE_CAP,
                v: float | None = None, mu: float = 1.0, C0: float = 4.0) -> dict:
    """Exact OTOC of H restricted to the radius-R interaction-graph ball around the B site."""
    if R is None:
        if eps is None:
            raise OtocError("give R or eps")
        R = lr_radius(task, eps, v, mu, C0)
    qubits = ball(task.h, task.b_site, R)
    if task.m_site not in qubits:
        qubits = sorted(qubits + [task.m_site])
    if 2 ** len(qubits) > cap:
        raise DimensionCapError(f"ball of {len(qubits)} qubits exceeds the dense cap {cap}")
    hr = restrict(task.h, qubits)
    rho = task.rho
    idx = state_matrix(rho, task.h.size)
    if idx is not None:
        bits = format(idx, f"0{task.h.size}b")
        rho = "".join(bits[q] for q in qubits)
    val = otoc_exact(hr, qubits.index(task.b_site), qubits.index(task.m_site), task.L, task.t, rho,
                     task.b_letter, task.m_letter)
    return {"estimate": val, "ball_size": len(qubits), "R": R, "low_R": R == 0, "qubits": qubits}


def ad_norm_bound(h: OperatorSum, B, r: int) -> dict:
    """||ad_H^r(B)|| from dense matrices next to the combinatorial bound (2kJD)^r r!."""
    if r > 8:
        raise OtocError("r must be at most 8")
    h = h if h.basis == PAULI else to_pauli(h)
    if isinstance(B, Monomial):
        Bm = to_dense(OperatorSum.from_terms(PAULI, h.size, [(1.0, B)]))
    else:
        Bm = np.asarray(B, dtype=complex)
    H = to_dense(h)
    A = Bm
    for _ in range(r):
        A = H @ A - A @ H
    k, D, J = locality(h)
    bound = (2 * k * J * D) ** r * math.factorial(r)
    norm = float(np.linalg.norm(A, 2)) if A.size else 0.0
    return {"computed_norm": norm, "bound": bound, "slack": bound / norm if norm > 0 else math.inf,
            "holds": norm <= bound * (1 + 1e-12), "r": r}
