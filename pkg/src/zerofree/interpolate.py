"""Barvinok interpolation of log Z: truncation order, composed series, observables by finite differences."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import series as ps
from .ed import Spectrum, diagonalize, partition_exact
from .maps import GUARD_TERMS, ConformalMap, build_strip_map, build_wedge_map
from .operators import PAULI, OperatorSum

log = logging.getLogger(__name__)

C_MAX = 1 / (2 * math.e)
WEDGE_RHO_MAX = 0.95


class InterpolationError(ValueError):
    pass


@dataclass
class InterpolationReport:
    K: int
    estimate_logZ: complex
    map_kind: str
    tail_indicator: float
    beta: complex
    eps: float
    oracle_delta: float | None = None
    tail_warning: bool = False
    details: dict = field(default_factory=dict)

    @property
    def log_modulus(self) -> float:
        return self.estimate_logZ.real

    @property
    def phase(self) -> float:
        return math.remainder(self.estimate_logZ.imag, 2 * math.pi)

    def to_dict(self) -> dict:
        return {
            "K": self.K, "log_modulus": self.log_modulus, "phase": self.phase, "map": self.map_kind,
            "tail_indicator": self.tail_indicator, "tail_warning": self.tail_warning,
            "beta": [self.beta.real, self.beta.imag], "eps": self.eps,
            "oracle_delta": self.oracle_delta, **self.details,
        }


@dataclass(frozen=True)
class ZeroFreeRadius:
    radius: float
    simplified: float
    k: int
    D: int

    def __float__(self):
        return self.radius


def zero_free_radius(k: int, D: int) -> ZeroFreeRadius:
    """C_max/(k(D-1)+1) with C_max = 1/(2e); the cruder 1/(2ekD) rides along for comparison."""
    if k < 1 or D < 1:
        raise InterpolationError(f"need k >= 1 and D >= 1, got k={k}, D={D}")
    return ZeroFreeRadius(C_MAX / (k * (D - 1) + 1), 1 / (2 * math.e * k * D), k, D)


def locality(h: OperatorSum) -> tuple[int, int, float]:
    """(k, D, J) with Pauli terms grouped by support into local terms h_e.

    k is the largest support, D the largest number of groups touching one
    qubit and J = max_e sum |c| >= max_e ||h_e||.
    """
    if h.basis != PAULI:
        raise InterpolationError("locality is defined for Pauli sums")
    groups: dict[int, float] = {}
    for (x, z), c in h.terms.items():
        supp = x | z
        if supp:
            groups[supp] = groups.get(supp, 0.0) + abs(c)
    load = [0] * h.size
    for supp in groups:
        for i in range(h.size):
            if supp >> i & 1:
                load[i] += 1
    k = max((bin(s).count("1") for s in groups), default=1)
    return k, max(max(load, default=1), 1), max(groups.values(), default=0.0)


def truncation_order(target: float, R: float, sup_re: float, f0: float, eps: float) -> int:
    """Smallest K with Cauchy tail M q^{K+1}/(1-q) below log(1+eps) on the disk of radius R."""
    if not 0 < eps < 1:
        raise InterpolationError(f"eps must lie in (0, 1), got {eps}")
    if target == 0:
        return 1
    if target >= R:
        raise InterpolationError(f"target |beta| = {target:.6g} is not inside the zero-free radius {R:.6g}")
    rho = (R + target) / 2
    q = target / rho
    M = 2 * rho / (R - rho) * sup_re + (R + rho) / (R - rho) * abs(f0)
    K = math.ceil((math.log(M / math.log1p(eps)) - math.log1p(-q)) / math.log(rho / target))
    return max(K, 1)


def choose_truncation_order(geometry, beta, n: int, H_norm: float, eps: float) -> int:
    """K from the explicit Borel-Caratheodory + Cauchy bound.

    ``geometry`` is either a disk radius R (zero-free disk around beta = 0) or a
    ConformalMap, for which the composite log Z(beta phi(z)) is bounded on
    |z| <= (1 + R_map)/2 and evaluated at z = 1.
    """
    f0 = n * math.log(2)
    b = abs(complex(beta))
    if isinstance(geometry, ConformalMap):
        if geometry.valid_radius <= 1:
            raise InterpolationError(f"map radius {geometry.valid_radius} must exceed 1")
        if b == 0:
            return 1
        r_out = (1 + geometry.valid_radius) / 2
        sup = f0 + b * H_norm * geometry.max_modulus(r_out)
        return truncation_order(1.0, r_out, sup, f0, eps)
    R = float(geometry)
    return truncation_order(b, R, f0 + R * H_norm, f0, eps)


# pipeline ----------------------------------------------------------------------


def _spectrum(h: OperatorSum, spectrum):
    return spectrum if spectrum is not None else diagonalize(h)


def log_partition_series(h: OperatorSum, K: int, backend: str = "spectral", spectrum: Spectrum | None = None,
                         work_cap: float = 1e9) -> ps.PowerSeries:
    """Maclaurin series of t -> log Tr exp(-tH) to order K."""
    if backend == "spectral":
        mu = ps.moments(h, K, "spectral", spectrum=_spectrum(h, spectrum), scaled=True)
    else:
        mu = ps.moments(h, K, backend, work_cap=work_cap, scaled=True)
    return ps.moments_to_cumulants(mu, K, h.n_qubits * math.log(2), scaled=True)


def syk_rho(h: OperatorSum, beta: float) -> float:
    """Wedge parameter from the large-q zero-free strip |Im beta| < |b0|/J_script."""
    from .syk_theory import critical_point

    Js = h.meta.get("J_script")
    if Js is None:
        raise InterpolationError("wedge map needs J_script in the instance metadata or an explicit rho")
    return min(abs(critical_point().b0) / (abs(beta) * Js), WEDGE_RHO_MAX)


def make_map(kind: str, K: int, rho: float, delta_theta: float = 0.0) -> ConformalMap:
    if kind == "wedge":
        return build_wedge_map(rho, delta_theta, K + GUARD_TERMS)
    if kind == "strip":
        return build_strip_map(rho, K + GUARD_TERMS)
    raise InterpolationError(f"unknown map kind {kind!r}")


def _norm(h, backend, spectrum):
    if backend == "spectral":
        return _spectrum(h, spectrum).norm
    return h.norm_bound()


def estimate_log_partition(h: OperatorSum, beta, map=None, eps: float = 1e-3, backend: str = "spectral",
                           K: int | None = None, R: float | None = None, rho: float | None = None,
                           delta_theta: float = 0.0, spectrum: Spectrum | None = None,
                           oracle: bool = False, work_cap: float = 1e9) -> InterpolationReport:
    """exp of the result approximates Z(beta) to relative error eps under the zero-free hypothesis.

    ``map`` is None (disk path: Taylor series of log Z evaluated at beta), a
    ConformalMap, or "wedge"/"strip". For the wedge, rho defaults to the SYK
    prediction; for the strip, rho is the strip half-height over 2|beta|.
    On the disk path R defaults to the cluster-expansion radius of h.
    """
    beta = complex(beta)
    n = h.n_qubits
    if backend == "spectral":
        spectrum = _spectrum(h, spectrum)
    H_norm = _norm(h, backend, spectrum)
    details = {}
    if map is None:
        if K is None:
            if R is None:
                k, D, J = locality(h)
                # the radius is stated for ||h_e|| <= 1; rescale by the largest local norm
                R = zero_free_radius(k, D).radius / (J if J > 0 else 1.0)
            K = choose_truncation_order(R, beta, n, H_norm, eps)
        series = log_partition_series(h, K, backend, spectrum, work_cap)
        terms = series.coeffs * beta ** np.arange(K + 1)
        kind = "disk"
        details["R"] = R
    else:
        if isinstance(map, str):
            if beta.imag != 0 or beta.real <= 0:
                raise InterpolationError("map paths take a real positive beta")
            if rho is None:
                if map != "wedge":
                    raise InterpolationError("strip map needs rho")
                rho = syk_rho(h, beta.real)
            probe = make_map(map, 1, rho, delta_theta)
            if K is None:
                K = choose_truncation_order(probe, beta, n, H_norm, eps)
            cmap = make_map(map, K, rho, delta_theta)
        else:
            cmap = map
            if K is None:
                K = choose_truncation_order(cmap, beta, n, H_norm, eps)
            if cmap.K < K:
                raise InterpolationError(f"map series has order {cmap.K} < K = {K}")
        if cmap.valid_radius <= 1:
            raise InterpolationError(f"map radius {cmap.valid_radius} must exceed 1")
        series = log_partition_series(h, K, backend, spectrum, work_cap)
        inner = ps.PowerSeries(beta * cmap.series.coeffs[: K + 1])
        terms = ps.compose(series, inner).coeffs
        kind = cmap.kind
        details["map_params"] = {k: v for k, v in cmap.params.items() if isinstance(v, (int, float))}
    est = complex(math.fsum(terms.real), math.fsum(terms.imag))
    tail = float(np.abs(terms[-3:]).max())
    warn = tail > eps / 10
    if warn:
        log.warning("tail indicator %.3g exceeds eps/10 = %.3g at K = %d", tail, eps / 10, K)
    rep = InterpolationReport(int(K), est, kind, tail, beta, eps, None, warn, details)
    if oracle:
        ex = partition_exact(_spectrum(h, spectrum), beta)
        rep.oracle_delta = abs(complex(est.real - ex.log_modulus,
                                       math.remainder(est.imag - ex.phase, 2 * math.pi)))
    return rep


def estimate_observable(h: OperatorSum, obs: OperatorSum, beta: float, delta: float = 1e-2, map=None,
                        backend: str = "spectral", **kw) -> float:
    """<obs> at inverse temperature beta from two perturbed partition functions.

    Uses lambda = delta and per-call precision eps = delta^2/8 in the central
    difference -(log Z(H + lambda O) - log Z(H - lambda O)) / (2 beta lambda).
    """
    beta = float(beta)
    if beta == 0:
        raise InterpolationError("beta = 0 makes the finite difference singular")
    if beta < 0:
        raise InterpolationError("estimate_observable needs beta > 0")
    lam = delta
    eps = delta**2 / 8
    kw.pop("spectrum", None)  # the perturbed Hamiltonians have their own spectra
    if isinstance(map, str) and map == "wedge" and kw.get("rho") is None:
        kw["rho"] = syk_rho(h, beta)
    vals = []
    for s in (+1, -1):
        hp = (h + obs.scale(s * lam)).with_meta(**h.meta)
        rep = estimate_log_partition(hp, beta, map=map, eps=eps, backend=backend, **kw)
        vals.append(rep.estimate_logZ.real)
    return -(vals[0] - vals[1]) / (2 * beta * lam)
