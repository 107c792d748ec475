"""Conformal maps from a disk into zero-free regions: Barvinok's strip polynomial and the wedge map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import series as ps
from .series import PowerSeries

GUARD_TERMS = 8
DIRECT_SUM_MAX = 5000
_LAG_NODES, _LAG_WEIGHTS = np.polynomial.laguerre.laggauss(120)


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class ConformalMap:
    kind: str
    params: dict
    series: PowerSeries
    valid_radius: float

    @property
    def K(self) -> int:
        return self.series.K

    def __call__(self, z):
        """Direct (non-series) evaluation of the map."""
        if self.kind == "strip":
            return strip_eval(self.params, z)
        return wedge_eval(self.params, z)

    def max_modulus(self, r: float) -> float:
        """max |phi| over |z| <= r (r < valid_radius)."""
        if self.kind == "strip":
            return float(abs(strip_eval(self.params, r)))
        p, R, rho = self.params["p"], self.params["R"], self.params["rho"]
        s2 = (r / R) ** 2
        return rho * math.sqrt(((1 + s2) / (1 - s2)) ** (2 * p) + 1)


# strip -----------------------------------------------------------------------


def _log_tail(logw, N: int):
    """sum_{m>N} w^m / m for |w| < 1, from log w, by Gauss-Laguerre on 1/m = int e^{-mu} du."""
    logw = np.asarray(logw, dtype=complex)
    x = _LAG_NODES / (N + 1)
    den = -np.expm1(logw[..., None] - x)
    lead = np.exp((N + 1) * logw) / (N + 1)
    return lead * (_LAG_WEIGHTS / den).sum(axis=-1)


def strip_params(rho: float) -> dict:
    if not 0 < rho < 1:
        raise MapError(f"strip map needs 0 < rho < 1, got {rho}")
    a = -math.expm1(-1 / rho)
    beta_r = -math.expm1(-1 - 1 / rho) / a
    N = math.floor((1 + 1 / rho) * math.exp(1 + 1 / rho))
    loga = math.log1p(-math.exp(-1 / rho))
    if N <= DIRECT_SUM_MAX:
        m = np.arange(1, N + 1)
        sigma = math.fsum(np.exp(m * loga) / m)
    else:
        sigma = 1 / rho - float(np.real(_log_tail(loga, N)))
    return {"rho": rho, "alpha": a, "log_alpha": loga, "beta_radius": beta_r, "N_degree": N, "sigma_norm": sigma}


def strip_eval(params: dict, z):
    z = np.asarray(z, dtype=complex)
    N, sigma, loga = params["N_degree"], params["sigma_norm"], params["log_alpha"]
    if N <= DIRECT_SUM_MAX:
        a = params["alpha"]
        out = np.zeros_like(z)
        for m in range(N, 0, -1):  # Horner on sum (a z)^m / m
            out = (out + 1.0 / m) * (a * z)
        val = out / sigma
    else:
        w = params["alpha"] * z
        with np.errstate(divide="ignore"):
            logw = loga + np.log(z)
        head = -np.log1p(-w)
        tail = np.where(z == 0, 0, _log_tail(np.where(z == 0, loga, logw), N))
        val = (head - tail) / sigma
    return val if val.ndim else complex(val)


def build_strip_map(rho: float, K: int) -> ConformalMap:
    params = strip_params(rho)
    c = np.zeros(K + 1)
    m = np.arange(1, min(K, params["N_degree"]) + 1)
    c[m] = np.exp(m * params["log_alpha"]) / m / params["sigma_norm"]
    return ConformalMap("strip", params, PowerSeries(c), params["beta_radius"])


# wedge -----------------------------------------------------------------------


def wedge_params(rho: float, delta_theta: float = 0.0) -> dict:
    if not 0 < rho < 1:
        raise MapError(f"wedge map needs 0 < rho < 1, got {rho}")
    if not 0 <= delta_theta < math.pi / 2:
        raise MapError(f"wedge half-angle must lie in [0, pi/2), got {delta_theta}")
    p = 1 - 2 * delta_theta / math.pi
    M = (1 + rho**-2) ** (1 / (2 * p))
    R = math.sqrt((M + 1) / (M - 1))
    return {"rho": rho, "delta_theta": delta_theta, "p": p, "M": M, "R": R}


def wedge_series(params: dict, K: int) -> PowerSeries:
    """rho z sqrt((G^2 - 1)/z^2) as a series; two extra orders absorb the division by z^2."""
    p, R, rho = params["p"], params["R"], params["rho"]
    KK = K + 2
    t = np.zeros(KK + 1)
    if KK >= 2:
        t[2] = R**-2
    t = PowerSeries(t)
    Q = ps.div(1 + t, 1 - t)
    G = ps.power(Q, p)
    h = PowerSeries((G * G - 1).coeffs[2:])  # order K
    s = ps.sqrt(h)
    return PowerSeries(np.r_[0, rho * s.coeffs[:K]])


def _wedge_h(params: dict, z):
    p, R = params["p"], params["R"]
    t = (z / R) ** 2
    G = ((1 + t) / (1 - t)) ** p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = (G * G - 1) / (z * z)
    small = np.abs(z) < 1e-6
    # h = 4p/R^2 + O(z^2) near the removable singularity
    return np.where(small, 4 * p / R**2 + 0 * z, h)


def wedge_eval(params: dict, z, steps: int = 256):
    """Direct evaluation; the sqrt branch is followed by continuity along the ray from 0."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    frac = np.linspace(0.0, 1.0, steps + 1)
    ray = flat[:, None] * frac[None, :]
    h = _wedge_h(params, ray)
    ang = np.unwrap(np.angle(h), axis=1)
    ang = ang - 2 * np.pi * np.round(ang[:, :1] / (2 * np.pi))  # h(0) > 0
    root = np.sqrt(np.abs(h[:, -1])) * np.exp(0.5j * ang[:, -1])
    val = (params["rho"] * flat * root).reshape(z.shape)
    return val if val.ndim else complex(val)


def build_wedge_map(rho: float, delta_theta: float, K: int) -> ConformalMap:
    params = wedge_params(rho, delta_theta)
    return ConformalMap("wedge", params, wedge_series(params, K), params["R"])


def wedge_distance(params: dict, w) -> np.ndarray:
    """Signed distance from w to the forbidden wedges at +-i rho (negative inside)."""
    w = np.asarray(w, dtype=complex)
    rho, dt = params["rho"], params["delta_theta"]
    out = np.full(w.shape, np.inf)
    for apex, axis in ((1j * rho, np.pi / 2), (-1j * rho, -np.pi / 2)):
        d = w - apex
        off = np.abs(np.angle(d * np.exp(-1j * axis)))  # angle from the wedge axis
        r = np.abs(d)
        dist = np.where(off <= dt, -r * np.sin(np.minimum(dt - off, np.pi / 2)),
                        np.where(off - dt >= np.pi / 2, r, r * np.sin(off - dt)))
        out = np.minimum(out, dist)
    return out


# certification ----------------------------------------------------------------


@dataclass
class MapCertificate:
    kind: str
    samples: int
    violations: int = 0
    max_violation: float = 0.0
    min_margin: float | None = None
    sample_radius: float | None = None
    max_abs_phi: float | None = None
    reference_bound: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _disk_samples(radius: float, samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    nb = samples // 2
    theta = np.linspace(0, 2 * np.pi, nb, endpoint=False)
    ring = radius * np.exp(1j * theta)
    ni = samples - nb
    r = radius * np.sqrt(rng.random(ni))
    inner = r * np.exp(2j * np.pi * rng.random(ni))
    return np.concatenate([ring, inner])


def certify_map(m: ConformalMap, samples: int = 10_000, seed: int = 0, tol: float = 1e-12) -> MapCertificate:
    """Sample the certified disk and count image points outside the promised region.

    Strip: |Im phi| <= 2 rho and -rho <= Re phi <= 1 + 2 rho on |z| <= beta(rho).
    Wedge: phi avoids both wedges on |z| <= (1 + R)/2; also reports max |phi| there
    next to the asymptotic 2^p reference.
    """
    if samples <= 0:
        return MapCertificate(m.kind, 0)
    rho = m.params["rho"]
    if m.kind == "strip":
        radius = m.valid_radius
        z = _disk_samples(radius, samples, seed)
        w = np.asarray(m(z))
        excess = np.maximum.reduce([
            np.abs(w.imag) - 2 * rho, -rho - w.real, w.real - (1 + 2 * rho),
        ])
        bad = excess > tol * (1 + np.abs(w))
        return MapCertificate(
            "strip", samples, int(bad.sum()), float(max(excess.max(), 0.0)),
            float(-excess.max()), radius, m.max_modulus(radius), None,
            {"N_degree": m.params["N_degree"], "max_abs_im": float(np.abs(w.imag).max())},
        )
    radius = (1 + m.valid_radius) / 2
    z = _disk_samples(radius, samples, seed)
    w = np.asarray(m(z))
    dist = wedge_distance(m.params, w)
    bad = dist <= 0
    mod = np.abs(w[: samples // 2]).max() if samples > 1 else float(np.abs(w).max())
    return MapCertificate(
        "wedge", samples, int(bad.sum()), float(max(-dist.min(), 0.0)), float(dist.min()),
        radius, float(mod), 2 ** m.params["p"], {"R": m.valid_radius},
    )
