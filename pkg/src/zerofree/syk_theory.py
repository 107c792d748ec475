"""Large-q SYK saddle: the branch c*(b) of c = b cos(c/2), its action, and the predicted zero-free region."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

CONT_STEPS = 40
CRIT_TOL = 1e-8


class SaddleError(ValueError):
    pass


@dataclass(frozen=True)
class SaddleSolution:
    b: complex
    c_star: complex
    action: complex
    action_re: float
    dF: float
    residual: float


@dataclass(frozen=True)
class CriticalPoint:
    y: float
    c0: complex
    b0: complex


@dataclass(frozen=True)
class ZeroFreeRegion:
    """{beta : Re beta != 0 or |Im beta| < half_height}."""

    J_script: float
    half_height: float

    def contains(self, beta) -> np.ndarray | bool:
        beta = np.asarray(beta, dtype=complex)
        out = (beta.real != 0) | (np.abs(beta.imag) < self.half_height)
        return bool(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {"J_script": self.J_script, "half_height": self.half_height,
                "description": "Re beta != 0 or |Im beta| < half_height"}


def F(c, b):
    return c - b * np.cos(c / 2)


def dF(c, b):
    return 1 + 0.5 * b * np.sin(c / 2)


def action(c):
    """H(c) = c^2/2 - 2c tan(c/2); the constant -Tr log d_tau piece is dropped."""
    return c * c / 2 - 2 * c * np.tan(c / 2)


def _newton(c, b, iters: int = 50, tol: float = 1e-14):
    c = np.array(c, dtype=complex)
    for _ in range(iters):
        d = dF(c, b)
        step = F(c, b) / d
        c = c - step
        if np.all(np.abs(step) <= tol * (1 + np.abs(c))):
            break
    return c


def cstar_array(b) -> np.ndarray:
    """c*(b) for an array of b by continuation along s b, s in [0, 1].

    Each continuation step moves b by |b|/CONT_STEPS <= 0.05 (1 + |b|). A tangent
    predictor dc/db = cos(c/2)/dF feeds Newton. Raises if dF nearly vanishes.
    """
    b = np.asarray(b, dtype=complex)
    c = np.zeros_like(b)
    prev = np.zeros_like(b)
    for j in range(1, CONT_STEPS + 1):
        bj = b * (j / CONT_STEPS)
        d = dF(c, prev)
        if np.any(np.abs(d) < CRIT_TOL):
            raise SaddleError("continuation reached a critical point (dF/dc ~ 0)")
        c = c + (bj - prev) * np.cos(c / 2) / d
        c = _newton(c, bj)
        prev = bj
    d = np.abs(dF(c, b))
    if np.any(d < CRIT_TOL):
        raise SaddleError("solution sits on a critical point (dF/dc ~ 0)")
    return c


def solve_cstar(b) -> SaddleSolution:
    b = complex(b)
    if b == 0:
        return SaddleSolution(0j, 0j, 0j, 0.0, 1.0, 0.0)
    cp = critical_point()
    if b.real == 0 and abs(b.imag) >= abs(cp.b0.imag):
        raise SaddleError(f"b = {b} lies on the excluded imaginary ray |Im b| >= {abs(cp.b0.imag):.6f}")
    c = complex(cstar_array(np.array([b]))[0])
    H = complex(action(c))
    return SaddleSolution(b, c, H, H.real, float(abs(dF(c, b))), float(abs(F(c, b))))


@lru_cache(maxsize=1)
def critical_point() -> CriticalPoint:
    """On the imaginary axis c = 2iy, 1 + (c/2) tan(c/2) = 0 reads y tanh y = 1."""
    lo, hi = 1.0, 1.5
    while hi - lo > 1e-15:
        mid = 0.5 * (lo + hi)
        if mid * math.tanh(mid) - 1 > 0:
            hi = mid
        else:
            lo = mid
    y = 0.5 * (lo + hi)
    c0 = 2j * y
    b0 = c0 / complex(np.cos(c0 / 2))
    return CriticalPoint(y, c0, b0)


def zero_free_prediction(J_script: float) -> ZeroFreeRegion:
    if J_script <= 0:
        raise SaddleError(f"J_script must be positive, got {J_script}")
    return ZeroFreeRegion(J_script, abs(critical_point().b0) / J_script)


def harmonicity_check(J_script: float = 1.0, re_range=(0.2, 1.0), im_range=(-1.0, 1.0), h: float = 0.01,
                      func=None) -> float:
    """max |5-point discrete Laplacian| of Re H(c*(J beta)) over a beta grid.

    ``func`` replaces the action (maps complex b to real) for calibration.
    """
    if h > 0.02:
        raise SaddleError(f"grid spacing {h} exceeds 0.02")
    nx = int(round((re_range[1] - re_range[0]) / h)) + 1
    ny = int(round((im_range[1] - im_range[0]) / h)) + 1
    x = re_range[0] + h * np.arange(nx)
    y = im_range[0] + h * np.arange(ny)
    beta = x[None, :] + 1j * y[:, None]
    b = J_script * beta
    lim = abs(critical_point().b0.imag)
    if np.any((np.abs(b.real) < 0.5 * h * J_script) & (np.abs(b.imag) >= lim)):
        raise SaddleError("grid touches the excluded imaginary rays |Im b| >= |b0|")
    u = func(b) if func is not None else np.real(action(cstar_array(b)))
    lap = (u[1:-1, 2:] + u[1:-1, :-2] + u[2:, 1:-1] + u[:-2, 1:-1] - 4 * u[1:-1, 1:-1]) / h**2
    return float(np.abs(lap).max()) if lap.size else 0.0


def large_q_green(c, beta_abs: float, tau: float) -> complex:
    """g(tau) with e^g = (cos(c/2) / cos(c (1/2 - tau/|beta|)))^2, principal log."""
    if not 0 <= tau <= beta_abs:
        raise SaddleError(f"tau must lie in [0, |beta|], got {tau}")
    c = complex(c)
    den = np.cos(c * (0.5 - tau / beta_abs))
    if abs(den) < 1e-14:
        raise SaddleError("pole of the large-q Green's function")
    return complex(np.log((np.cos(c / 2) / den) ** 2))


def dominance_scan(b, m_range=range(-3, 4)) -> dict:
    """Compare Re H at c* with other solutions seeded near (2m+1) pi; diagnostic only.

    The leading saddle maximizes -Re H, so c* dominates when its Re H is smallest.
    """
    b = complex(b)
    star = solve_cstar(b)
    found = []
    for m in m_range:
        with np.errstate(all="ignore"):  # seeds that run off to infinity are discarded below
            c = complex(_newton(np.array([(2 * m + 1) * math.pi + 0.1j]), b, iters=200)[0])
            if not np.isfinite(c):
                continue
        if abs(F(c, b)) > 1e-10 * (1 + abs(c)) or not np.isfinite(c):
            continue
        if all(abs(c - f) > 1e-8 for f, _ in found):
            found.append((c, float(np.real(action(c)))))
    others = [a for c, a in found if abs(c - star.c_star) > 1e-8]
    return {
        "b": b, "c_star": star.c_star, "action_re": star.action_re,
        "others": [{"c": c, "action_re": a} for c, a in found if abs(c - star.c_star) > 1e-8],
        "c_star_dominant": all(star.action_re <= a + 1e-12 for a in others),
    }
