"""Recompute the frozen reference constants with mpmath, independently of the package.

Run once; the output is committed as tests/data/oracles.json and the tests
compare the library against it.
"""

import json
import math
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40
OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def strip(rho):
    rho = mp.mpf(rho)
    a = 1 - mp.e ** (-1 / rho)
    N = int(mp.floor((1 + 1 / rho) * mp.e ** (1 + 1 / rho)))
    # partial sum of -log(1 - a) through the Lerch transcendent
    sigma = -mp.log(1 - a) - a ** (N + 1) * mp.lerchphi(a, 1, N + 1)
    beta_r = (1 - mp.e ** (-1 - 1 / rho)) / a
    return {"alpha": float(a), "N_degree": N, "sigma_norm": float(sigma), "beta_radius": float(beta_r),
            "degree_ratio": float(mp.log(N) * rho)}


def wedge_R(rho, dtheta=0.0):
    p = 1 - 2 * mp.mpf(dtheta) / mp.pi
    M = (1 + mp.mpf(rho) ** -2) ** (1 / (2 * p))
    return float(mp.sqrt((M + 1) / (M - 1)))


def critical():
    y = mp.findroot(lambda y: y * mp.tanh(y) - 1, 1.2)
    c0 = 2j * y
    b0 = c0 / mp.cos(c0 / 2)
    return {"y": float(y), "c0_im": float(mp.im(c0)), "b0_im": float(mp.im(b0))}


def cstar(b):
    c = mp.findroot(lambda c: c - b * mp.cos(c / 2), b)
    return complex(c)


def main():
    crit = critical()
    out = {
        "strip": {str(r): strip(r) for r in (0.5, 0.25, 0.125, 0.1, 1 / 16, 1 / 32)},
        "wedge_R": {str(r): wedge_R(r) for r in (0.5, 0.25, 0.1)},
        "wedge_R_dtheta": {"0.2,0.1": wedge_R(0.2, 0.1)},
        "critical": crit,
        "cstar": {"0.1": [cstar(0.1).real, cstar(0.1).imag],
                  "1+1j": [cstar(1 + 1j).real, cstar(1 + 1j).imag]},
        "zero_free_radius": {f"{k},{D}": float(1 / (2 * mp.e) / (k * (D - 1) + 1))
                             for k, D in ((2, 4), (3, 16), (1, 1))},
        "sigma_eta": float((1 - mp.mpf(1.5) ** mp.mpf(-0.5)) / 8),
        "toric_threshold": float(mp.atanh(1 / mp.sqrt(2))),
        "large_q_half_height": {"1": float(abs(crit["b0_im"])), "2": float(abs(crit["b0_im"]) / 2)},
    }
    # Cauchy-tail order for a zero-free disk: R=2, beta=1, n=4, ||H||=4, eps=1e-3
    R, b, f0 = mp.mpf(2), mp.mpf(1), 4 * mp.log(2)
    rho = (R + b) / 2
    M = 2 * rho / (R - rho) * (f0 + R * 4) + (R + rho) / (R - rho) * f0
    K = mp.ceil((mp.log(M / mp.log(1 + mp.mpf("1e-3"))) - mp.log(1 - b / rho)) / mp.log(rho / b))
    out["truncation_order_R2"] = int(K)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(OUT.read_text())


if __name__ == "__main__":
    main()
