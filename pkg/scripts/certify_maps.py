"""Certify the strip and wedge maps on a grid of rho and print the margins."""

import argparse
import json
from dataclasses import dataclass

from zerofree.maps import build_strip_map, build_wedge_map, certify_map


@dataclass
class CertifyConfig:
    rhos: tuple = (0.5, 0.25, 0.1)
    wedge_angles: tuple = (0.0, 0.1, 0.3)
    samples: int = 10_000
    K: int = 40
    seed: int = 0


def run(cfg: CertifyConfig):
    rows = []
    for rho in cfg.rhos:
        c = certify_map(build_strip_map(rho, cfg.K), cfg.samples, cfg.seed)
        rows.append({"map": "strip", "rho": rho, "violations": c.violations, "min_margin": c.min_margin,
                     "N_degree": c.details["N_degree"], "max_abs_im": c.details["max_abs_im"]})
        for dt in cfg.wedge_angles:
            c = certify_map(build_wedge_map(rho, dt, cfg.K), cfg.samples, cfg.seed)
            rows.append({"map": "wedge", "rho": rho, "delta_theta": dt, "violations": c.violations,
                         "min_margin": c.min_margin, "R": c.details["R"], "max_abs_phi": c.max_abs_phi})
    for r in rows:
        print(json.dumps(r))
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=CertifyConfig.samples)
    run(CertifyConfig(samples=ap.parse_args().samples))
