"""zerofree command line: gen, z, obs, scan, saddle, code, otoc, certify-map.

Exit codes: 0 success, 2 precondition error, 3 numeric failure. With --json
stdout carries one envelope {status, data, manifest}.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__

EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERIC = 0, 2, 3


class NumericFailure(RuntimeError):
    pass


# serialization -----------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    s = format(x, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return to_json([obj.real, obj.imag], indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        items = [inner + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _versions() -> dict:
    import scipy

    return {"zerofree": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def manifest(args, inputs: list) -> dict:
    h = hashlib.sha256()
    for p in inputs:
        h.update(Path(p).read_bytes())
    argv = [a for a in getattr(args, "argv", []) if a]
    h.update("\0".join(argv).encode())
    return {"subcommand": args.cmd, "argv": argv, "inputs": [str(p) for p in inputs],
            "inputs_sha256": h.hexdigest(), "seed": getattr(args, "seed", None), "jobs": args.jobs,
            "versions": _versions()}


def _write(path, data: bytes | str):
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    p.write_bytes(data)


# input helpers -----------------------------------------------------------------------


def _load_instance(path):
    from .operators import loads

    return loads(Path(path).read_text())


def _complex(s: str) -> complex:
    return complex(s.replace(" ", "").replace("i", "j"))


def _levels_from_instance(path):
    from .ed import diagonalize
    from .operators import PAULI, to_pauli

    h = _load_instance(path)
    if h.basis != PAULI:
        h = to_pauli(h)
    return h, diagonalize(h)


# subcommands ---------------------------------------------------------------------------


def cmd_gen(args) -> dict:
    from .ensembles import InstanceSpec, generate, load_spec
    from .operators import dumps

    if args.config:
        spec = load_spec(args.config)
        args.inputs.append(args.config)
    else:
        if args.ensemble is None:
            raise ValueError("gen needs --ensemble or --config")
        size = args.majoranas if args.ensemble == "syk" else args.size
        if size is None:
            raise ValueError("give --majoranas for syk, --size otherwise")
        q = args.q
        if q is None:
            q = {"klocal_pauli": 2, "ising_pspin": 3}.get(args.ensemble, 4)
        spec = InstanceSpec(args.ensemble, size, q=q, J=args.J, seed=args.seed, degree=args.degree,
                            lattice=tuple(args.lattice), t=args.hopping, U=args.U, mu=args.mu, code=args.code)
    h = generate(spec)
    text = dumps(h)
    args.outputs.append(args.output)
    _write(args.output, text + "\n")
    return {"path": args.output, "kind": spec.kind, "terms": len(h), "basis": h.basis, "size": h.size,
            "spec": spec.to_dict()}


def cmd_z(args) -> dict:
    from .interpolate import estimate_log_partition

    h, spec = _levels_from_instance(args.instance)
    args.inputs.append(args.instance)
    mp = None if args.map in (None, "disk") else args.map
    rep = estimate_log_partition(h, _complex(args.beta), map=mp, eps=args.eps, K=args.K, rho=args.rho,
                                 delta_theta=args.delta_theta, R=args.R, spectrum=spec, oracle=args.oracle)
    return rep.to_dict()


def _observable(args, h):
    from .operators import MAJORANA, PAULI, Monomial, OperatorSum

    if args.observable:
        args.inputs.append(args.observable)
        return _load_instance(args.observable)
    if args.pauli:
        if h.basis != PAULI:
            raise ValueError("--pauli needs a qubit instance")
        return OperatorSum.from_terms(PAULI, h.size, [(1.0, Monomial.pauli(args.pauli))])
    if args.majorana_pair:
        if h.basis != MAJORANA:
            raise ValueError("--majorana-pair needs a Majorana instance")
        a, b = args.majorana_pair
        return OperatorSum.from_terms(MAJORANA, h.size, [(1j, Monomial.majorana([a, b], h.size))])
    raise ValueError("give --observable, --pauli or --majorana-pair")


def cmd_obs(args) -> dict:
    from .ed import observable_exact
    from .interpolate import estimate_observable
    from .operators import PAULI, to_pauli

    h = _load_instance(args.instance)
    args.inputs.append(args.instance)
    o = _observable(args, h)
    if h.basis != PAULI:
        h, o = to_pauli(h), to_pauli(o)
    mp = None if args.map in (None, "disk") else args.map
    val = estimate_observable(h, o, args.beta, delta=args.delta, map=mp, rho=args.rho)
    out = {"beta": args.beta, "delta": args.delta, "map": args.map or "disk", "estimate": val}
    if args.oracle:
        ex = observable_exact(h, o, args.beta)
        out.update(exact=ex, error=abs(val - ex))
    return out


def cmd_scan(args) -> dict:
    from .zeros import Rectangle, evaluate_grid, grid_csv, locate_zeros, render_map

    h, spec = _levels_from_instance(args.instance)
    args.inputs.append(args.instance)
    r = Rectangle(*args.rect)
    out = Path(args.out_dir)
    stem = Path(args.instance).stem
    grid = evaluate_grid(spec, r, args.resolution, jobs=args.jobs)
    img = out / f"{stem}_map.ppm"
    csv = out / f"{stem}_grid.csv"
    _write(img, render_map(spec, r, grid=grid, gamma=args.gamma))
    _write(csv, grid_csv(grid))
    args.outputs += [str(img), str(csv)]
    data = {"image": str(img), "grid": str(csv), "rectangle": r.to_list()}
    if not args.no_zeros:
        atlas = locate_zeros(spec, r, jobs=args.jobs, max_dilations=args.max_dilations)
        zpath = out / f"{stem}_zeros.json"
        _write(zpath, to_json([z.to_dict() for z in atlas.zeros]) + "\n")
        args.outputs.append(str(zpath))
        data.update(zeros=str(zpath), count=atlas.total, unresolved=len(atlas.unresolved),
                    counted_rectangle=atlas.rectangle.to_list())
        if atlas.unresolved:
            raise NumericFailure(f"{len(atlas.unresolved)} zero cells did not converge under Newton; "
                                 f"outputs written to {out}")
    return data


def cmd_saddle(args) -> dict:
    from .syk_theory import critical_point, solve_cstar, zero_free_prediction

    cp = critical_point()
    data = {"y": cp.y, "c0": cp.c0, "b0": cp.b0}
    if args.J_script is not None:
        data["region"] = zero_free_prediction(args.J_script).to_dict()
    if args.b is not None:
        s = solve_cstar(_complex(args.b))
        data["saddle"] = {"b": s.b, "c_star": s.c_star, "action": s.action, "residual": s.residual}
    return data


def cmd_code(args) -> dict:
    from .codes import from_dict, named_code, separability_bound

    if args.code_json:
        args.inputs.append(args.code_json)
        code = from_dict(json.loads(Path(args.code_json).read_text()))
    else:
        code = named_code(args.name, args.size)
    rep = separability_bound(code)
    # the report counts the redundant checks too, so keep its m apart from the code's
    return {**code.to_dict(), "separability": rep.to_dict()}


def cmd_otoc(args) -> dict:
    from .ed import diagonalize, otoc_exact
    from .ensembles import pauli_chain
    from .operators import PAULI, to_pauli
    from .otoc import OtocTask, estimate_otoc, lr_baseline

    if args.instance:
        h = _load_instance(args.instance)
        args.inputs.append(args.instance)
    else:
        h = pauli_chain(args.chain, args.J, args.seed)
    spec = diagonalize(h if h.basis == PAULI else to_pauli(h), vectors=True)
    base = OtocTask(h, args.b_site, args.m_site, args.L)
    rows = []
    for t in args.times:
        task = base.with_time(t)
        ex = otoc_exact(task.h, task.b_site, task.m_site, task.L, t, spectrum=spec)
        est = estimate_otoc(task, eps=args.eps, eta=args.eta, K=args.K, K_cap=args.K_cap, spectrum=spec,
                            direct=args.direct)
        lr = lr_baseline(task, R=args.lr_R, eps=args.eps)
        rows.append({"t": t, "exact": ex, "interpolated": est.value, "lr_R": lr["R"], "lr_estimate": lr["estimate"],
                     "interp_error": abs(est.value - ex), "lr_error": abs(lr["estimate"] - ex), "K": est.K,
                     "K_formula": est.K_formula})
    if args.output:
        cols = ["t", "exact", "interpolated", "lr_R", "lr_estimate", "interp_error", "lr_error", "K", "K_formula"]
        lines = [",".join(cols)]
        for r in rows:
            lines.append(",".join(_csv_cell(r[c]) for c in cols))
        _write(args.output, "\n".join(lines) + "\n")
        args.outputs.append(args.output)
    return {"rows": rows, "c0": base.c0, "k": base.k, "D": base.D, "J": base.J}


def _csv_cell(v) -> str:
    if isinstance(v, complex):
        return _fmt_float(v.real) if v.imag == 0 else f"{_fmt_float(v.real)}{v.imag:+.17g}j"
    if isinstance(v, float):
        return _fmt_float(v)
    return str(v)


def cmd_certify_map(args) -> dict:
    from .maps import build_strip_map, build_wedge_map, certify_map

    if args.kind == "strip":
        m = build_strip_map(args.rho, args.K)
    else:
        m = build_wedge_map(args.rho, args.delta_theta, args.K)
    cert = certify_map(m, samples=args.samples, seed=args.seed)
    data = cert.to_dict()
    data.update(valid_radius=m.valid_radius, K=m.K)
    if cert.violations:
        raise NumericFailure(f"{cert.violations} map samples left the target region")
    return data


# parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zerofree", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a {status, data, manifest} envelope")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallelism degree")
    common.add_argument("--manifest", help="manifest path (default: next to the first output)")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate an instance JSON")
    g.add_argument("--ensemble", choices=["syk", "klocal_pauli", "ising_pspin", "heisenberg_sk", "stabilizer",
                                          "fermi_hubbard"])
    g.add_argument("--config", help="instance spec as .toml or .json")
    g.add_argument("--majoranas", type=int)
    g.add_argument("--size", type=int, help="qubits, spins or sites")
    g.add_argument("--q", type=int, help="SYK body order, p-spin order or locality k")
    g.add_argument("--degree", type=int, default=4)
    g.add_argument("--J", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--lattice", type=int, nargs=2, default=[2, 2])
    g.add_argument("--hopping", type=float, default=1.0)
    g.add_argument("--U", type=float, default=8.0)
    g.add_argument("--mu", type=float, default=2.0)
    g.add_argument("--code", default="repetition")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    z = sub.add_parser("z", parents=[common], help="interpolated log Z at one beta")
    z.add_argument("--instance", required=True)
    z.add_argument("--beta", required=True, help="real or complex, e.g. 1.0 or 0.5+0.2j")
    z.add_argument("--map", choices=["disk", "strip", "wedge"], default="disk")
    z.add_argument("--eps", type=float, default=1e-3)
    z.add_argument("--K", type=int)
    z.add_argument("--R", type=float, help="zero-free disk radius for the disk path")
    z.add_argument("--rho", type=float)
    z.add_argument("--delta-theta", type=float, default=0.0)
    z.add_argument("--oracle", action="store_true", help="also report the error against ED")
    z.set_defaults(func=cmd_z)

    o = sub.add_parser("obs", parents=[common], help="thermal expectation from two interpolations")
    o.add_argument("--instance", required=True)
    o.add_argument("--observable", help="operator JSON in the instance format")
    o.add_argument("--pauli", help="Pauli label observable")
    o.add_argument("--majorana-pair", type=int, nargs=2, help="i gamma_a gamma_b")
    o.add_argument("--beta", type=float, required=True)
    o.add_argument("--delta", type=float, default=1e-2)
    o.add_argument("--map", choices=["disk", "strip", "wedge"], default="disk")
    o.add_argument("--rho", type=float)
    o.add_argument("--oracle", action="store_true")
    o.set_defaults(func=cmd_obs)

    s = sub.add_parser("scan", parents=[common], help="Fisher-zero atlas: PPM, CSV grid, zeros JSON")
    s.add_argument("--instance", required=True)
    s.add_argument("--rect", type=float, nargs=4, default=[-6, 6, -6, 6], metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"))
    s.add_argument("--resolution", type=int, nargs=2, default=[256, 256], metavar=("NX", "NY"))
    s.add_argument("--gamma", type=float, default=0.15)
    s.add_argument("--out-dir", default=".")
    s.add_argument("--no-zeros", action="store_true")
    s.add_argument("--max-dilations", type=int, default=5)
    s.set_defaults(func=cmd_scan)

    d = sub.add_parser("saddle", parents=[common], help="large-q SYK constants and saddle solutions")
    d.add_argument("--J-script", type=float)
    d.add_argument("--b", help="solve c = b cos(c/2) at this complex b")
    d.set_defaults(func=cmd_saddle)

    c = sub.add_parser("code", parents=[common], help="stabilizer code summary and separability threshold")
    c.add_argument("--name", default="repetition", choices=["repetition", "toric", "steane"])
    c.add_argument("--size", type=int)
    c.add_argument("--code-json", help='{"checks": ["ZZI", "IZZ"], "signs": [0, 0]}')
    c.set_defaults(func=cmd_code)

    t = sub.add_parser("otoc", parents=[common], help="OTOC: exact, interpolated and LR-truncated")
    t.add_argument("--instance")
    t.add_argument("--chain", type=int, default=8, help="random XX/YY/ZZ chain length if no instance")
    t.add_argument("--J", type=float, default=0.25)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--b-site", type=int, default=3)
    t.add_argument("--m-site", type=int, default=4)
    t.add_argument("--L", type=int, default=1)
    t.add_argument("--times", type=float, nargs="+", default=[0.1, 0.25, 0.5])
    t.add_argument("--eps", type=float, default=1e-3)
    t.add_argument("--eta", type=float, default=0.1)
    t.add_argument("--K", type=int)
    t.add_argument("--K-cap", type=int, default=4000)
    t.add_argument("--direct", action="store_true", help="interpolate f instead of log(2 - f)")
    t.add_argument("--lr-R", type=int, default=2)
    t.add_argument("-o", "--output", help="CSV path")
    t.set_defaults(func=cmd_otoc)

    m = sub.add_parser("certify-map", parents=[common], help="sample a conformal map against its target region")
    m.add_argument("--kind", choices=["strip", "wedge"], required=True)
    m.add_argument("--rho", type=float, required=True)
    m.add_argument("--delta-theta", type=float, default=0.0)
    m.add_argument("--K", type=int, default=200)
    m.add_argument("--samples", type=int, default=10_000)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_certify_map)
    return p


def _classify(exc: BaseException) -> int:
    from .zeros import BoundaryError, NonIntegerCountError

    if isinstance(exc, (NumericFailure, BoundaryError, NonIntegerCountError, FloatingPointError)):
        return EXIT_NUMERIC
    return EXIT_PRECONDITION


def _advice(exc: BaseException) -> str:
    from .zeros import BoundaryError

    msg = str(exc)
    if isinstance(exc, BoundaryError):
        msg += " (move or dilate the rectangle, or raise --max-dilations)"
    return msg


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_PRECONDITION
    args.argv, args.inputs, args.outputs = argv, [], []
    status, code, data, error = "ok", EXIT_OK, None, None
    try:
        data = args.func(args)
    except (ValueError, KeyError, OSError, TypeError, NumericFailure, ArithmeticError) as exc:
        code = _classify(exc)
        status = "numeric-failure" if code == EXIT_NUMERIC else "precondition-error"
        error = _advice(exc)
    man = manifest(args, [p for p in args.inputs if Path(p).is_file()])
    man["outputs"] = args.outputs
    mpath = args.manifest or (str(Path(args.outputs[0]).with_name(Path(args.outputs[0]).stem + ".manifest.json"))
                              if args.outputs else None)
    if mpath:
        _write(mpath, to_json(man) + "\n")
    if args.json:
        env = {"status": status, "data": data, "manifest": man}
        if error:
            env["error"] = error
        print(to_json(env))
    else:
        if error:
            print(f"zerofree {args.cmd}: {error}", file=sys.stderr)
        if data is not None:
            _print_human(data)
    return code


def _print_human(data, prefix=""):
    for k, v in data.items():
        if isinstance(v, dict):
            _print_human(v, prefix + k + ".")
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            for i, row in enumerate(v):
                _print_human(row, f"{prefix}{k}[{i}].")
        else:
            print(f"{prefix}{k}: {to_json(v) if not isinstance(v, str) else v}")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
