"""Command line entry point: ``mgflow run|sweep|oracle|verify``.

Exit codes: 0 ok, 1 configuration or usage error, 2 numerical failure,
3 classification differs from ``--expect``, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analytic as A
from .analysis import write_diagnostics_csv
from .errors import ConfigError, NumericalBlowup
from .flow import Classification, load_checkpoint, run, save_checkpoint
from .loops import write_loop_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_EXPECT, EXIT_VERIFY = 0, 1, 2, 3, 4


def _fail_config(exc: ConfigError) -> int:
    for ptr, msg in exc.violations:
        print(f"config error {ptr or '/'}: {msg}", file=sys.stderr)
    return EXIT_CONFIG


def execute_run(cfg, out_dir, expect=None, checkpoint_every=0, resume=None):
    """Run one scenario into ``out_dir``; returns (exit_code, manifest)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snaps = out / "snapshots"
    snaps.mkdir(exist_ok=True)
    loop = cfg.initial_loop()
    field = cfg.magnetic_field()
    fcfg = cfg.flow_config()
    stride = cfg.output.stride

    start, series = None, []
    if resume:
        start, ck_field, series = load_checkpoint(resume)
        if ck_field != field or start.loop.n != loop.n:
            raise ConfigError([("/", "checkpoint does not belong to this scenario")])
    records = list(series)
    ck_path = out / "checkpoint.json"

    def on_record(state, rec):
        records.append(rec)
        idx = len(records) - 1
        if idx % stride == 0:
            write_loop_csv(snaps / f"loop_{idx:06d}.csv", state.loop)
        if checkpoint_every and idx % checkpoint_every == 0:
            save_checkpoint(ck_path, state, field, records)

    t0 = time.perf_counter()
    outcome = run(loop, field, fcfg, start=start, series=series, on_record=on_record)
    wall = time.perf_counter() - t0

    write_diagnostics_csv(out / "diagnostics.csv", outcome.series)
    write_loop_csv(out / "final_loop.csv", outcome.final.loop)
    (out / "config.json").write_text(cfg.to_json())
    artifacts = ["config.json", "diagnostics.csv", "final_loop.csv"]
    artifacts += sorted(f"snapshots/{p.name}" for p in snaps.glob("loop_*.csv"))
    if ck_path.exists():
        artifacts.append("checkpoint.json")
    last = outcome.series[-1]
    manifest = {
        "config_hash": cfg.hash(),
        "scenario": cfg.name,
        "classification": outcome.classification.value,
        "expected": expect,
        "note": outcome.note,
        "blowup": outcome.blowup,
        "wall_time_s": wall,
        "dt": outcome.dt,
        "steps": outcome.final.steps,
        "artifacts": ["manifest.json"] + artifacts,
        "summary": last.as_dict(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))

    if outcome.blowup:
        code = EXIT_NUMERIC
    elif expect and Classification(expect) is not outcome.classification:
        code = EXIT_EXPECT
    else:
        code = EXIT_OK
    return code, manifest


def cmd_run(args) -> int:
    from .config import parse_config

    if not args.out:
        print("error: --out must be a non-empty directory path", file=sys.stderr)
        return EXIT_CONFIG
    if args.expect:
        try:
            Classification(args.expect)
        except ValueError:
            print(f"error: unknown classification {args.expect!r}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = parse_config(args.config)
        code, manifest = execute_run(cfg, args.out, args.expect, args.checkpoint_every, args.resume)
    except ConfigError as exc:
        return _fail_config(exc)
    except (NumericalBlowup, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"{manifest['classification']} at t={manifest['summary']['time']:.6g} -> {args.out}")
    if code == EXIT_EXPECT:
        print(f"expected {args.expect}", file=sys.stderr)
    return code


def _sweep_one(job):
    from .config import validate_config

    data, out_dir = job
    try:
        cfg = validate_config(data)
        code, manifest = execute_run(cfg, out_dir)
    except ConfigError as exc:
        return EXIT_CONFIG, {"classification": "InvalidConfig", "error": str(exc)}
    except (NumericalBlowup, ArithmeticError) as exc:
        return EXIT_NUMERIC, {"classification": "NumericalFailure", "error": str(exc)}
    return code, manifest


def _parse_values(text):
    vals = []
    for tok in (text or "").split(","):
        tok = tok.strip()
        if not tok:
            continue
        vals.append(float(tok))
    return vals


def cmd_sweep(args) -> int:
    from .config import parse_config, set_pointer, validate_config

    try:
        values = _parse_values(args.values)
    except ValueError:
        print(f"error: non-numeric value in {args.values!r}", file=sys.stderr)
        return EXIT_CONFIG
    if not values:
        print("error: empty values list", file=sys.stderr)
        return EXIT_CONFIG
    try:
        base = parse_config(args.config)
        data = base.to_dict()
        jobs = []
        out_root = Path(args.out or base.output.directory or "sweep_out")
        for i, v in enumerate(values):
            d = set_pointer(data, args.param, v)
            validate_config(d)
            jobs.append((d, str(out_root / f"run_{i:03d}")))
    except ConfigError as exc:
        return _fail_config(exc)

    threads = int(os.environ.get("MGFLOW_THREADS", os.cpu_count() or 1))
    threads = max(1, min(threads, len(jobs)))
    if threads == 1:
        results = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_one, jobs))

    order = sorted(range(len(values)), key=lambda i: values[i])
    out_root.mkdir(parents=True, exist_ok=True)
    with open(out_root / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value", "classification", "final_kinetic", "final_residual", "directory"])
        for i in order:
            _, man = results[i]
            summ = man.get("summary", {})
            w.writerow(
                [
                    f"{values[i]:.17g}",
                    man["classification"],
                    f"{summ['kinetic']:.17g}" if summ else "NA",
                    f"{summ['residual_l2']:.17g}" if summ else "NA",
                    Path(jobs[i][1]).name,
                ]
            )
            print(f"{args.param}={values[i]:g}: {man['classification']}")
    codes = [c for c, _ in results]
    if EXIT_NUMERIC in codes:
        return EXIT_NUMERIC
    if EXIT_CONFIG in codes:
        return EXIT_CONFIG
    return EXIT_OK


ORACLE_CASES = (
    "torus-mode",
    "torus-drift",
    "sphere-theta",
    "hyperbolic-theta",
    "latitude-geodesic",
    "plane-circle",
)


def oracle_table(case, p):
    """(header, rows) for an oracle case; ``p`` is the parsed argparse namespace."""
    s = np.arange(p.n) * 2 * math.pi / p.n
    if case == "torus-mode":
        phi, z = A.torus_mode(A.TorusModeParams(p.k, p.a, p.b, p.B0), s, p.t)
        return ["s", "phi", "z"], np.column_stack([s, phi, z])
    if case == "torus-drift":
        phi, z = A.torus_drift(p.mu, p.B0, s, p.t)
        return ["s", "phi", "z"], np.column_stack([s, phi, z])
    if case in ("sphere-theta", "hyperbolic-theta"):
        geom = A.Geometry.SPHERE if case == "sphere-theta" else A.Geometry.HYPERBOLOID
        ts, th = A.latitude_ode_solve(A.LatitudeOdeState(p.theta0, p.B0, geom), p.t_end, p.dt)
        every = max(1, p.every)
        return ["t", "theta"], np.column_stack([ts, th])[::every]
    if case == "latitude-geodesic":
        pts = A.latitude_geodesic(p.geometry, p.theta0, p.B0, s)
        return ["s", "x1", "x2", "x3"], np.column_stack([s, pts])
    pts = A.plane_circle(p.B0, p.speed, s)
    return ["s", "x1", "x2"], np.column_stack([s, pts])


def cmd_oracle(args) -> int:
    if args.case not in ORACLE_CASES:
        print(f"error: unknown oracle case {args.case!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        header, rows = oracle_table(args.case, args)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fh = open(args.out, "w") if args.out else sys.stdout
    try:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import AcceptanceSuite

    results = AcceptanceSuite(full=args.suite == "full").run_all(echo=lambda s: print(s, flush=True))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--expect", help="expected classification")
    p.add_argument("--checkpoint-every", type=int, default=0, metavar="RECORDS")
    p.add_argument("--resume", help="checkpoint file to resume from")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a scenario over values of one numeric field")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True, help="e.g. /field/B0 or field.B0")
    p.add_argument("--values", required=True, help="comma separated")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="emit a closed-form or ODE reference solution")
    p.add_argument("--case", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--B0", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--theta0", type=float, default=1.0)
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--geometry", choices=[g.value for g in A.Geometry], default="Sphere")
    p.add_argument("--t", type=float, default=0.0, help="time for curve cases")
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--every", type=int, default=100, help="output every k-th ODE step")
    p.add_argument("--n", type=int, default=256, help="parameter grid size")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--suite", choices=["fast", "full"], default="fast")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
