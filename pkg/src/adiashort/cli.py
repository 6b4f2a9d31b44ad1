"""Command-line interface: ``adiashort {simulate,scan,energies,profile,verify}``.

Exit codes: 0 success, 1 acceptance failure (verify), 2 invalid input,
3 integrator failure.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import energy_track
from .core import GammaPolicy, StateVector
from .integrator import IntegrationError, QuadratureError, SimulationConfig, integrate
from .models import AllenEberly, LandauZener, Tabulated, read_gamma_csv, synthesize_profile

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTEGRATOR = 0, 1, 2, 3
SUMMARY_HEADER = ["row", "parameter", "final_P1", "final_P2", "endpoint_norm",
                  "max_abs_a_minus", "peak_abs_gamma", "steps", "file", "status"]


class UsageError(ValueError):
    pass


def _atomic_write(path, write) -> None:
    """Run ``write(tmp_path)`` and move the result into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _float_list(text: str, flag: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{flag}: expected a number or comma list, got {text!r}") from None
    if not vals:
        raise UsageError(f"{flag}: empty value")
    return vals


def _single(text, flag):
    if text is None:
        return None
    vals = _float_list(text, flag)
    if len(vals) != 1:
        raise UsageError(f"{flag}: a single value is required here (use scan for lists)")
    return vals[0]


def build_model(kind: str, omega=None, alpha=None, delta=None):
    if kind == "lz":
        if omega is None:
            raise UsageError("--model lz needs --omega")
        return LandauZener(omega)
    if kind == "ae":
        if alpha is None or delta is None:
            raise UsageError("--model ae needs --alpha and --delta")
        return AllenEberly(alpha, delta)
    if kind.startswith("table:"):
        return Tabulated.read_csv(kind[len("table:"):])
    raise UsageError(f"--model must be lz, ae or table:<path>, got {kind!r}")


def build_policy(arg: str) -> GammaPolicy:
    if arg == "off":
        return GammaPolicy.off()
    if arg == "shortcut":
        return GammaPolicy.shortcut(+1)
    if arg == "shortcut-neg":
        return GammaPolicy.shortcut(-1)
    if arg.startswith("file:"):
        t, g = read_gamma_csv(arg[len("file:"):])
        return GammaPolicy.custom(t, g)
    raise UsageError(f"--gamma must be off, shortcut, shortcut-neg or file:<path>, got {arg!r}")


def parse_init(arg: str):
    if arg in ("bare1", "bare2", "adiabatic"):
        return arg
    if arg == "adiabatic-minus":
        return "adiabatic_minus"
    if arg.startswith("custom:"):
        parts = _float_list(arg[len("custom:"):], "--init")
        if len(parts) != 4:
            raise UsageError("--init custom:<c1r,c1i,c2r,c2i> needs four numbers")
        return StateVector(complex(parts[0], parts[1]), complex(parts[2], parts[3]))
    raise UsageError(f"unknown --init {arg!r}")


def _config(args, model) -> SimulationConfig:
    return SimulationConfig(
        model=model,
        policy=build_policy(args.gamma),
        window=(args.t0, args.t1),
        initial_state=parse_init(args.init),
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        samples=args.samples,
    )


def _write_trajectory(traj, path, fmt) -> None:
    _atomic_write(path, traj.to_json if fmt == "json" else traj.to_csv)


def _summary(traj) -> str:
    return (f"final P1={traj.p1[-1]:.12g} P2={traj.p2[-1]:.12g} norm={traj.norm[-1]:.12g} "
            f"max|a_-|={np.max(traj.abs_a_minus):.3e}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    model = build_model(args.model, _single(args.omega, "--omega"), _single(args.alpha, "--alpha"),
                        _single(args.delta, "--delta"))
    config = _config(args, model)
    start = time.perf_counter()
    traj = integrate(config)
    wall = time.perf_counter() - start
    if args.out:
        _write_trajectory(traj, args.out, args.format)
        manifest = {
            "command": ["adiashort", *args.argv],
            "config": config.to_dict(),
            "outputs": [str(args.out)],
            "stats": traj.stats,
            "wall_clock_s": wall,
            "finished_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        _atomic_write(f"{args.out}.manifest.json", lambda p: _dump_json(manifest, p))
    print(_summary(traj))
    return EXIT_OK


def _dump_json(doc, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _scan_row(job):
    """Worker: integrate one row and write its trajectory file."""
    index, label, cfg_dict, path, fmt = job
    try:
        traj = integrate(SimulationConfig.from_dict(cfg_dict))
        _write_trajectory(traj, path, fmt)
    except Exception as exc:  # reported per row
        return {"row": index, "parameter": label, "file": "", "status": f"error: {type(exc).__name__}: {exc}"}
    return {
        "row": index,
        "parameter": label,
        "final_P1": repr(float(traj.p1[-1])),
        "final_P2": repr(float(traj.p2[-1])),
        "endpoint_norm": repr(float(traj.norm[-1])),
        "max_abs_a_minus": repr(float(np.max(traj.abs_a_minus))),
        "peak_abs_gamma": repr(float(np.max(np.abs(traj.gamma)))),
        "steps": traj.stats["steps"],
        "file": os.path.basename(path),
        "status": "ok",
    }


def scan_workers(n_rows: int) -> int:
    env = os.environ.get("ADIASHORT_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise UsageError(f"ADIASHORT_THREADS must be a positive integer, got {env!r}") from None
        if cap < 1:
            raise UsageError(f"ADIASHORT_THREADS must be a positive integer, got {env!r}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_rows))


def cmd_scan(args) -> int:
    if not args.out:
        raise UsageError("scan needs --out <directory>")
    names = {"lz": ("omega",), "ae": ("alpha", "delta")}.get(args.model, ())
    grids = {k: _float_list(getattr(args, k), f"--{k}") for k in names if getattr(args, k) is not None}
    missing = [k for k in names if k not in grids]
    if missing:
        raise UsageError(f"--model {args.model} needs " + ", ".join(f"--{k}" for k in missing))
    combos = [dict(zip(grids, vals)) for vals in itertools.product(*grids.values())] if names else [{}]

    outdir = Path(args.out)
    ext = "json" if args.format == "json" else "csv"
    jobs = []
    for i, params in enumerate(combos):
        model = build_model(args.model, **params)
        cfg = _config(args, model)  # validates every row before any work starts
        label = " ".join(f"{k}={v:g}" for k, v in params.items()) or args.model
        stem = "_".join(f"{k}{v:g}" for k, v in params.items()) or "table"
        jobs.append((i, label, cfg.to_dict(), str(outdir / f"row{i:03d}_{stem}.{ext}"), args.format))
    outdir.mkdir(parents=True, exist_ok=True)

    workers = scan_workers(len(jobs))
    if workers == 1:
        rows = [_scan_row(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_row, jobs))

    def write_summary(path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, SUMMARY_HEADER, restval="", lineterminator="\n")
            w.writeheader()
            w.writerows(rows)

    _atomic_write(outdir / "summary.csv", write_summary)
    for r in rows:
        if r["status"] == "ok":
            print(f"{r['parameter']}: P1={float(r['final_P1']):.12g} P2={float(r['final_P2']):.12g} "
                  f"norm={float(r['endpoint_norm']):.12g}")
        else:
            print(f"{r['parameter']}: {r['status']}", file=sys.stderr)
    return EXIT_INTEGRATOR if any(r["status"] != "ok" for r in rows) else EXIT_OK


def cmd_energies(args) -> int:
    model = build_model(args.model, _single(args.omega, "--omega"), _single(args.alpha, "--alpha"),
                        _single(args.delta, "--delta"))
    cfg = _config(args, model)  # same validation as simulate
    track = energy_track(model, cfg.policy, cfg.window, n=cfg.samples)
    if args.out:
        _atomic_write(args.out, track.to_csv)
    print(f"separationMin={track.separation_min!r} at t={track.t_min!r}")
    return EXIT_OK


def cmd_profile(args) -> int:
    model = build_model(args.model, _single(args.omega, "--omega"), _single(args.alpha, "--alpha"),
                        _single(args.delta, "--delta"))
    sign = -1 if args.gamma == "shortcut-neg" else 1
    prof = synthesize_profile(model, (args.t0, args.t1), n=args.samples, sign=sign)
    if args.out:
        _atomic_write(args.out, prof.to_csv)
    print(f"peak|gamma|={prof.peak_magnitude!r} gamma(t0)={float(prof.gamma[0])!r} gamma(t1)={float(prof.gamma[-1])!r}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import run_all

    start = time.perf_counter()
    results = run_all(fast=args.fast, echo=lambda line: print(line, flush=True))
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed in {time.perf_counter() - start:.1f} s")
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_run_flags(p, lists=False):
    num = "comma list" if lists else "value"
    p.add_argument("--model", default="lz", help="lz, ae or table:<csv with t,omega,delta>")
    p.add_argument("--omega", help=f"LZ coupling ratio ({num})")
    p.add_argument("--alpha", help=f"AE pulse amplitude ({num})")
    p.add_argument("--delta", help=f"AE chirp amplitude ({num})")
    p.add_argument("--gamma", default="off", help="off, shortcut, shortcut-neg or file:<csv with t,gamma>")
    p.add_argument("--t0", type=float, default=-15.0)
    p.add_argument("--t1", type=float, default=15.0)
    p.add_argument("--samples", type=int, default=3001)
    p.add_argument("--init", default="adiabatic",
                   help="bare1, bare2, adiabatic, adiabatic-minus or custom:c1r,c1i,c2r,c2i")
    p.add_argument("--rel-tol", type=float, default=1e-12)
    p.add_argument("--abs-tol", type=float, default=1e-14)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adiashort", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="integrate one trajectory")
    _add_run_flags(p)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("scan", help="integrate a cartesian grid of parameters into a directory")
    _add_run_flags(p, lists=True)
    p.set_defaults(func=cmd_scan)
    p = sub.add_parser("energies", help="bare energies and their minimum separation")
    _add_run_flags(p)
    p.set_defaults(func=cmd_energies)
    p = sub.add_parser("profile", help="sample the shortcut gain/loss rate to a t,gamma CSV")
    _add_run_flags(p)
    p.set_defaults(func=cmd_profile)
    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--fast", action="store_true", help="10x fewer oracle steps, relaxed tolerances")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except (IntegrationError, QuadratureError) as exc:
        print(f"adiashort: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR
    except (ValueError, OSError) as exc:
        print(f"adiashort: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
