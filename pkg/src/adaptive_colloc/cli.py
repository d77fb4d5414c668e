"""Command-line interface: solve-reference | train | sweep | report.

Exit codes: 0 success, 1 numerical abort during training, 2 usage or
configuration errors. The default output root is $ADAPTIVE_COLLOC_OUT, else
./adaptive-colloc-out.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import (
    PROFILES,
    build_train_config,
    case_overrides,
    profile_overrides,
    read_config_file,
)
from .errors import ConfigError
from .fieldio import write_field, write_field_csv
from .grid import make_uniform_mesh
from .pde import TEST_CASES
from .runio import write_run_dir
from .sampling import Scheme
from .training import reference_solution, train


def _default_out_root() -> Path:
    return Path(os.environ.get("ADAPTIVE_COLLOC_OUT", "adaptive-colloc-out"))


def _spec_overrides(args) -> dict[str, str]:
    """Flat overrides from explicit PDE flags (None values skipped)."""
    mapping = {
        "pde.family": args.family,
        "pde.sigma_f": args.sigma_f,
        "pde.amplitude": args.amplitude,
        "pde.k11": args.k11,
        "pde.k22": args.k22,
        "pde.k12": args.k12,
        "pde.v1": args.v1,
        "pde.v2": args.v2,
    }
    return {k: str(v) for k, v in mapping.items() if v is not None}


def cmd_solve_reference(args) -> int:
    overrides: dict[str, str] = {}
    if args.case:
        overrides.update(case_overrides(args.case))
    overrides.update(_spec_overrides(args))
    overrides["mesh.n"] = str(args.n)
    config = build_train_config(overrides)

    mesh = make_uniform_mesh(config.mesh_n)
    f, u = reference_solution(config.pde, mesh)
    out = Path(args.out) if args.out else _default_out_root() / "reference"
    write_field(out / "source", f, "source")
    write_field_csv(out / "source.csv", f)
    write_field(out / "solution", u, "solution")
    write_field_csv(out / "solution.csv", u)
    print(f"n = {mesh.n}")
    print(f"solution min = {u.data.min():.6e}")
    print(f"solution max = {u.data.max():.6e}")
    print(f"solution mean = {u.mean():.6e}")
    print(f"wrote {out}")
    return 0


def _train_overrides(args) -> dict[str, str]:
    overrides: dict[str, str] = {}
    if args.config:
        overrides.update(read_config_file(args.config))
    if args.profile:
        overrides.update(profile_overrides(args.profile))
    if args.case:
        overrides.update(case_overrides(args.case))
    if args.scheme:
        overrides["sampler.scheme"] = args.scheme
    if args.n_c is not None:
        overrides["sampler.n_c"] = str(args.n_c)
    if args.seed is not None:
        overrides["seed.init"] = str(args.seed)
        overrides["seed.sample"] = str(args.seed)
        overrides["seed.val"] = str(args.seed)
    return overrides


def cmd_train(args) -> int:
    config = build_train_config(_train_overrides(args))
    result = train(config)
    out = Path(args.out) if args.out else _default_out_root() / "run"
    write_run_dir(out, result)
    if result.loop.aborted:
        print(f"aborted: {result.loop.abort_reason}", file=sys.stderr)
        print(f"partial run written to {out}", file=sys.stderr)
        return 1
    print(f"mu1 = {result.mu1!r}")
    print(f"mu2 = {result.mu2!r}")
    print(f"best_epoch = {result.best_epoch}")
    print(f"wrote {out}")
    return 0


AGGREGATE_COLUMNS = (
    "case", "scheme", "n_c", "seed", "status",
    "mu1", "mu2", "best_epoch", "stalls", "wall_s",
)


def _run_cell(cell) -> dict:
    """One sweep cell; returns an aggregate row (status records failures)."""
    case, scheme, n_c, seed, base = cell
    row = {"case": case, "scheme": scheme, "n_c": n_c, "seed": seed}
    overrides = dict(base)
    overrides.update(case_overrides(case))
    overrides["sampler.scheme"] = scheme
    overrides["sampler.n_c"] = str(n_c)
    overrides["seed.init"] = str(seed)
    overrides["seed.sample"] = str(seed)
    overrides["seed.val"] = str(seed)
    try:
        result = train(build_train_config(overrides))
    except Exception as exc:  # a cell failure must not sink the sweep
        row.update(status=f"error:{type(exc).__name__}", mu1="", mu2="",
                   best_epoch="", stalls="", wall_s="")
        return row
    row.update(
        status="aborted" if result.loop.aborted else "ok",
        mu1=repr(result.mu1),
        mu2=repr(result.mu2),
        best_epoch=result.best_epoch,
        stalls=len(result.loop.stall_epochs),
        wall_s=f"{result.wall_time_s:.3f}",
        _result=result,
    )
    return row


def _parse_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def cmd_sweep(args) -> int:
    matrix = read_config_file(args.config)
    cases = _parse_list(matrix.pop("cases", "tc1"))
    schemes = _parse_list(matrix.pop("schemes", "baseline"))
    n_cs = [int(v) for v in _parse_list(matrix.pop("n_c", "1000"))]
    seeds = [int(v) for v in _parse_list(matrix.pop("seeds", "0"))]
    profile = matrix.pop("profile", "")
    base: dict[str, str] = {}
    if profile:
        base.update(profile_overrides(profile))
    base.update(matrix)  # remaining keys are plain config overrides

    for case in cases:
        if case.lower() not in TEST_CASES:
            raise ConfigError(f"unknown case {case!r} in sweep matrix", key="cases")
    for scheme in schemes:
        Scheme(scheme)

    out = Path(args.out) if args.out else _default_out_root() / "sweep"
    out.mkdir(parents=True, exist_ok=True)
    cells = [
        (case, scheme, n_c, seed, base)
        for case in cases for scheme in schemes for n_c in n_cs for seed in seeds
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(cell) for cell in cells]

    for row in rows:
        result = row.pop("_result", None)
        if result is not None:
            name = f"{row['case']}-{row['scheme']}-nc{row['n_c']}-s{row['seed']}"
            write_run_dir(out / "runs" / name, result)

    agg_path = out / "aggregate.csv"
    with agg_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=AGGREGATE_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    _write_summary(rows, out / "summary.csv")
    print(f"wrote {agg_path} ({len(rows)} rows)")
    return 0


def _quantiles(values: list[float]) -> tuple[float, float, float]:
    arr = np.asarray(values, dtype=float)
    q25, med, q75 = np.percentile(arr, [25, 50, 75])
    return float(q25), float(med), float(q75)


def _write_summary(rows: list[dict], path: Path) -> None:
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        key = (row["case"], row["scheme"], row["n_c"])
        groups.setdefault(key, []).append(float(row["mu1"]))
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case", "scheme", "n_c", "n", "mu1_q25", "mu1_median", "mu1_q75"])
        for key in sorted(groups, key=lambda k: (k[0], k[1], int(k[2]))):
            vals = groups[key]
            q25, med, q75 = _quantiles(vals)
            writer.writerow([*key, len(vals), repr(q25), repr(med), repr(q75)])


def _read_aggregate(path: Path, required: tuple[str, ...]) -> list[dict]:
    with path.open() as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise ConfigError(f"aggregate is missing column(s): {', '.join(missing)}")
        return [row for row in reader]


def _group_medians(rows, metric="mu1"):
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        key = (row["case"], row["scheme"], int(row["n_c"]))
        groups.setdefault(key, []).append(float(row[metric]))
    return {k: float(np.median(v)) for k, v in groups.items()}


def cmd_report(args) -> int:
    out_fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out_fh)
        if args.what == "schedule-trace":
            if not args.run:
                raise ConfigError("schedule-trace needs --run <run directory>")
            trace_path = Path(args.run) / "trace.csv"
            with trace_path.open() as fh:
                reader = csv.DictReader(fh)
                required = ("epoch", "eta", "train_loss", "val_loss", "stall", "resample")
                missing = [c for c in required if c not in (reader.fieldnames or [])]
                if missing:
                    raise ConfigError(f"trace is missing column(s): {', '.join(missing)}")
                writer.writerow(required)
                for row in reader:
                    writer.writerow([row[c] for c in required])
            return 0

        if not args.aggregate:
            raise ConfigError(f"{args.what} needs --aggregate <aggregate.csv>")
        rows = _read_aggregate(Path(args.aggregate), ("case", "scheme", "n_c", "seed", "status", "mu1", "mu2"))

        if args.what == "table1":
            med1 = _group_medians(rows, "mu1")
            med2 = _group_medians(rows, "mu2")
            n_c = args.n_c if args.n_c is not None else 1000
            schemes = sorted({row["scheme"] for row in rows})
            writer.writerow(["case", "metric", *schemes])
            for case in sorted({row["case"] for row in rows}):
                for name, med in (("mu1", med1), ("mu2", med2)):
                    writer.writerow(
                        [case, name, *[med.get((case, s, n_c), "") for s in schemes]]
                    )
        elif args.what == "table2":
            med = _group_medians(rows, "mu1")
            n_cs = sorted({int(row["n_c"]) for row in rows})
            writer.writerow(["case", "scheme", *[f"n_c={v}" for v in n_cs]])
            for case in sorted({row["case"] for row in rows}):
                for scheme in sorted({row["scheme"] for row in rows}):
                    writer.writerow(
                        [case, scheme, *[med.get((case, scheme, v), "") for v in n_cs]]
                    )
        elif args.what == "errorbars":
            groups: dict[tuple, list[float]] = {}
            for row in rows:
                if row["status"] != "ok":
                    continue
                key = (row["case"], row["scheme"], int(row["n_c"]))
                groups.setdefault(key, []).append(float(row["mu1"]))
            writer.writerow(["case", "scheme", "n_c", "n", "mu1_q25", "mu1_median", "mu1_q75"])
            for key in sorted(groups):
                q25, med, q75 = _quantiles(groups[key])
                writer.writerow([*key, len(groups[key]), repr(q25), repr(med), repr(q75)])
        return 0
    finally:
        if args.out:
            out_fh.close()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptive-colloc",
        description="Train physics-informed networks with adaptive collocation sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cases = sorted(TEST_CASES)
    schemes = [s.value for s in Scheme]

    p = sub.add_parser("solve-reference", help="write source/solution reference fields")
    p.add_argument("--case", choices=cases)
    p.add_argument("--family", choices=["poisson", "advdiff"])
    p.add_argument("--sigma-f", type=float, dest="sigma_f")
    p.add_argument("--amplitude", type=float)
    p.add_argument("--k11", type=float)
    p.add_argument("--k22", type=float)
    p.add_argument("--k12", type=float)
    p.add_argument("--v1", type=float)
    p.add_argument("--v2", type=float)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve_reference)

    p = sub.add_parser("train", help="run one training configuration")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--profile", choices=sorted(PROFILES))
    p.add_argument("--case", choices=cases)
    p.add_argument("--scheme", choices=schemes)
    p.add_argument("--n-c", type=int, dest="n_c")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run a matrix of configurations")
    p.add_argument("--config", required=True, help="matrix file: cases/schemes/n_c/seeds/profile")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="tables and plot-ready CSVs from sweep output")
    p.add_argument("--what", required=True,
                   choices=["table1", "table2", "errorbars", "schedule-trace"])
    p.add_argument("--aggregate", help="aggregate.csv from a sweep")
    p.add_argument("--run", help="run directory (schedule-trace)")
    p.add_argument("--n-c", type=int, dest="n_c", help="collocation count for table1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
