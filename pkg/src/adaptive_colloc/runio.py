"""Run-directory layout: everything one training run leaves on disk.

    <run>/config.txt      flat key=value snapshot; re-running it reproduces
                          trace.csv and metrics.txt byte for byte
    <run>/trace.csv       one row per epoch
    <run>/checkpoint.bin  best-validation parameters
    <run>/fields/         predicted u, reference u, |error| (.f64/.hdr + .csv)
    <run>/colloc/         collocation snapshot CSV per resampling event
    <run>/metrics.txt     final metrics (deterministic values only)
    <run>/meta.json       wall time and version; excluded from reproducibility

Floats are written with repr (shortest round-trip form), so identical runs
produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_to_flat, render_flat_config
from .fieldio import write_field, write_field_csv
from .network import save_checkpoint
from .spectral import ScalarField
from .training import TRACE_COLUMNS, TrainResult

_INT_COLUMNS = {"epoch", "stall", "resample", "ls_evals", "ls_failed"}


def _fmt(value, column: str) -> str:
    if column in _INT_COLUMNS:
        return str(int(value))
    return repr(float(value))


def write_trace_csv(path: Path, trace: np.ndarray) -> None:
    with Path(path).open("w") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in trace:
            fh.write(",".join(_fmt(row[c], c) for c in TRACE_COLUMNS) + "\n")


def metrics_text(result: TrainResult) -> str:
    loop = result.loop
    n_nodes = result.u_true.n ** 2
    lines = [
        f"mu1 = {result.mu1!r}",
        f"mu2 = {result.mu2!r}",
        # mean-normalized l1 variant; not a quantity the protocol defines
        f"mu2_mean = {result.mu2 / n_nodes!r}",
        f"best_epoch = {loop.best_epoch}",
        f"best_val_loss = {loop.best_val_loss!r}",
        f"epochs_run = {len(loop.trace)}",
        f"stalls = {len(loop.stall_epochs)}",
        f"resamples = {len(loop.resample_epochs)}",
        f"aborted = {int(loop.aborted)}",
    ]
    return "\n".join(lines) + "\n"


def write_run_dir(out_dir: Path | str, result: TrainResult) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(render_flat_config(config_to_flat(result.config)))
    write_trace_csv(out / "trace.csv", result.trace)
    save_checkpoint(
        out / "checkpoint.bin",
        result.loop.best_params,
        seed=result.config.init_seed,
        epoch=result.loop.best_epoch,
    )

    fields = out / "fields"
    abs_err = ScalarField(
        n=result.u_true.n, data=np.abs(result.u_pred.data - result.u_true.data)
    )
    for name, field in (("u_pred", result.u_pred), ("u_true", result.u_true), ("abs_error", abs_err)):
        write_field(fields / name, field, name)
        write_field_csv(fields / f"{name}.csv", field)

    colloc = out / "colloc"
    colloc.mkdir(exist_ok=True)
    for epoch, eta, cs in result.loop.snapshots:
        with (colloc / f"epoch{epoch:05d}.csv").open("w") as fh:
            fh.write("epoch,x,y,source\n")
            for i, (x, y) in enumerate(cs.points):
                source = "uniform" if i < cs.uniform_count else "adaptive"
                fh.write(f"{epoch},{float(x)!r},{float(y)!r},{source}\n")

    (out / "metrics.txt").write_text(metrics_text(result))
    (out / "meta.json").write_text(
        json.dumps({"wall_time_s": result.wall_time_s, "version": __version__}, indent=2)
        + "\n"
    )
    return out


def read_metrics(path: Path | str) -> dict[str, float]:
    out: dict[str, float] = {}
    for line in Path(path).read_text().splitlines():
        key, _, value = line.partition("=")
        out[key.strip()] = float(value.strip())
    return out
