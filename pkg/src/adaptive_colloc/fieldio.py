"""Field import/export: raw float64 binary with a sidecar header, plus CSV."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .spectral import ScalarField


def write_field(path: Path | str, f: ScalarField, name: str) -> None:
    """Write <path>.f64 (little-endian float64, row-major) and <path>.hdr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.with_suffix(".f64").write_bytes(f.data.astype("<f8").tobytes())
    path.with_suffix(".hdr").write_text(f"n={f.n}\nname={name}\n")


def read_field(path: Path | str) -> tuple[ScalarField, str]:
    """Read a field written by write_field; returns (field, name)."""
    path = Path(path)
    header = {}
    for line in path.with_suffix(".hdr").read_text().splitlines():
        key, _, value = line.partition("=")
        header[key.strip()] = value.strip()
    n = int(header["n"])
    data = np.frombuffer(path.with_suffix(".f64").read_bytes(), dtype="<f8")
    return ScalarField(n=n, data=data.astype(float)), header.get("name", "")


def write_field_csv(path: Path | str, f: ScalarField) -> None:
    """Write (x, y, value) rows for plotting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = f.n
    h = 1.0 / n
    ix = np.arange(n * n) % n
    iy = np.arange(n * n) // n
    with path.open("w") as fh:
        fh.write("x,y,value\n")
        for x, y, v in zip(ix * h, iy * h, f.data):
            fh.write(f"{x:.17g},{y:.17g},{v:.17g}\n")
