"""Flat key=value configuration files and the scale profiles.

The on-disk format is one dotted key per line (pde.family = poisson), with
blank lines and # comments ignored. Flat text diffs cleanly between run
snapshots, which is the point.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError
from .grid import SourceSpec
from .pde import Family, PdeSpec, TEST_CASES
from .sampling import SamplerConfig, Scheme
from .spectral import DiffusionTensor, Velocity
from .training import TrainConfig

# (mesh n, epochs, hidden layers, hidden units, validation points)
PROFILES = {
    "desk": dict(mesh_n=128, max_epochs=2000, hidden_layers=3, hidden_units=50, n_val=5000),
    "paper": dict(mesh_n=256, max_epochs=5000, hidden_layers=4, hidden_units=50, n_val=30000),
}


def parse_flat_config(text: str) -> dict[str, str]:
    """Parse key = value lines; later keys override earlier ones."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def read_config_file(path: Path | str) -> dict[str, str]:
    return parse_flat_config(Path(path).read_text())


_DEFAULTS = {
    "pde.family": "poisson",
    "pde.k11": "1.0",
    "pde.k22": "8.0",
    "pde.k12": "2.0",
    "pde.v1": "0.0",
    "pde.v2": "0.0",
    "pde.sigma_f": "0.1",
    "pde.center_x": "0.5",
    "pde.center_y": "0.5",
    "pde.amplitude": "1.0",
    "pde.lambda_f": "1e-4",
    "mesh.n": "128",
    "net.hidden_layers": "3",
    "net.hidden_units": "50",
    "sampler.scheme": "baseline",
    "sampler.n_c": "1000",
    "sampler.period": "1000",
    "sampler.resample_every": "50",
    "sampler.momentum": "0.9",
    "train.max_epochs": "2000",
    "train.n_val": "5000",
    "train.boundary_policy": "all",
    "train.stall_window": "10",
    "train.stall_rel_tol": "1e-3",
    "train.lbfgs_history": "50",
    "seed.init": "0",
    "seed.sample": "0",
    "seed.val": "0",
}


def case_overrides(case: str) -> dict[str, str]:
    """Flat keys pinning one of the built-in test cases tc1..tc4."""
    key = case.lower()
    if key not in TEST_CASES:
        raise ConfigError(f"unknown test case {case!r}; choose from {sorted(TEST_CASES)}")
    spec = TEST_CASES[key]
    return {
        "pde.family": spec.family.value,
        "pde.k11": repr(spec.K.k11),
        "pde.k22": repr(spec.K.k22),
        "pde.k12": repr(spec.K.k12),
        "pde.v1": repr(spec.v.v1),
        "pde.v2": repr(spec.v.v2),
        "pde.sigma_f": repr(spec.source.sigma_f),
        "pde.center_x": repr(spec.source.center[0]),
        "pde.center_y": repr(spec.source.center[1]),
        "pde.amplitude": repr(spec.source.amplitude),
        "pde.lambda_f": repr(spec.lambda_f),
    }


def profile_overrides(profile: str) -> dict[str, str]:
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    p = PROFILES[profile]
    return {
        "mesh.n": str(p["mesh_n"]),
        "train.max_epochs": str(p["max_epochs"]),
        "net.hidden_layers": str(p["hidden_layers"]),
        "net.hidden_units": str(p["hidden_units"]),
        "train.n_val": str(p["n_val"]),
    }


def _get(flat: dict[str, str], key: str, conv):
    value = flat[key]
    try:
        return conv(value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})", key=key) from exc


def build_train_config(overrides: dict[str, str]) -> TrainConfig:
    """Materialize a TrainConfig from defaults plus flat overrides."""
    unknown = set(overrides) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}",
                          key=sorted(unknown)[0])
    flat = dict(_DEFAULTS)
    flat.update(overrides)

    try:
        family = Family(_get(flat, "pde.family", str))
    except ValueError as exc:
        raise ConfigError(f"bad value for pde.family: {flat['pde.family']!r}",
                          key="pde.family") from exc
    try:
        spec = PdeSpec(
            family=family,
            K=DiffusionTensor(
                _get(flat, "pde.k11", float),
                _get(flat, "pde.k22", float),
                _get(flat, "pde.k12", float),
            ),
            v=Velocity(_get(flat, "pde.v1", float), _get(flat, "pde.v2", float)),
            source=SourceSpec(
                sigma_f=_get(flat, "pde.sigma_f", float),
                center=(_get(flat, "pde.center_x", float), _get(flat, "pde.center_y", float)),
                amplitude=_get(flat, "pde.amplitude", float),
            ),
            lambda_f=_get(flat, "pde.lambda_f", float),
        )
        sampler = SamplerConfig(
            scheme=Scheme(_get(flat, "sampler.scheme", str)),
            n_c=_get(flat, "sampler.n_c", int),
            period=_get(flat, "sampler.period", int),
            resample_every=_get(flat, "sampler.resample_every", int),
            momentum=_get(flat, "sampler.momentum", float),
            seed=_get(flat, "seed.sample", int),
        )
        return TrainConfig(
            pde=spec,
            sampler=sampler,
            mesh_n=_get(flat, "mesh.n", int),
            hidden_layers=_get(flat, "net.hidden_layers", int),
            hidden_units=_get(flat, "net.hidden_units", int),
            max_epochs=_get(flat, "train.max_epochs", int),
            n_val=_get(flat, "train.n_val", int),
            init_seed=_get(flat, "seed.init", int),
            val_seed=_get(flat, "seed.val", int),
            boundary_policy=_get(flat, "train.boundary_policy", str),
            stall_window=_get(flat, "train.stall_window", int),
            stall_rel_tol=_get(flat, "train.stall_rel_tol", float),
            lbfgs_history=_get(flat, "train.lbfgs_history", int),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_to_flat(config: TrainConfig) -> dict[str, str]:
    """Flat snapshot of a TrainConfig; build_train_config inverts it."""
    spec, sampler = config.pde, config.sampler
    return {
        "pde.family": spec.family.value,
        "pde.k11": repr(spec.K.k11),
        "pde.k22": repr(spec.K.k22),
        "pde.k12": repr(spec.K.k12),
        "pde.v1": repr(spec.v.v1),
        "pde.v2": repr(spec.v.v2),
        "pde.sigma_f": repr(spec.source.sigma_f),
        "pde.center_x": repr(spec.source.center[0]),
        "pde.center_y": repr(spec.source.center[1]),
        "pde.amplitude": repr(spec.source.amplitude),
        "pde.lambda_f": repr(spec.lambda_f),
        "mesh.n": str(config.mesh_n),
        "net.hidden_layers": str(config.hidden_layers),
        "net.hidden_units": str(config.hidden_units),
        "sampler.scheme": sampler.scheme.value,
        "sampler.n_c": str(sampler.n_c),
        "sampler.period": str(sampler.period),
        "sampler.resample_every": str(sampler.resample_every),
        "sampler.momentum": repr(sampler.momentum),
        "train.max_epochs": str(config.max_epochs),
        "train.n_val": str(config.n_val),
        "train.boundary_policy": config.boundary_policy,
        "train.stall_window": str(config.stall_window),
        "train.stall_rel_tol": repr(config.stall_rel_tol),
        "train.lbfgs_history": str(config.lbfgs_history),
        "seed.init": str(config.init_seed),
        "seed.sample": str(sampler.seed),
        "seed.val": str(config.val_seed),
    }


def render_flat_config(flat: dict[str, str]) -> str:
    return "".join(f"{k} = {flat[k]}\n" for k in sorted(flat))
