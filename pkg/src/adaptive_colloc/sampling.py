"""Collocation-point selection schemes.

Six schemes over the interior mesh nodes:

* baseline      -- one uniform draw at epoch 0, fixed afterwards
* resampling    -- uniform redraw whenever the optimizer stalls
* adaptive-r    -- periodic redraw, squared-residual proxy, cosine-annealed
                   uniform fraction eta, stall resets the schedule
* adaptive-g    -- as adaptive-r with the spatial gradient of the squared
                   residual as the proxy
* adaptive-rns / adaptive-gns -- the no-schedule ablations (eta fixed at 0)

A redraw takes round(eta*n_c) nodes uniformly without replacement and the
remainder from the proxy distribution without replacement (exponential-key
weighted reservoir, distributionally identical to sequential renormalized
draws); collisions are excluded so the set always has n_c distinct nodes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import input_derivatives
from .grid import Mesh, gaussian_source
from .network import NetworkParams
from .pde import PdeSpec, residual


class Scheme(str, enum.Enum):
    BASELINE = "baseline"
    RESAMPLING = "resampling"
    ADAPTIVE_R = "adaptive-r"
    ADAPTIVE_G = "adaptive-g"
    ADAPTIVE_RNS = "adaptive-rns"
    ADAPTIVE_GNS = "adaptive-gns"

    @property
    def is_adaptive(self) -> bool:
        return self in (
            Scheme.ADAPTIVE_R,
            Scheme.ADAPTIVE_G,
            Scheme.ADAPTIVE_RNS,
            Scheme.ADAPTIVE_GNS,
        )

    @property
    def uses_schedule(self) -> bool:
        return self in (Scheme.ADAPTIVE_R, Scheme.ADAPTIVE_G)

    @property
    def proxy_kind(self) -> str | None:
        if self in (Scheme.ADAPTIVE_R, Scheme.ADAPTIVE_RNS):
            return "residual"
        if self in (Scheme.ADAPTIVE_G, Scheme.ADAPTIVE_GNS):
            return "gradient"
        return None


@dataclass(frozen=True)
class SamplerConfig:
    scheme: Scheme
    n_c: int
    period: int = 1000        # cosine schedule length T, in epochs
    resample_every: int = 50  # redraw interval e for the adaptive schemes
    momentum: float = 0.9     # proxy momentum gamma
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.n_c < 1:
            raise ValueError(f"n_c must be >= 1, got {self.n_c}")
        if self.period < 1 or self.resample_every < 1:
            raise ValueError("period and resample_every must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")


@dataclass
class ProxyDistribution:
    """Sampling weights over interior mesh nodes plus the momentum state."""

    weights: np.ndarray          # normalized, sums to 1
    momentum_state: np.ndarray   # accumulated raw proxy field
    uniform_fallback: bool = False


@dataclass(frozen=True)
class CollocationSet:
    points: np.ndarray          # (n_c, 2), uniform part first, in draw order
    uniform_count: int
    adaptive_count: int
    node_indices: np.ndarray = field(repr=False)  # mesh node index per point


def cosine_eta(t_c: float, period: float) -> float:
    """Uniform-sampling fraction eta = (1 + cos(pi * t_c / T)) / 2.

    t_c past the period clamps to the period (eta stays 0); negative t_c is
    rejected.
    """
    if t_c < 0:
        raise ValueError(f"t_c must be nonnegative, got {t_c}")
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    ratio = min(t_c, period) / period
    return 0.5 * (1.0 + math.cos(math.pi * ratio))


def _squared_residual_grid(params: NetworkParams, mesh: Mesh, spec: PdeSpec) -> np.ndarray:
    """r^2 at every mesh node, shaped (n, n) with axis 0 = y.

    The source is centered on its mesh mean, matching the effective source of
    the mean-zero reference problem the network is trained against.
    """
    d = input_derivatives(params, mesh.coords)
    f = gaussian_source(mesh.coords, spec.source)
    r = residual(d.grad, d.hess, f - f.mean(), spec)
    return (r * r).reshape(mesh.n, mesh.n)


def _with_momentum(instant: np.ndarray, prev: ProxyDistribution | None, gamma: float) -> ProxyDistribution:
    state = instant if prev is None else instant + gamma * prev.momentum_state
    total = state.sum()
    if not np.isfinite(total):
        raise ValueError("proxy field is not finite")
    if total <= 0.0:
        n = state.size
        return ProxyDistribution(
            weights=np.full(n, 1.0 / n), momentum_state=state, uniform_fallback=True
        )
    return ProxyDistribution(weights=state / total, momentum_state=state)


def residual_proxy(
    params: NetworkParams,
    mesh: Mesh,
    spec: PdeSpec,
    prev: ProxyDistribution | None = None,
    gamma: float = 0.0,
) -> ProxyDistribution:
    """Weights proportional to the squared PDE residual at interior nodes."""
    grid = _squared_residual_grid(params, mesh, spec)
    instant = grid.ravel()[mesh.interior_indices()]
    return _with_momentum(instant, prev, gamma)


def gradient_proxy(
    params: NetworkParams,
    mesh: Mesh,
    spec: PdeSpec,
    prev: ProxyDistribution | None = None,
    gamma: float = 0.0,
) -> ProxyDistribution:
    """Weights proportional to |grad of the squared-residual field|.

    The gradient is a periodic central difference of the r^2 mesh field with
    spacing h, so no third network derivative is needed.
    """
    grid = _squared_residual_grid(params, mesh, spec)
    two_h = 2.0 * mesh.h
    gx = (np.roll(grid, -1, axis=1) - np.roll(grid, 1, axis=1)) / two_h
    gy = (np.roll(grid, -1, axis=0) - np.roll(grid, 1, axis=0)) / two_h
    instant = np.hypot(gx, gy).ravel()[mesh.interior_indices()]
    return _with_momentum(instant, prev, gamma)


def make_proxy(
    kind: str,
    params: NetworkParams,
    mesh: Mesh,
    spec: PdeSpec,
    prev: ProxyDistribution | None = None,
    gamma: float = 0.0,
) -> ProxyDistribution:
    if kind == "residual":
        return residual_proxy(params, mesh, spec, prev, gamma)
    if kind == "gradient":
        return gradient_proxy(params, mesh, spec, prev, gamma)
    raise ValueError(f"unknown proxy kind {kind!r}")


def _weighted_draw_without_replacement(weights, count, rng):
    """Indices of `count` draws by exponential keys; ascending key = draw order."""
    with np.errstate(divide="ignore"):
        keys = rng.exponential(size=weights.shape[0]) / weights
    finite = np.isfinite(keys)
    n_finite = int(np.count_nonzero(finite))
    take = min(count, n_finite)
    order = np.argsort(keys, kind="stable")[:take]
    return order


def sample_collocation(
    eta: float,
    n_c: int,
    proxy: ProxyDistribution | None,
    mesh: Mesh,
    rng: np.random.Generator,
) -> CollocationSet:
    """Draw n_c distinct interior nodes: round(eta*n_c) uniform, rest by proxy."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    interior = mesh.interior_indices()
    if n_c > interior.size:
        raise ValueError(f"n_c={n_c} exceeds the {interior.size} interior nodes")
    n_u = int(math.floor(eta * n_c + 0.5))  # round half up
    n_a = n_c - n_u

    chosen_u = rng.choice(interior.size, size=n_u, replace=False)
    if n_a > 0:
        if proxy is None:
            raise ValueError("eta < 1 requires a proxy distribution")
        weights = proxy.weights.astype(float, copy=True)
        if weights.shape != interior.shape:
            raise ValueError(
                f"proxy has {weights.shape[0]} weights for {interior.size} interior nodes"
            )
        weights[chosen_u] = 0.0  # exclude already-drawn nodes instead of redrawing
        chosen_a = _weighted_draw_without_replacement(weights, n_a, rng)
        if chosen_a.size < n_a:
            # proxy support exhausted; fill uniformly from the leftover nodes
            mask = np.ones(interior.size, dtype=bool)
            mask[chosen_u] = False
            mask[chosen_a] = False
            extra = rng.choice(np.flatnonzero(mask), size=n_a - chosen_a.size, replace=False)
            chosen_a = np.concatenate([chosen_a, extra])
        local = np.concatenate([chosen_u, chosen_a])
    else:
        local = chosen_u
    node_indices = interior[local]
    return CollocationSet(
        points=mesh.coords[node_indices],
        uniform_count=n_u,
        adaptive_count=n_a,
        node_indices=node_indices,
    )


@dataclass
class SchemeState:
    """Per-run scheduler state threaded through scheme_step."""

    config: SamplerConfig
    t_c: int = 0
    stall_resets: int = 0
    clamp_events: int = 0


def scheme_step(
    scheme: Scheme, epoch: int, stall_flag: bool, state: SchemeState
) -> tuple[bool, float]:
    """Advance the scheduler one epoch; returns (resample now?, eta).

    Every scheme resamples at epoch 0 (the initial collocation draw). After
    that: baseline never again, resampling only on a stall, the adaptive
    schemes every `resample_every` epochs. A stall resets the cosine clock of
    adaptive-r/g to 0 so eta returns to 1.
    """
    cfg = state.config
    if epoch > 0 and scheme.uses_schedule:
        if stall_flag:
            state.t_c = 0
            state.stall_resets += 1
        else:
            state.t_c += 1

    if scheme.uses_schedule:
        if state.t_c > cfg.period:
            state.clamp_events += 1
        eta = cosine_eta(min(state.t_c, cfg.period), cfg.period)
    elif scheme.is_adaptive:  # no-schedule ablations
        eta = 0.0
    else:
        eta = 1.0

    if epoch == 0:
        return True, eta
    if scheme is Scheme.BASELINE:
        return False, eta
    if scheme is Scheme.RESAMPLING:
        return bool(stall_flag), eta
    return epoch % cfg.resample_every == 0, eta
