"""Physics-informed network training with adaptive collocation sampling.

Solves 2D steady-state diffusion and diffusion-advection problems on the unit
square by penalizing the PDE residual at collocation points plus Dirichlet
boundary mismatch, with a choice of strategies for placing (and re-placing)
the collocation points during training. An FFT solver on the periodic mesh
provides reference solutions and boundary data.
"""

__version__ = "0.1.0"

from .estimator import PinnRegressor
from .grid import Mesh, SourceSpec, boundary_nodes, gaussian_source, interior_nodes, make_uniform_mesh
from .network import NetworkParams, forward, init_params
from .pde import Family, PdeSpec, lookup_case
from .sampling import SamplerConfig, Scheme
from .spectral import (
    DiffusionTensor,
    ScalarField,
    Velocity,
    apply_operator_spectral,
    solve_advdiff_fft,
    solve_poisson_fft,
)
from .training import TrainConfig, TrainResult, metrics, train

__all__ = [
    "DiffusionTensor",
    "Family",
    "Mesh",
    "NetworkParams",
    "PdeSpec",
    "PinnRegressor",
    "SamplerConfig",
    "ScalarField",
    "Scheme",
    "SourceSpec",
    "TrainConfig",
    "TrainResult",
    "Velocity",
    "apply_operator_spectral",
    "boundary_nodes",
    "forward",
    "gaussian_source",
    "init_params",
    "interior_nodes",
    "lookup_case",
    "make_uniform_mesh",
    "metrics",
    "solve_advdiff_fft",
    "solve_poisson_fft",
    "train",
]
