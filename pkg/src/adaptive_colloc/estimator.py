"""Scikit-learn style estimator facade over the training loop.

PinnRegressor treats the Dirichlet boundary data as the supervised training
set: fit(X, y) takes boundary coordinates and values, trains the network with
PDE-residual self-supervision at collocation points drawn from the interior
mesh, and predict(X) evaluates the fitted network anywhere in the domain.
All hyperparameters are constructor arguments, so get_params/set_params,
clone, and grid-search tooling work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .grid import SourceSpec, make_uniform_mesh
from .network import forward
from .pde import Family, PdeSpec
from .sampling import SamplerConfig, Scheme
from .spectral import DiffusionTensor, Velocity
from .training import TrainConfig, run_training_loop


def validate_points(X, name: str = "X") -> np.ndarray:
    """Coerce to a finite (m, 2) float array of coordinates."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"{name} must have shape (m, 2), got {X.shape}")
    if X.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def validate_targets(y, m: int) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != m:
        raise ValueError(f"got {y.shape[0]} targets for {m} points")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    return y


class PinnRegressor(RegressorMixin, BaseEstimator):
    """Network solution of a 2D steady-state problem, fit from boundary data.

    Parameters mirror the training configuration: the PDE family and
    coefficients, the Gaussian source, the collocation scheme, and the
    optimizer budget. fit(X, y) expects Dirichlet coordinates/values; the
    PDE residual is enforced at collocation points selected from the interior
    of the configured mesh.
    """

    def __init__(
        self,
        family: str = "poisson",
        k11: float = 1.0,
        k22: float = 8.0,
        k12: float = 2.0,
        v1: float = 0.0,
        v2: float = 0.0,
        sigma_f: float = 0.1,
        source_center: tuple[float, float] = (0.5, 0.5),
        source_amplitude: float = 1.0,
        lambda_f: float = 1e-4,
        scheme: str = "adaptive-g",
        n_c: int = 1000,
        mesh_n: int = 128,
        period: int = 1000,
        resample_every: int = 50,
        momentum: float = 0.9,
        hidden_layers: int = 3,
        hidden_units: int = 50,
        max_epochs: int = 2000,
        n_val: int = 5000,
        stall_window: int = 10,
        stall_rel_tol: float = 1e-3,
        lbfgs_history: int = 50,
        random_state: int = 0,
    ):
        self.family = family
        self.k11 = k11
        self.k22 = k22
        self.k12 = k12
        self.v1 = v1
        self.v2 = v2
        self.sigma_f = sigma_f
        self.source_center = source_center
        self.source_amplitude = source_amplitude
        self.lambda_f = lambda_f
        self.scheme = scheme
        self.n_c = n_c
        self.mesh_n = mesh_n
        self.period = period
        self.resample_every = resample_every
        self.momentum = momentum
        self.hidden_layers = hidden_layers
        self.hidden_units = hidden_units
        self.max_epochs = max_epochs
        self.n_val = n_val
        self.stall_window = stall_window
        self.stall_rel_tol = stall_rel_tol
        self.lbfgs_history = lbfgs_history
        self.random_state = random_state

    def _train_config(self) -> TrainConfig:
        seed = 0 if self.random_state is None else int(self.random_state)
        spec = PdeSpec(
            family=Family(self.family),
            K=DiffusionTensor(self.k11, self.k22, self.k12),
            v=Velocity(self.v1, self.v2),
            source=SourceSpec(
                sigma_f=self.sigma_f,
                center=tuple(self.source_center),
                amplitude=self.source_amplitude,
            ),
            lambda_f=self.lambda_f,
        )
        sampler = SamplerConfig(
            scheme=Scheme(self.scheme),
            n_c=self.n_c,
            period=self.period,
            resample_every=self.resample_every,
            momentum=self.momentum,
            seed=seed,
        )
        return TrainConfig(
            pde=spec,
            sampler=sampler,
            mesh_n=self.mesh_n,
            hidden_layers=self.hidden_layers,
            hidden_units=self.hidden_units,
            max_epochs=self.max_epochs,
            n_val=self.n_val,
            init_seed=seed,
            val_seed=seed,
            stall_window=self.stall_window,
            stall_rel_tol=self.stall_rel_tol,
            lbfgs_history=self.lbfgs_history,
        )

    def fit(self, X, y):
        """Train against Dirichlet data: X are (m, 2) points, y their values."""
        X = validate_points(X)
        y = validate_targets(y, X.shape[0])
        config = self._train_config()
        mesh = make_uniform_mesh(config.mesh_n)
        loop = run_training_loop(config, mesh, X, y)
        self.n_features_in_ = 2
        self.config_ = config
        self.loop_result_ = loop
        self.network_ = loop.best_params
        self.best_epoch_ = loop.best_epoch
        self.best_val_loss_ = loop.best_val_loss
        return self

    def predict(self, X):
        """Evaluate the fitted network at the given points."""
        check_is_fitted(self, "network_")
        X = validate_points(X)
        return forward(self.network_, X)
