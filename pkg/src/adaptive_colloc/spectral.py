"""FFT reference solvers for the periodic constant-coefficient problems.

Solves -div(K grad u) = f and -div(K grad u) + v . grad u = f on the unit
torus by dividing Fourier modes by the operator symbol. The k=(0,0) mode of
the right-hand side is dropped and the solution's zero mode pinned to 0, which
yields the unique mean-zero solution of the system with source f - mean(f).

Wavenumber convention: angular wavenumbers w = 2*pi*m for integer frequencies
m in [-n/2, n/2). Symbols that are odd in a single axis (the advection term
and the k12 cross term) use the Nyquist-zeroed frequency so the symbol stays
Hermitian and the inverse transform is real to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError


@dataclass(frozen=True)
class DiffusionTensor:
    """Symmetric positive definite 2x2 diffusion tensor.

    Positive definiteness (k11 > 0, k11 k22 > k12^2) keeps the operator
    elliptic: an indefinite tensor turns the equation hyperbolic, whose
    Dirichlet problem is ill-posed and whose sharp-source solutions ring along
    the characteristics.
    """

    k11: float
    k22: float
    k12: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.k11) and np.isfinite(self.k22) and np.isfinite(self.k12)):
            raise ValueError("diffusion coefficients must be finite")
        if self.k11 <= 0 or self.k11 * self.k22 - self.k12**2 <= 0:
            raise ValueError(
                f"diffusion tensor ({self.k11}, {self.k22}, {self.k12}) is not positive definite"
            )


@dataclass(frozen=True)
class Velocity:
    """Constant advection velocity."""

    v1: float = 0.0
    v2: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.v1) and np.isfinite(self.v2)):
            raise ValueError("velocity components must be finite")

    def is_zero(self) -> bool:
        return self.v1 == 0.0 and self.v2 == 0.0


@dataclass(frozen=True)
class ScalarField:
    """Real values on the n x n periodic mesh, row-major with x fastest."""

    n: int
    data: np.ndarray = field(repr=False)  # (n*n,) float64

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.shape != (self.n * self.n,):
            raise ValueError(f"field data must have length n^2={self.n**2}, got {data.shape}")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_grid(cls, grid: np.ndarray) -> "ScalarField":
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
            raise ValueError(f"grid must be square 2-D, got shape {grid.shape}")
        return cls(n=grid.shape[0], data=grid.ravel())

    def to_grid(self) -> np.ndarray:
        """(n, n) view with axis 0 = y, axis 1 = x."""
        return self.data.reshape(self.n, self.n)

    def mean(self) -> float:
        return float(self.data.mean())


def _check_field(f: ScalarField) -> np.ndarray:
    grid = f.to_grid()
    if not np.all(np.isfinite(grid)):
        raise ValueError("field contains non-finite values")
    n = f.n
    if n < 4 or (n & (n - 1)) != 0:
        raise ValueError(f"field size must be a power of two >= 4, got {n}")
    return grid


def dft2(f: ScalarField) -> np.ndarray:
    """Unnormalized forward 2-D DFT of the field, shape (n, n) complex."""
    return np.fft.fft2(_check_field(f))


def idft2(spectrum: np.ndarray, rel_imag_tol: float = 1e-8) -> ScalarField:
    """Inverse 2-D DFT back to a real field.

    The imaginary residue must be below rel_imag_tol relative to the field
    magnitude (Hermitian input), otherwise NumericalError is raised.
    """
    spectrum = np.asarray(spectrum)
    if spectrum.ndim != 2 or spectrum.shape[0] != spectrum.shape[1]:
        raise ValueError(f"spectrum must be square 2-D, got shape {spectrum.shape}")
    out = np.fft.ifft2(spectrum)
    scale = np.max(np.abs(out.real))
    imag = np.max(np.abs(out.imag))
    if scale > 0 and imag > rel_imag_tol * scale:
        raise NumericalError(
            f"inverse transform has imaginary residue {imag:.3e} (field scale {scale:.3e})"
        )
    return ScalarField.from_grid(out.real.copy())


def _angular_frequencies(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Angular wavenumber grids (wx, wy) plus Nyquist-zeroed variants."""
    m = np.fft.fftfreq(n, d=1.0 / n)  # integer frequencies
    m_odd = m.copy()
    if n % 2 == 0:
        m_odd[n // 2] = 0.0  # unpaired Nyquist mode has no odd-symbol partner
    w = 2.0 * np.pi * m
    w_odd = 2.0 * np.pi * m_odd
    wx, wy = np.meshgrid(w, w, indexing="xy")  # axis 0 = ky, axis 1 = kx
    wx_odd, wy_odd = np.meshgrid(w_odd, w_odd, indexing="xy")
    return wx, wy, wx_odd, wy_odd


def _symbol(n: int, K: DiffusionTensor, v: Velocity) -> np.ndarray:
    """Fourier symbol A(k) + i B(k) of the differential operator."""
    wx, wy, wx_odd, wy_odd = _angular_frequencies(n)
    a = K.k11 * wx**2 + K.k22 * wy**2 + 2.0 * K.k12 * wx_odd * wy_odd
    if v.is_zero():
        return a.astype(complex)
    return a + 1j * (v.v1 * wx_odd + v.v2 * wy_odd)


def solve_advdiff_fft(f: ScalarField, K: DiffusionTensor, v: Velocity) -> ScalarField:
    """Mean-zero periodic solution of -div(K grad u) + v . grad u = f - mean(f)."""
    spec_f = dft2(f)
    sym = _symbol(f.n, K, v)
    nonzero = np.ones_like(sym, dtype=bool)
    nonzero[0, 0] = False
    if np.any(np.abs(sym[nonzero]) == 0.0):
        raise NumericalError("operator symbol vanishes on a nonzero mode")
    u_hat = np.zeros_like(spec_f)
    u_hat[nonzero] = spec_f[nonzero] / sym[nonzero]
    return idft2(u_hat, rel_imag_tol=1e-10)


def solve_poisson_fft(f: ScalarField, K: DiffusionTensor) -> ScalarField:
    """Mean-zero periodic solution of -div(K grad u) = f - mean(f)."""
    return solve_advdiff_fft(f, K, Velocity(0.0, 0.0))


def apply_operator_spectral(u: ScalarField, K: DiffusionTensor, v: Velocity | None = None) -> ScalarField:
    """Evaluate -div(K grad u) (+ v . grad u) spectrally; result is mean-zero."""
    if v is None:
        v = Velocity(0.0, 0.0)
    u_hat = dft2(u)
    out_hat = u_hat * _symbol(u.n, K, v)
    return idft2(out_hat, rel_imag_tol=1e-8)


def spectral_derivatives(u: ScalarField) -> dict[str, ScalarField]:
    """First and second derivative fields of u, consistent with the solver symbol.

    Returns keys ux, uy, uxx, uyy, uxy. Odd symbols (ux, uy, uxy) use the
    Nyquist-zeroed frequencies; uxx, uyy keep the full frequencies, so
    -(k11*uxx + k22*uyy + 2*k12*uxy) + v1*ux + v2*uy reproduces
    apply_operator_spectral exactly.
    """
    u_hat = dft2(u)
    wx, wy, wx_odd, wy_odd = _angular_frequencies(u.n)
    out = {
        "ux": 1j * wx_odd * u_hat,
        "uy": 1j * wy_odd * u_hat,
        "uxx": -(wx**2) * u_hat,
        "uyy": -(wy**2) * u_hat,
        "uxy": -(wx_odd * wy_odd) * u_hat,
    }
    return {k: idft2(v, rel_imag_tol=1e-8) for k, v in out.items()}
