"""Derivatives of the tanh network and of the composite training loss.

Input derivatives are exact: the value, input Jacobian and input Hessian are
propagated jointly through every layer using the closed-form tanh chain
(tanh' = 1 - t^2, tanh'' = -2 t tanh'). Parameter gradients come from a
reverse sweep over the same propagation, so the chain through the input
Hessian (needed by the PDE term) is differentiated exactly as well.

Internally a batch is carried as one (6, B, width) block array with blocks
[value, du/dx, du/dy, d2u/dxx, d2u/dyy, d2u/dxy]; each affine layer is then a
batched (6, B, n_in) @ (n_in, n_out) product.

Large batches are processed in fixed-size chunks through preallocated
per-(chunk, architecture) workspaces; that keeps every layer buffer warm in
the allocator and the caches, which is where the wall time goes otherwise.
The engine is single-threaded by design: workspaces are reused across calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import tanh_stage_backward, tanh_stage_forward
from .errors import NumericalError
from .network import NetworkParams
from .pde import Family, PdeSpec, residual

# Points per processing block: keeps the full set of live layer buffers
# (~25 MB at width 50) resident in the last-level cache.
_CHUNK = 1024


class _Workspace:
    """Reusable layer buffers for one (batch size, architecture) pair."""

    def __init__(self, b: int, sizes: tuple[int, ...]):
        depth = len(sizes) - 1
        self.z = [np.empty((6, b, sizes[l + 1])) for l in range(depth)]
        self.out = [np.empty((6, b, sizes[l + 1])) for l in range(depth - 1)]
        self.t = [np.empty((b, sizes[l + 1])) for l in range(depth - 1)]
        self.sbar = [np.empty((6, b, sizes[l])) for l in range(depth)]
        self.wtmp = [np.empty((6, sizes[l], sizes[l + 1])) for l in range(depth)]
        self.seed = np.empty((6, b, 1))
        # input state: value block is filled per call, the Jacobian blocks are
        # the constant identity and the Hessian blocks stay zero
        self.s0 = np.zeros((6, b, 2))
        self.s0[1, :, 0] = 1.0
        self.s0[2, :, 1] = 1.0


_workspaces: dict = {}


def _workspace(b: int, sizes: tuple[int, ...]) -> _Workspace:
    key = (b, sizes)
    ws = _workspaces.get(key)
    if ws is None:
        if len(_workspaces) >= 16:
            _workspaces.clear()
        ws = _Workspace(b, sizes)
        _workspaces[key] = ws
    return ws


@dataclass(frozen=True)
class PointDerivatives:
    """Network value and input derivatives at a batch of points.

    hess stores the symmetric Hessian as (u_xx, u_yy, u_xy); the mixed entry
    appears once.
    """

    u: np.ndarray            # (B,)
    grad: np.ndarray = field(repr=False)  # (B, 2)
    hess: np.ndarray = field(repr=False)  # (B, 3)


def _as_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    pts = np.atleast_2d(pts)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must have shape (m, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite values")
    return pts


def _forward_blocks(params: NetworkParams, pts: np.ndarray, keep_cache: bool = False):
    """Propagate the 6-block state through all layers.

    Returns (z_last, ws) with z_last the (6, B, 1) output state living inside
    the workspace ws; both are overwritten by the next same-shaped call, so
    callers must copy anything they keep.
    """
    b_size = pts.shape[0]
    ws = _workspace(b_size, params.layer_sizes)
    ws.s0[0] = pts

    last = params.num_layers - 1
    s = ws.s0
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = ws.z[l]
        np.matmul(s, w, out=z)
        z[0] += b
        if l == last:
            s = z
            break
        np.tanh(z[0], out=ws.t[l])
        tanh_stage_forward(z, ws.t[l], ws.out[l])
        s = ws.out[l]
    return s, ws


def _forward_values(params: NetworkParams, pts: np.ndarray, keep_cache: bool):
    """Value-only propagation (single block); cache holds (a_in, t)."""
    a = pts
    last = params.num_layers - 1
    cache = [] if keep_cache else None
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        t = None if l == last else np.tanh(z)
        if keep_cache:
            cache.append((a, t))
        a = z if l == last else t
    return a[:, 0], cache


def _zero_param_grads(params: NetworkParams):
    return (
        [np.zeros_like(w) for w in params.weights],
        [np.zeros_like(b) for b in params.biases],
    )


def _reverse_blocks(params, ws, s_bar, w_grads, b_grads):
    """Accumulate parameter gradients from adjoints of the (6, B, 1) output.

    ws must hold the forward state of the same batch (same _forward_blocks
    call); s_bar is consumed.
    """
    for l in range(params.num_layers - 1, -1, -1):
        w = params.weights[l]
        s_in = ws.s0 if l == 0 else ws.out[l - 1]
        np.matmul(s_in.transpose(0, 2, 1), s_bar, out=ws.wtmp[l])
        w_grads[l] += ws.wtmp[l].sum(axis=0)
        b_grads[l] += s_bar[0].sum(axis=0)
        if l == 0:
            break
        np.matmul(s_bar, w.T, out=ws.sbar[l])
        # ws.sbar[l] is the adjoint of the previous tanh output; pull it back
        # through the nonlinearity to the pre-activation state, in place
        tanh_stage_backward(ws.sbar[l], ws.t[l - 1], ws.z[l - 1], ws.sbar[l])
        s_bar = ws.sbar[l]
    return w_grads, b_grads


def _reverse_values(params, cache, u_bar, w_grads, b_grads):
    """Standard backprop for the value-only pass; u_bar has shape (B,)."""
    a_bar = u_bar[:, None]
    for l in range(params.num_layers - 1, -1, -1):
        w = params.weights[l]
        a_in, t = cache[l]
        if t is not None:  # adjoint of tanh output -> pre-activation
            a_bar = a_bar * (1.0 - t * t)
        w_grads[l] += a_in.T @ a_bar
        b_grads[l] += a_bar.sum(axis=0)
        if l == 0:
            break
        a_bar = a_bar @ w.T
    return w_grads, b_grads


def input_derivatives(params: NetworkParams, points: np.ndarray) -> PointDerivatives:
    """Value, gradient and Hessian of the network at each point."""
    pts = _as_points(points)
    u = np.empty(pts.shape[0])
    grad = np.empty((pts.shape[0], 2))
    hess = np.empty((pts.shape[0], 3))
    for start in range(0, pts.shape[0], _CHUNK):
        sl = slice(start, start + _CHUNK)
        z, _ = _forward_blocks(params, pts[sl])
        u[sl] = z[0, :, 0]
        grad[sl, 0] = z[1, :, 0]
        grad[sl, 1] = z[2, :, 0]
        hess[sl] = z[3:6, :, 0].T
    if not np.all(np.isfinite(u)) or not np.all(np.isfinite(grad)) or not np.all(np.isfinite(hess)):
        bad = np.flatnonzero(
            ~(np.isfinite(u) & np.isfinite(grad).all(axis=1) & np.isfinite(hess).all(axis=1))
        )
        raise NumericalError(f"non-finite derivatives at point index {bad[0]}")
    return PointDerivatives(u=u, grad=grad, hess=hess)


def network_values(params: NetworkParams, points: np.ndarray) -> np.ndarray:
    """Network output only, chunked for large batches."""
    pts = _as_points(points)
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], _CHUNK):
        sl = slice(start, start + _CHUNK)
        out[sl], _ = _forward_values(params, pts[sl], keep_cache=False)
    return out


def _check_batches(boundary, colloc):
    xb, ub = boundary
    xc, fc = colloc
    xb = _as_points(xb)
    xc = _as_points(xc)
    ub = np.asarray(ub, dtype=float).ravel()
    fc = np.asarray(fc, dtype=float).ravel()
    if xc.shape[0] == 0:
        raise ValueError("collocation batch is empty")
    if xb.shape[0] == 0:
        raise ValueError("boundary batch is empty")
    if ub.shape[0] != xb.shape[0]:
        raise ValueError(f"{ub.shape[0]} boundary targets for {xb.shape[0]} points")
    if fc.shape[0] != xc.shape[0]:
        raise ValueError(f"{fc.shape[0]} source values for {xc.shape[0]} points")
    return xb, ub, xc, fc


def _composite_pieces(params, xb, ub, xc, fc, spec, want_grad):
    """Shared chunked evaluation of both loss terms, optionally with gradients.

    Per-chunk partial sums are combined in a fixed order, so the loss value is
    identical whether or not gradients are requested.
    """
    n_b, n_c = xb.shape[0], xc.shape[0]
    grads = _zero_param_grads(params) if want_grad else None

    sum_b = 0.0
    for start in range(0, n_b, _CHUNK):
        sl = slice(start, start + _CHUNK)
        u, cache = _forward_values(params, xb[sl], keep_cache=want_grad)
        diff = u - ub[sl]
        sum_b += float(diff @ diff)
        if want_grad:
            _reverse_values(params, cache, (2.0 / n_b) * diff, *grads)
    loss_b = sum_b / n_b

    K = spec.K
    advective = spec.family == Family.ADVECTION_DIFFUSION
    sum_f = 0.0
    for start in range(0, n_c, _CHUNK):
        sl = slice(start, start + _CHUNK)
        z, ws = _forward_blocks(params, xc[sl])
        grad = np.stack([z[1, :, 0], z[2, :, 0]], axis=-1)
        hess = z[3:6, :, 0].T
        r = residual(grad, hess, fc[sl], spec)
        sum_f += float(r @ r)
        if want_grad:
            dldr = (2.0 * spec.lambda_f / n_c) * r
            seed = ws.seed
            seed[0, :, 0] = 0.0
            seed[1, :, 0] = spec.v.v1 * dldr if advective else 0.0
            seed[2, :, 0] = spec.v.v2 * dldr if advective else 0.0
            seed[3, :, 0] = -K.k11 * dldr
            seed[4, :, 0] = -K.k22 * dldr
            seed[5, :, 0] = -2.0 * K.k12 * dldr
            _reverse_blocks(params, ws, seed, *grads)
    loss_f = sum_f / n_c
    return loss_b, loss_f, grads


def loss_terms(params: NetworkParams, boundary, colloc, spec: PdeSpec):
    """(boundary MSE, mean squared PDE residual) without parameter gradients."""
    xb, ub, xc, fc = _check_batches(boundary, colloc)
    loss_b, loss_f, _ = _composite_pieces(params, xb, ub, xc, fc, spec, want_grad=False)
    return loss_b, loss_f


def loss_and_param_gradient(params: NetworkParams, boundary, colloc, spec: PdeSpec):
    """Composite loss L_B + lambda_f * L_F and its exact parameter gradient.

    boundary is (points, targets); colloc is (points, source values). The
    gradient comes back flattened in the network's serialization order.
    """
    xb, ub, xc, fc = _check_batches(boundary, colloc)
    loss_b, loss_f, (w_grads, b_grads) = _composite_pieces(
        params, xb, ub, xc, fc, spec, want_grad=True
    )
    loss = loss_b + spec.lambda_f * loss_f
    if not np.isfinite(loss):
        raise NumericalError(f"non-finite loss (L_B={loss_b}, L_F={loss_f})")

    parts = []
    for wg, bg in zip(w_grads, b_grads):
        parts.append(wg.ravel())
        parts.append(bg)
    flat_grad = np.concatenate(parts)
    if not np.all(np.isfinite(flat_grad)):
        raise NumericalError("non-finite parameter gradient")
    return loss, flat_grad
