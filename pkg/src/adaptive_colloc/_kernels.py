"""Fused elementwise kernels for the block derivative propagation.

The affine part of each layer is a BLAS matmul; these kernels cover the tanh
stage, where naive numpy spends most of its time allocating temporaries. The
hyperbolic tangent itself stays in numpy (SIMD); the kernels only consume it.
Block order everywhere: [value, du/dx, du/dy, d2u/dxx, d2u/dyy, d2u/dxy].
"""

import numba
import numpy as np


@numba.njit(cache=True, fastmath=False)
def tanh_stage_forward(z, t, out):
    """Push the 6-block state through tanh: z pre-activation, t = tanh(z[0])."""
    n_rows, n_cols = t.shape
    for i in range(n_rows):
        for j in range(n_cols):
            ti = t[i, j]
            t1 = 1.0 - ti * ti
            t2 = -2.0 * ti * t1
            jx = z[1, i, j]
            jy = z[2, i, j]
            out[0, i, j] = ti
            out[1, i, j] = t1 * jx
            out[2, i, j] = t1 * jy
            out[3, i, j] = t2 * jx * jx + t1 * z[3, i, j]
            out[4, i, j] = t2 * jy * jy + t1 * z[4, i, j]
            out[5, i, j] = t2 * jx * jy + t1 * z[5, i, j]


@numba.njit(cache=True, fastmath=False)
def tanh_stage_backward(s_bar, t, zp, out):
    """Pull adjoints of the tanh output back to the pre-activation state.

    s_bar: adjoint of the stage output; zp: cached pre-activation state;
    t = tanh(zp[0]). Safe to call with out is s_bar (reads precede writes per
    element).
    """
    n_rows, n_cols = t.shape
    for i in range(n_rows):
        for j in range(n_cols):
            ti = t[i, j]
            t1 = 1.0 - ti * ti
            t2 = -2.0 * ti * t1
            t3 = -2.0 * t1 * (t1 - 2.0 * ti * ti)
            jx = zp[1, i, j]
            jy = zp[2, i, j]
            sb0 = s_bar[0, i, j]
            sb1 = s_bar[1, i, j]
            sb2 = s_bar[2, i, j]
            sb3 = s_bar[3, i, j]
            sb4 = s_bar[4, i, j]
            sb5 = s_bar[5, i, j]
            out[0, i, j] = (
                t1 * sb0
                + t2 * (jx * sb1 + jy * sb2)
                + sb3 * (t3 * jx * jx + t2 * zp[3, i, j])
                + sb4 * (t3 * jy * jy + t2 * zp[4, i, j])
                + sb5 * (t3 * jx * jy + t2 * zp[5, i, j])
            )
            out[1, i, j] = t1 * sb1 + t2 * (2.0 * jx * sb3 + jy * sb5)
            out[2, i, j] = t1 * sb2 + t2 * (2.0 * jy * sb4 + jx * sb5)
            out[3, i, j] = t1 * sb3
            out[4, i, j] = t1 * sb4
            out[5, i, j] = t1 * sb5
