"""Full-batch LBFGS with a strong-Wolfe line search, plus the stall detector.

One optimizer iteration corresponds to one training epoch. The loss/gradient
callback returns both values at once, so every line-search trial point costs a
single fused evaluation. A failed line search rejects the step and clears the
correction history; the unchanged loss then surfaces through the stall
detector, which is what triggers resampling upstream.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError

WOLFE_C1 = 1e-4
WOLFE_C2 = 0.9
MAX_LINE_SEARCH_EVALS = 25
CURVATURE_EPS = 1e-10


@dataclass
class StepReport:
    loss: float
    grad_norm: float
    step_length: float
    evals: int
    ls_failed: bool
    history_len: int


@dataclass
class LbfgsState:
    m: int = 50
    s_list: deque = field(default_factory=deque)
    y_list: deque = field(default_factory=deque)
    rho_list: deque = field(default_factory=deque)
    iteration: int = 0
    f: float | None = None       # loss at the current iterate
    g: np.ndarray | None = None  # gradient at the current iterate

    def clear_history(self):
        self.s_list.clear()
        self.y_list.clear()
        self.rho_list.clear()

    def invalidate(self):
        """Forget the cached (loss, grad); call after the objective changes."""
        self.f = None
        self.g = None

    def push_pair(self, s: np.ndarray, y: np.ndarray) -> bool:
        sy = float(s @ y)
        if sy <= CURVATURE_EPS * np.linalg.norm(s) * np.linalg.norm(y):
            return False
        self.s_list.append(s)
        self.y_list.append(y)
        self.rho_list.append(1.0 / sy)
        while len(self.s_list) > self.m:
            self.s_list.popleft()
            self.y_list.popleft()
            self.rho_list.popleft()
        return True


def _two_loop_direction(state: LbfgsState, g: np.ndarray) -> np.ndarray:
    q = -g.copy()
    if not state.s_list:
        return q
    alphas = []
    for s, y, rho in zip(reversed(state.s_list), reversed(state.y_list), reversed(state.rho_list)):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    s_last, y_last = state.s_list[-1], state.y_list[-1]
    q *= (s_last @ y_last) / (y_last @ y_last)
    for (s, y, rho), a in zip(zip(state.s_list, state.y_list, state.rho_list), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def _param_hash(x: np.ndarray) -> str:
    return hashlib.sha256(x.tobytes()).hexdigest()[:16]


def _checked_eval(fg, x: np.ndarray):
    f, g = fg(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NumericalError(f"non-finite loss/gradient at params sha256:{_param_hash(x)}")
    return float(f), np.asarray(g, dtype=float)


def _cubic_min(a, fa, dfa, b, fb, dfb):
    """Minimizer of the cubic through (a, fa, dfa), (b, fb, dfb); NaN if degenerate."""
    d1 = dfa + dfb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - dfa * dfb
    if disc < 0.0:
        return np.nan
    d2 = np.sign(b - a) * np.sqrt(disc)
    denom = dfb - dfa + 2.0 * d2
    if denom == 0.0:
        return np.nan
    return b - (b - a) * (dfb + d2 - d1) / denom


def _line_search_strong_wolfe(fg, x, d, f0, g0, alpha0):
    """Bracketing + zoom search for a strong-Wolfe point along d.

    Returns (alpha, f, g, evals) or (None, f0, g0, evals) on failure. Let
    phi(a) = f(x + a d); the Armijo and strong curvature conditions use
    c1 = 1e-4, c2 = 0.9.
    """
    dphi0 = float(g0 @ d)
    if dphi0 >= 0.0:
        return None, f0, g0, 0
    evals = 0

    def phi(alpha):
        nonlocal evals
        evals += 1
        f, g = _checked_eval(fg, x + alpha * d)
        return f, g, float(g @ d)

    def zoom(a_lo, f_lo, df_lo, a_hi, f_hi, df_hi):
        nonlocal evals
        while evals < MAX_LINE_SEARCH_EVALS:
            a_j = _cubic_min(a_lo, f_lo, df_lo, a_hi, f_hi, df_hi)
            width = abs(a_hi - a_lo)
            lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
            if not np.isfinite(a_j) or a_j <= lo + 0.1 * width or a_j >= hi - 0.1 * width:
                a_j = 0.5 * (a_lo + a_hi)
            if width * max(abs(df_lo), abs(df_hi)) < 1e-16 * max(1.0, abs(f_lo)):
                return None, f0, g0  # bracket collapsed without a Wolfe point
            f_j, g_j, df_j = phi(a_j)
            if f_j > f0 + WOLFE_C1 * a_j * dphi0 or f_j >= f_lo:
                a_hi, f_hi, df_hi = a_j, f_j, df_j
            else:
                if abs(df_j) <= -WOLFE_C2 * dphi0:
                    return a_j, f_j, g_j
                if df_j * (a_hi - a_lo) >= 0.0:
                    a_hi, f_hi, df_hi = a_lo, f_lo, df_lo
                a_lo, f_lo, df_lo = a_j, f_j, df_j
        return None, f0, g0

    a_prev, f_prev, df_prev = 0.0, f0, dphi0
    alpha = alpha0
    first = True
    while evals < MAX_LINE_SEARCH_EVALS:
        f_a, g_a, df_a = phi(alpha)
        if f_a > f0 + WOLFE_C1 * alpha * dphi0 or (not first and f_a >= f_prev):
            a, f, g = zoom(a_prev, f_prev, df_prev, alpha, f_a, df_a)
            return (a, f, g, evals) if a is not None else (None, f0, g0, evals)
        if abs(df_a) <= -WOLFE_C2 * dphi0:
            return alpha, f_a, g_a, evals
        if df_a >= 0.0:
            a, f, g = zoom(alpha, f_a, df_a, a_prev, f_prev, df_prev)
            return (a, f, g, evals) if a is not None else (None, f0, g0, evals)
        a_prev, f_prev, df_prev = alpha, f_a, df_a
        alpha = 2.0 * alpha
        first = False
    return None, f0, g0, evals


def lbfgs_step(state: LbfgsState, x: np.ndarray, fg) -> tuple[np.ndarray, StepReport]:
    """One LBFGS iteration from x; mutates state and returns the new iterate.

    fg maps a parameter vector to (loss, gradient). The cached (loss, grad)
    pair in the state is reused across iterations; call state.invalidate()
    whenever the objective itself changes (e.g. after resampling).
    """
    if state.f is None or state.g is None:
        state.f, state.g = _checked_eval(fg, x)
    f0, g0 = state.f, state.g
    gnorm0 = float(np.linalg.norm(g0))
    state.iteration += 1
    if gnorm0 == 0.0:
        return x, StepReport(f0, 0.0, 0.0, 0, False, len(state.s_list))

    d = _two_loop_direction(state, g0)
    if float(d @ g0) >= 0.0:  # stale curvature produced a non-descent direction
        state.clear_history()
        d = -g0
    alpha0 = 1.0 if state.s_list else min(1.0, 1.0 / gnorm0)

    alpha, f_new, g_new, evals = _line_search_strong_wolfe(fg, x, d, f0, g0, alpha0)
    if alpha is None:
        state.clear_history()
        return x, StepReport(f0, gnorm0, 0.0, evals, True, 0)

    x_new = x + alpha * d
    state.push_pair(alpha * d, g_new - g0)
    state.f, state.g = f_new, g_new
    return x_new, StepReport(
        loss=f_new,
        grad_norm=float(np.linalg.norm(g_new)),
        step_length=float(alpha),
        evals=evals,
        ls_failed=False,
        history_len=len(state.s_list),
    )


def minimize(fg, x0: np.ndarray, max_iter: int = 200, gtol: float = 1e-8, m: int = 50):
    """Run LBFGS until the gradient norm drops below gtol; returns (x, f, iters)."""
    state = LbfgsState(m=m)
    x = np.asarray(x0, dtype=float).copy()
    for it in range(1, max_iter + 1):
        x, report = lbfgs_step(state, x, fg)
        if report.grad_norm < gtol:
            return x, report.loss, it
    return x, state.f, max_iter


@dataclass
class StallDetector:
    """Fires when `window` consecutive losses agree to within the tolerance."""

    window: int = 10
    rel_tol: float = 1e-9
    _buffer: deque = field(default_factory=deque)

    def update(self, loss: float) -> bool:
        if not np.isfinite(loss):
            raise ValueError(f"loss must be finite, got {loss}")
        self._buffer.append(float(loss))
        while len(self._buffer) > self.window:
            self._buffer.popleft()
        if len(self._buffer) < self.window:
            return False
        lo, hi = min(self._buffer), max(self._buffer)
        if hi - lo <= self.rel_tol * max(1.0, abs(self._buffer[-1])):
            self._buffer.clear()
            return True
        return False


def detect_stall(detector: StallDetector, loss: float) -> bool:
    """Feed one loss into the detector; True when training has stalled."""
    return detector.update(loss)
