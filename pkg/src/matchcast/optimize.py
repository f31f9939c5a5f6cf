"""Box-clamped BFGS minimizer with backtracking line search.

Both likelihood fits in this package are smooth, low-dimensional and
unconstrained apart from a wide safety box that catches separable data
(parameters running to infinity).  Determinism matters more than raw
speed here: the same data and settings must always produce the same fit,
so there is no randomized restart logic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

ObjectiveFn = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class OptimSettings:
    tol: float = 1e-8          # on the projected gradient norm
    max_iter: int = 500
    bound: float = 30.0        # iterates clamped to [-bound, bound]^d

    def __post_init__(self) -> None:
        if self.tol <= 0 or self.max_iter < 1 or self.bound <= 0:
            raise ValueError(f"invalid optimizer settings: {self}")


@dataclass(frozen=True)
class OptimResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    converged: bool
    at_bound: tuple[int, ...]


def _projected_gradient(x: np.ndarray, grad: np.ndarray, bound: float) -> np.ndarray:
    # Zero out components that point outward at an active box face:
    # there the objective cannot be decreased without leaving the box.
    g = grad.copy()
    g[(x >= bound) & (g < 0.0)] = 0.0
    g[(x <= -bound) & (g > 0.0)] = 0.0
    return g


def minimize(
    objective: ObjectiveFn,
    x0: np.ndarray,
    settings: OptimSettings | None = None,
) -> OptimResult:
    """Minimize ``objective`` (value and gradient) from ``x0``.

    Convergence is declared when the 2-norm of the projected gradient drops
    to ``settings.tol``; a stalled line search also terminates the run, in
    which case ``converged`` reflects whatever the gradient norm is at that
    point.
    """
    cfg = settings or OptimSettings()
    bound = cfg.bound
    x = np.clip(np.asarray(x0, dtype=float), -bound, bound)
    n = x.size
    f, grad = objective(x)
    h_inv = np.eye(n)
    iterations = 0
    c1 = 1e-4

    def done(converged: bool, g: np.ndarray) -> OptimResult:
        pg = _projected_gradient(x, g, bound)
        active = np.nonzero((np.abs(x) >= bound - 1e-9) & (pg != g))[0]
        return OptimResult(
            x=x.copy(),
            fun=float(f),
            grad_norm=float(np.linalg.norm(pg)),
            iterations=iterations,
            converged=converged,
            at_bound=tuple(int(i) for i in active),
        )

    for iterations in range(1, cfg.max_iter + 1):
        pg = _projected_gradient(x, grad, bound)
        if float(np.linalg.norm(pg)) <= cfg.tol:
            iterations -= 1
            return done(True, grad)

        direction = -h_inv @ grad
        if float(direction @ grad) >= 0.0:
            h_inv = np.eye(n)
            direction = -grad

        # Backtracking Armijo search on the clamped candidate point.
        step = 1.0
        slope = float(grad @ direction)
        x_new = f_new = grad_new = None
        for _ in range(60):
            candidate = np.clip(x + step * direction, -bound, bound)
            if not np.array_equal(candidate, x):
                f_cand, g_cand = objective(candidate)
                if np.isfinite(f_cand) and f_cand <= f + c1 * step * slope:
                    x_new, f_new, grad_new = candidate, f_cand, g_cand
                    break
            step *= 0.5
        if x_new is None:
            # No descent possible (boundary or numerically flat): stop here.
            return done(float(np.linalg.norm(pg)) <= cfg.tol, grad)

        s = x_new - x
        y = grad_new - grad
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            rho = 1.0 / sy
            sy_outer = np.outer(s, y)
            h_inv = (
                (np.eye(n) - rho * sy_outer) @ h_inv @ (np.eye(n) - rho * sy_outer.T)
                + rho * np.outer(s, s)
            )
        x, f, grad = x_new, f_new, grad_new

    pg = _projected_gradient(x, grad, bound)
    return done(float(np.linalg.norm(pg)) <= cfg.tol, grad)
