"""Grid seeding plus Nelder-Mead refinement for smooth 2-angle objectives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize


@dataclass(frozen=True)
class Minimum:
    x: tuple[float, float]
    value: float
    spread: float
    evaluations: int
    converged: bool


def grid_then_simplex(
    func,
    axis0: np.ndarray,
    axis1: np.ndarray,
    spread_tol: float = 1e-6,
    xatol: float = 1e-7,
    fatol: float = 1e-12,
    max_iter: int = 400,
) -> Minimum:
    """Minimize ``func(x0, x1)``: exhaustive grid, then a simplex from the best node.

    Grid ties go to the first node in (axis0, axis1) order, i.e. the smaller
    angles. The simplex step is half a grid cell.
    """
    best = None
    count = 0
    for x0 in axis0:
        for x1 in axis1:
            v = float(func(x0, x1))
            count += 1
            if best is None or v < best[0] - 1e-13:
                best = (v, x0, x1)
    v0, s0, s1 = best
    step0 = 0.5 * (axis0[1] - axis0[0]) if len(axis0) > 1 else 0.1
    step1 = 0.5 * (axis1[1] - axis1[0]) if len(axis1) > 1 else 0.1
    start = np.array([s0, s1], dtype=float)
    simplex = np.array([start, start + [step0, 0.0], start + [0.0, step1]])
    res = minimize(
        lambda p: func(p[0], p[1]),
        start,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": xatol,
            "fatol": fatol,
            "maxiter": max_iter,
            "maxfev": 4 * max_iter,
        },
    )
    count += int(res.nfev)
    vals = np.asarray(res.final_simplex[1])
    spread = float(vals.max() - vals.min())
    if res.fun <= v0:
        x, value = (float(res.x[0]), float(res.x[1])), float(res.fun)
    else:
        x, value = (float(s0), float(s1)), float(v0)
    return Minimum(x, value, spread, count, bool(spread <= spread_tol))
