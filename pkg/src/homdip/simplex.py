"""Nelder-Mead downhill simplex with box projection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool


def nelder_mead(
    fun: Callable[[np.ndarray], float],
    x0,
    step,
    lower=None,
    upper=None,
    max_iter: int = 2000,
    ftol_rel: float = 1e-8,
    ftol_abs: float = 1e-30,
    xtol: float = 1e-9,
) -> SimplexResult:
    """Minimise ``fun`` starting from a simplex of size ``step`` around ``x0``.

    Trial points are projected onto ``[lower, upper]`` before evaluation.
    Stops when the spread of function values over the simplex falls below
    ``ftol_rel·|f_best| + ftol_abs`` or every vertex lies within ``xtol`` of
    the best one (per coordinate).
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    step = np.broadcast_to(np.asarray(step, dtype=float), (n,))
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        return float(fun(x))

    def project(x):
        return np.clip(x, lo, hi)

    pts = [project(x0)]
    for i in range(n):
        e = x0.copy()
        e[i] += step[i]
        if project(e)[i] == pts[0][i]:
            e[i] = x0[i] - step[i]
        pts.append(project(e))
    pts = np.array(pts)
    vals = np.array([f(p) for p in pts])

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        order = np.argsort(vals, kind="stable")
        pts, vals = pts[order], vals[order]
        if vals[-1] - vals[0] <= ftol_rel * abs(vals[0]) + ftol_abs or np.max(np.abs(pts[1:] - pts[0])) <= xtol:
            converged = True
            break
        centroid = pts[:-1].mean(axis=0)
        xr = project(centroid + (centroid - pts[-1]))
        fr = f(xr)
        if fr < vals[0]:
            xe = project(centroid + 2.0 * (centroid - pts[-1]))
            fe = f(xe)
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-1]:
            xc = project(centroid + 0.5 * (xr - centroid))  # outside contraction
            fc = f(xc)
            if fc <= fr:
                pts[-1], vals[-1] = xc, fc
                continue
        else:
            xc = project(centroid + 0.5 * (pts[-1] - centroid))  # inside contraction
            fc = f(xc)
            if fc < vals[-1]:
                pts[-1], vals[-1] = xc, fc
                continue
        # shrink towards the best vertex
        pts[1:] = project(pts[0] + 0.5 * (pts[1:] - pts[0]))
        vals[1:] = [f(p) for p in pts[1:]]

    best = int(np.argmin(vals))
    return SimplexResult(pts[best].copy(), float(vals[best]), it, evals, converged)
