"""Box-constrained minimisation of (A + m.x)(B + m.(k/x)).

Eliminating sigma2_r|c = k_c / sigma2_pi|c through the active hyperbola constraint leaves a
product of two positive sums over a box. Substituting x = exp(s) makes the log of each
factor convex, so coordinate descent reaches the global minimum. A supporting hyperplane of
log f at the descent point usually certifies that on its own; when it does not, the grid and
branch-and-bound drivers below close the gap with interval lower bounds.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pybnb

from schemas.errors import SolverError

logger = logging.getLogger(__name__)

GRID_POINTS = {1: 16, 2: 6, 3: 4, 4: 3}
MAX_GRID_BOXES = 250_000
MAX_BNB_NODES = 200_000
DESCENT_SWEEPS = 500
DESCENT_RTOL = 1e-15


@dataclass(frozen=True)
class ReducedProblem:
    # Strata with k > 0; strata pinned to a single point are folded into A and B
    A: float
    B: float
    m: np.ndarray
    k: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.m.size)

    def objective(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return (self.A + X @ self.m) * (self.B + (self.k / X) @ self.m)

    def lower_bound(self, L: np.ndarray, U: np.ndarray) -> np.ndarray:
        # Each factor is monotone in every coordinate, so its box minimum sits at a corner
        L, U = np.atleast_2d(L), np.atleast_2d(U)
        return (self.A + L @ self.m) * (self.B + (self.k / U) @ self.m)

    def tangent_bound(self, x0: np.ndarray, L: np.ndarray, U: np.ndarray) -> float:
        """Lower bound over [L, U] from the supporting hyperplane of log f at x0.

        log f is convex in s = log x, so f(x) >= f(x0) * exp(g . (log x - log x0)) for every
        x > 0; the exponent is minimised over the box coordinate by coordinate.
        """
        F = self.A + float(x0 @ self.m)
        G = self.B + float((self.k / x0) @ self.m)
        g = self.m * x0 / F - self.m * self.k / (x0 * G)
        s0 = np.log(x0)
        step = np.minimum(g * (np.log(L) - s0), g * (np.log(U) - s0))
        return F * G * math.exp(float(step.sum()))


def coordinate_descent(p: ReducedProblem, x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Exact coordinate minimisation; each step solves d/dx (F0 + m x)(G0 + m k / x) = 0."""
    x = np.clip(np.asarray(x, dtype=float).copy(), lo, hi)
    F = p.A + float(x @ p.m)
    G = p.B + float((p.k / x) @ p.m)
    for _ in range(DESCENT_SWEEPS):
        moved = 0.0
        for c in range(p.dim):
            F0 = F - p.m[c] * x[c]
            G0 = G - p.m[c] * p.k[c] / x[c]
            if G0 <= 0.0:
                target = hi[c]
            elif F0 <= 0.0:
                target = lo[c]
            else:
                target = math.sqrt(p.k[c] * F0 / G0)
            target = min(hi[c], max(lo[c], target))
            moved = max(moved, abs(target - x[c]) / max(x[c], 1e-300))
            x[c] = target
            F = F0 + p.m[c] * target
            G = G0 + p.m[c] * p.k[c] / target
        if moved <= DESCENT_RTOL:
            break
    return x


def _better(f: float, x: np.ndarray, f_best: float, x_best: Optional[np.ndarray]) -> bool:
    # Ties go to the lexicographically smallest variance vector
    if x_best is None or f < f_best:
        return True
    return f == f_best and tuple(x) < tuple(x_best)


def solve_grid(p: ReducedProblem, tol: float) -> Tuple[np.ndarray, float, float]:
    """Exhaustive grid refinement: split every surviving box g^K ways until none survives."""
    g = GRID_POINTS.get(p.dim, 2)
    fractions = np.array(list(itertools.product(range(g), repeat=p.dim)), dtype=float) / g
    x_best = coordinate_descent(p, 0.5 * (p.lo + p.hi), p.lo, p.hi)
    f_best = float(p.objective(x_best)[0])
    certified = f_best - p.tangent_bound(x_best, p.lo, p.hi)
    if certified <= tol:
        return x_best, f_best, max(0.0, certified)
    logger.debug("tangent certificate left gap %.3g; refining", certified)
    global_lb = f_best

    box_lo, box_hi = p.lo[None, :], p.hi[None, :]
    while box_lo.shape[0]:
        width = (box_hi - box_lo) / g
        child_lo = (box_lo[:, None, :] + fractions[None, :, :] * width[:, None, :]).reshape(-1, p.dim)
        child_hi = np.minimum(child_lo + np.repeat(width, fractions.shape[0], axis=0), np.repeat(box_hi, fractions.shape[0], axis=0))
        centers = 0.5 * (child_lo + child_hi)
        values = p.objective(centers)
        i = int(np.argmin(values))
        if values[i] < f_best:
            candidate = coordinate_descent(p, centers[i], p.lo, p.hi)
            f_cand = float(p.objective(candidate)[0])
            if _better(f_cand, candidate, f_best, x_best):
                x_best, f_best = candidate, f_cand

        lb = p.lower_bound(child_lo, child_hi)
        keep = lb < f_best - tol
        if (~keep).any():
            global_lb = min(global_lb, float(lb[~keep].min()))
        box_lo, box_hi = child_lo[keep], child_hi[keep]
        if box_lo.shape[0] > MAX_GRID_BOXES:
            raise SolverError(f"grid refinement exceeded {MAX_GRID_BOXES} live boxes at tol={tol}")
    return x_best, f_best, max(0.0, f_best - global_lb)


class _TauBranchAndBound(pybnb.Problem):
    def __init__(self, p: ReducedProblem) -> None:
        self._p = p
        self._lo, self._hi = p.lo.copy(), p.hi.copy()
        self._box_x: Optional[np.ndarray] = None
        self.best_x: Optional[np.ndarray] = None
        self.best_f = math.inf

    def _box_minimizer(self) -> np.ndarray:
        # Descent restricted to the current box, started from the incumbent when there is one
        if self._box_x is None:
            start = 0.5 * (self._lo + self._hi) if self.best_x is None else self.best_x
            self._box_x = coordinate_descent(self._p, start, self._lo, self._hi)
        return self._box_x

    def sense(self):
        return pybnb.minimize

    def objective(self):
        x = self._box_minimizer()
        f = float(self._p.objective(x)[0])
        if _better(f, x, self.best_f, self.best_x):
            self.best_x, self.best_f = x.copy(), f
        return f

    def bound(self):
        corner = float(self._p.lower_bound(self._lo, self._hi)[0])
        return max(corner, self._p.tangent_bound(self._box_minimizer(), self._lo, self._hi))

    def save_state(self, node):
        node.state = (self._lo.copy(), self._hi.copy())

    def load_state(self, node):
        lo, hi = node.state
        self._lo, self._hi = lo.copy(), hi.copy()
        self._box_x = None

    def branch(self):
        # Split the coordinate that contributes most to the bound's looseness
        p = self._p
        F_hi = p.A + float(self._hi @ p.m)
        G_hi = p.B + float((p.k / self._lo) @ p.m)
        slack = p.m * (self._hi - self._lo) * G_hi + p.m * p.k * (1.0 / self._lo - 1.0 / self._hi) * F_hi
        c = int(np.argmax(slack))
        mid = 0.5 * (self._lo[c] + self._hi[c])
        for lo_c, hi_c in ((self._lo[c], mid), (mid, self._hi[c])):
            lo, hi = self._lo.copy(), self._hi.copy()
            lo[c], hi[c] = lo_c, hi_c
            child = pybnb.Node()
            child.state = (lo, hi)
            yield child


def solve_branch_and_bound(p: ReducedProblem, tol: float) -> Tuple[np.ndarray, float, float]:
    problem = _TauBranchAndBound(p)
    solver = pybnb.Solver(comm=None)
    results = solver.solve(
        problem,
        absolute_gap=tol,
        relative_gap=0.0,
        node_limit=MAX_BNB_NODES,
        log=None,
    )
    if problem.best_x is None or results.bound is None:
        raise SolverError(f"branch and bound returned no incumbent ({results.termination_condition})")
    gap = max(0.0, problem.best_f - float(results.bound))
    if gap > tol:
        raise SolverError(f"branch and bound stopped with gap {gap:.3g} > tol {tol:.3g}")
    logger.debug("branch and bound: %s nodes, gap %.3g", results.nodes, gap)
    return problem.best_x, problem.best_f, gap
