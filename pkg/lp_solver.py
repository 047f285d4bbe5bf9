# --- LP Solver Module ---
"""
Small dense two-phase simplex with Bland's anti-cycling rule.

Solves  min cᵀx  s.t.  A x ≤ b,  lo ≤ x ≤ hi  (bounds may be infinite) for a
few dozen variables. Infeasible and unbounded problems are ordinary results,
not exceptions.
"""

from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from config import LP_FEASIBILITY_TOLERANCE, LP_MAX_VARIABLES
from validation_utils import ConfigurationError, SafebanError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpProblem(NamedTuple):
    objective: np.ndarray                 # n, minimized
    A_ub: np.ndarray                      # m x n, rows mean row·x ≤ rhs
    b_ub: np.ndarray                      # m
    bounds: Sequence[Tuple[float, float]]  # per-variable [lo, hi], ±inf allowed


class LpResult(NamedTuple):
    status: str
    x: Optional[np.ndarray] = None
    value: Optional[float] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def make_lp(objective, inequalities: Sequence[Tuple[Sequence[float], float]] = (),
            bounds: Optional[Sequence[Tuple[float, float]]] = None) -> LpProblem:
    """Build an LpProblem from (row, rhs) pairs; default bounds are x ≥ 0"""
    c = np.asarray(objective, dtype=float)
    n = c.size
    if n > LP_MAX_VARIABLES:
        raise ConfigurationError(f"lp_solve handles at most {LP_MAX_VARIABLES} variables, got {n}")
    rows = [np.asarray(row, dtype=float) for row, _ in inequalities]
    A = np.vstack(rows) if rows else np.zeros((0, n))
    b = np.asarray([rhs for _, rhs in inequalities], dtype=float)
    if bounds is None:
        bounds = [(0.0, np.inf)] * n
    if len(bounds) != n or A.shape[1] != n:
        raise ConfigurationError("LP dimensions do not match")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ConfigurationError("LP coefficients must be finite")
    return LpProblem(objective=c, A_ub=A, b_ub=b, bounds=[(float(lo), float(hi)) for lo, hi in bounds])


class _Tableau:
    """Dense simplex tableau; last column is the right-hand side"""

    def __init__(self, matrix: np.ndarray, basis: List[int], tol: float):
        self.T = matrix
        self.basis = basis
        self.tol = tol

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        for r in range(T.shape[0]):
            if r != row and T[r, col] != 0.0:
                T[r] -= T[r, col] * T[row]
        self.basis[row] = col

    def run(self, cost: np.ndarray, allowed: np.ndarray, max_iter: int = 50_000) -> str:
        """Minimize cost over columns flagged in allowed; Bland's rule throughout"""
        m = len(self.basis)
        T = self.T
        reduced = cost.astype(float).copy()
        for r, j in enumerate(self.basis):
            if reduced[j] != 0.0:
                reduced -= reduced[j] * T[r, :-1]

        for _ in range(max_iter):
            entering = next((j for j in range(reduced.size) if allowed[j] and reduced[j] < -self.tol), None)
            if entering is None:
                return OPTIMAL
            column = T[:m, entering]
            candidates = [r for r in range(m) if column[r] > self.tol]
            if not candidates:
                return UNBOUNDED
            ratios = [T[r, -1] / column[r] for r in candidates]
            best = min(ratios)
            # Bland: among minimum-ratio rows leave the smallest basic index
            ties = [r for r, ratio in zip(candidates, ratios) if ratio <= best + self.tol]
            leaving = min(ties, key=lambda r: self.basis[r])
            factor = reduced[entering]
            self.pivot(leaving, entering)
            reduced = reduced - factor * T[leaving, :-1]
        raise SafebanError("simplex iteration limit reached")


def _standardize(problem: LpProblem):
    """Rewrite x = shift + M·y with y ≥ 0; returns (M, shift, extra bound rows)"""
    n = problem.objective.size
    columns = []
    shift = np.zeros(n)
    extra_rows = []
    for i, (lo, hi) in enumerate(problem.bounds):
        if lo > hi:
            return None
        if np.isfinite(lo):
            shift[i] = lo
            columns.append((i, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(columns) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[i] = hi
            columns.append((i, -1.0))
        else:
            columns.append((i, 1.0))
            columns.append((i, -1.0))
    M = np.zeros((n, len(columns)))
    for k, (i, sign) in enumerate(columns):
        M[i, k] = sign
    return M, shift, extra_rows


def lp_solve(problem: LpProblem, tol: float = LP_FEASIBILITY_TOLERANCE) -> LpResult:
    """Optimal basic solution, or an infeasible / unbounded status"""
    standard = _standardize(problem)
    if standard is None:
        return LpResult(status=INFEASIBLE)
    M, shift, extra_rows = standard
    c = problem.objective @ M
    constant = float(problem.objective @ shift)

    G = problem.A_ub @ M if problem.A_ub.size else np.zeros((0, M.shape[1]))
    h = problem.b_ub - problem.A_ub @ shift if problem.A_ub.size else np.zeros(0)
    if extra_rows:
        bound_rows = np.zeros((len(extra_rows), M.shape[1]))
        for r, (k, _) in enumerate(extra_rows):
            bound_rows[r, k] = 1.0
        G = np.vstack([G, bound_rows])
        h = np.concatenate([h, [span for _, span in extra_rows]])

    m, ny = G.shape
    if m == 0:
        # only y ≥ 0: bounded iff all costs are non-negative
        if np.any(c < -tol):
            return LpResult(status=UNBOUNDED)
        return LpResult(status=OPTIMAL, x=shift.copy(), value=constant)

    negative_rows = [r for r in range(m) if h[r] < 0]
    n_art = len(negative_rows)
    width = ny + m + n_art
    T = np.zeros((m, width + 1))
    basis = []
    art_col = ny + m
    for r in range(m):
        sign = -1.0 if h[r] < 0 else 1.0
        T[r, :ny] = sign * G[r]
        T[r, ny + r] = sign
        T[r, -1] = sign * h[r]
        if sign < 0:
            T[r, art_col] = 1.0
            basis.append(art_col)
            art_col += 1
        else:
            basis.append(ny + r)
    tableau = _Tableau(T, basis, tol)

    if n_art:
        phase1 = np.zeros(width)
        phase1[ny + m:] = 1.0
        tableau.run(phase1, np.ones(width, dtype=bool))
        infeasibility = sum(tableau.T[r, -1] for r, j in enumerate(tableau.basis) if j >= ny + m)
        if infeasibility > tol * max(1.0, float(np.max(np.abs(h)))):
            return LpResult(status=INFEASIBLE)
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for r in range(len(tableau.basis)):
            if tableau.basis[r] >= ny + m:
                pivot_col = next((j for j in range(ny + m) if abs(tableau.T[r, j]) > tol), None)
                if pivot_col is None:
                    continue
                tableau.pivot(r, pivot_col)
            keep.append(r)
        tableau.T = tableau.T[keep]
        tableau.basis = [tableau.basis[r] for r in keep]

    cost = np.zeros(width)
    cost[:ny] = c
    allowed = np.zeros(width, dtype=bool)
    allowed[:ny + m] = True
    status = tableau.run(cost, allowed)
    if status == UNBOUNDED:
        return LpResult(status=UNBOUNDED)

    y = np.zeros(width)
    for r, j in enumerate(tableau.basis):
        y[j] = tableau.T[r, -1]
    x = shift + M @ y[:ny]
    return LpResult(status=OPTIMAL, x=x, value=float(problem.objective @ x))
