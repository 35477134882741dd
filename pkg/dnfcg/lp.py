"""
Dense revised simplex for small linear programs, returning primal and dual solutions.

Solves::

    min  c^T x
    s.t. A_i x  (>= | <= | =)  b_i      for every row i
         lb <= x <= ub

with finite lower bounds and optional (infinite) upper bounds. Upper bounds are handled
implicitly by the bounded-variable simplex (non-basic variables sit at either bound), so
they never become rows. A two-phase method with one artificial variable per row finds the
first feasible basis. The basis inverse is kept explicitly, updated by product-form pivots
and refactorized from scratch every ``REFACTOR_EVERY`` pivots.

Pricing is Dantzig's rule (most negative reduced cost); after ``5 * (m + n)`` degenerate
pivots the solver falls back to Bland's rule until the end of the phase.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

OPTIMAL = 'optimal'
INFEASIBLE = 'infeasible'
UNBOUNDED = 'unbounded'

GE, LE, EQ = '>=', '<=', '='
SENSES = (GE, LE, EQ)

TOL_FEAS = 1e-7
TOL_GAP = 1e-6
TOL_DJ = 1e-9
TOL_PIVOT = 1e-9
REFACTOR_EVERY = 50


class LpError(RuntimeError):
    """Numerical failure of the simplex: iteration limit or singular basis."""


@dataclass
class LinearProgram:
    """A minimization LP in row form; see the module docstring."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    lb: np.ndarray = None
    ub: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.shape[0]
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        m = self.A.shape[0]
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.senses = tuple(self.senses)
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel()

        if self.b.shape[0] != m or len(self.senses) != m:
            raise ValueError("LP has %d rows but %d right-hand sides and %d senses" % (m, self.b.shape[0], len(self.senses)))
        if self.lb.shape[0] != n or self.ub.shape[0] != n:
            raise ValueError("LP bounds must have one entry per variable (%d)" % n)
        bad = [s for s in self.senses if s not in SENSES]
        if bad:
            raise ValueError("Unknown constraint sense %r" % bad[0])
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("LP coefficients must be finite")
        if not np.all(np.isfinite(self.lb)):
            raise ValueError("LP lower bounds must be finite")
        if np.any(self.ub < self.lb):
            raise ValueError("LP has a variable with upper bound below its lower bound")

    @property
    def shape(self):
        return self.A.shape


@dataclass
class LpSolution:
    """
    Result of :func:`solve_lp`.

    ``duals`` holds one multiplier per row (>= rows: >= 0, <= rows: <= 0 in a minimization);
    ``reduced_costs`` are ``c - A^T duals``, non-zero only for variables at a bound.
    """

    status: str
    x: np.ndarray = None
    duals: np.ndarray = None
    reduced_costs: np.ndarray = None
    objective: float = None
    iterations: int = 0

    @property
    def optimal(self):
        return self.status == OPTIMAL

    def dual_objective(self, lp):
        """Objective of the dual solution, including the bound multipliers."""
        d = self.reduced_costs
        at_upper = np.isfinite(lp.ub) & (self.x >= lp.ub - TOL_FEAS)
        bounds = np.where(at_upper, lp.ub, lp.lb)
        bounds = np.where(d == 0, 0.0, bounds)
        return float(lp.b @ self.duals + bounds @ d)


class _Simplex:

    def __init__(self, lp):
        m, n = lp.shape
        self.m, self.n = m, n
        self.lp = lp

        # Columns: structurals (n), slacks (one per inequality row), artificials (m).
        slack_cols = []
        for i, s in enumerate(lp.senses):
            if s == GE:
                slack_cols.append((i, -1.0))
            elif s == LE:
                slack_cols.append((i, 1.0))
        self.n_slack = len(slack_cols)

        S = np.zeros((m, self.n_slack))
        for k, (i, v) in enumerate(slack_cols):
            S[i, k] = v

        self.lower = np.concatenate([lp.lb, np.zeros(self.n_slack), np.zeros(m)])
        self.upper = np.concatenate([lp.ub, np.full(self.n_slack, np.inf), np.full(m, np.inf)])

        # Non-basic variables start at their lower bound; artificials absorb the residual.
        x = self.lower.copy()
        residual = lp.b - lp.A @ lp.lb
        signs = np.where(residual >= 0, 1.0, -1.0)
        self.M = np.hstack([lp.A, S, np.diag(signs)])
        self.N_total = self.M.shape[1]
        self.first_artificial = n + self.n_slack

        self.basis = np.arange(self.first_artificial, self.N_total)
        self.x = x
        self.x[self.basis] = np.abs(residual)
        self.B_inv = np.diag(signs)
        self.is_basic = np.zeros(self.N_total, dtype=bool)
        self.is_basic[self.basis] = True
        self.pivots_since_refactor = 0
        self.iterations = 0

    def refactor(self):
        B = self.M[:, self.basis]
        try:
            self.B_inv = linalg.inv(B)
        except linalg.LinAlgError:
            raise LpError("Singular basis encountered during refactorization")
        self.pivots_since_refactor = 0
        self.recompute_basic_values()

    def recompute_basic_values(self):
        nonbasic = ~self.is_basic
        rhs = self.lp.b - self.M[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.B_inv @ rhs

    def run_phase(self, cost, allowed):
        """
        Optimize `cost` over the current basis; only variables flagged in `allowed` may enter.

        Returns ``OPTIMAL`` or ``UNBOUNDED``.
        """
        m = self.m
        degenerate = 0
        bland = False
        max_degenerate = 5 * (m + self.N_total)
        max_iterations = 50 * (m + self.N_total) + 1000
        start = self.iterations

        while True:
            if self.iterations - start >= max_iterations:
                raise LpError("Simplex iteration limit (%d) reached" % max_iterations)

            y = cost[self.basis] @ self.B_inv
            d = cost - y @ self.M

            at_upper = np.zeros(self.N_total, dtype=bool)
            finite_upper = np.isfinite(self.upper)
            at_upper[finite_upper] = self.x[finite_upper] >= self.upper[finite_upper] - TOL_FEAS
            at_upper &= self.upper > self.lower

            can_increase = allowed & ~self.is_basic & (d < -TOL_DJ) & (self.x < self.upper - TOL_FEAS)
            can_decrease = allowed & ~self.is_basic & (d > TOL_DJ) & at_upper
            eligible = can_increase | can_decrease
            if not eligible.any():
                return OPTIMAL

            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                scores = np.where(eligible, np.abs(d), -1.0)
                j = int(np.argmax(scores))
            direction = 1.0 if can_increase[j] else -1.0

            alpha = self.B_inv @ self.M[:, j]
            step, leave, leave_to_upper = self.ratio_test(alpha, direction, bland)

            flip = self.upper[j] - self.lower[j]
            if np.isfinite(flip) and flip <= step:
                step, leave = flip, None

            if not np.isfinite(step):
                return UNBOUNDED

            self.iterations += 1
            if step <= TOL_FEAS:
                degenerate += 1
                if not bland and degenerate > max_degenerate:
                    logger.debug("Switching to Bland's rule after %d degenerate pivots", degenerate)
                    bland = True

            self.x[self.basis] -= direction * step * alpha
            self.x[j] += direction * step

            if leave is None:
                # Bound flip: the entering variable moves to its other bound.
                self.x[j] = self.upper[j] if direction > 0 else self.lower[j]
                continue

            leaving = self.basis[leave]
            self.x[leaving] = self.upper[leaving] if leave_to_upper else self.lower[leaving]
            self.pivot(leave, j, alpha)

    def ratio_test(self, alpha, direction, bland):
        if self.m == 0:
            return np.inf, None, False

        xb = self.x[self.basis]
        lo = self.lower[self.basis]
        hi = self.upper[self.basis]
        delta = direction * alpha

        t = np.full(self.m, np.inf)
        down = delta > TOL_PIVOT
        up = (delta < -TOL_PIVOT) & np.isfinite(hi)
        t[down] = np.maximum(xb[down] - lo[down], 0.0) / delta[down]
        t[up] = np.maximum(hi[up] - xb[up], 0.0) / -delta[up]

        step = t.min()
        if not np.isfinite(step):
            return np.inf, None, False

        # Ties: Bland picks the smallest variable index, otherwise the largest pivot.
        ties = np.flatnonzero(t <= step + TOL_FEAS)
        if bland:
            r = int(ties[np.argmin(self.basis[ties])])
        else:
            r = int(ties[np.argmax(np.abs(alpha[ties]))])

        return float(step), r, bool(up[r])

    def pivot(self, r, j, alpha):
        leaving = self.basis[r]
        pivot = alpha[r]
        if abs(pivot) < TOL_PIVOT:
            raise LpError("Pivot element too small (%g)" % pivot)

        row = self.B_inv[r, :] / pivot
        self.B_inv -= np.outer(alpha, row)
        self.B_inv[r, :] = row

        self.basis[r] = j
        self.is_basic[leaving] = False
        self.is_basic[j] = True
        self.pivots_since_refactor += 1

        if self.pivots_since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def drive_out_artificials(self):
        # Basic artificials at zero are pivoted out where a structural/slack column allows;
        # the rest belong to redundant rows and stay basic, fixed at zero.
        for r in range(self.m):
            k = self.basis[r]
            if k < self.first_artificial:
                continue
            row = self.B_inv[r, :] @ self.M[:, :self.first_artificial]
            row[self.is_basic[:self.first_artificial]] = 0.0
            candidates = np.flatnonzero(np.abs(row) > 1e-7)
            if candidates.size == 0:
                continue
            j = int(candidates[np.argmax(np.abs(row[candidates]))])
            alpha = self.B_inv @ self.M[:, j]
            self.x[k] = 0.0
            self.pivot(r, j, alpha)
        self.refactor()


def solve_lp(lp):
    """
    Solve a :class:`LinearProgram` to optimality with primal and dual solutions.

    Infeasible and unbounded programs are reported through :attr:`LpSolution.status`, never
    silently. Results are deterministic for a fixed input.

    :param lp: :class:`LinearProgram`
    :return: :class:`LpSolution`
    """
    m, n = lp.shape
    sx = _Simplex(lp)

    allowed = np.ones(sx.N_total, dtype=bool)

    if m:
        phase1_cost = np.zeros(sx.N_total)
        phase1_cost[sx.first_artificial:] = 1.0
        status = sx.run_phase(phase1_cost, allowed)
        sx.refactor()
        infeasibility = float(sx.x[sx.first_artificial:].sum())
        logger.debug("Phase 1 finished after %d iterations, infeasibility %g", sx.iterations, infeasibility)
        if status != OPTIMAL or infeasibility > TOL_FEAS * max(1.0, np.abs(lp.b).max()):
            return LpSolution(INFEASIBLE, iterations=sx.iterations)
        sx.drive_out_artificials()

    # Artificials are fixed at zero from here on.
    allowed[sx.first_artificial:] = False
    sx.upper[sx.first_artificial:] = 0.0
    sx.x[sx.first_artificial:] = np.minimum(sx.x[sx.first_artificial:], 0.0)

    phase2_cost = np.zeros(sx.N_total)
    phase2_cost[:n] = lp.c
    status = sx.run_phase(phase2_cost, allowed)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=sx.iterations)

    if m:
        sx.refactor()
        y = phase2_cost[sx.basis] @ sx.B_inv
    else:
        y = np.zeros(0)

    x = np.clip(sx.x[:n], lp.lb, lp.ub)
    reduced = lp.c - lp.A.T @ y if m else lp.c.copy()
    # Basic variables and variables strictly between bounds carry no bound multiplier.
    interior = (x > lp.lb + TOL_FEAS) & (x < lp.ub - TOL_FEAS)
    basic_structural = sx.is_basic[:n]
    reduced[interior | basic_structural] = 0.0

    y = _clean_dual_signs(y, lp.senses)

    solution = LpSolution(OPTIMAL, x=x, duals=y, reduced_costs=reduced,
                          objective=float(lp.c @ x), iterations=sx.iterations)
    logger.debug("LP %dx%d solved in %d iterations, objective %.9g", m, n, sx.iterations, solution.objective)
    return solution


def _clean_dual_signs(y, senses):
    # Round sign noise of the order of the optimality tolerance away.
    y = y.copy()
    for i, s in enumerate(senses):
        if s == GE and -1e-9 < y[i] < 0:
            y[i] = 0.0
        elif s == LE and 0 < y[i] < 1e-9:
            y[i] = 0.0
    return y
