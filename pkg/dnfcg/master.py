"""
Restricted master problem (RMP) for learning one DNF rule.

For positives P, negatives Z and the current clause columns K the master LP is::

    min  fn_penalty * sum_{i in P} xi_i + sum_{k in K} |Z_k| w_k
    s.t. xi_i + sum_{k covers i} w_k >= 1        for every positive i     (dual mu_i >= 0)
         sum_k c_k w_k <= complexity_budget                               (dual lambda <= 0)
         xi_i >= 0,  0 <= w_k <= 1

where ``|Z_k|`` is the number of negatives satisfying clause ``k`` and ``c_k = 1 + len(k)``.
Solving it with integral ``w`` over the generated columns only is the restricted master
heuristic that yields the final rule.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .utils import as_matrix, coverage

logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 20
_EPS = 1e-9
_TOL = 1e-7


class MasterError(RuntimeError):
    """The RMP LP did not solve to optimality."""


@dataclass(frozen=True, order=True)
class Clause:
    """A conjunction of features, stored as a strictly increasing tuple of feature ids."""

    features: tuple

    def __post_init__(self):
        features = tuple(sorted(int(f) for f in self.features))
        if not features:
            raise ValueError("A clause needs at least one feature")
        if len(set(features)) != len(features):
            raise ValueError("Duplicate feature in clause %s" % (features,))
        if features[0] < 0:
            raise ValueError("Feature ids must be non-negative")
        object.__setattr__(self, 'features', features)

    @property
    def complexity(self):
        return 1 + len(self.features)

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)


@dataclass
class Column:
    """A clause with its coverage of the positives and negatives of an RMP."""

    clause: Clause
    pos_cover: np.ndarray
    neg_cover: np.ndarray

    @property
    def obj_coeff(self):
        return int(self.neg_cover.sum())

    @property
    def complexity(self):
        return self.clause.complexity


@dataclass
class RmpState:
    positives: np.ndarray
    negatives: np.ndarray
    fn_penalty: float
    complexity_budget: int
    columns: list = field(default_factory=list)
    lam: float = None
    mu: np.ndarray = None
    lp_objective: float = None
    lp_values: np.ndarray = None
    _keys: set = field(default_factory=set, repr=False)

    @property
    def n_positives(self):
        return self.positives.shape[0]

    @property
    def clauses(self):
        return [c.clause for c in self.columns]

    @property
    def keys(self):
        return frozenset(self._keys)


@dataclass
class MasterSolution:
    """Integral selection over the RMP columns (the rule) and its master objective."""

    selected: list
    xi: np.ndarray
    objective: float
    complexity: int = 0
    nodes: int = 0


def make_column(clause, positives, negatives):
    return Column(clause, coverage(positives, clause.features), coverage(negatives, clause.features))


def build_rmp(positives, negatives, fn_penalty, complexity_budget, seed_columns=()):
    """
    Build the restricted master problem of one label.

    :param positives: positive examples (matrix or sequence of ``BinaryExample``)
    :param negatives: negative examples, same width as `positives`
    :param fn_penalty: ``float`` penalty of an uncovered positive
    :param complexity_budget: ``int`` bound on the summed clause complexity
    :param seed_columns: initial clauses; duplicates are stored once
    :return: :class:`RmpState`
    """
    P = as_matrix(positives)
    if P.shape[0] == 0:
        raise ValueError("The master problem needs at least one positive example")
    Z = as_matrix(negatives, n_features=P.shape[1])
    if Z.shape[1] != P.shape[1]:
        raise ValueError("Positives and negatives have different widths (%d, %d)" % (P.shape[1], Z.shape[1]))
    if fn_penalty <= 0:
        raise ValueError("fn_penalty must be positive, got %r" % fn_penalty)
    if complexity_budget < 2:
        raise ValueError("complexity_budget must be >= 2 (the smallest clause costs 2), got %r" % complexity_budget)

    state = RmpState(P, Z, float(fn_penalty), int(complexity_budget))
    add_columns(state, seed_columns)
    return state


def add_columns(state, clauses):
    """
    Append the clauses not already present in the RMP, with their coverage.

    :param state: :class:`RmpState`
    :param clauses: iterable of :class:`Clause`
    :return: ``int`` number of columns actually added
    """
    added = 0
    for clause in clauses:
        if clause.features in state._keys:
            continue
        if clause.features[-1] >= state.positives.shape[1]:
            raise ValueError("Clause %s uses a feature outside the vocabulary" % (clause.features,))
        state.columns.append(make_column(clause, state.positives, state.negatives))
        state._keys.add(clause.features)
        added += 1
    return added


def rmp_linear_program(state):
    """
    Return the LP relaxation of the RMP; variables are ``[xi_0..xi_{|P|-1}, w_0..w_{K-1}]``.

    :param state: :class:`RmpState`
    :return: :class:`dnfcg.lp.LinearProgram`
    """
    n_pos = state.n_positives
    n_col = len(state.columns)

    c = np.concatenate([np.full(n_pos, state.fn_penalty), [col.obj_coeff for col in state.columns]])

    A = np.zeros((n_pos + 1, n_pos + n_col))
    A[np.arange(n_pos), np.arange(n_pos)] = 1.0
    for k, col in enumerate(state.columns):
        A[:n_pos, n_pos + k] = col.pos_cover
        A[n_pos, n_pos + k] = col.complexity

    b = np.concatenate([np.ones(n_pos), [state.complexity_budget]])
    senses = (lp.GE,) * n_pos + (lp.LE,)
    ub = np.concatenate([np.full(n_pos, np.inf), np.ones(n_col)])

    return lp.LinearProgram(c, A, senses, b, lb=np.zeros(n_pos + n_col), ub=ub)


def solve_rmp(state):
    """
    Solve the RMP relaxation and cache its duals on the state.

    :param state: :class:`RmpState`
    :return: ``tuple`` (lambda, mu, objective) with lambda <= 0 and mu >= 0
    """
    program = rmp_linear_program(state)
    solution = lp.solve_lp(program)
    if not solution.optimal:
        raise MasterError("RMP relaxation is %s; the xi-only solution should always be feasible" % solution.status)

    n_pos = state.n_positives
    state.mu = np.maximum(solution.duals[:n_pos], 0.0)
    state.lam = min(float(solution.duals[n_pos]), 0.0)
    state.lp_objective = solution.objective
    state.lp_values = solution.x[n_pos:].copy()

    return state.lam, state.mu, state.lp_objective


def master_objective(selected, positives, negatives, fn_penalty):
    """
    Evaluate the master objective of a clause selection from scratch.

    ``fn_penalty * #{uncovered positives} + sum over negatives of #{selected clauses it satisfies}``

    :param selected: sequence of :class:`Clause`
    :param positives: positive examples
    :param negatives: negative examples
    :param fn_penalty: ``float``
    :return: ``float``
    """
    P = as_matrix(positives)
    Z = as_matrix(negatives, n_features=P.shape[1])

    covered = np.zeros(P.shape[0], dtype=bool)
    false_positives = 0
    for clause in selected:
        covered |= coverage(P, clause.features)
        false_positives += int(coverage(Z, clause.features).sum())

    return float(fn_penalty * int((~covered).sum()) + false_positives)


def _dominated(cover, costs, cplx):
    """
    Flag columns that no lexicographically smallest irredundant optimum needs.

    Column k goes when another column covers a superset of its positives within its complexity
    and is strictly cheaper, or covers exactly its positives at the same cost with a smaller
    index.
    """
    K = cover.shape[1]
    if K < 2:
        return np.zeros(K, dtype=bool)

    C = cover.astype(float)
    not_subset = C.T @ (1.0 - C)           # [k, k2]: positives covered by k but not by k2
    subset = not_subset < 0.5
    same = subset & subset.T

    cplx_le = cplx[None, :] <= cplx[:, None]
    cheaper = costs[None, :] < costs[:, None] - _EPS
    tied = np.abs(costs[None, :] - costs[:, None]) <= _EPS
    idx = np.arange(K)

    dom = cplx_le & ((subset & cheaper) | (same & tied & (idx[None, :] < idx[:, None])))
    np.fill_diagonal(dom, False)
    return dom.any(axis=1)


class _SelectionSearch:
    """
    Depth-first branch-and-bound over subsets of columns.

    Every node is a distinct subset; its children extend it with a column of larger index, so
    the search visits subsets in lexicographic order of their sorted index tuples and each node
    is itself a candidate solution. Selections are ranked by (objective, index tuple), and only
    irredundant selections count: dropping any of their columns must raise the objective.

    A subtree is pruned with a knapsack bound: adding a set of columns saves at most the sum of
    their stand-alone savings (penalties of the open positives they cover, minus their cost),
    within the remaining complexity budget. Large column sets add the LP relaxation
    of the remaining subproblem as an objective bound.
    """

    def __init__(self, cover, weights, base, costs, cplx, budget, fn_penalty, use_lp_bound):
        self.cover = cover              # groups x columns
        self.weights = weights
        self.base = base
        self.costs = costs
        self.cplx = cplx
        self.budget = budget
        self.fn_penalty = fn_penalty
        self.use_lp_bound = use_lp_bound
        self.nodes = 0
        self.best_key = None
        self.best = ()

    def objective(self, covered, cost):
        return self.base + cost + self.fn_penalty * float(self.weights[~covered].sum())

    def irredundant(self, selection):
        chosen = self.cover[:, list(selection)]
        alone = chosen.sum(axis=1) == 1
        unique = self.weights[alone] @ chosen[alone]
        return bool(np.all(self.fn_penalty * unique - self.costs[list(selection)] > _EPS))

    def consider(self, selection, covered, cost):
        key = (round(self.objective(covered, cost), 9), tuple(sorted(selection)))
        if (self.best_key is None or key < self.best_key) and self.irredundant(selection):
            self.best_key, self.best = key, tuple(selection)

    def savings_profile(self, covered, remaining, capacity):
        """``profile[r]``: upper bound on the objective decrease using extra complexity <= r."""
        open_groups = ~covered
        gain = self.fn_penalty * (self.weights[open_groups] @ self.cover[np.ix_(open_groups, remaining)])
        savings = gain - self.costs[remaining]

        profile = np.zeros(capacity + 1)
        for k, s in zip(remaining, savings):
            w = int(self.cplx[k])
            if s <= _EPS or w > capacity:
                continue
            profile[w:] = np.maximum(profile[w:], profile[:capacity + 1 - w] + s)
        return profile

    def lp_bound(self, covered, cost, cplx, remaining):
        open_groups = np.flatnonzero(~covered)
        if open_groups.size == 0 or remaining.size == 0:
            return self.objective(covered, cost)

        g, r = open_groups.size, remaining.size
        c = np.concatenate([self.fn_penalty * self.weights[open_groups], self.costs[remaining]])
        A = np.zeros((g + 1, g + r))
        A[np.arange(g), np.arange(g)] = 1.0
        A[:g, g:] = self.cover[np.ix_(open_groups, remaining)]
        A[g, g:] = self.cplx[remaining]
        b = np.concatenate([np.ones(g), [self.budget - cplx]])
        senses = (lp.GE,) * g + (lp.LE,)
        ub = np.concatenate([np.full(g, np.inf), np.ones(r)])

        solution = lp.solve_lp(lp.LinearProgram(c, A, senses, b, ub=ub))
        if not solution.optimal:
            raise MasterError("Node relaxation is %s" % solution.status)
        return self.base + cost + solution.objective

    def pruned(self, selection, covered, cost, cplx, remaining):
        best_obj, best_tuple = self.best_key
        capacity = self.budget - cplx
        current = self.objective(covered, cost)
        profile = self.savings_profile(covered, remaining, capacity)
        needed = current - best_obj

        if profile[-1] < needed - _TOL:
            return True
        better = profile[-1] > needed + _TOL
        if self.use_lp_bound:
            bound = self.lp_bound(covered, cost, cplx, remaining)
            if bound > best_obj + _TOL:
                return True
            better = better and bound < best_obj - _TOL
        if better:
            return False

        # Only ties on the objective remain; descendants extend `selection`, so they sort after it.
        return selection >= best_tuple

    def run(self, greedy_order):
        n_groups, n_cols = self.cover.shape

        # Incumbents: the empty selection, then a greedy pass in `greedy_order` with the columns
        # it made redundant dropped again.
        empty = np.zeros(n_groups, dtype=bool)
        self.consider((), empty, 0.0)
        covered, cost, cplx, chosen = empty.copy(), 0.0, 0, []
        for k in greedy_order:
            if cplx + self.cplx[k] > self.budget:
                continue
            new_covered = covered | self.cover[:, k]
            if self.objective(new_covered, cost + self.costs[k]) < self.objective(covered, cost) - _EPS:
                covered, cost, cplx = new_covered, cost + self.costs[k], cplx + int(self.cplx[k])
                chosen.append(k)
        for k in reversed(list(chosen)):
            rest = [j for j in chosen if j != k]
            rest_covered = self.cover[:, rest].any(axis=1) if rest else empty
            if self.objective(rest_covered, cost - self.costs[k]) <= self.objective(covered, cost) + _EPS:
                chosen, covered, cost = rest, rest_covered, cost - self.costs[k]
        self.consider(chosen, covered, cost)

        stack = [((), 0, empty, 0.0, 0)]
        while stack:
            selection, nxt, covered, cost, cplx = stack.pop()
            self.nodes += 1
            self.consider(selection, covered, cost)

            rest = np.arange(nxt, n_cols)
            fits = rest[self.cplx[rest] <= self.budget - cplx]
            if fits.size == 0 or self.pruned(selection, covered, cost, cplx, fits):
                continue

            children = [(selection + (int(k),), int(k) + 1, covered | self.cover[:, k],
                         cost + self.costs[k], cplx + int(self.cplx[k])) for k in fits]
            stack.extend(reversed(children))

        return self.best


def solve_integer_rmp(state, exhaustive_limit=EXHAUSTIVE_LIMIT):
    """
    Solve the RMP with binary clause variables over the current columns only.

    Returns an optimal selection under the complexity budget. Only irredundant selections are
    returned (dropping any selected column raises the objective); among those that are optimal
    the lexicographically smallest sorted tuple of column indices wins.

    :param state: :class:`RmpState` on which :func:`solve_rmp` has run
    :param exhaustive_limit: ``int`` column count up to which no LP bounds are used
    :return: :class:`MasterSolution`
    """
    if state.lp_values is None:
        raise ValueError("solve_rmp must run before solve_integer_rmp")

    n_pos = state.n_positives
    n_col = len(state.columns)
    lp_values = np.zeros(n_col)
    lp_values[:state.lp_values.shape[0]] = state.lp_values

    cover = np.zeros((n_pos, n_col), dtype=bool)
    for k, col in enumerate(state.columns):
        cover[:, k] = col.pos_cover
    costs = np.array([col.obj_coeff for col in state.columns], dtype=float)
    cplx = np.array([col.complexity for col in state.columns], dtype=int)

    candidates = np.flatnonzero(cplx <= state.complexity_budget)
    if candidates.size:
        keep = ~_dominated(cover[:, candidates], costs[candidates], cplx[candidates])
        candidates = candidates[keep]

    # Positives no candidate covers always pay the penalty; the others are grouped by signature.
    sub = cover[:, candidates]
    reachable = sub.any(axis=1) if candidates.size else np.zeros(n_pos, dtype=bool)
    base = state.fn_penalty * float((~reachable).sum())
    if reachable.any():
        signatures, weights = np.unique(sub[reachable], axis=0, return_counts=True)
    else:
        signatures, weights = np.zeros((0, candidates.size), dtype=bool), np.zeros(0, dtype=int)

    # Local indices keep the column order, so index tuples compare the same way.
    search = _SelectionSearch(
        cover=signatures,
        weights=weights.astype(float),
        base=base,
        costs=costs[candidates],
        cplx=cplx[candidates],
        budget=state.complexity_budget,
        fn_penalty=state.fn_penalty,
        use_lp_bound=candidates.size > exhaustive_limit,
    )
    greedy_order = sorted(range(candidates.size), key=lambda k: (-lp_values[candidates[k]], k))
    best_local = search.run(greedy_order)
    selected_idx = sorted(int(candidates[k]) for k in best_local)

    covered = cover[:, selected_idx].any(axis=1) if selected_idx else np.zeros(n_pos, dtype=bool)
    objective = state.fn_penalty * float((~covered).sum()) + float(costs[selected_idx].sum())
    logger.debug("Integer RMP over %d columns (%d after dominance): %d nodes, objective %g",
                 n_col, candidates.size, search.nodes, objective)

    return MasterSolution(
        selected=[state.columns[k].clause for k in selected_idx],
        xi=~covered,
        objective=objective,
        complexity=int(cplx[selected_idx].sum()),
        nodes=search.nodes,
    )
