"""
Pricing: find clauses with negative reduced cost for the current RMP duals.

The reduced cost of a clause ``k`` is::

    rc_k = #{negatives satisfying k} - sum_{positives i satisfying k} mu_i - lambda * c_k

Two paths are available. :func:`heuristic_pricing` enumerates every clause of size one and
two over a pool of frequent words. :func:`exact_pricing` searches all clauses up to the
maximum clause size with a depth-first branch-and-bound.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .master import Clause
from .utils import as_matrix, coverage

logger = logging.getLogger(__name__)

SCALE_MODES = ('exact', 'integer_scaled')
FILTER_DENOMINATORS = ('all', 'positives')


@dataclass(frozen=True)
class DualSnapshot:
    """The RMP duals at one iteration: lambda <= 0 and one mu_i >= 0 per positive."""

    lam: float
    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).ravel()
        if self.lam > 0:
            raise ValueError("The complexity dual must be <= 0, got %r" % self.lam)
        if np.any(mu < 0):
            raise ValueError("Covering duals must be >= 0")
        object.__setattr__(self, 'lam', float(self.lam))
        object.__setattr__(self, 'mu', mu)


@dataclass
class PricingConfig:
    max_clause_size: int = 3
    pool_size: int = 200
    min_doc_frac: float = 0.02
    rc_threshold: float = -1e-2
    scale_mode: str = 'exact'
    scale_factor: int = 100
    filter_denominator: str = 'all'
    fix_zero_features: bool = True

    def validate(self, complexity_budget=None):
        """
        Check ranges; raise ``ValueError`` naming the offending field.

        :param complexity_budget: when given, ``max_clause_size`` must not exceed it
        """
        if self.max_clause_size < 1:
            raise ValueError("max_clause_size must be >= 1, got %r" % self.max_clause_size)
        if complexity_budget is not None and self.max_clause_size > complexity_budget:
            raise ValueError("max_clause_size (%d) must not exceed complexity_budget (%d)"
                             % (self.max_clause_size, complexity_budget))
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1, got %r" % self.pool_size)
        if not 0 <= self.min_doc_frac <= 1:
            raise ValueError("min_doc_frac must lie in [0, 1], got %r" % self.min_doc_frac)
        if self.rc_threshold > 0:
            raise ValueError("rc_threshold must be <= 0, got %r" % self.rc_threshold)
        if self.scale_mode not in SCALE_MODES:
            raise ValueError("Unknown scale_mode %r (expected one of %s)" % (self.scale_mode, SCALE_MODES))
        if self.scale_factor < 1:
            raise ValueError("scale_factor must be >= 1, got %r" % self.scale_factor)
        if self.filter_denominator not in FILTER_DENOMINATORS:
            raise ValueError("Unknown filter_denominator %r (expected one of %s)"
                             % (self.filter_denominator, FILTER_DENOMINATORS))
        return self


def _matrices(positives, negatives):
    P = as_matrix(positives)
    Z = as_matrix(negatives, n_features=P.shape[1])
    return P, Z


def reduced_cost(clause, duals, positives, negatives):
    """
    Return the reduced cost of `clause` under `duals`.

    :param clause: :class:`dnfcg.master.Clause` (or a sequence of feature ids)
    :param duals: :class:`DualSnapshot`
    :param positives: positive examples, aligned with ``duals.mu``
    :param negatives: negative examples
    :return: ``float``
    """
    features = tuple(getattr(clause, 'features', clause))
    if not features:
        raise ValueError("The empty clause has no reduced cost")
    P, Z = _matrices(positives, negatives)
    pos = coverage(P, features)
    neg = coverage(Z, features)
    return float(neg.sum()) - float(duals.mu[pos].sum()) - duals.lam * (1 + len(features))


def build_word_pool(positives, negatives, config=None):
    """
    Select the words the heuristic builds clauses from.

    Takes at most ``config.pool_size`` words by descending frequency in the positives (ties by
    feature id), then drops words present in fewer than ``min_doc_frac`` of the examples.
    The examples are positives and negatives (``filter_denominator='all'``) or the positives
    only (``'positives'``).

    :param positives: positive examples
    :param negatives: sampled negative examples
    :param config: :class:`PricingConfig`
    :return: ``list`` of feature ids, most frequent first
    """
    config = config or PricingConfig()
    P, Z = _matrices(positives, negatives)
    if P.shape[0] == 0:
        raise ValueError("The word pool needs at least one positive example")

    pos_freq = P.sum(axis=0)
    present = np.flatnonzero(pos_freq > 0)
    ranked = sorted(present.tolist(), key=lambda j: (-pos_freq[j], j))[:config.pool_size]

    if config.filter_denominator == 'positives':
        doc_freq, n = pos_freq, P.shape[0]
    else:
        doc_freq, n = pos_freq + Z.sum(axis=0), P.shape[0] + Z.shape[0]

    return [j for j in ranked if doc_freq[j] >= config.min_doc_frac * n]


def heuristic_pricing(positives, negatives, duals, config=None, pool=None):
    """
    Return every size-1 and size-2 clause over the word pool with reduced cost below threshold.

    Clauses are sorted by reduced cost ascending, ties by features.

    :param positives: positive examples
    :param negatives: negative examples
    :param duals: :class:`DualSnapshot`
    :param config: :class:`PricingConfig`
    :param pool: precomputed word pool; built with :func:`build_word_pool` when omitted
    :return: ``list`` of :class:`dnfcg.master.Clause`
    """
    config = config or PricingConfig()
    P, Z = _matrices(positives, negatives)
    if pool is None:
        pool = build_word_pool(P, Z, config)
    pool = np.asarray(pool, dtype=int)
    if pool.size == 0:
        return []

    Pp = P[:, pool].astype(float)
    Zp = Z[:, pool].astype(float)
    mu, lam = duals.mu, duals.lam

    found = []
    rc1 = Zp.sum(axis=0) - mu @ Pp - lam * 2
    for a in np.flatnonzero(rc1 < config.rc_threshold):
        found.append((float(rc1[a]), Clause((pool[a],))))

    if config.max_clause_size >= 2 and pool.size > 1:
        rc2 = Zp.T @ Zp - Pp.T @ (mu[:, None] * Pp) - lam * 3
        a_idx, b_idx = np.triu_indices(pool.size, k=1)
        values = rc2[a_idx, b_idx]
        for n in np.flatnonzero(values < config.rc_threshold):
            found.append((float(values[n]), Clause((pool[a_idx[n]], pool[b_idx[n]]))))

    found.sort(key=lambda t: (t[0], t[1].features))
    return [clause for _, clause in found]


def fixed_zero_features(positives):
    """
    Return the features absent from every positive example.

    A clause containing one of them covers no positive, so its reduced cost is never negative.

    :param positives: positive examples
    :return: ``frozenset`` of feature ids
    """
    P = as_matrix(positives)
    return frozenset(np.flatnonzero(~P.any(axis=0)).tolist())


def exact_pricing(positives, negatives, duals, config=None, exclude=()):
    """
    Find the clause of minimum reduced cost among all clauses of size <= ``max_clause_size``.

    Depth-first search over features; each node is a clause and its children extend it with a
    later feature. A descendant of a node with ``l`` features covering positives ``S`` has
    reduced cost at least ``-sum_{i in S} mu_i - lambda * (l + 2)``, and the subtree is pruned
    when that bound is not below ``min(incumbent, rc_threshold)``.

    In ``integer_scaled`` mode the search runs on duals multiplied by ``scale_factor`` and
    rounded down (mu and lambda alike, which can only increase the reduced cost), and every
    result is re-checked with the exact duals.

    :param positives: positive examples
    :param negatives: negative examples
    :param duals: :class:`DualSnapshot`
    :param config: :class:`PricingConfig`
    :param exclude: feature tuples never reported (the columns already in the RMP); their
        extensions are still searched
    :return: ``tuple`` (best :class:`dnfcg.master.Clause` or None, ``list`` of every improving
        clause found, sorted by exact reduced cost)
    """
    config = config or PricingConfig()
    if config.max_clause_size < 1:
        raise ValueError("max_clause_size must be >= 1")
    P, Z = _matrices(positives, negatives)
    n_features = P.shape[1]

    if config.scale_mode == 'integer_scaled':
        f = float(config.scale_factor)
        mu_w = np.floor(duals.mu * f)
        lam_w = float(np.floor(duals.lam * f))
        neg_w, thr_w = f, f * config.rc_threshold
    else:
        mu_w, lam_w, neg_w, thr_w = duals.mu, duals.lam, 1.0, config.rc_threshold

    allowed = np.arange(n_features)
    if config.fix_zero_features:
        allowed = np.setdiff1d(allowed, np.fromiter(fixed_zero_features(P), dtype=int))
    weight = mu_w @ P[:, allowed].astype(float) if allowed.size else np.zeros(0)
    order = allowed[np.lexsort((allowed, -weight))] if allowed.size else allowed

    position = {int(j): k for k, j in enumerate(order)}
    Pf = P.astype(float)
    Zf = Z.astype(float)
    depth_limit = config.max_clause_size

    best, best_rc = None, np.inf
    improving = []
    nodes = 0

    # Node: (features, covered positives, covered negatives, next position in order).
    stack = [((), np.arange(P.shape[0]), np.arange(Z.shape[0]), 0)]
    while stack:
        features, pos_idx, neg_idx, nxt = stack.pop()
        nodes += 1
        cand = order[nxt:]
        if cand.size == 0:
            continue

        sub_p = Pf[np.ix_(pos_idx, cand)]
        if config.fix_zero_features:
            keep = sub_p.sum(axis=0) > 0
            cand, sub_p = cand[keep], sub_p[:, keep]
            if cand.size == 0:
                continue

        length = len(features) + 1
        mucov = mu_w[pos_idx] @ sub_p
        negcov = Zf[np.ix_(neg_idx, cand)].sum(axis=0)
        rc = neg_w * negcov - mucov - lam_w * (1 + length)

        children = []
        for pos in range(cand.size):
            value = float(rc[pos])
            clause_features = features + (int(cand[pos]),)
            if value < thr_w and tuple(sorted(clause_features)) not in exclude:
                clause = Clause(clause_features)
                improving.append(clause)
                if value < best_rc:
                    best, best_rc = clause, value
            if length >= depth_limit:
                continue
            bound = -float(mucov[pos]) - lam_w * (length + 2)
            if bound >= min(best_rc, thr_w):
                continue
            children.append(clause_features)

        if not children:
            continue
        pushed = []
        for clause_features in children:
            j = clause_features[-1]
            col = Pf[pos_idx, j] > 0
            neg = Zf[neg_idx, j] > 0
            pushed.append((clause_features, pos_idx[col], neg_idx[neg], position[j] + 1))
        stack.extend(reversed(pushed))

    if config.scale_mode == 'integer_scaled':
        logger.debug("Scaled pricing: %d candidates before exact re-check", len(improving))

    # Re-evaluate with the exact duals; scaled values only ever overestimate.
    scored = []
    seen = set()
    for clause in improving:
        if clause.features in seen:
            continue
        seen.add(clause.features)
        value = reduced_cost(clause, duals, P, Z)
        if value < config.rc_threshold:
            scored.append((value, clause))
    scored.sort(key=lambda t: (t[0], t[1].features))

    if best is not None and best.features not in {c.features for _, c in scored}:
        best = None
    logger.debug("Exact pricing: %d nodes, %d improving clauses, best rc %s",
                 nodes, len(scored), best_rc if best is not None else 'none')

    return best, [clause for _, clause in scored]
