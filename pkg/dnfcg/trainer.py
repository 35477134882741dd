"""
One-vs-rest training of DNF rules by column generation.

For every label the positives are its training messages and the negatives a seeded sample
of the other labels' messages. The column generation loop alternates RMP solves and pricing
until no improving clause exists or the iteration cap is hit; the integer RMP over the
generated columns then gives the rule, and each clause is weighted by how much better it
fires on positives than on negatives.
"""
import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .master import Clause, build_rmp, add_columns, solve_rmp, solve_integer_rmp
from .pricing import DualSnapshot, PricingConfig, build_word_pool, heuristic_pricing, exact_pricing
from .process import FREQUENCY_MODES, BinaryDataset, build_vocabulary, binarize_corpus
from .utils import as_matrix, coverage, derive_seed, sha256_of_frame

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    """No label could be trained."""


@dataclass
class Hyperparameters:
    """
    Every knob of a training run.

    Defaults are the best configuration found on the validation split: false negatives cost
    4, a complexity budget of 30 per rule, 30 column generation iterations and 20 sampled
    negatives per positive, with clauses of at most 3 words.
    """

    fn_penalty: float = 4.0
    complexity_budget: int = 30
    max_cg_iters: int = 30
    neg_ratio: float = 20.0
    pricing: PricingConfig = field(default_factory=PricingConfig)
    exact_pricing: bool = True
    top_k: int = 4
    vocab_budget: int = 1000
    frequency: str = 'occurrences'
    min_label_count: int = 10
    seed: int = 0
    clip_negative_weights: bool = False

    def validate(self):
        if self.fn_penalty <= 0:
            raise ValueError("fn_penalty must be positive, got %r" % self.fn_penalty)
        if self.complexity_budget < 2:
            raise ValueError("complexity_budget must be >= 2, got %r" % self.complexity_budget)
        if self.max_cg_iters < 0:
            raise ValueError("max_cg_iters must be >= 0, got %r" % self.max_cg_iters)
        if self.neg_ratio < 1:
            raise ValueError("neg_ratio must be >= 1, got %r" % self.neg_ratio)
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1, got %r" % self.top_k)
        if self.vocab_budget < 1:
            raise ValueError("vocab_budget must be >= 1, got %r" % self.vocab_budget)
        if self.min_label_count < 1:
            raise ValueError("min_label_count must be >= 1, got %r" % self.min_label_count)
        if self.frequency not in FREQUENCY_MODES:
            raise ValueError("Unknown frequency mode %r (expected one of %s)" % (self.frequency, FREQUENCY_MODES))
        self.pricing.validate(self.complexity_budget)
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        pricing = PricingConfig(**d.pop('pricing', {}))
        return cls(pricing=pricing, **d)


@dataclass(frozen=True)
class WeightedClause:
    clause: Clause
    wp: float
    wn: float
    weight: float


@dataclass
class TrainingStats:
    """
    Per-label training statistics. Only the counts are persisted with a model.
    """

    iterations: int = 0
    columns_seeded: int = 0
    columns_heuristic: int = 0
    columns_exact: int = 0
    terminated_by_proof: bool = False
    avg_clause_length: float = 0.0
    integer_nodes: int = 0
    timings: dict = field(default_factory=dict, compare=False)

    @property
    def columns_added(self):
        return self.columns_seeded + self.columns_heuristic + self.columns_exact

    def to_dict(self):
        d = asdict(self)
        d.pop('timings')
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: v for k, v in d.items() if k != 'timings'})


@dataclass
class DnfRule:
    label: str
    clauses: list
    n_k: int
    n_positives: int
    train_objective: float
    lp_objective: float
    terminated_by_proof: bool
    stats: TrainingStats = field(default_factory=TrainingStats)

    @property
    def is_false(self):
        return not self.clauses


@dataclass
class ModelBundle:
    """The trained model: vocabulary, hyperparameters, one rule per label and provenance."""

    vocabulary: object
    hyper: Hyperparameters
    rules: dict
    provenance: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    @property
    def labels(self):
        return sorted(self.rules)

    def rule(self, label):
        try:
            return self.rules[label]
        except KeyError:
            raise KeyError("Unknown label %r; available labels: %s" % (label, ', '.join(self.labels)))

    def words(self, clause):
        return self.vocabulary.lookup(getattr(clause, 'features', clause))


def clause_weight(wp, wn, n_k):
    """
    Return the ranking weight ``(wp - wn) * n_k`` of a clause.

    :param wp: ``float`` fraction of positives satisfying the clause
    :param wn: ``float`` fraction of negatives satisfying the clause
    :param n_k: ``int`` number of training examples (positives and sampled negatives) of the label
    :return: ``float``
    """
    return (wp - wn) * n_k


def compute_clause_weights(clause, positives, negatives, n_k=None):
    """
    Compute the positive accuracy, negative accuracy and weight of `clause`.

    :param clause: :class:`dnfcg.master.Clause`
    :param positives: positive training examples
    :param negatives: negative training examples actually used
    :param n_k: ``int`` training size; defaults to ``len(positives) + len(negatives)``
    :return: :class:`WeightedClause`
    """
    P = as_matrix(positives)
    Z = as_matrix(negatives, n_features=P.shape[1])
    if n_k is None:
        n_k = P.shape[0] + Z.shape[0]
    if n_k <= 0:
        raise ValueError("n_k must be positive, got %r" % n_k)

    wp = float(coverage(P, clause.features).mean()) if P.shape[0] else 0.0
    wn = float(coverage(Z, clause.features).mean()) if Z.shape[0] else 0.0
    return WeightedClause(clause, wp, wn, clause_weight(wp, wn, n_k))


def negative_sample_index(labels, label, neg_ratio, seed):
    """
    Return the sorted row indices of the negatives sampled for `label`.

    :param labels: label of every training row
    :param label: ``str`` the positive label
    :param neg_ratio: ``float`` negatives per positive
    :param seed: ``int`` global seed; the label seed is derived from it
    :return: ``np.ndarray`` of ``int``
    """
    labels = np.asarray(labels, dtype=object)
    n_pos = int((labels == label).sum())
    if n_pos == 0:
        raise ValueError("Label %r has no positive example" % label)

    available = np.flatnonzero(labels != label)
    size = min(int(math.ceil(neg_ratio * n_pos)), available.size)
    rng = np.random.default_rng(derive_seed(seed, label))
    return np.sort(rng.choice(available, size=size, replace=False))


def sample_negatives(label, train, neg_ratio, seed):
    """
    Sample negatives for `label` uniformly without replacement.

    The sample size is ``min(ceil(neg_ratio * #positives), #available negatives)`` and the
    sample only depends on `seed` and `label`.

    :param label: ``str``
    :param train: :class:`dnfcg.process.BinaryDataset` or list of ``BinaryExample``
    :param neg_ratio: ``float``
    :param seed: ``int``
    :return: ``list`` of ``BinaryExample`` in training order
    """
    if not isinstance(train, BinaryDataset):
        train = BinaryDataset(as_matrix(train), [e.label for e in train], [e.id for e in train])
    index = negative_sample_index(train.labels, label, neg_ratio, seed)
    return [train[i] for i in index]


def train_label(positives, negatives, hyper=None, label=None):
    """
    Learn the DNF rule of one label.

    Round 0 solves the RMP without clauses and seeds it with the heuristic's clauses. Each
    iteration then solves the RMP once and prices once: the heuristic first, exact pricing only
    when the heuristic finds nothing new. The loop stops when no new improving clause exists
    (a proof of LP optimality when exact pricing ran) or after ``max_cg_iters`` iterations.

    :param positives: positive examples
    :param negatives: sampled negative examples
    :param hyper: :class:`Hyperparameters`
    :param label: ``str`` used for naming and logging
    :return: :class:`DnfRule`
    """
    hyper = (hyper or Hyperparameters()).validate()
    P = as_matrix(positives)
    Z = as_matrix(negatives, n_features=P.shape[1])
    config = hyper.pricing
    stats = TrainingStats()
    timings = {'lp': 0.0, 'heuristic': 0.0, 'exact': 0.0, 'integer': 0.0}
    started = time.perf_counter()

    def timed(key, fn, *args):
        t0 = time.perf_counter()
        result = fn(*args)
        timings[key] += time.perf_counter() - t0
        return result

    pool = build_word_pool(P, Z, config)

    empty = build_rmp(P, Z, hyper.fn_penalty, hyper.complexity_budget)
    lam, mu, _ = timed('lp', solve_rmp, empty)
    seeds = timed('heuristic', heuristic_pricing, P, Z, DualSnapshot(lam, mu), config, pool)
    state = build_rmp(P, Z, hyper.fn_penalty, hyper.complexity_budget, seed_columns=seeds)
    stats.columns_seeded = len(state.columns)

    stale = True
    for _ in range(hyper.max_cg_iters):
        lam, mu, objective = timed('lp', solve_rmp, state)
        stale = False
        stats.iterations += 1
        duals = DualSnapshot(lam, mu)

        found = timed('heuristic', heuristic_pricing, P, Z, duals, config, pool)
        added = add_columns(state, found)
        if added:
            stats.columns_heuristic += added
            stale = True
            logger.debug("%s: iteration %d, LP %.6g, heuristic added %d", label, stats.iterations, objective, added)
            continue

        if not hyper.exact_pricing:
            break

        _, found = timed('exact', exact_pricing, P, Z, duals, config, state.keys)
        added = add_columns(state, found)
        if added:
            stats.columns_exact += added
            stale = True
            logger.debug("%s: iteration %d, LP %.6g, exact added %d", label, stats.iterations, objective, added)
            continue

        stats.terminated_by_proof = True
        break

    if stale:
        timed('lp', solve_rmp, state)
        if hyper.max_cg_iters:
            warnings.warn("Column generation for label %r stopped at the iteration cap (%d)" % (label, hyper.max_cg_iters))

    solution = timed('integer', solve_integer_rmp, state)
    stats.integer_nodes = solution.nodes

    n_k = P.shape[0] + Z.shape[0]
    clauses = [compute_clause_weights(c, P, Z, n_k) for c in solution.selected]
    stats.avg_clause_length = float(np.mean([len(c) for c in solution.selected])) if clauses else 0.0

    timings['total'] = time.perf_counter() - started
    stats.timings = timings

    logger.info("%s: %d clauses, objective %g (LP %.6g), %d iterations, %d columns, %s",
                label, len(clauses), solution.objective, state.lp_objective, stats.iterations,
                len(state.columns), 'proved' if stats.terminated_by_proof else 'not proved')

    return DnfRule(
        label=label,
        clauses=clauses,
        n_k=n_k,
        n_positives=P.shape[0],
        train_objective=solution.objective,
        lp_objective=state.lp_objective,
        terminated_by_proof=stats.terminated_by_proof,
        stats=stats,
    )


def _train_job(label, positives, negatives, hyper):
    return train_label(positives, negatives, hyper, label=label)


def train_all(train_df, hyper=None, workers=1):
    """
    Train one rule per label of a cleaned training corpus.

    Labels are independent and may train in parallel processes; the result does not depend on
    `workers`. A label whose training fails is recorded in ``ModelBundle.failures`` and the
    others carry on; :class:`TrainingError` is raised only when every label fails.

    :param train_df: Pandas ``DataFrame`` training corpus (cleaned and filtered)
    :param hyper: :class:`Hyperparameters`
    :param workers: ``int`` number of worker processes
    :return: :class:`ModelBundle`
    """
    hyper = (hyper or Hyperparameters()).validate()
    if train_df.shape[0] == 0:
        raise ValueError("Cannot train on an empty corpus")

    vocab = build_vocabulary(train_df, hyper.vocab_budget, hyper.frequency)
    data = binarize_corpus(train_df, vocab)
    labels = sorted(set(data.labels))
    logger.info("Training %d labels on %d messages, %d features", len(labels), len(data), len(vocab))

    jobs = {}
    for label in labels:
        index = negative_sample_index(data.labels, label, hyper.neg_ratio, hyper.seed)
        if index.size == 0:
            warnings.warn("Label %r has no negative example to sample" % label)
        jobs[label] = (data.X[data.labels == label], data.X[index])

    rules, failures = {}, {}
    if workers > 1 and len(labels) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {label: executor.submit(_train_job, label, P, Z, hyper) for label, (P, Z) in jobs.items()}
            for label in labels:
                try:
                    rules[label] = futures[label].result()
                except Exception as e:
                    failures[label] = '%s: %s' % (type(e).__name__, e)
    else:
        for label in labels:
            P, Z = jobs[label]
            try:
                rules[label] = _train_job(label, P, Z, hyper)
            except Exception as e:
                failures[label] = '%s: %s' % (type(e).__name__, e)

    for label, message in failures.items():
        logger.error("Training failed for label %r: %s", label, message)
    if not rules:
        raise TrainingError("Training failed for every label (%d)" % len(labels))

    provenance = {
        'dataset_sha256': sha256_of_frame(train_df),
        'seed': hyper.seed,
        'version': __version__,
    }
    return ModelBundle(vocab, hyper, rules, provenance, failures)
