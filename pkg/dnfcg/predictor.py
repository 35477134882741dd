"""
Prediction: evaluate every label's DNF rule on a message and rank the labels that fire.
"""
from dataclasses import dataclass

import numpy as np

from .filters import clean_message
from .process import binarize
from .utils import coverage


@dataclass
class Candidate:
    """A label whose rule fired, with its score and the satisfied clauses explaining it."""

    label: str
    score: float
    satisfied_clauses: list


def satisfies(message_bits, clause):
    """
    Return True iff every feature of `clause` is set in `message_bits`.

    :param message_bits: boolean bit vector
    :param clause: :class:`dnfcg.master.Clause`
    :return: ``bool``
    """
    bits = np.asarray(message_bits, dtype=bool)
    return bool(bits[list(clause.features)].all())


def _bits(message, model):
    if isinstance(message, str):
        return binarize(clean_message(message), model.vocabulary)
    return np.asarray(message, dtype=bool)


def _clip(model, clip_negative_weights):
    if clip_negative_weights is None:
        return model.hyper.clip_negative_weights
    return clip_negative_weights


def candidate_list(message, model, clip_negative_weights=None):
    """
    Return the candidate list of a message: one :class:`Candidate` per label whose rule is TRUE.

    The message is cleaned and binarized with the model vocabulary (a bit vector is used as
    it is). A candidate's score is the sum of the weights of its satisfied clauses; with
    `clip_negative_weights` negative weights count as zero. Candidates are sorted by score
    descending, then label ascending.

    :param message: ``str`` raw message or bit vector
    :param model: :class:`dnfcg.trainer.ModelBundle`
    :param clip_negative_weights: ``bool``; defaults to the model's setting
    :return: ``list`` of :class:`Candidate`, empty when no rule fires
    """
    bits = _bits(message, model)
    clip = _clip(model, clip_negative_weights)

    candidates = []
    for label in model.labels:
        satisfied = [wc for wc in model.rules[label].clauses if satisfies(bits, wc.clause)]
        if not satisfied:
            continue
        weights = [max(wc.weight, 0.0) if clip else wc.weight for wc in satisfied]
        candidates.append(Candidate(label, float(sum(weights)), satisfied))

    candidates.sort(key=lambda c: (-c.score, c.label))
    return candidates


def top_k(candidates, k):
    """
    Keep the first `k` candidates of a sorted candidate list.

    :param candidates: ``list`` of :class:`Candidate`
    :param k: ``int`` >= 1
    :return: ``list`` of at most `k` candidates
    """
    if k < 1:
        raise ValueError("k must be >= 1, got %r" % k)
    return list(candidates[:k])


def explain(message, label, model):
    """
    Return the clauses of `label`'s rule satisfied by `message`, in rule order.

    An empty list answers why `label` is not a candidate. Unknown labels raise ``KeyError``.

    :param message: ``str`` raw message or bit vector
    :param label: ``str``
    :param model: :class:`dnfcg.trainer.ModelBundle`
    :return: ``list`` of :class:`dnfcg.trainer.WeightedClause`
    """
    rule = model.rule(label)
    bits = _bits(message, model)
    return [wc for wc in rule.clauses if satisfies(bits, wc.clause)]


def score_matrix(dataset, model, clip_negative_weights=None):
    """
    Evaluate every rule on every message of a binarized dataset at once.

    :param dataset: :class:`dnfcg.process.BinaryDataset` binarized with the model vocabulary
    :param model: :class:`dnfcg.trainer.ModelBundle`
    :param clip_negative_weights: ``bool``; defaults to the model's setting
    :return: ``tuple`` (labels, satisfied, scores); `satisfied` is a boolean and `scores` a
        float matrix of shape (n_messages, n_labels), columns in `labels` order
    """
    clip = _clip(model, clip_negative_weights)
    labels = model.labels
    X = dataset.X
    if X.shape[1] != len(model.vocabulary):
        raise ValueError("Dataset has %d features but the model vocabulary has %d" % (X.shape[1], len(model.vocabulary)))

    satisfied = np.zeros((X.shape[0], len(labels)), dtype=bool)
    scores = np.zeros((X.shape[0], len(labels)))
    for j, label in enumerate(labels):
        for wc in model.rules[label].clauses:
            hit = coverage(X, wc.clause.features)
            satisfied[:, j] |= hit
            scores[:, j] += hit * (max(wc.weight, 0.0) if clip else wc.weight)

    return labels, satisfied, scores


def ranked_labels(labels, satisfied, scores):
    """
    Turn the output of :func:`score_matrix` into one ranked label list per message.

    :return: ``list`` of ``list`` of ``str``, same order as :func:`candidate_list`
    """
    labels = np.asarray(labels, dtype=object)
    ranked = []
    for row_sat, row_score in zip(satisfied, scores):
        idx = np.flatnonzero(row_sat)
        # Labels are sorted, so the column index breaks score ties alphabetically.
        order = idx[np.lexsort((idx, -row_score[idx]))]
        ranked.append(labels[order].tolist())
    return ranked
