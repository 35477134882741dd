"""
Evaluation of trained models: candidate-list accuracy, list lengths, K sweeps and the
tables summarizing training runs and hyperparameter sweeps.
"""
import itertools
import json
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np
import pandas as pd

from .filters import clean_corpus
from .predictor import score_matrix, ranked_labels
from .pricing import PricingConfig
from .process import BinaryDataset, binarize_corpus
from .trainer import Hyperparameters, train_all


@dataclass
class EvalReport:
    accuracy: float
    max_list_len: int
    avg_list_len: float
    per_k_accuracy: dict = field(default_factory=dict)
    n_evaluated: int = 0
    n_multi_candidate: int = 0
    untruncated_accuracy: float = None
    k: int = None

    def to_dict(self):
        return {
            'accuracy': self.accuracy,
            'max_list_len': self.max_list_len,
            'avg_list_len': self.avg_list_len,
            'per_k_accuracy': {str(k): v for k, v in sorted(self.per_k_accuracy.items())},
            'n_evaluated': self.n_evaluated,
            'n_multi_candidate': self.n_multi_candidate,
            'untruncated_accuracy': self.untruncated_accuracy,
            'k': self.k,
        }


def as_dataset(data, model):
    """
    Return `data` as a :class:`dnfcg.process.BinaryDataset` over the model vocabulary.

    A ``DataFrame`` is cleaned (cleaning is idempotent) and binarized; a dataset is returned as is.
    """
    if isinstance(data, BinaryDataset):
        return data
    return binarize_corpus(clean_corpus(data, drop_empty=False), model.vocabulary)


def _ranks(dataset, model, clip_negative_weights=None):
    labels, satisfied, scores = score_matrix(dataset, model, clip_negative_weights)
    ranked = ranked_labels(labels, satisfied, scores)

    # 1-based position of the true label in each candidate list; inf when absent.
    positions = np.full(len(dataset), np.inf)
    for i, (truth, cands) in enumerate(zip(dataset.labels, ranked)):
        if truth in cands:
            positions[i] = cands.index(truth) + 1
    lengths = np.array([len(c) for c in ranked], dtype=int)
    return positions, lengths


def k_sweep(dataset, model, k_max, clip_negative_weights=None):
    """
    Return the accuracy of candidate lists truncated to each ``k`` in 1..`k_max`.

    :param dataset: :class:`dnfcg.process.BinaryDataset` or corpus ``DataFrame``
    :param model: :class:`dnfcg.trainer.ModelBundle`
    :param k_max: ``int`` >= 1
    :return: ``dict`` k -> accuracy, nondecreasing in k
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1, got %r" % k_max)
    dataset = as_dataset(dataset, model)
    if len(dataset) == 0:
        raise ValueError("Cannot evaluate an empty dataset")
    positions, _ = _ranks(dataset, model, clip_negative_weights)
    return {k: float((positions <= k).mean()) for k in range(1, k_max + 1)}


def evaluate(dataset, model, k=None, k_sweep_max=None, clip_negative_weights=None):
    """
    Evaluate a model on a labeled dataset.

    A message counts as a success when its true label is in its candidate list, truncated to
    the first `k` candidates when `k` is given. List lengths are those of the lists scored
    (untruncated when `k` is absent).

    :param dataset: :class:`dnfcg.process.BinaryDataset` or corpus ``DataFrame``
    :param model: :class:`dnfcg.trainer.ModelBundle`
    :param k: ``int`` candidate list length, or None for untruncated lists
    :param k_sweep_max: ``int``; fills ``per_k_accuracy`` for k in 1..k_sweep_max
    :return: :class:`EvalReport`
    """
    dataset = as_dataset(dataset, model)
    if len(dataset) == 0:
        raise ValueError("Cannot evaluate an empty dataset")
    if k is not None and k < 1:
        raise ValueError("k must be >= 1, got %r" % k)

    positions, lengths = _ranks(dataset, model, clip_negative_weights)
    untruncated = float(np.isfinite(positions).mean())

    if k is None:
        accuracy, scored = untruncated, lengths
    else:
        accuracy, scored = float((positions <= k).mean()), np.minimum(lengths, k)

    per_k = {}
    if k_sweep_max:
        if k_sweep_max < 1:
            raise ValueError("k_sweep_max must be >= 1, got %r" % k_sweep_max)
        per_k = {kk: float((positions <= kk).mean()) for kk in range(1, k_sweep_max + 1)}

    return EvalReport(
        accuracy=accuracy,
        max_list_len=int(scored.max()),
        avg_list_len=float(scored.mean()),
        per_k_accuracy=per_k,
        n_evaluated=len(dataset),
        n_multi_candidate=int((lengths > 1).sum()),
        untruncated_accuracy=untruncated,
        k=k,
    )


def restrict_to_frequent_labels(dataset, model, min_train_count):
    """
    Keep the messages whose true label had at least `min_train_count` positive training examples.

    Labels unknown to the model are dropped as well.

    :param dataset: :class:`dnfcg.process.BinaryDataset` or corpus ``DataFrame``
    :param model: :class:`dnfcg.trainer.ModelBundle`
    :param min_train_count: ``int``
    :return: same type as `dataset`
    """
    keep = {l for l, r in model.rules.items() if r.n_positives >= min_train_count}

    if isinstance(dataset, BinaryDataset):
        mask = np.array([l in keep for l in dataset.labels], dtype=bool)
        return dataset.subset(mask)

    mask = [l in keep for l in dataset['label'].values]
    return dataset.iloc[mask, :].reset_index(drop=True)


def training_summary(model):
    """
    Return a ``DataFrame`` of per-label training statistics, indexed by label.

    Timing columns are present when the rules were trained in this process (timings are not
    stored in model files).

    :param model: :class:`dnfcg.trainer.ModelBundle`
    :return: Pandas ``DataFrame``
    """
    rows = []
    for label in model.labels:
        rule = model.rules[label]
        s = rule.stats
        row = {
            'label': label,
            'n_positives': rule.n_positives,
            'n_k': rule.n_k,
            'clauses': len(rule.clauses),
            'avg_clause_length': s.avg_clause_length,
            'iterations': s.iterations,
            'columns_seeded': s.columns_seeded,
            'columns_heuristic': s.columns_heuristic,
            'columns_exact': s.columns_exact,
            'columns_added': s.columns_added,
            'terminated_by_proof': rule.terminated_by_proof,
            'train_objective': rule.train_objective,
            'lp_objective': rule.lp_objective,
        }
        for key, value in sorted(s.timings.items()):
            row['time_%s' % key] = value
        rows.append(row)

    return pd.DataFrame(rows).set_index('label') if rows else pd.DataFrame()


def training_overview(summary):
    """
    Aggregate a :func:`training_summary` table into one line of averages.

    :param summary: Pandas ``DataFrame`` from :func:`training_summary`
    :return: ``dict``
    """
    if summary.shape[0] == 0:
        return {'labels': 0}
    overview = {
        'labels': int(summary.shape[0]),
        'solved_by_proof': int(summary['terminated_by_proof'].sum()),
        'avg_columns_heuristic': float(summary['columns_heuristic'].mean()),
        'avg_columns_exact': float(summary['columns_exact'].mean()),
        'avg_columns_added': float(summary['columns_added'].mean()),
        'avg_clause_length': float(summary['avg_clause_length'].mean()),
    }
    if 'time_total' in summary.columns:
        overview['avg_time_total'] = float(summary['time_total'].mean())
    return overview


def dataset_summary(datasets, model, k=None, min_train_count=None):
    """
    Tabulate candidate-list statistics for several datasets (e.g. train, valid, test).

    :param datasets: ``dict`` name -> dataset (``BinaryDataset`` or ``DataFrame``)
    :param model: :class:`dnfcg.trainer.ModelBundle`
    :param k: ``int`` candidate list length for the truncated accuracy; defaults to the model's top_k
    :param min_train_count: ``int``; when set, only labels with that many training positives count
    :return: Pandas ``DataFrame`` indexed by dataset name
    """
    k = k or model.hyper.top_k
    rows = []
    for name, data in datasets.items():
        data = as_dataset(data, model)
        if min_train_count is not None:
            data = restrict_to_frequent_labels(data, model, min_train_count)
        if len(data) == 0:
            continue
        full = evaluate(data, model)
        top = evaluate(data, model, k=k)
        rows.append({
            'dataset': name,
            'messages': full.n_evaluated,
            'multi_candidate': full.n_multi_candidate,
            'max_list_len': full.max_list_len,
            'avg_list_len': full.avg_list_len,
            'accuracy': full.accuracy,
            'accuracy_at_k': top.accuracy,
        })
    return pd.DataFrame(rows).set_index('dataset') if rows else pd.DataFrame()


def _with_params(base, params):
    pricing_keys = {f.name for f in fields(PricingConfig)}
    pricing = {k: v for k, v in params.items() if k in pricing_keys}
    other = {k: v for k, v in params.items() if k not in pricing_keys}
    hyper = replace(base, **other)
    if pricing:
        hyper = replace(hyper, pricing=replace(base.pricing, **pricing))
    return hyper.validate()


def hyperparameter_sweep(train_df, valid_df, grid, base=None, workers=1):
    """
    Train one model per combination of `grid` and report accuracy and list lengths.

    Grid keys are :class:`dnfcg.trainer.Hyperparameters` or :class:`dnfcg.pricing.PricingConfig`
    field names.

    :param train_df: Pandas ``DataFrame`` training corpus
    :param valid_df: Pandas ``DataFrame`` validation corpus
    :param grid: ``dict`` name -> list of values
    :param base: :class:`dnfcg.trainer.Hyperparameters` for the remaining fields
    :param workers: ``int`` worker processes per training run
    :return: Pandas ``DataFrame``, one row per combination
    """
    base = base or Hyperparameters()
    names = sorted(grid)
    rows = []
    for values in itertools.product(*[grid[n] for n in names]):
        params = dict(zip(names, values))
        hyper = _with_params(base, params)

        t0 = time.perf_counter()
        model = train_all(train_df, hyper, workers=workers)
        elapsed = time.perf_counter() - t0

        row = dict(params)
        row['time'] = elapsed
        for name, data in (('train', train_df), ('valid', valid_df)):
            report = evaluate(data, model)
            row['%s_accuracy' % name] = report.accuracy
            row['%s_max_list_len' % name] = report.max_list_len
            row['%s_avg_list_len' % name] = report.avg_list_len
        rows.append(row)

    return pd.DataFrame(rows)


def report_frame(report):
    """Return the K sweep of an :class:`EvalReport` as a ``DataFrame`` with columns k, accuracy."""
    items = sorted(report.per_k_accuracy.items())
    return pd.DataFrame({'k': [k for k, _ in items], 'accuracy': [a for _, a in items]})


def report_json(report):
    return json.dumps(report.to_dict(), indent=2, sort_keys=True)


def format_report(report):
    """
    Render an :class:`EvalReport` as aligned plain text.

    :param report: :class:`EvalReport`
    :return: ``str``
    """
    accuracy_name = "Accuracy (K=%d)" % report.k if report.k else "Accuracy"
    rows = [
        ("Messages evaluated", "%d" % report.n_evaluated),
        (accuracy_name, "%.4f" % report.accuracy),
        ("List length max", "%d" % report.max_list_len),
        ("List length avg", "%.2f" % report.avg_list_len),
        ("Multi-candidate", "%d" % report.n_multi_candidate),
    ]
    lines = ["%-19s: %s" % row for row in rows]
    if report.per_k_accuracy:
        lines.append('')
        lines.append(report_frame(report).to_string(index=False, float_format=lambda v: '%.4f' % v))
    return '\n'.join(lines)
