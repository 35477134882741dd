"""
Command-line interface::

    dnfcg train --config run.ini --out model.json [--splits-dir DIR]
    dnfcg predict --model model.json (--message TEXT | --input FILE) [--top-k K]
    dnfcg evaluate --model model.json --data test.csv [--k-sweep N] [--top-k K] [--json]
    dnfcg inspect --model model.json (--label LABEL | --all)
    dnfcg generate --out corpus.csv [--labels 3] [--noise 0.1] ...

Exit codes: 0 success, 1 runtime failure, 2 usage, configuration, model or corpus error.
"""
import argparse
import logging
import os
import sys

import pandas as pd

from . import __version__
from .analysis import (evaluate, format_report, report_json, restrict_to_frequent_labels,
                       training_overview, training_summary)
from .filters import clean_corpus, filter_rare_labels
from .io import (ConfigError, CorpusFormatError, ModelFormatError, load_corpus, load_model,
                 read_config, save_model, write_corpus)
from .predictor import candidate_list, top_k
from .process import split_corpus
from .synth import generate, random_planted_spec
from .trainer import train_all
from .utils import format_clause, format_rule

logger = logging.getLogger(__name__)


def positive_int(value):
    """argparse type for counts that must be at least 1."""
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("invalid int value: %r" % value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1, got %d" % n)
    return n


def cmd_train(args):
    config = read_config(args.config)
    workers = args.workers or config.workers

    df = load_corpus(config.corpus, config.format)
    df = clean_corpus(df)
    df = filter_rare_labels(df, config.hyper.min_label_count)
    train, valid, test = split_corpus(df, config.split, config.split_seed)
    logger.info("Split %d records into %d / %d / %d", df.shape[0], train.shape[0], valid.shape[0], test.shape[0])

    if args.splits_dir:
        os.makedirs(args.splits_dir, exist_ok=True)
        for name, part in (('train', train), ('valid', valid), ('test', test)):
            write_corpus(part, os.path.join(args.splits_dir, '%s.csv' % name))

    model = train_all(train, config.hyper, workers=workers)
    save_model(model, args.out)

    summary = training_summary(model)
    columns = ['n_positives', 'clauses', 'avg_clause_length', 'iterations', 'columns_added',
               'terminated_by_proof', 'train_objective', 'time_total']
    print(summary.loc[:, [c for c in columns if c in summary.columns]].to_string())
    print()
    for key, value in training_overview(summary).items():
        print('%-22s: %s' % (key, '%.3f' % value if isinstance(value, float) else value))

    for label, message in sorted(model.failures.items()):
        print('FAILED %s: %s' % (label, message), file=sys.stderr)
    print('Model written to %s' % args.out)
    return 0


def _format_candidate(rank, candidate, model):
    clauses = format_rule([model.words(wc.clause) for wc in candidate.satisfied_clauses])
    return '  %d. %-8s %10.2f  %s' % (rank, candidate.label, candidate.score, clauses)


def cmd_predict(args):
    model = load_model(args.model)
    k = args.top_k or model.hyper.top_k

    if args.message is not None:
        messages = [args.message]
    else:
        with open(args.input, encoding='utf-8') as fh:
            messages = [line.rstrip('\n') for line in fh if line.strip()]

    clip = True if args.clip_negative_weights else None
    blocks = []
    for message in messages:
        lines = ['Message: %s' % message]
        candidates = top_k(candidate_list(message, model, clip), k)
        if not candidates:
            lines.append('  no candidates')
        for rank, candidate in enumerate(candidates, start=1):
            lines.append(_format_candidate(rank, candidate, model))
        blocks.append('\n'.join(lines))

    print('\n\n'.join(blocks))
    return 0


def cmd_evaluate(args):
    model = load_model(args.model)
    df = load_corpus(args.data, args.format)
    if args.min_train_count:
        df = restrict_to_frequent_labels(df, model, args.min_train_count)

    report = evaluate(df, model, k=args.top_k, k_sweep_max=args.k_sweep)
    text = report_json(report) if args.json else format_report(report)
    print(text)

    if args.out:
        with open(args.out, 'w', encoding='utf-8') as fh:
            fh.write(text + '\n')
    return 0


def _rule_table(rule, model):
    rows = [
        {
            'Clause': format_clause(model.words(wc.clause)),
            'Positive accuracy': '%.3f' % wc.wp,
            'Negative accuracy': '%.3f' % wc.wn,
            'W*diff': '%.2f' % wc.weight,
        }
        for wc in rule.clauses
    ]
    return pd.DataFrame(rows).to_string(index=False)


def cmd_inspect(args):
    model = load_model(args.model)
    labels = model.labels if args.all else [args.label]

    blocks = []
    for label in labels:
        rule = model.rule(label)
        lines = [
            'Label %s: %s' % (label, format_rule([model.words(wc.clause) for wc in rule.clauses])),
            'n_k=%d  positives=%d  objective=%g  lp=%g  %s' % (
                rule.n_k, rule.n_positives, rule.train_objective, rule.lp_objective,
                'proved optimal LP' if rule.terminated_by_proof else 'iteration cap'),
        ]
        if rule.is_false:
            lines.append('no clauses (constant FALSE rule)')
        else:
            lines.append(_rule_table(rule, model))
        blocks.append('\n'.join(lines))

    print('\n\n'.join(blocks))
    return 0


def cmd_generate(args):
    spec = random_planted_spec(
        n_labels=args.labels,
        clauses_per_label=args.clauses_per_label,
        clause_size=args.clause_size,
        vocabulary_size=args.vocabulary,
        samples_per_label=args.samples,
        noise_rate=args.noise,
        seed=args.seed,
    )
    df = generate(spec)
    write_corpus(df, args.out, args.format)
    for label in spec.labels:
        print('%s: %s' % (label, format_rule(spec.rules[label])))
    print('%d messages written to %s' % (df.shape[0], args.out))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog='dnfcg', description='Learn and apply DNF rules for short-text classification.')
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v for INFO, -vv for DEBUG logging')
    sub = parser.add_subparsers(dest='command')

    p = sub.add_parser('train', help='train one rule per label from a configuration file')
    p.add_argument('--config', required=True)
    p.add_argument('--out', required=True, help='model file to write')
    p.add_argument('--splits-dir', help='write the train/valid/test splits here')
    p.add_argument('--workers', type=positive_int, help='worker processes (overrides the configuration)')
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('predict', help='rank candidate labels for messages')
    p.add_argument('--model', required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument('--message')
    group.add_argument('--input', help='file with one message per line')
    p.add_argument('--top-k', type=positive_int)
    p.add_argument('--clip-negative-weights', action='store_true')
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser('evaluate', help='accuracy and candidate list lengths on a labeled corpus')
    p.add_argument('--model', required=True)
    p.add_argument('--data', required=True)
    p.add_argument('--format', choices=('csv', 'jsonl'))
    p.add_argument('--k-sweep', type=positive_int, help='report accuracy for K = 1..N')
    p.add_argument('--top-k', type=positive_int, help='truncate candidate lists to K')
    p.add_argument('--min-train-count', type=positive_int, help='only labels with at least this many training positives')
    p.add_argument('--json', action='store_true')
    p.add_argument('--out', help='also write the report to this file')
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser('inspect', help='print rules with their clause weights')
    p.add_argument('--model', required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument('--label')
    group.add_argument('--all', action='store_true')
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser('generate', help='write a planted-rule corpus')
    p.add_argument('--out', required=True)
    p.add_argument('--format', choices=('csv', 'jsonl'))
    p.add_argument('--labels', type=int, default=3)
    p.add_argument('--samples', type=int, default=500, help='messages per label')
    p.add_argument('--vocabulary', type=int, default=50)
    p.add_argument('--clause-size', type=int, default=2)
    p.add_argument('--clauses-per-label', type=int, default=1)
    p.add_argument('--noise', type=float, default=0.0)
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code

    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')

    if args.command is None:
        parser.print_help()
        return 2

    try:
        return args.func(args)
    except (ConfigError, ModelFormatError, CorpusFormatError, FileNotFoundError) as e:
        print('error: %s' % e, file=sys.stderr)
        return 2
    except KeyError as e:
        print('error: %s' % (e.args[0] if e.args else e), file=sys.stderr)
        return 2
    except Exception as e:
        logger.debug('Command failed', exc_info=True)
        print('error: %s: %s' % (type(e).__name__, e), file=sys.stderr)
        return 1
