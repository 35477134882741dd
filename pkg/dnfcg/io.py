"""
Reading and writing corpora, run configurations and model files.
"""
import configparser
import json
import os
import re
from dataclasses import dataclass

import pandas as pd

from .master import Clause
from .pricing import PricingConfig
from .process import Vocabulary
from .trainer import DnfRule, Hyperparameters, ModelBundle, TrainingStats, WeightedClause

FORMAT_VERSION = 1
CORPUS_FORMATS = ('csv', 'jsonl')
CORPUS_COLUMNS = ['message', 'label']


class CorpusFormatError(ValueError):

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class ModelFormatError(ValueError):
    pass


class ConfigError(ValueError):
    pass


def corpus_format(path, format=None):
    """
    Return the corpus format of `path`: `format` when given, otherwise from the file suffix.
    """
    if format is None:
        suffix = os.path.splitext(str(path))[1].lower()
        format = {'.csv': 'csv', '.jsonl': 'jsonl', '.json': 'jsonl'}.get(suffix)
        if format is None:
            raise ValueError("Cannot infer the corpus format of %s; pass one of %s" % (path, CORPUS_FORMATS))
    if format not in CORPUS_FORMATS:
        raise ValueError("Unknown corpus format %r (expected one of %s)" % (format, CORPUS_FORMATS))
    return format


def _empty_corpus():
    return pd.DataFrame({'message': pd.Series([], dtype=object), 'label': pd.Series([], dtype=object)})


def _read_csv(f):
    with open(f, encoding='utf-8') as fh:
        if not fh.read().strip():
            return _empty_corpus()

    try:
        df = pd.read_csv(f, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.ParserError as e:
        match = re.search(r'line (\d+)', str(e))
        raise CorpusFormatError(str(e), line=int(match.group(1)) if match else None)

    missing = [c for c in CORPUS_COLUMNS if c not in df.columns]
    if missing:
        raise CorpusFormatError("missing column(s) %s in header" % ', '.join(missing), line=1)

    df = df.loc[:, CORPUS_COLUMNS]
    bad = df.isna().any(axis=1).values
    if bad.any():
        # Line 1 is the header.
        first = int(bad.nonzero()[0][0])
        raise CorpusFormatError("record has no %s field" % ' / '.join(df.columns[df.iloc[first].isna()]), line=first + 2)

    return df.reset_index(drop=True)


def _read_jsonl(f):
    records = []
    with open(f, encoding='utf-8') as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusFormatError("invalid JSON (%s)" % e.msg, line=n)
            if not isinstance(record, dict):
                raise CorpusFormatError("expected a JSON object", line=n)
            for key in CORPUS_COLUMNS:
                if not isinstance(record.get(key), str):
                    raise CorpusFormatError("missing or non-string %r field" % key, line=n)
            records.append((record['message'], record['label']))

    if not records:
        return _empty_corpus()
    return pd.DataFrame(records, columns=CORPUS_COLUMNS)


def load_corpus(f, format=None):
    """
    Load a labeled corpus, records in file order.

    CSV files need a ``message,label`` header; JSONL files hold one object per line with string
    fields ``message`` and ``label``. Other columns or fields are ignored. An empty file gives
    an empty corpus. Duplicate records are kept.

    :param f: path of the corpus file (UTF-8)
    :param format: ``str`` 'csv' or 'jsonl'; inferred from the suffix when omitted
    :return: Pandas ``DataFrame`` with columns message, label
    """
    format = corpus_format(f, format)
    if format == 'csv':
        return _read_csv(f)
    return _read_jsonl(f)


def write_corpus(df, f, format=None):
    """
    Write a corpus as CSV or JSONL (UTF-8).

    :param df: Pandas ``DataFrame`` with columns message, label
    :param f: destination path
    :param format: ``str`` 'csv' or 'jsonl'; inferred from the suffix when omitted
    """
    format = corpus_format(f, format)
    df = df.loc[:, CORPUS_COLUMNS]
    if format == 'csv':
        df.to_csv(f, index=False, encoding='utf-8')
        return

    with open(f, 'w', encoding='utf-8') as fh:
        for message, label in df.itertuples(index=False):
            fh.write(json.dumps({'message': message, 'label': label}, ensure_ascii=False) + '\n')


@dataclass
class RunConfig:
    corpus: str
    format: str
    hyper: Hyperparameters
    split: tuple = (0.6, 0.2, 0.2)
    split_seed: int = 0
    workers: int = 1


def _bool(value):
    v = value.strip().lower()
    if v in ('1', 'true', 'yes', 'on'):
        return True
    if v in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError("not a boolean: %r" % value)


def _ratios(value):
    return tuple(float(v) for v in value.split(','))


CONFIG_SCHEMA = {
    'data': {'corpus': str, 'format': str},
    'preprocess': {'min_label_count': int, 'vocab_budget': int, 'frequency': str,
                   'split': _ratios, 'split_seed': int},
    'train': {'fn_penalty': float, 'complexity_budget': int, 'max_cg_iters': int,
              'neg_ratio': float, 'seed': int, 'workers': int},
    'pricing': {'max_clause_size': int, 'pool_size': int, 'min_doc_frac': float,
                'rc_threshold': float, 'scale_mode': str, 'scale_factor': int,
                'filter_denominator': str, 'fix_zero_features': _bool, 'exact_pricing': _bool},
    'predict': {'top_k': int, 'clip_negative_weights': _bool},
}

WORKERS_ENV = 'DNFCG_WORKERS'


def read_config(f, environ=None):
    """
    Read an INI run configuration.

    Sections are ``[data]``, ``[preprocess]``, ``[train]``, ``[pricing]`` and ``[predict]``;
    unknown sections or keys are errors. The corpus path is relative to the configuration
    file. The ``DNFCG_WORKERS`` environment variable overrides ``[train] workers``.

    :param f: path of the configuration file
    :param environ: mapping used instead of ``os.environ``
    :return: :class:`RunConfig`
    """
    environ = os.environ if environ is None else environ
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(f, encoding='utf-8') as fh:
            parser.read_file(fh)
    except configparser.Error as e:
        raise ConfigError("Cannot parse %s: %s" % (f, e))

    values = {}
    for section in parser.sections():
        if section not in CONFIG_SCHEMA:
            raise ConfigError("Unknown section [%s]" % section)
        for key, raw in parser.items(section):
            convert = CONFIG_SCHEMA[section].get(key)
            if convert is None:
                raise ConfigError("Unknown key %r in section [%s]" % (key, section))
            try:
                values[key] = convert(raw)
            except ValueError as e:
                raise ConfigError("Bad value for [%s] %s: %s" % (section, key, e))

    if 'corpus' not in values:
        raise ConfigError("Missing [data] corpus")
    corpus = os.path.join(os.path.dirname(os.path.abspath(f)), values.pop('corpus'))
    try:
        format = corpus_format(corpus, values.pop('format', None))
    except ValueError as e:
        raise ConfigError(str(e))

    split = values.pop('split', (0.6, 0.2, 0.2))
    if len(split) != 3 or any(r <= 0 for r in split) or abs(sum(split) - 1.0) > 1e-9:
        raise ConfigError("[preprocess] split must be three positive fractions summing to 1, got %s" % (split,))

    workers = values.pop('workers', 1)
    if environ.get(WORKERS_ENV):
        try:
            workers = int(environ[WORKERS_ENV])
        except ValueError:
            raise ConfigError("%s must be an integer, got %r" % (WORKERS_ENV, environ[WORKERS_ENV]))
    if workers < 1:
        raise ConfigError("workers must be >= 1, got %r" % workers)

    pricing_keys = set(CONFIG_SCHEMA['pricing']) - {'exact_pricing'}
    pricing = PricingConfig(**{k: values.pop(k) for k in list(values) if k in pricing_keys})
    split_seed = values.pop('split_seed', values.get('seed', 0))

    hyper = Hyperparameters(pricing=pricing, **values)
    try:
        hyper.validate()
    except ValueError as e:
        raise ConfigError(str(e))

    return RunConfig(corpus, format, hyper, split, split_seed, workers)


def model_to_dict(model):
    """Return the JSON-ready structure of a :class:`dnfcg.trainer.ModelBundle`."""
    rules = {}
    for label in model.labels:
        rule = model.rules[label]
        rules[label] = {
            'label': rule.label,
            'n_k': int(rule.n_k),
            'n_positives': int(rule.n_positives),
            'train_objective': float(rule.train_objective),
            'lp_objective': float(rule.lp_objective),
            'cg_terminated_by_proof': bool(rule.terminated_by_proof),
            'stats': rule.stats.to_dict(),
            'clauses': [
                {
                    'words': model.words(wc.clause),
                    'features': list(wc.clause.features),
                    'positive_accuracy': float(wc.wp),
                    'negative_accuracy': float(wc.wn),
                    'weight': float(wc.weight),
                }
                for wc in rule.clauses
            ],
        }

    return {
        'format_version': FORMAT_VERSION,
        'vocabulary': {'words': list(model.vocabulary.words), 'budget': model.vocabulary.budget},
        'hyperparameters': model.hyper.to_dict(),
        'provenance': dict(model.provenance),
        'failures': dict(model.failures),
        'rules': rules,
    }


def model_from_dict(d):
    """
    Rebuild a :class:`dnfcg.trainer.ModelBundle` from :func:`model_to_dict` output.

    Clause features are resolved from the clause words, which must all be vocabulary words.
    """
    if not isinstance(d, dict):
        raise ModelFormatError("Model document must be a JSON object")
    version = d.get('format_version')
    if version != FORMAT_VERSION:
        raise ModelFormatError("Unsupported model format_version %r (expected %d)" % (version, FORMAT_VERSION))

    try:
        vocab = Vocabulary(tuple(d['vocabulary']['words']), budget=d['vocabulary']['budget'])
        hyper = Hyperparameters.from_dict(d['hyperparameters'])

        rules = {}
        for label, r in d['rules'].items():
            clauses = []
            for c in r['clauses']:
                unknown = [w for w in c['words'] if w not in vocab]
                if unknown:
                    raise ModelFormatError("Rule %r uses words missing from the vocabulary: %s" % (label, unknown))
                clause = Clause(tuple(vocab.index[w] for w in c['words']))
                if list(clause.features) != sorted(c.get('features', clause.features)):
                    raise ModelFormatError("Rule %r: clause features do not match its words" % label)
                clauses.append(WeightedClause(clause, c['positive_accuracy'], c['negative_accuracy'], c['weight']))

            rules[label] = DnfRule(
                label=r['label'],
                clauses=clauses,
                n_k=r['n_k'],
                n_positives=r['n_positives'],
                train_objective=r['train_objective'],
                lp_objective=r['lp_objective'],
                terminated_by_proof=r['cg_terminated_by_proof'],
                stats=TrainingStats.from_dict(r.get('stats', {})),
            )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ModelFormatError):
            raise
        raise ModelFormatError("Malformed model document: %s: %s" % (type(e).__name__, e))

    return ModelBundle(vocab, hyper, rules, dict(d.get('provenance', {})), dict(d.get('failures', {})))


def dumps_model(model):
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True, ensure_ascii=False) + '\n'


def save_model(model, f):
    """
    Write a model as UTF-8 JSON. Keys are sorted, so equal models give identical bytes.

    :param model: :class:`dnfcg.trainer.ModelBundle`
    :param f: destination path
    """
    with open(f, 'w', encoding='utf-8') as fh:
        fh.write(dumps_model(model))


def load_model(f):
    """
    Load a model written by :func:`save_model`.

    :param f: path of the model file
    :return: :class:`dnfcg.trainer.ModelBundle`
    """
    try:
        with open(f, encoding='utf-8') as fh:
            d = json.load(fh)
    except json.JSONDecodeError as e:
        raise ModelFormatError("%s is not a JSON model file: %s" % (f, e))
    except UnicodeDecodeError as e:
        raise ModelFormatError("%s is not UTF-8: %s" % (f, e))
    return model_from_dict(d)
