import re
import warnings

from .process import label_counts

# Anything that is not a word character, whitespace or '/' is punctuation; '_' counts too.
PUNCTUATION_RE = re.compile(r"[^\w\s/]|_", re.UNICODE)


def clean_message(raw):
    """
    Replace every punctuation character except '/' by a single space.

    Letters are left as they are (messages are expected in capitals already) and whitespace
    is not collapsed, so tokenization downstream is plain whitespace splitting.

    :param raw: ``str`` message
    :return: ``str`` cleaned message
    """
    return PUNCTUATION_RE.sub(' ', raw)


def clean_corpus(df, drop_empty=True):
    """
    Return a ``DataFrame`` with every message cleaned by :func:`clean_message`.

    Records whose cleaned message contains no token are removed when `drop_empty` is set.

    :param df: Pandas ``DataFrame`` corpus
    :param drop_empty: ``bool`` drop records with no tokens after cleaning (default True)
    :return: Pandas ``DataFrame``
    """
    df = df.copy()
    df['message'] = [clean_message(str(m)) for m in df['message'].values]

    if drop_empty:
        mask = [bool(m.split()) for m in df['message'].values]
        df = df.iloc[mask, :].reset_index(drop=True)

    return df


def filter_rare_labels(df, min_count=10):
    """
    Remove records whose label occurs fewer than `min_count` times.

    Return a ``DataFrame`` where the records of every label with a count < `min_count` are
    removed. ``min_count=1`` leaves the corpus unchanged.

    :param df: Pandas ``DataFrame`` corpus
    :param min_count: ``int`` minimum number of records per label (default 10)
    :return: filtered Pandas ``DataFrame``
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1, got %r" % min_count)

    df = df.copy()
    counts = label_counts(df)
    keep = set(counts.index[counts.values >= min_count])

    dropped = len(counts) - len(keep)
    if dropped:
        warnings.warn("Dropped %d of %d labels with fewer than %d records" % (dropped, len(counts), min_count))

    mask = [l in keep for l in df['label'].values]
    return df.iloc[mask, :].reset_index(drop=True)
