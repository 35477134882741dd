"""
Splitting and binarization of labeled message corpora.

A corpus is a Pandas ``DataFrame`` with a ``message`` and a ``label`` column. Binarization
turns messages into a binary bag of words over a fixed :class:`Vocabulary`: bit ``j`` of a
message is set iff vocabulary word ``j`` occurs in it as a whole token.
"""
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.feature_extraction.text import CountVectorizer

FREQUENCY_MODES = ('occurrences', 'documents')


def _tokenize(s):
    return s.split()


def _vectorizer(vocabulary=None, binary=False):
    # Whitespace tokens, case kept; token_pattern is unused with a custom tokenizer.
    return CountVectorizer(
        tokenizer=_tokenize,
        token_pattern=None,
        lowercase=False,
        vocabulary=vocabulary,
        binary=binary,
    )


def label_counts(df):
    """
    Return the number of records per label, sorted by label.

    :param df: Pandas ``DataFrame`` corpus
    :return: Pandas ``Series`` label -> ``int``
    """
    if df.shape[0] == 0:
        return pd.Series([], dtype=int, name='count')
    return df['label'].value_counts().sort_index().rename('count')


def split_corpus(df, ratios=(0.6, 0.2, 0.2), seed=0):
    """
    Split a corpus into training, validation and test corpora.

    Records are shuffled with a seeded uniform permutation and then sliced contiguously.
    Split sizes are the floor of ``ratio * n`` for validation and test; the remainder goes
    to the training split. Splitting is not stratified.

    :param df: Pandas ``DataFrame`` corpus
    :param ratios: ``tuple`` of (train, valid, test) fractions, summing to 1
    :param seed: ``int`` random seed
    :return: ``tuple`` of three Pandas ``DataFrame`` (train, valid, test)
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3:
        raise ValueError("Expected three split ratios, got %d" % len(ratios))
    if any(r <= 0 for r in ratios):
        raise ValueError("Split ratios must be positive: %s" % (ratios,))
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("Split ratios must sum to 1, got %r" % sum(ratios))

    n = df.shape[0]
    if n < 3:
        raise ValueError("Cannot split a corpus of %d records into three non-empty parts" % n)

    n_valid = int(np.floor(ratios[1] * n + 1e-9))
    n_test = int(np.floor(ratios[2] * n + 1e-9))
    n_train = n - n_valid - n_test

    order = np.random.default_rng(seed).permutation(n)
    parts = (order[:n_train], order[n_train:n_train + n_valid], order[n_train + n_valid:])

    return tuple(df.iloc[p].reset_index(drop=True) for p in parts)


@dataclass(frozen=True)
class Vocabulary:
    """Ordered feature words; feature id ``j`` is the position of a word in :attr:`words`."""

    words: tuple
    budget: int = 1000
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        words = tuple(self.words)
        if len(set(words)) != len(words):
            raise ValueError("Vocabulary words must be unique")
        if len(words) > self.budget:
            raise ValueError("Vocabulary of %d words exceeds its budget %d" % (len(words), self.budget))
        object.__setattr__(self, 'words', words)
        object.__setattr__(self, 'index', {w: j for j, w in enumerate(words)})

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def lookup(self, features):
        """Return the words of a sequence of feature ids."""
        return [self.words[j] for j in features]


@dataclass(frozen=True)
class BinaryExample:
    """One message as a bit vector over the vocabulary, with its label."""

    features: np.ndarray
    label: str
    id: int = 0

    @property
    def set_bits(self):
        return frozenset(np.flatnonzero(self.features).tolist())


@dataclass
class BinaryDataset:
    """
    A binarized corpus: boolean matrix ``X`` (n_examples x |J|) with aligned labels and ids.
    """

    X: np.ndarray
    labels: np.ndarray
    ids: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=bool)
        self.labels = np.asarray(self.labels, dtype=object)
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if not (self.X.shape[0] == self.labels.shape[0] == self.ids.shape[0]):
            raise ValueError("Dataset matrix, labels and ids must have the same length")

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, i):
        return BinaryExample(self.X[i], self.labels[i], int(self.ids[i]))

    def examples(self):
        return [self[i] for i in range(len(self))]

    def subset(self, mask_or_index):
        return BinaryDataset(self.X[mask_or_index], self.labels[mask_or_index], self.ids[mask_or_index])


def build_vocabulary(df, budget=1000, frequency='occurrences'):
    """
    Build the bag-of-words vocabulary from the (cleaned) training corpus.

    Selects the `budget` most frequent whitespace tokens. With ``frequency='occurrences'``
    (default) a token's frequency is its total number of occurrences in the corpus; with
    ``frequency='documents'`` it is the number of messages containing it. Ties are broken
    lexicographically so the result is deterministic.

    :param df: Pandas ``DataFrame`` training corpus with cleaned messages
    :param budget: ``int`` maximum vocabulary size (default 1000)
    :param frequency: ``str`` one of 'occurrences', 'documents'
    :return: :class:`Vocabulary`
    """
    if budget < 1:
        raise ValueError("Vocabulary budget must be >= 1, got %r" % budget)
    if frequency not in FREQUENCY_MODES:
        raise ValueError("Unknown frequency mode %r (expected one of %s)" % (frequency, FREQUENCY_MODES))
    if df.shape[0] == 0:
        raise ValueError("Cannot build a vocabulary from an empty training corpus")

    messages = df['message'].astype(str).tolist()
    if not any(m.split() for m in messages):
        raise ValueError("Training corpus contains no tokens")

    vectorizer = _vectorizer(binary=(frequency == 'documents'))
    counts = vectorizer.fit_transform(messages)
    totals = np.asarray(counts.sum(axis=0)).ravel()
    words = vectorizer.get_feature_names_out()

    # Primary key: count descending; secondary: word ascending.
    order = sorted(range(len(words)), key=lambda j: (-totals[j], words[j]))
    return Vocabulary(tuple(str(words[j]) for j in order[:budget]), budget=budget)


def binarize(message, vocab):
    """
    Convert a cleaned message to a binary bag-of-words vector.

    Word order and multiplicity are discarded; out-of-vocabulary tokens are ignored.

    :param message: ``str`` cleaned message
    :param vocab: :class:`Vocabulary`
    :return: ``np.ndarray`` of ``bool`` with length ``len(vocab)``
    """
    bits = np.zeros(len(vocab), dtype=bool)
    for token in message.split():
        j = vocab.index.get(token)
        if j is not None:
            bits[j] = True
    return bits


def binarize_corpus(df, vocab):
    """
    Binarize every message of a corpus.

    :param df: Pandas ``DataFrame`` corpus with cleaned messages
    :param vocab: :class:`Vocabulary`
    :return: :class:`BinaryDataset` with ids 0..n-1 in row order
    """
    n = df.shape[0]
    if n == 0 or len(vocab) == 0:
        X = np.zeros((n, len(vocab)), dtype=bool)
    else:
        vectorizer = _vectorizer(vocabulary=list(vocab.words), binary=True)
        X = vectorizer.transform(df['message'].astype(str).tolist()).toarray().astype(bool)

    return BinaryDataset(X, df['label'].astype(str).to_numpy(dtype=object), np.arange(n))


def zero_set(example):
    """
    Return the zero-valued features of an example, the complement of its set bits.

    :param example: :class:`BinaryExample` or bit vector
    :return: ``frozenset`` of feature ids
    """
    bits = np.asarray(getattr(example, 'features', example), dtype=bool)
    return frozenset(np.flatnonzero(~bits).tolist())
