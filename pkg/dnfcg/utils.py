import hashlib

import numpy as np


def derive_seed(seed, label):
    """
    Return a per-label random seed derived from the global `seed` and the `label` string.

    The derivation is a SHA-256 digest of both values, so adding or removing labels
    never perturbs the seed (and hence the negative sample) of another label.

    :param seed: ``int`` global seed
    :param label: ``str`` label
    :return: ``int`` seed in [0, 2**63)
    """
    digest = hashlib.sha256(("%d\x1f%s" % (int(seed), label)).encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'big') >> 1


def as_matrix(examples, n_features=None):
    """
    Return a 2d boolean ``np.ndarray`` from a matrix or a sequence of bit vectors.

    Accepts a boolean (or 0/1) matrix, a list of ``BinaryExample`` (anything with a
    ``features`` attribute) or a list of bit vectors. An empty sequence needs `n_features`
    to produce a correctly shaped (0, n_features) matrix.

    :param examples: matrix or sequence of examples
    :param n_features: ``int`` width used for empty input
    :return: ``np.ndarray`` of ``bool``, shape (n_examples, n_features)
    """
    if isinstance(examples, np.ndarray):
        X = examples
    else:
        rows = [getattr(e, 'features', e) for e in examples]
        if not rows:
            return np.zeros((0, n_features or 0), dtype=bool)
        X = np.vstack([np.asarray(r) for r in rows])

    if X.ndim != 2:
        raise ValueError("Expected a 2d matrix of examples, got shape %s" % (X.shape,))

    return X.astype(bool, copy=False)


def coverage(X, features):
    """
    Return the examples (rows of `X`) that satisfy the conjunction of `features`.

    An example satisfies a clause iff every feature of the clause is set, i.e. the
    clause bits are a subset of the example bits.

    :param X: boolean ``np.ndarray`` (n_examples x n_features)
    :param features: sequence of feature ids
    :return: boolean ``np.ndarray`` of length n_examples
    """
    features = list(features)
    if not features:
        return np.ones(X.shape[0], dtype=bool)
    return X[:, features].all(axis=1)


def format_clause(words):
    """
    Render a clause as ``'W1' AND 'W2'``.

    :param words: sequence of ``str``
    :return: ``str``
    """
    return ' AND '.join("'%s'" % w for w in words)


def format_rule(clauses):
    """
    Render a DNF rule as ``['W1' AND 'W2'] OR ['W3']``; the constant-FALSE rule renders as ``FALSE``.

    :param clauses: sequence of word sequences
    :return: ``str``
    """
    if not clauses:
        return 'FALSE'
    return ' OR '.join('[%s]' % format_clause(c) for c in clauses)


def sha256_of_frame(df, columns=('message', 'label')):
    """
    Hash the given columns of a corpus ``DataFrame``, in row order.

    :param df: Pandas ``DataFrame``
    :param columns: columns to include
    :return: hex digest ``str``
    """
    h = hashlib.sha256()
    for row in df.loc[:, list(columns)].itertuples(index=False):
        for v in row:
            h.update(str(v).encode('utf-8'))
            h.update(b'\x1f')
        h.update(b'\x1e')
    return h.hexdigest()
