"""
Planted-rule corpora: labeled messages generated from known DNF rules, with optional label noise.
"""
from dataclasses import dataclass, field

import numpy as np
import pandas as pd


def synthetic_vocabulary(size):
    return ['W%03d' % i for i in range(size)]


@dataclass
class PlantedSpec:
    """
    Generation parameters of a planted corpus.

    `rules` maps each label to its clauses, each clause a tuple of words. A message of a label
    holds the words of one of its clauses plus background words drawn from the synthetic
    vocabulary minus every planted word, so no other label's rule fires on it.
    """

    rules: dict
    samples_per_label: int = 500
    vocabulary_size: int = 50
    background_words: tuple = (2, 5)
    noise_rate: float = 0.0
    seed: int = 0
    labels: tuple = field(init=False)

    def __post_init__(self):
        self.labels = tuple(sorted(self.rules))
        self.rules = {l: [tuple(c) for c in self.rules[l]] for l in self.labels}

    @property
    def planted_words(self):
        return sorted({w for clauses in self.rules.values() for c in clauses for w in c})

    @property
    def background_vocabulary(self):
        planted = set(self.planted_words)
        return [w for w in synthetic_vocabulary(self.vocabulary_size) if w not in planted]

    def validate(self):
        if not self.labels:
            raise ValueError("A planted corpus needs at least one label")
        if not 0 <= self.noise_rate < 0.5:
            raise ValueError("noise_rate must lie in [0, 0.5), got %r" % self.noise_rate)
        if self.noise_rate > 0 and len(self.labels) < 2:
            raise ValueError("Label noise needs at least two labels")
        if self.samples_per_label < 1:
            raise ValueError("samples_per_label must be >= 1, got %r" % self.samples_per_label)

        lo, hi = self.background_words
        if not 0 <= lo <= hi:
            raise ValueError("Invalid background word range %s" % (self.background_words,))
        if hi > len(self.background_vocabulary):
            raise ValueError("Only %d background words available, %d requested"
                             % (len(self.background_vocabulary), hi))

        for label, clauses in self.rules.items():
            if not clauses or any(len(c) == 0 for c in clauses):
                raise ValueError("Label %r needs non-empty planted clauses" % label)

        # A clause contained in another label's clause would fire on that label's messages.
        for a in self.labels:
            for b in self.labels:
                if a == b:
                    continue
                for ca in self.rules[a]:
                    for cb in self.rules[b]:
                        if set(ca) <= set(cb):
                            raise ValueError("Clause %s of %r is contained in clause %s of %r" % (ca, a, cb, b))
        return self


def generate(spec):
    """
    Generate the corpus of a :class:`PlantedSpec`.

    Each message takes one planted clause of its label, chosen uniformly, plus a uniform number
    of background words in the ``background_words`` range; tokens are shuffled. With
    ``noise_rate`` > 0 each label is replaced, with that probability, by a different label
    drawn uniformly. Rows are shuffled. The result depends only on the planted rules and the seed.

    :param spec: :class:`PlantedSpec`
    :return: Pandas ``DataFrame`` with columns message, label
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    background = np.array(spec.background_vocabulary, dtype=object)
    lo, hi = spec.background_words

    messages, labels = [], []
    for label in spec.labels:
        clauses = spec.rules[label]
        for _ in range(spec.samples_per_label):
            clause = clauses[int(rng.integers(len(clauses)))]
            n_background = int(rng.integers(lo, hi + 1))
            tokens = list(clause) + rng.choice(background, size=n_background, replace=False).tolist()
            rng.shuffle(tokens)
            messages.append(' '.join(tokens))

            if spec.noise_rate and rng.random() < spec.noise_rate:
                others = [l for l in spec.labels if l != label]
                labels.append(others[int(rng.integers(len(others)))])
            else:
                labels.append(label)

    order = rng.permutation(len(messages))
    return pd.DataFrame({
        'message': [messages[i] for i in order],
        'label': [labels[i] for i in order],
    })


def random_planted_spec(n_labels=3, clauses_per_label=1, clause_size=2, vocabulary_size=50,
                        samples_per_label=500, background_words=(2, 5), noise_rate=0.0, seed=0):
    """
    Draw a :class:`PlantedSpec` whose planted clauses use pairwise disjoint words.

    Labels are named ``L00``, ``L01``, ...

    :return: :class:`PlantedSpec`
    """
    n_planted = n_labels * clauses_per_label * clause_size
    if n_planted > vocabulary_size:
        raise ValueError("%d planted words do not fit a vocabulary of %d" % (n_planted, vocabulary_size))

    rng = np.random.default_rng(seed)
    words = rng.choice(np.array(synthetic_vocabulary(vocabulary_size), dtype=object), size=n_planted, replace=False)
    words = words.reshape(n_labels, clauses_per_label, clause_size)

    rules = {
        'L%02d' % i: [tuple(sorted(c)) for c in words[i].tolist()]
        for i in range(n_labels)
    }
    return PlantedSpec(rules, samples_per_label=samples_per_label, vocabulary_size=vocabulary_size,
                       background_words=tuple(background_words), noise_rate=noise_rate, seed=seed).validate()
