"""
Hand-built models for predictor, analysis and CLI tests.
"""
from dnfcg.master import Clause
from dnfcg.process import Vocabulary
from dnfcg.trainer import DnfRule, Hyperparameters, ModelBundle, WeightedClause, clause_weight

# Published LAAS rule: (words, positive accuracy, negative accuracy), trained on 3003 examples.
LAAS_CLAUSES = [
    (('U/S', 'ALS'), 0.937, 0.006),
    (('RWY', 'U/S', 'MAINT'), 0.035, 0.002),
    (('U/S', 'SYSTEM', 'APCH'), 0.007, 0.000),
    (('U/S', '24'), 0.007, 0.000),
    (('U/S', 'MAINT', '02'), 0.007, 0.000),
    (('RWY', 'U/S', '19'), 0.007, 0.000),
]
LAAS_N_K = 3003

NOTAM_WORDS = ['U/S', 'ALS', 'RWY', 'MAINT', 'SYSTEM', 'APCH', '24', '02', '19', 'TWY', 'CLSD']


def make_model(rules, words, hyper=None):
    """Build a ModelBundle from {label: [(words, wp, wn, n_k), ...]}."""
    vocab = Vocabulary(tuple(words), budget=max(len(words), 1))
    bundle_rules = {}
    for label, clauses in rules.items():
        weighted = []
        n_k = 1
        for clause_words, wp, wn, n_k in clauses:
            clause = Clause(tuple(vocab.index[w] for w in clause_words))
            weighted.append(WeightedClause(clause, wp, wn, clause_weight(wp, wn, n_k)))
        bundle_rules[label] = DnfRule(label, weighted, n_k=n_k, n_positives=n_k // 2,
                                      train_objective=0.0, lp_objective=0.0, terminated_by_proof=True)
    return ModelBundle(vocab, hyper or Hyperparameters(), bundle_rules, {'seed': 0})


def notam_model(hyper=None):
    rules = {
        'LAAS': [(w, wp, wn, LAAS_N_K) for w, wp, wn in LAAS_CLAUSES],
        'MXLC': [(('TWY', 'CLSD'), 0.9, 0.01, 1000)],
    }
    return make_model(rules, NOTAM_WORDS, hyper)
