import numpy as np
import pytest

from dnfcg import trainer
from dnfcg.io import dumps_model
from dnfcg.master import Clause, build_rmp, solve_rmp
from dnfcg.pricing import PricingConfig
from dnfcg.process import BinaryDataset
from dnfcg.trainer import (Hyperparameters, TrainingError, clause_weight, compute_clause_weights,
                           negative_sample_index, sample_negatives, train_all, train_label)

from bruteforce import all_clauses, best_rule_objective, random_instance
from models import LAAS_CLAUSES, LAAS_N_K


def _exact_hyper(**kwargs):
    pricing = PricingConfig(max_clause_size=3, min_doc_frac=0.0, rc_threshold=0.0)
    return Hyperparameters(pricing=pricing, max_cg_iters=60, **kwargs)


class TestHyperparameters:

    def test_defaults(self):
        hyper = Hyperparameters().validate()
        assert hyper.fn_penalty == 4.0
        assert hyper.complexity_budget == 30
        assert hyper.max_cg_iters == 30
        assert hyper.neg_ratio == 20.0
        assert hyper.pricing.max_clause_size == 3
        assert hyper.top_k == 4

    @pytest.mark.parametrize('kwargs', [
        {'fn_penalty': 0},
        {'complexity_budget': 1},
        {'max_cg_iters': -1},
        {'neg_ratio': 0.5},
        {'top_k': 0},
        {'vocab_budget': 0},
        {'min_label_count': 0},
        {'frequency': 'tfidf'},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            Hyperparameters(**kwargs).validate()

    def test_dict_round_trip(self):
        hyper = Hyperparameters(fn_penalty=2.5, pricing=PricingConfig(scale_mode='integer_scaled'))
        assert Hyperparameters.from_dict(hyper.to_dict()) == hyper


class TestClauseWeights:

    @pytest.mark.parametrize('clause, expected', [
        (LAAS_CLAUSES[0], 2795.79),
        (LAAS_CLAUSES[1], 99.10),
        (LAAS_CLAUSES[2], 21.02),
        (LAAS_CLAUSES[5], 21.02),
    ])
    def test_reported_weights(self, clause, expected):
        _, wp, wn = clause
        assert round(clause_weight(wp, wn, LAAS_N_K), 2) == pytest.approx(expected)

    def test_compute(self):
        P = np.array([[1, 1], [1, 0], [1, 1], [0, 1]], dtype=bool)
        Z = np.array([[1, 0], [0, 0]], dtype=bool)
        wc = compute_clause_weights(Clause((0,)), P, Z)
        assert wc.wp == 0.75
        assert wc.wn == 0.5
        assert wc.weight == pytest.approx(0.25 * 6)

    def test_negative_weight(self):
        P = np.array([[1], [0]], dtype=bool)
        Z = np.array([[1], [1]], dtype=bool)
        assert compute_clause_weights(Clause((0,)), P, Z).weight < 0


class TestNegativeSampling:

    def test_size_and_exclusion(self):
        labels = np.array(['A'] * 3 + ['B'] * 50 + ['C'] * 50, dtype=object)
        index = negative_sample_index(labels, 'A', 20.0, seed=1)
        assert index.size == 60
        assert np.all(labels[index] != 'A')
        assert np.all(np.diff(index) > 0)

    def test_capped_by_available(self):
        labels = np.array(['A'] * 10 + ['B'] * 5, dtype=object)
        index = negative_sample_index(labels, 'A', 20.0, seed=1)
        np.testing.assert_array_equal(index, np.arange(10, 15))

    def test_deterministic_per_label(self):
        labels = np.array(['A'] * 2 + ['B'] * 2 + ['C'] * 100, dtype=object)
        a = negative_sample_index(labels, 'A', 10.0, seed=3)
        b = negative_sample_index(labels, 'A', 10.0, seed=3)
        c = negative_sample_index(labels, 'A', 10.0, seed=4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_no_positive(self):
        with pytest.raises(ValueError):
            negative_sample_index(np.array(['A'], dtype=object), 'B', 1.0, 0)

    def test_sample_negatives_examples(self):
        data = BinaryDataset(np.eye(4, dtype=bool), ['A', 'B', 'B', 'C'], [10, 11, 12, 13])
        sampled = sample_negatives('A', data, 2.0, seed=0)
        assert len(sampled) == 2
        assert all(e.label != 'A' for e in sampled)
        assert [e.id for e in sampled] == sorted(e.id for e in sampled)


class TestTrainLabel:

    def test_perfect_word(self):
        P = np.array([[1, 0, 1], [1, 1, 0], [1, 0, 0]], dtype=bool)
        Z = np.array([[0, 1, 1], [0, 1, 0], [0, 0, 1]], dtype=bool)
        rule = train_label(P, Z, _exact_hyper(), label='A')

        assert [wc.clause for wc in rule.clauses] == [Clause((0,))]
        assert rule.train_objective == 0.0
        assert rule.terminated_by_proof
        assert rule.n_k == 6
        assert rule.n_positives == 3
        assert rule.clauses[0].wp == 1.0 and rule.clauses[0].wn == 0.0

    def test_no_improving_clause_gives_false_rule(self):
        # Every word is more frequent among negatives than the penalty can pay for.
        P = np.array([[1, 0]], dtype=bool)
        Z = np.ones((10, 2), dtype=bool)
        rule = train_label(P, Z, _exact_hyper(fn_penalty=1.0), label='A')
        assert rule.is_false
        assert rule.train_objective == 1.0

    @pytest.mark.parametrize('seed', range(6))
    def test_lp_optimal_over_all_clauses(self, seed):
        rng = np.random.default_rng(seed)
        P, Z = random_instance(rng, 6, 12, 16, density=0.45)
        hyper = _exact_hyper(complexity_budget=int(rng.integers(4, 10)))
        rule = train_label(P, Z, hyper, label='L')

        assert rule.terminated_by_proof
        full = build_rmp(P, Z, hyper.fn_penalty, hyper.complexity_budget, seed_columns=all_clauses(6, 3))
        _, _, objective = solve_rmp(full)
        assert rule.lp_objective == pytest.approx(objective, abs=1e-6)
        assert rule.train_objective >= rule.lp_objective - 1e-6

    @pytest.mark.parametrize('seed', range(30))
    def test_bracketed_by_best_rule(self, seed):
        rng = np.random.default_rng(200 + seed)
        P, Z = random_instance(rng, 5, 6, 6)
        hyper = _exact_hyper(complexity_budget=int(rng.integers(3, 8)))
        rule = train_label(P, Z, hyper, label='L')
        best = best_rule_objective(P, Z, hyper.fn_penalty, hyper.complexity_budget, 3)

        assert rule.lp_objective <= best + 1e-6
        assert rule.train_objective >= best - 1e-6
        assert sum(wc.clause.complexity for wc in rule.clauses) <= hyper.complexity_budget

    def test_reaches_best_rule(self):
        # Words 0 and 2 together pick out the first two positives; word 1 the others at one negative.
        P = np.array([[1, 0, 1, 0, 0, 0], [1, 0, 1, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0]], dtype=bool)
        negatives = [(0,), (0, 3), (2,), (1, 2), (4,), (4, 5), (5,), (3,), (), (), (), ()]
        Z = np.zeros((len(negatives), 6), dtype=bool)
        for i, words in enumerate(negatives):
            Z[i, list(words)] = True
        hyper = _exact_hyper(complexity_budget=6)
        rule = train_label(P, Z, hyper, label='L')

        assert rule.train_objective == best_rule_objective(P, Z, hyper.fn_penalty, 6, 3) == 1.0
        assert sorted(wc.clause for wc in rule.clauses) == [Clause((0, 2)), Clause((1,))]

    def test_rule_respects_budget(self):
        rng = np.random.default_rng(7)
        P, Z = random_instance(rng, 8, 20, 20)
        rule = train_label(P, Z, _exact_hyper(complexity_budget=5), label='L')
        assert sum(wc.clause.complexity for wc in rule.clauses) <= 5
        assert all(len(wc.clause) <= 3 for wc in rule.clauses)

    def test_iteration_cap_warns(self):
        # The one-word pool only seeds word 0; exact pricing still finds words 1 and 2.
        P = np.array([[1, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=bool)
        Z = np.zeros((0, 3), dtype=bool)
        hyper = Hyperparameters(max_cg_iters=1, pricing=PricingConfig(pool_size=1, min_doc_frac=0.0))
        with pytest.warns(UserWarning, match='iteration cap'):
            rule = train_label(P, Z, hyper, label='L')
        assert not rule.terminated_by_proof
        assert rule.stats.iterations == 1

    def test_heuristic_only(self):
        rng = np.random.default_rng(9)
        P, Z = random_instance(rng, 6, 10, 10)
        hyper = _exact_hyper(exact_pricing=False)
        rule = train_label(P, Z, hyper, label='L')
        assert not rule.terminated_by_proof
        assert rule.stats.columns_exact == 0
        assert all(len(wc.clause) <= 2 for wc in rule.clauses)

    def test_stats(self):
        rng = np.random.default_rng(10)
        P, Z = random_instance(rng, 6, 10, 10)
        rule = train_label(P, Z, _exact_hyper(), label='L')
        stats = rule.stats
        assert stats.columns_added == stats.columns_seeded + stats.columns_heuristic + stats.columns_exact
        assert stats.iterations >= 1
        assert set(stats.timings) >= {'lp', 'heuristic', 'exact', 'integer', 'total'}
        assert 'timings' not in stats.to_dict()


class TestTrainAll:

    def test_planted_rules_recovered(self, planted_spec, planted_corpus):
        model = train_all(planted_corpus, Hyperparameters(min_label_count=1))
        assert model.labels == list(planted_spec.labels)
        assert not model.failures

        for label in model.labels:
            rule = model.rule(label)
            assert not rule.is_false
            planted = set(planted_spec.rules[label][0])
            assert any(set(model.words(wc.clause)) <= planted for wc in rule.clauses)
            assert rule.train_objective == 0.0

    def test_provenance(self, planted_corpus):
        model = train_all(planted_corpus, Hyperparameters(seed=5))
        assert model.provenance['seed'] == 5
        assert len(model.provenance['dataset_sha256']) == 64
        assert 'version' in model.provenance

    def test_workers_do_not_change_result(self, planted_corpus):
        hyper = Hyperparameters()
        sequential = train_all(planted_corpus, hyper, workers=1)
        parallel = train_all(planted_corpus, hyper, workers=2)
        assert dumps_model(sequential) == dumps_model(parallel)

    def test_failed_label_recorded(self, planted_corpus, monkeypatch):
        original = trainer.train_label

        def flaky(positives, negatives, hyper=None, label=None):
            if label == 'L01':
                raise RuntimeError('boom')
            return original(positives, negatives, hyper, label)

        monkeypatch.setattr(trainer, 'train_label', flaky)
        model = train_all(planted_corpus, Hyperparameters())
        assert 'L01' not in model.rules
        assert model.failures == {'L01': 'RuntimeError: boom'}

    def test_every_label_failing(self, planted_corpus, monkeypatch):
        def broken(*args, **kwargs):
            raise RuntimeError('boom')

        monkeypatch.setattr(trainer, 'train_label', broken)
        with pytest.raises(TrainingError):
            train_all(planted_corpus, Hyperparameters())

    def test_empty_corpus(self, planted_corpus):
        with pytest.raises(ValueError):
            train_all(planted_corpus.iloc[:0], Hyperparameters())


class TestModelBundle:

    def test_unknown_label_lists_labels(self, laas_model):
        with pytest.raises(KeyError, match='LAAS, MXLC'):
            laas_model.rule('NOPE')

    def test_words(self, laas_model):
        assert laas_model.words(laas_model.rule('LAAS').clauses[0].clause) == ['U/S', 'ALS']
