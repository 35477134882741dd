import json

import pandas as pd
import pytest

from dnfcg.io import (ConfigError, CorpusFormatError, ModelFormatError, WORKERS_ENV, dumps_model, load_corpus,
                      load_model, model_from_dict, model_to_dict, read_config, save_model, write_corpus)
from dnfcg.predictor import candidate_list


def _write(path, text):
    path.write_text(text, encoding='utf-8')
    return str(path)


class TestCorpus:

    def test_csv(self, tmp_path):
        f = _write(tmp_path / 'c.csv', 'message,label,extra\n"TWY A CLSD, WIP",MXLC,1\nALS U/S,LAAS,2\n')
        df = load_corpus(f)
        assert list(df.columns) == ['message', 'label']
        assert df['message'].tolist() == ['TWY A CLSD, WIP', 'ALS U/S']
        assert df['label'].tolist() == ['MXLC', 'LAAS']

    def test_csv_keeps_na_like_words(self, tmp_path):
        f = _write(tmp_path / 'c.csv', 'message,label\nNA,NULL\n')
        df = load_corpus(f)
        assert df.iloc[0].tolist() == ['NA', 'NULL']

    def test_csv_missing_column(self, tmp_path):
        f = _write(tmp_path / 'c.csv', 'text,label\nA,B\n')
        with pytest.raises(CorpusFormatError) as e:
            load_corpus(f)
        assert e.value.line == 1

    def test_jsonl(self, tmp_path):
        f = _write(tmp_path / 'c.jsonl', '{"message": "RWY 09 CLSD", "label": "MRLC"}\n\n'
                                         '{"message": "ALS U/S", "label": "LAAS", "id": 7}\n')
        df = load_corpus(f)
        assert df.values.tolist() == [['RWY 09 CLSD', 'MRLC'], ['ALS U/S', 'LAAS']]

    @pytest.mark.parametrize('bad', ['{"message": "A"}', '[1, 2]', '{"message": 1, "label": "A"}', '{oops'])
    def test_jsonl_bad_record(self, tmp_path, bad):
        f = _write(tmp_path / 'c.jsonl', '{"message": "A", "label": "B"}\n' + bad + '\n')
        with pytest.raises(CorpusFormatError) as e:
            load_corpus(f)
        assert e.value.line == 2
        assert 'line 2' in str(e.value)

    def test_empty_file(self, tmp_path):
        assert load_corpus(_write(tmp_path / 'c.csv', '')).shape == (0, 2)
        assert load_corpus(_write(tmp_path / 'c.jsonl', '\n')).shape == (0, 2)

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            load_corpus(_write(tmp_path / 'c.txt', 'x'))
        assert load_corpus(_write(tmp_path / 'c.txt', 'message,label\nA,B\n'), format='csv').shape == (1, 2)

    @pytest.mark.parametrize('name', ['c.csv', 'c.jsonl'])
    def test_write_and_load(self, tmp_path, small_corpus, name):
        f = str(tmp_path / name)
        write_corpus(small_corpus, f)
        pd.testing.assert_frame_equal(load_corpus(f), small_corpus)

    def test_duplicates_kept(self, tmp_path):
        f = _write(tmp_path / 'c.csv', 'message,label\nA,B\nA,B\n')
        assert load_corpus(f).shape[0] == 2


class TestConfig:

    CONFIG = """
[data]
corpus = corpus.csv

[preprocess]
min_label_count = 5
vocab_budget = 500
frequency = documents
split = 0.5, 0.25, 0.25
split_seed = 3

[train]
fn_penalty = 2.5
complexity_budget = 20
max_cg_iters = 10
neg_ratio = 10
seed = 7
workers = 2

[pricing]
max_clause_size = 2
rc_threshold = -0.001
scale_mode = integer_scaled
fix_zero_features = no
exact_pricing = false

[predict]
top_k = 3
clip_negative_weights = yes
"""

    def test_full(self, tmp_path):
        config = read_config(_write(tmp_path / 'run.ini', self.CONFIG), environ={})
        assert config.corpus == str(tmp_path / 'corpus.csv')
        assert config.format == 'csv'
        assert config.split == (0.5, 0.25, 0.25)
        assert config.split_seed == 3
        assert config.workers == 2

        hyper = config.hyper
        assert hyper.fn_penalty == 2.5
        assert hyper.complexity_budget == 20
        assert hyper.min_label_count == 5
        assert hyper.frequency == 'documents'
        assert hyper.seed == 7
        assert hyper.top_k == 3
        assert hyper.clip_negative_weights is True
        assert hyper.exact_pricing is False
        assert hyper.pricing.max_clause_size == 2
        assert hyper.pricing.scale_mode == 'integer_scaled'
        assert hyper.pricing.fix_zero_features is False

    def test_defaults(self, tmp_path):
        config = read_config(_write(tmp_path / 'run.ini', '[data]\ncorpus = c.jsonl\n'), environ={})
        assert config.format == 'jsonl'
        assert config.split == (0.6, 0.2, 0.2)
        assert config.workers == 1
        assert config.hyper.fn_penalty == 4.0

    def test_workers_from_environment(self, tmp_path):
        f = _write(tmp_path / 'run.ini', self.CONFIG)
        assert read_config(f, environ={WORKERS_ENV: '4'}).workers == 4
        with pytest.raises(ConfigError):
            read_config(f, environ={WORKERS_ENV: 'many'})

    @pytest.mark.parametrize('text', [
        '[data]\ncorpus = c.csv\n[other]\nx = 1\n',
        '[data]\ncorpus = c.csv\nsize = 3\n',
        '[data]\ncorpus = c.csv\n[train]\nfn_penalty = high\n',
        '[data]\ncorpus = c.csv\n[train]\nfn_penalty = -1\n',
        '[data]\ncorpus = c.csv\n[preprocess]\nsplit = 0.5, 0.5\n',
        '[pricing]\nmax_clause_size = 2\n',
        '[data]\ncorpus = c.csv\n[pricing]\nfix_zero_features = maybe\n',
        'not an ini file',
    ])
    def test_invalid(self, tmp_path, text):
        with pytest.raises(ConfigError):
            read_config(_write(tmp_path / 'run.ini', text), environ={})


class TestModelFile:

    def test_round_trip(self, tmp_path, laas_model):
        f = str(tmp_path / 'model.json')
        save_model(laas_model, f)
        loaded = load_model(f)

        assert dumps_model(loaded) == dumps_model(laas_model)
        assert loaded.labels == laas_model.labels
        for message in ['ALS RWY 09 U/S', 'TWY CLSD', 'U/S MAINT RWY']:
            assert candidate_list(message, loaded) == candidate_list(message, laas_model)

    def test_document_layout(self, laas_model):
        d = json.loads(dumps_model(laas_model))
        assert d['format_version'] == 1
        clause = d['rules']['LAAS']['clauses'][0]
        assert clause['words'] == ['U/S', 'ALS']
        assert clause['weight'] == pytest.approx(2795.793)
        assert d['rules']['LAAS']['cg_terminated_by_proof'] is True

    def test_unknown_version(self, laas_model):
        d = model_to_dict(laas_model)
        d['format_version'] = 99
        with pytest.raises(ModelFormatError):
            model_from_dict(d)

    def test_word_missing_from_vocabulary(self, laas_model):
        d = model_to_dict(laas_model)
        d['rules']['LAAS']['clauses'][0]['words'] = ['U/S', 'ILS']
        with pytest.raises(ModelFormatError, match='ILS'):
            model_from_dict(d)

    def test_malformed(self, laas_model):
        d = model_to_dict(laas_model)
        del d['rules']['MXLC']['n_k']
        with pytest.raises(ModelFormatError):
            model_from_dict(d)

    def test_not_json(self, tmp_path):
        with pytest.raises(ModelFormatError):
            load_model(_write(tmp_path / 'model.json', 'not json'))
