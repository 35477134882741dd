import pandas as pd
import pytest

from dnfcg.synth import generate, random_planted_spec

from models import notam_model


@pytest.fixture
def laas_model():
    return notam_model()


@pytest.fixture
def small_corpus():
    return pd.DataFrame({
        'message': ["TWY 'R' CLSD", 'RWY 09 CLSD', 'ALS RWY 09 U/S', 'TWY A CLSD', 'ALS U/S', 'RWY CLSD'],
        'label': ['MXLC', 'MRLC', 'LAAS', 'MXLC', 'LAAS', 'MRLC'],
    })


@pytest.fixture(scope='session')
def planted_spec():
    return random_planted_spec(n_labels=3, clause_size=2, vocabulary_size=30, samples_per_label=60, seed=7)


@pytest.fixture(scope='session')
def planted_corpus(planted_spec):
    return generate(planted_spec)
