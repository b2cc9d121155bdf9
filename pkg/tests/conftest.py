import io
import os

import pytest

from sentcast import figas, synth
from sentcast.corpus import parse_corpus
from sentcast.lexicon import load_lexicon

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def corpus_path():
    return os.path.join(FIXTURES, "corpus_small.clu")


@pytest.fixture(scope="session")
def fixture_docs(corpus_path):
    return list(parse_corpus(corpus_path))


@pytest.fixture(scope="session")
def fixture_lexicon():
    return load_lexicon(io.StringIO(synth.fixture_lexicon_text()))


@pytest.fixture(scope="session")
def topics_by_name():
    return {t.name: t for t in figas.default_topics()}


@pytest.fixture(scope="session")
def us_policy():
    return figas.LocationPolicy.us_default()
