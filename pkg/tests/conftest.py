import pytest

from helpers import make_triple
from triplemine.morpho import LexiconTagger
from triplemine.sentences import TemplateRegistry


@pytest.fixture(scope="session")
def registry():
    return TemplateRegistry.bundled()


@pytest.fixture(scope="session")
def tagger():
    return LexiconTagger.bundled()


@pytest.fixture
def ferret_triple():
    return make_triple("ferret", "AtLocation", "pet store")


@pytest.fixture
def musician_triple():
    return make_triple("musician", "CapableOf", "play musical instrument")
