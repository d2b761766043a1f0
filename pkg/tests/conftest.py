import pytest

from hitbounds import corpus


@pytest.fixture(scope="session")
def corpus_sample():
    """A slice of the seeded corpus for module-level property tests."""
    return [corpus.corpus_graph(i) for i in range(60)]


@pytest.fixture(scope="session")
def full_corpus():
    """The full 1000-graph seeded corpus used by the acceptance criteria."""
    return corpus.standard_corpus()
