import numpy as np
import pytest

from gridloc.geo_grid import US_BBOX, LatticeSpec
from gridloc.mnb import MultinomialNB
from gridloc.text import Vocabulary, tokenize, vectorize, to_matrix

# G1: "rain london", "london fog"; G2: "snow york"
FIXTURE_DOCS = [("rain london", 1), ("london fog", 1), ("snow york", 2)]
FIXTURE_VOCAB = Vocabulary(("fog", "london", "rain", "snow", "york"))


def fixture_matrix(texts):
    return to_matrix([vectorize(tokenize(t), FIXTURE_VOCAB) for t in texts], len(FIXTURE_VOCAB))


@pytest.fixture
def us8():
    return LatticeSpec(US_BBOX, 8)


@pytest.fixture
def fixture_model():
    X = fixture_matrix([d for d, _ in FIXTURE_DOCS])
    return MultinomialNB(alpha=1.0).fit(X, [y for _, y in FIXTURE_DOCS])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# filled by test_acceptance.py, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
