import math
import warnings
from contextlib import nullcontext

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from conftest import FIXTURE_DOCS, fixture_matrix
from gridloc.mnb import MultinomialNB, ModelFormatError, load_model, model_to_text, save_model
from gridloc.text import FeatureVector
from oracles import mnb_direct_scores


def test_fixture_parameters(fixture_model):
    m = fixture_model
    assert m.classes_.tolist() == [1, 2]
    assert np.exp(m.class_log_prior_) == pytest.approx([2 / 3, 1 / 3])
    london = 1
    assert math.exp(m.feature_log_prob_[0, london]) == pytest.approx(3 / 9)
    assert math.exp(m.feature_log_prob_[1, london]) == pytest.approx(1 / 7)
    assert m.vocab_size == 5


def test_fixture_scores(fixture_model):
    scores = fixture_model.score_map(FeatureVector({1: 1}))
    assert scores[1] == pytest.approx(-1.5041, abs=1e-4)
    assert scores[2] == pytest.approx(-3.0445, abs=1e-4)
    assert fixture_model.predict(fixture_matrix(["london"])).tolist() == [1]
    assert fixture_model.predict(fixture_matrix(["snow"])).tolist() == [2]


def test_empty_document_scores_are_priors(fixture_model):
    s = fixture_model.predict_log_scores(fixture_matrix([""]))[0]
    assert s.tolist() == fixture_model.class_log_prior_.tolist()


def test_smaller_alpha_keeps_fixture_argmax():
    X = fixture_matrix([d for d, _ in FIXTURE_DOCS])
    y = [lab for _, lab in FIXTURE_DOCS]
    half = MultinomialNB(alpha=0.5).fit(X, y)
    # alpha=0.5: P(london|G1) = 2.5/6.5, P(london|G2) = 0.5/4.5
    s = half.score_map(FeatureVector({1: 1}))
    assert s[1] == pytest.approx(math.log(2 / 3) + math.log(2.5 / 6.5))
    assert s[2] == pytest.approx(math.log(1 / 3) + math.log(0.5 / 4.5))
    assert half.predict(fixture_matrix(["london", "snow"])).tolist() == [1, 2]


def test_single_class_prior_is_zero():
    with pytest.warns(UserWarning, match="single class"):
        m = MultinomialNB().fit(np.array([[1, 0], [0, 2]]), [5, 5])
    assert m.class_log_prior_.tolist() == [0.0]


def test_duplicating_documents():
    X = fixture_matrix([d for d, _ in FIXTURE_DOCS])
    y = [lab for _, lab in FIXTURE_DOCS]
    m1 = MultinomialNB().fit(X, y)
    m2 = MultinomialNB().fit(sp.vstack([X, X]), y + y)
    np.testing.assert_allclose(m1.class_log_prior_, m2.class_log_prior_, rtol=0, atol=1e-15)
    # counts double, smoothing does not, so likelihoods move toward the raw frequencies
    assert math.exp(m2.feature_log_prob_[0, 1]) == pytest.approx(5 / 13)
    assert m1.predict(fixture_matrix(["london", "snow"])).tolist() == [1, 2]
    assert m2.predict(fixture_matrix(["london", "snow"])).tolist() == [1, 2]
    # ...but not always: "fog york" flips from G1 to G2
    assert m1.predict(fixture_matrix(["fog york"])).tolist() == [1]
    assert m2.predict(fixture_matrix(["fog york"])).tolist() == [2]


def test_tie_goes_to_smaller_label():
    m = MultinomialNB().fit(np.array([[1, 1], [1, 1]]), [9, 4])
    assert m.predict(np.array([[3, 0], [0, 0], [2, 5]])).tolist() == [4, 4, 4]


def test_fit_errors():
    with pytest.raises(ValueError):
        MultinomialNB().fit(np.zeros((0, 3)), [])
    with pytest.raises(ValueError):
        MultinomialNB().fit(np.zeros((2, 0)), [1, 2])
    with pytest.raises(ValueError):
        MultinomialNB(alpha=0).fit(np.ones((2, 2)), [1, 2])
    with pytest.raises(ValueError):
        MultinomialNB().fit(np.array([[-1, 2]]), [1])


def test_predict_rejects_wrong_width(fixture_model):
    with pytest.raises(ValueError):
        fixture_model.predict(np.ones((1, 4)))


def test_sklearn_estimator_protocol(fixture_model):
    assert fixture_model.get_params() == {"alpha": 1.0}
    c = clone(fixture_model).set_params(alpha=0.3)
    assert c.alpha == 0.3 and not hasattr(c, "classes_")
    X = fixture_matrix(["london fog", "snow"])
    proba = fixture_model.predict_proba(X)
    assert proba.sum(axis=1) == pytest.approx([1, 1])
    assert fixture_model.score(X, [1, 2]) == 1.0


@st.composite
def instances(draw):
    n_classes = draw(st.integers(1, 5))
    vocab = draw(st.integers(1, 20))
    n_docs = draw(st.integers(n_classes, 50))
    labels = [draw(st.integers(1, 64)) for _ in range(n_classes)]
    y = labels + [draw(st.sampled_from(labels)) for _ in range(n_docs - n_classes)]
    docs = [[draw(st.integers(0, 3)) for _ in range(vocab)] for _ in range(n_docs)]
    x = [draw(st.integers(0, 3)) for _ in range(vocab)]
    alpha = draw(st.sampled_from([1.0, 0.5, 0.1, 2.0]))
    return docs, y, x, alpha, vocab


@settings(max_examples=200, deadline=None)
@given(instances())
def test_scores_match_direct_probability_oracle(inst):
    docs, y, x, alpha, vocab = inst
    if not any(any(d) for d in docs):
        return
    with pytest.warns(UserWarning) if len(set(y)) == 1 else nullcontext():
        m = MultinomialNB(alpha=alpha).fit(np.array(docs), y)
    got = m.score_map(np.array([x]))
    want = mnb_direct_scores(docs, y, x, alpha, vocab)
    assert got.keys() == want.keys()
    for c in want:
        assert got[c] == pytest.approx(want[c], abs=1e-9)
    assert m.predict(np.array([x]))[0] in set(y)


@settings(max_examples=100, deadline=None)
@given(instances(), st.randoms())
def test_permutation_invariance(inst, rnd):
    docs, y, _, alpha, _ = inst
    order = list(range(len(docs)))
    rnd.shuffle(order)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = MultinomialNB(alpha=alpha).fit(np.array(docs), y)
        b = MultinomialNB(alpha=alpha).fit(np.array([docs[i] for i in order]), [y[i] for i in order])
    np.testing.assert_array_equal(a.classes_, b.classes_)
    np.testing.assert_allclose(a.class_log_prior_, b.class_log_prior_, rtol=0, atol=1e-15)
    np.testing.assert_allclose(a.feature_log_prob_, b.feature_log_prob_, rtol=0, atol=1e-15)
    assert a.trained_on_ == b.trained_on_


def test_monotonic_evidence(fixture_model):
    m = fixture_model
    base = m.predict_log_scores(fixture_matrix(["rain"]))[0]
    more = m.predict_log_scores(fixture_matrix(["rain london"]))[0]
    # london is likelier under G1 than G2, so the G1 margin grows
    assert m.feature_log_prob_[0, 1] > m.feature_log_prob_[1, 1]
    assert more[0] - more[1] > base[0] - base[1]


def test_save_load_round_trip(tmp_path, fixture_model, rng):
    path = tmp_path / "m.txt"
    save_model(fixture_model, path, {"n": "8", "variant": "TextOnly"})
    loaded = load_model(path)
    assert loaded.alpha == fixture_model.alpha
    assert loaded.vocab_size == fixture_model.vocab_size
    assert loaded.metadata_ == {"n": "8", "variant": "TextOnly"}
    np.testing.assert_array_equal(loaded.feature_log_prob_, fixture_model.feature_log_prob_)
    np.testing.assert_array_equal(loaded.class_log_prior_, fixture_model.class_log_prior_)
    X = rng.integers(0, 4, size=(100, 5))
    np.testing.assert_array_equal(loaded.predict(X), fixture_model.predict(X))
    np.testing.assert_array_equal(loaded.predict_log_scores(X), fixture_model.predict_log_scores(X))


def test_model_file_is_versioned_text(fixture_model):
    text = model_to_text(fixture_model)
    lines = text.splitlines()
    assert lines[:5] == ["gridloc-mnb", "schema_version=1", f"alpha={(1.0).hex()}", "vocab_size=5",
                         "class_count=2"]


def test_truncated_and_mismatched_files(tmp_path, fixture_model):
    path = tmp_path / "m.txt"
    save_model(fixture_model, path)
    text = path.read_text()
    (tmp_path / "trunc.txt").write_text(text[: len(text) // 2])
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "trunc.txt")
    (tmp_path / "v2.txt").write_text(text.replace("schema_version=1", "schema_version=2"))
    with pytest.raises(ModelFormatError, match="expected model schema_version 1, found '2'"):
        load_model(tmp_path / "v2.txt")
    (tmp_path / "junk.txt").write_text("hello\n")
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "junk.txt")
