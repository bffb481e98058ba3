"""Message normalisation, tokenisation and term-count features."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

_URL = re.compile(r"(?:https?://|www\.)\S*")
_MENTION = re.compile(r"(?<!\w)@\w+")
_HASHTAG = re.compile(r"(?<!\w)#(?=\w)")
_NON_WORD = re.compile(r"[^\w\s']")
_LOOSE_APOSTROPHE = re.compile(r"(?<!\w)'|'(?!\w)")
_SPACE = re.compile(r"\s+")


class EmptyVocabularyError(ValueError):
    pass


def normalize(text: str) -> str:
    """Lowercase, drop URLs and @-mentions, unwrap hashtags, strip punctuation.

    Apostrophes survive only between two word characters (``don't``).

    >>> normalize("Raining in #London http://t.co/x @bob")
    'raining in london'
    """
    s = text.replace("’", "'").lower()
    s = _URL.sub(" ", s)
    s = _MENTION.sub(" ", s)
    s = _HASHTAG.sub("", s)
    s = _NON_WORD.sub(" ", s)
    s = _LOOSE_APOSTROPHE.sub(" ", s)
    # lower() can emit combining marks that are not \w; second pass keeps it idempotent
    s = _NON_WORD.sub(" ", s.lower())
    s = _LOOSE_APOSTROPHE.sub(" ", s)
    return _SPACE.sub(" ", s).strip()


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    text = resources.files("gridloc").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    return _parse_stopwords(text)


def load_stopwords(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return _parse_stopwords(fh.read())


def _parse_stopwords(text: str) -> frozenset[str]:
    words = (line.strip().lower() for line in text.splitlines())
    return frozenset(w for w in words if w and not w.startswith("#"))


def tokenize(text: str, stopwords: Iterable[str] | None = None,
             min_length: int = 2, stemmer=None) -> list[str]:
    """Whitespace split of normalised text minus short tokens and stopwords."""
    stop = default_stopwords() if stopwords is None else stopwords
    tokens = [t for t in text.split() if len(t) >= min_length and t not in stop]
    if stemmer is not None:
        tokens = [stemmer.stem(t) for t in tokens]
    return tokens


@dataclass(frozen=True)
class Vocabulary:
    """Sorted term list; a term's index is its lexicographic rank."""

    terms: tuple[str, ...]
    index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        if list(terms) != sorted(set(terms)):
            raise ValueError("vocabulary terms must be unique and sorted")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "index", {t: i for i, t in enumerate(terms)})

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for t in self.terms:
                fh.write(t + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls(tuple(line.rstrip("\n") for line in fh if line.rstrip("\n")))


def document_frequencies(corpus: Iterable[Sequence[str]]) -> Counter:
    """Per-term count of documents containing it; shards merge with ``+``."""
    df: Counter = Counter()
    for doc in corpus:
        df.update(set(doc))
    return df


def build_vocabulary(corpus: Iterable[Sequence[str]], min_df: int = 2) -> Vocabulary:
    if min_df < 1:
        raise ValueError(f"min_df must be >= 1, got {min_df}")
    df = document_frequencies(corpus)
    terms = sorted(t for t, c in df.items() if c >= min_df)
    if not terms:
        raise EmptyVocabularyError(f"no term occurs in at least {min_df} documents")
    return Vocabulary(tuple(terms))


@dataclass(frozen=True)
class FeatureVector:
    counts: Mapping[int, int]
    oov: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def vectorize(tokens: Sequence[str], vocab: Vocabulary) -> FeatureVector:
    counts: dict[int, int] = {}
    oov = 0
    for t in tokens:
        i = vocab.index.get(t)
        if i is None:
            oov += 1
        else:
            counts[i] = counts.get(i, 0) + 1
    return FeatureVector(dict(sorted(counts.items())), oov)


def to_matrix(vectors: Sequence[FeatureVector], vocab_size: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for r, v in enumerate(vectors):
        for c, n in v.counts.items():
            rows.append(r)
            cols.append(c)
            vals.append(n)
    return sp.csr_matrix((np.asarray(vals, dtype=np.int64), (rows, cols)),
                         shape=(len(vectors), vocab_size))


def _porter():
    try:
        from nltk.stem.porter import PorterStemmer
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise ImportError("stemming needs nltk: pip install 'gridloc[stem]'") from exc
    return PorterStemmer()


class TweetVectorizer(TransformerMixin, BaseEstimator):
    """Raw message text -> sparse term-count matrix.

    Parameters
    ----------
    min_df : int
        Minimum number of training documents a term must occur in.
    min_token_length : int
        Shorter tokens are dropped.
    stopwords : collection of str or None
        ``None`` uses the shipped English list.
    stem : bool
        Apply the Porter stemmer (needs nltk).
    """

    def __init__(self, min_df=2, min_token_length=2, stopwords=None, stem=False):
        self.min_df = min_df
        self.min_token_length = min_token_length
        self.stopwords = stopwords
        self.stem = stem

    def _analyzer(self):
        stop = default_stopwords() if self.stopwords is None else frozenset(self.stopwords)
        stemmer = _porter() if self.stem else None
        return lambda text: tokenize(normalize(text), stop, self.min_token_length, stemmer)

    def fit(self, X, y=None):
        analyze = self._analyzer()
        self.vocabulary_ = build_vocabulary((analyze(t) for t in X), self.min_df)
        return self

    def transform(self, X):
        check_is_fitted(self, "vocabulary_")
        analyze = self._analyzer()
        vectors = [vectorize(analyze(t), self.vocabulary_) for t in X]
        return to_matrix(vectors, len(self.vocabulary_))

    def oov_counts(self, X) -> np.ndarray:
        """Per-document count of tokens dropped as out-of-vocabulary."""
        check_is_fitted(self, "vocabulary_")
        analyze = self._analyzer()
        return np.array([vectorize(analyze(t), self.vocabulary_).oov for t in X], dtype=np.int64)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.asarray(self.vocabulary_.terms, dtype=object)
