"""Multinomial Naive Bayes over term counts, computed in log space."""
from __future__ import annotations

import hashlib
import io
import os
import warnings
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .corpus import atomic_write_text
from .text import FeatureVector, to_matrix

MODEL_MAGIC = "gridloc-mnb"
MODEL_SCHEMA_VERSION = 1


class ModelFormatError(ValueError):
    pass


class InvariantError(RuntimeError):
    pass


class MultinomialNB(ClassifierMixin, BaseEstimator):
    """Multinomial Naive Bayes with additive (Laplace) smoothing.

    Labels are grid-cell indices. Each class gets log prior ``ln(N_c / N)``;
    each (class, term) pair gets
    ``ln((count_ct + alpha) / (sum_t count_ct + alpha * V))``.
    Classes absent from training receive no mass. Score ties go to the
    smallest label.

    Parameters
    ----------
    alpha : float, default 1.0
        Additive smoothing constant, must be positive.
    """

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def _validate_X(self, X, reset):
        if not reset and isinstance(X, Sequence) and X and isinstance(X[0], FeatureVector):
            X = to_matrix(X, self.n_features_in_)
        X = check_array(X, accept_sparse="csr", dtype=np.float64,
                        ensure_min_samples=1 if reset else 0, ensure_min_features=0)
        if reset:
            if X.shape[1] == 0:
                raise ValueError("cannot fit on an empty vocabulary")
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, model expects {self.n_features_in_}")
        data = X.data if sp.issparse(X) else X
        if np.any(data < 0):
            raise ValueError("term counts must be non-negative")
        return X

    def fit(self, X, y):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if (X.shape[0] if hasattr(X, "shape") else len(X)) == 0:
            raise ValueError("cannot fit on an empty training set")
        X = self._validate_X(X, reset=True)
        y = column_or_1d(np.asarray(y), warn=True).astype(np.int64)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) == 1:
            warnings.warn("training data holds a single class; every prediction will be "
                          f"G{self.classes_[0]}", UserWarning, stacklevel=2)
        n_classes, n_terms = len(self.classes_), X.shape[1]
        onehot = sp.csr_matrix((np.ones(len(y_idx)), (y_idx, np.arange(len(y_idx)))),
                               shape=(n_classes, len(y_idx)))
        fc = onehot @ X
        self.feature_count_ = np.asarray(fc.todense() if sp.issparse(fc) else fc, dtype=np.float64)
        self.class_count_ = np.bincount(y_idx, minlength=n_classes).astype(np.float64)
        self.n_features_in_ = n_terms
        self._update_log_probs()
        self.trained_on_ = self._fingerprint()
        self.check_invariants()
        return self

    def _update_log_probs(self):
        self.class_log_prior_ = np.log(self.class_count_) - np.log(self.class_count_.sum())
        smoothed = self.feature_count_ + self.alpha
        self.feature_log_prob_ = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))

    def _fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.classes_.astype("<i8").tobytes())
        h.update(self.class_count_.astype("<f8").tobytes())
        h.update(self.feature_count_.astype("<f8").tobytes())
        return h.hexdigest()[:16]

    def check_invariants(self, tol=1e-9):
        check_is_fitted(self, "feature_log_prob_")
        per_class = np.exp(logsumexp(self.feature_log_prob_, axis=1))
        if not np.allclose(per_class, 1.0, rtol=0, atol=tol):
            raise InvariantError(f"term likelihoods do not sum to 1: {per_class}")
        prior_mass = np.exp(logsumexp(self.class_log_prior_))
        if abs(prior_mass - 1.0) > 1e-12:
            raise InvariantError(f"class priors sum to {prior_mass!r}")
        if len(np.unique(self.classes_)) != len(self.classes_):
            raise InvariantError("duplicate class labels")

    @property
    def vocab_size(self) -> int:
        check_is_fitted(self, "feature_log_prob_")
        return self.n_features_in_

    def predict_log_scores(self, X) -> np.ndarray:
        """Unnormalised joint log scores, shape ``(n_samples, n_classes)``."""
        check_is_fitted(self, "feature_log_prob_")
        X = self._validate_X(X, reset=False)
        scores = X @ self.feature_log_prob_.T
        return np.asarray(scores) + self.class_log_prior_

    def score_map(self, x) -> dict[int, float]:
        """Log score per label for a single document."""
        row = self.predict_log_scores([x] if isinstance(x, FeatureVector) else x)[0]
        return {int(c): float(s) for c, s in zip(self.classes_, row)}

    def predict_log_proba(self, X) -> np.ndarray:
        jll = self.predict_log_scores(X)
        return jll - logsumexp(jll, axis=1, keepdims=True)

    def predict_proba(self, X) -> np.ndarray:
        return np.exp(self.predict_log_proba(X))

    def predict(self, X) -> np.ndarray:
        # classes_ is sorted and argmax takes the first maximum, so ties go to the smaller label
        return self.classes_[np.argmax(self.predict_log_scores(X), axis=1)]


def model_to_text(model: MultinomialNB, metadata: Mapping[str, str] | None = None) -> str:
    check_is_fitted(model, "feature_log_prob_")
    out = io.StringIO()
    out.write(f"{MODEL_MAGIC}\n")
    out.write(f"schema_version={MODEL_SCHEMA_VERSION}\n")
    out.write(f"alpha={float(model.alpha).hex()}\n")
    out.write(f"vocab_size={model.n_features_in_}\n")
    out.write(f"class_count={len(model.classes_)}\n")
    out.write(f"trained_on={model.trained_on_}\n")
    for key, value in sorted((metadata or {}).items()):
        if "\n" in str(value) or "=" in key:
            raise ValueError(f"metadata {key!r} cannot be stored on one line")
        out.write(f"meta.{key}={value}\n")
    out.write("end_header\n")
    for i, label in enumerate(model.classes_):
        out.write(f"class {int(label)} {int(model.class_count_[i])} "
                  f"{float(model.class_log_prior_[i]).hex()}\n")
        out.write(" ".join(float(v).hex() for v in model.feature_count_[i]) + "\n")
        out.write(" ".join(float(v).hex() for v in model.feature_log_prob_[i]) + "\n")
    out.write("end_model\n")
    return out.getvalue()


def save_model(model: MultinomialNB, path, metadata: Mapping[str, str] | None = None) -> None:
    atomic_write_text(path, model_to_text(model, metadata))


def load_model(path) -> MultinomialNB:
    """Read a model file; extra ``meta.*`` header keys land in ``model.metadata_``."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    name = os.fspath(path)
    if not lines or lines[0] != MODEL_MAGIC:
        raise ModelFormatError(f"{name}: not a {MODEL_MAGIC} model file")
    header, pos = {}, 1
    while pos < len(lines) and lines[pos] != "end_header":
        key, sep, value = lines[pos].partition("=")
        if not sep:
            raise ModelFormatError(f"{name}:{pos + 1}: malformed header line")
        header[key] = value
        pos += 1
    if pos >= len(lines):
        raise ModelFormatError(f"{name}: truncated header")
    version = header.get("schema_version")
    if version != str(MODEL_SCHEMA_VERSION):
        raise ModelFormatError(
            f"{name}: expected model schema_version {MODEL_SCHEMA_VERSION}, found {version!r}")
    try:
        alpha = float.fromhex(header["alpha"])
        n_terms = int(header["vocab_size"])
        n_classes = int(header["class_count"])
        body = lines[pos + 1:pos + 1 + 3 * n_classes]
        if len(body) != 3 * n_classes or lines[pos + 1 + 3 * n_classes] != "end_model":
            raise ModelFormatError(f"{name}: truncated model body")
        labels, counts, priors, fcs, lls = [], [], [], [], []
        for k in range(n_classes):
            tag, label, count, prior = body[3 * k].split(" ")
            if tag != "class":
                raise ModelFormatError(f"{name}: expected class record, found {tag!r}")
            fc = [float.fromhex(v) for v in body[3 * k + 1].split(" ")] if n_terms else []
            ll = [float.fromhex(v) for v in body[3 * k + 2].split(" ")] if n_terms else []
            if len(fc) != n_terms or len(ll) != n_terms:
                raise ModelFormatError(f"{name}: class {label} has wrong row width")
            labels.append(int(label))
            counts.append(float(count))
            priors.append(float.fromhex(prior))
            fcs.append(fc)
            lls.append(ll)
    except (KeyError, IndexError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"{name}: {type(exc).__name__}: {exc}") from None
    model = MultinomialNB(alpha=alpha)
    model.classes_ = np.asarray(labels, dtype=np.int64)
    model.class_count_ = np.asarray(counts)
    model.class_log_prior_ = np.asarray(priors)
    model.feature_count_ = np.asarray(fcs, dtype=np.float64).reshape(n_classes, n_terms)
    model.feature_log_prob_ = np.asarray(lls, dtype=np.float64).reshape(n_classes, n_terms)
    model.n_features_in_ = n_terms
    model.trained_on_ = header.get("trained_on", "")
    model.metadata_ = {k[5:]: v for k, v in header.items() if k.startswith("meta.")}
    return model
