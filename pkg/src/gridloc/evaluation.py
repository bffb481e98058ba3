"""Train/test splitting, classification metrics, distance error and reports."""
from __future__ import annotations

import csv
import io
import math
import statistics
from collections import Counter
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Mapping, Sequence, TypeVar

import numpy as np

from .corpus import User
from .geo_grid import (GeoPoint, LatticeSpec, grid_centroid, grid_index, haversine_distance,
                       km_to_miles, radius_for_lattice)

T = TypeVar("T")


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise SplitError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def split(corpus: Sequence[T], spec: SplitSpec = SplitSpec()) -> tuple[list[T], list[T]]:
    """Seeded random partition with ``round(train_fraction * N)`` training items.

    Both sides keep the corpus order.
    """
    n = len(corpus)
    n_train = math.floor(spec.train_fraction * n + 0.5)
    if n < 2 or n_train == 0 or n_train == n:
        raise SplitError(f"split of {n} items at fraction {spec.train_fraction} leaves a side empty")
    perm = np.random.default_rng(spec.seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return [corpus[i] for i in train_idx], [corpus[i] for i in test_idx]


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed ``[true, predicted]`` over the sorted union of labels."""

    labels: tuple[int, ...]
    counts: np.ndarray

    @classmethod
    def from_labels(cls, y_true: Iterable[int], y_pred: Iterable[int]) -> "ConfusionMatrix":
        y_true, y_pred = list(y_true), list(y_pred)
        if len(y_true) != len(y_pred):
            raise ValueError(f"{len(y_true)} true labels but {len(y_pred)} predictions")
        labels = tuple(sorted(set(y_true) | set(y_pred)))
        pos = {lab: i for i, lab in enumerate(labels)}
        counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for t, p in zip(y_true, y_pred):
            counts[pos[t], pos[p]] += 1
        return cls(labels, counts)

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        labels = tuple(sorted(set(self.labels) | set(other.labels)))
        pos = {lab: i for i, lab in enumerate(labels)}
        counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for cm in (self, other):
            idx = [pos[lab] for lab in cm.labels]
            counts[np.ix_(idx, idx)] += cm.counts
        return ConfusionMatrix(labels, counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassScores:
    precision: dict[int, float]
    recall: dict[int, float]
    f1: dict[int, float]
    support: dict[int, int]
    never_predicted: int


def per_class_scores(cm: ConfusionMatrix) -> ClassScores:
    """Scores for every label with test support; a zero denominator scores 0."""
    tp = np.diag(cm.counts)
    true_n = cm.counts.sum(axis=1)
    pred_n = cm.counts.sum(axis=0)
    p, r, f, s = {}, {}, {}, {}
    never = 0
    for i, lab in enumerate(cm.labels):
        if true_n[i] == 0:
            continue
        prec = tp[i] / pred_n[i] if pred_n[i] else 0.0
        rec = tp[i] / true_n[i]
        never += pred_n[i] == 0
        p[lab], r[lab] = float(prec), float(rec)
        f[lab] = float(2 * prec * rec / (prec + rec)) if prec + rec else 0.0
        s[lab] = int(true_n[i])
    return ClassScores(p, r, f, s, int(never))


@dataclass
class MetricsReport:
    lattice: int
    variant: str
    precision: float
    recall: float
    f1: float
    radius_miles: float
    radius_source: str
    accuracy: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    mean_dist_km: float
    median_dist_km: float
    mean_dist_miles: float
    median_dist_miles: float
    test_size: int
    never_predicted_classes: int
    test_labels_unseen_in_training: int


REPORT_COLUMNS = [f.name for f in fields(MetricsReport)]


def classification_metrics(y_true: Sequence[int], y_pred: Sequence[int]) -> dict[str, float]:
    """Accuracy plus macro and micro precision/recall/F1 over labels present in ``y_true``."""
    if not len(y_true):
        raise ValueError("no test examples")
    cm = ConfusionMatrix.from_labels(y_true, y_pred)
    sc = per_class_scores(cm)
    labels = sorted(sc.support)
    acc = float(np.trace(cm.counts)) / cm.total
    pos = {lab: i for i, lab in enumerate(cm.labels)}
    idx = [pos[lab] for lab in labels]
    tp = int(np.diag(cm.counts)[idx].sum())
    pred_in = int(cm.counts.sum(axis=0)[idx].sum())
    true_in = int(cm.counts.sum(axis=1)[idx].sum())
    micro_p = tp / pred_in if pred_in else 0.0
    micro_r = tp / true_in if true_in else 0.0
    micro_f = 2 * micro_p * micro_r / (micro_p + micro_r) if micro_p + micro_r else 0.0
    return {
        "accuracy": acc,
        "precision": float(np.mean([sc.precision[lab] for lab in labels])),
        "recall": float(np.mean([sc.recall[lab] for lab in labels])),
        "f1": float(np.mean([sc.f1[lab] for lab in labels])),
        "micro_precision": micro_p,
        "micro_recall": micro_r,
        "micro_f1": micro_f,
        "never_predicted_classes": sc.never_predicted,
    }


def distance_errors_km(true_points: Sequence[GeoPoint], y_pred: Sequence[int],
                       lattice: LatticeSpec) -> list[float]:
    return [haversine_distance(p, grid_centroid(int(g), lattice)) for p, g in zip(true_points, y_pred)]


def evaluate_predictions(y_true: Sequence[int], y_pred: Sequence[int],
                         true_points: Sequence[GeoPoint], lattice: LatticeSpec,
                         variant: str = "TextOnly",
                         train_labels: Iterable[int] | None = None) -> MetricsReport:
    y_true = [int(v) for v in y_true]
    y_pred = [int(v) for v in y_pred]
    m = classification_metrics(y_true, y_pred)
    dist = distance_errors_km(true_points, y_pred, lattice)
    radius, computed = radius_for_lattice(lattice.n, lattice.bbox)
    unseen = len(set(y_true) - set(train_labels)) if train_labels is not None else 0
    mean_km, median_km = statistics.fmean(dist), statistics.median(dist)
    return MetricsReport(
        lattice=lattice.n, variant=getattr(variant, "value", str(variant)),
        precision=m["precision"], recall=m["recall"], f1=m["f1"],
        radius_miles=radius, radius_source="computed" if computed else "table",
        accuracy=m["accuracy"], micro_precision=m["micro_precision"],
        micro_recall=m["micro_recall"], micro_f1=m["micro_f1"],
        mean_dist_km=mean_km, median_dist_km=median_km,
        mean_dist_miles=km_to_miles(mean_km), median_dist_miles=km_to_miles(median_km),
        test_size=len(y_true), never_predicted_classes=m["never_predicted_classes"],
        test_labels_unseen_in_training=unseen)


def evaluate(model, X_test, test_examples, lattice: LatticeSpec, variant: str = "TextOnly",
             train_labels: Iterable[int] | None = None) -> MetricsReport:
    """Score a fitted classifier on ``X_test``; truth comes from the examples' geotags."""
    if not len(test_examples):
        raise ValueError("empty test set")
    y_true = [grid_index(ex.tweet.geo, lattice) for ex in test_examples]
    y_pred = model.predict(X_test)
    return evaluate_predictions(y_true, y_pred, [ex.tweet.geo for ex in test_examples], lattice,
                                variant, train_labels)


def aggregate_user(labels: Sequence[int],
                   scores: Sequence[Mapping[int, float]] | None = None) -> int:
    """One label for a user from their per-tweet predictions.

    Majority vote; a tied vote goes to the label with the larger log score
    summed over all the user's tweets, then to the smaller label.
    """
    if not labels:
        raise ValueError("user has no tweet predictions")
    votes = Counter(int(g) for g in labels)
    top = max(votes.values())
    tied = [g for g, v in votes.items() if v == top]
    if len(tied) == 1:
        return tied[0]

    def summed(g):
        if not scores:
            return 0.0
        return sum(s.get(g, -math.inf) for s in scores)

    return min(tied, key=lambda g: (-summed(g), g))


def user_objective(users: Iterable[User], lattice: LatticeSpec) -> float:
    """Total km between each user's real location and their predicted cell centroid."""
    users = list(users)
    missing = [u.user_id for u in users if u.real_location is None or u.predicted_location is None]
    if missing:
        raise ValueError(f"users without real or predicted location: {', '.join(missing)}")
    return math.fsum(haversine_distance(u.real_location, grid_centroid(u.predicted_location, lattice))
                     for u in users)


def predict_users(users: Sequence[User], label_scores) -> list[User]:
    """Fill ``predicted_location`` for each user.

    ``label_scores(tweets)`` must return ``(labels, score_maps)`` for that
    user's tweets.
    """
    for u in users:
        labels, maps = label_scores(u.tweets)
        u.predicted_location = aggregate_user(labels, maps)
    return users


# -- report formatting -------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def reports_to_csv(reports: Sequence[MetricsReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        w.writerow([_fmt(v) for v in asdict(r).values()])
    return buf.getvalue()


def reports_to_table(reports: Sequence[MetricsReport]) -> str:
    head = ["Lattice", "Variant", "Precision", "Recall", "F1", "Radius_miles", "Accuracy",
            "MeanDistKm", "MedianDistKm", "TestSize"]
    rows = []
    for r in reports:
        radius = f"{r.radius_miles:.0f}" if r.radius_source == "table" else f"{r.radius_miles:.1f}*"
        rows.append([f"{r.lattice}x{r.lattice}", r.variant, f"{r.precision:.2f}",
                     f"{r.recall:.2f}", f"{r.f1:.2f}", radius, f"{r.accuracy:.2f}",
                     f"{r.mean_dist_km:.1f}", f"{r.median_dist_km:.1f}", str(r.test_size)])
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(head)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows]
    if any(r.radius_source == "computed" for r in reports):
        lines.append("* radius computed from cell geometry, not tabulated")
    return "\n".join(lines) + "\n"


def improvement(new: float, old: float) -> dict[str, float]:
    """Absolute (points) and relative change between two rates."""
    return {"absolute_points": (new - old) * 100, "relative_percent": (new - old) / old * 100}

