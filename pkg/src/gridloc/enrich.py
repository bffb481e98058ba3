"""Gazetteer matching over profile descriptions, and feature-text enrichment."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from importlib import resources
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import LabeledExample, Variant
from .geo_grid import GeoPoint
from .text import normalize

log = logging.getLogger(__name__)


class GazetteerError(ValueError):
    pass


@dataclass(frozen=True)
class GeoEntity:
    surface: str
    point: GeoPoint
    population: int

    @property
    def token(self) -> str:
        return self.surface.replace(" ", "_")


class Gazetteer:
    """Place names indexed by their token tuples for longest-match lookup.

    Names are normalised with the message normaliser; when two entries share a
    normalised name the more populous one is kept.
    """

    def __init__(self, entries: Iterable[GeoEntity] = ()):
        self.entries: dict[tuple[str, ...], GeoEntity] = {}
        for e in entries:
            key = tuple(normalize(e.surface).split())
            if not key:
                continue
            e = replace(e, surface=" ".join(key))
            old = self.entries.get(key)
            if old is None or e.population > old.population:
                self.entries[key] = e
        self.max_words = max((len(k) for k in self.entries), default=0)
        self.skipped = 0

    def __len__(self):
        return len(self.entries)

    def __contains__(self, name):
        return tuple(normalize(name).split()) in self.entries

    def __getitem__(self, name) -> GeoEntity:
        return self.entries[tuple(normalize(name).split())]


def _parse_gazetteer(lines: Iterable[str], source: str) -> Gazetteer:
    entries, skipped = [], 0
    for line in lines:
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        try:
            name, lat, lon, pop = parts
            entry = GeoEntity(name.strip(), GeoPoint(float(lat), float(lon)), int(pop))
            if entry.population < 0 or not normalize(entry.surface):
                raise ValueError
        except ValueError:
            skipped += 1
            continue
        entries.append(entry)
    g = Gazetteer(entries)
    g.skipped = skipped
    if skipped:
        log.warning("%s: skipped %d malformed gazetteer rows", source, skipped)
    if not len(g):
        raise GazetteerError(f"{source}: gazetteer has no usable entries")
    return g


def load_gazetteer(path) -> Gazetteer:
    """Read a ``name<TAB>lat<TAB>lon<TAB>population`` file; ``#`` lines are comments."""
    with open(path, encoding="utf-8") as fh:
        return _parse_gazetteer(fh, str(path))


def default_gazetteer() -> Gazetteer:
    text = resources.files("gridloc").joinpath("data/gazetteer_us.tsv").read_text(encoding="utf-8")
    return _parse_gazetteer(text.splitlines(), "gazetteer_us.tsv")


def extract_geo_entities(description: str | None, gazetteer: Gazetteer) -> list[GeoEntity]:
    """Greedy left-to-right longest match of gazetteer names in ``description``.

    >>> g = Gazetteer([GeoEntity("new york", GeoPoint(40.7, -74.0), 8804190),
    ...                GeoEntity("york", GeoPoint(39.96, -76.73), 44800)])
    >>> [e.surface for e in extract_geo_entities("Living in New York City", g)]
    ['new york']
    """
    if not description or not len(gazetteer):
        return []
    tokens = normalize(description).split()
    found = []
    i = 0
    while i < len(tokens):
        for width in range(min(gazetteer.max_words, len(tokens) - i), 0, -1):
            hit = gazetteer.entries.get(tuple(tokens[i:i + width]))
            if hit is not None:
                found.append(hit)
                i += width
                break
        else:
            i += 1
    return found


def enriched_text(text: str, description: str | None, gazetteer: Gazetteer) -> str:
    tokens = [e.token for e in extract_geo_entities(description, gazetteer)]
    return " ".join([text, *tokens]) if tokens else text


def enrich(example: LabeledExample, gazetteer: Gazetteer) -> LabeledExample:
    """Append description place names (one underscore-joined token each) to the text."""
    tw = example.tweet
    content = enriched_text(tw.content, tw.user_description, gazetteer)
    return replace(example, tweet=replace(tw, content=content),
                   variant=Variant.TEXT_PLUS_GEO_ENTITIES)


class GeoEnricher(TransformerMixin, BaseEstimator):
    """Map ``(text, description)`` pairs to enriched feature text.

    Plain strings pass through unchanged, so the enricher can sit in front of
    :class:`~gridloc.text.TweetVectorizer` in a pipeline regardless of variant.
    """

    def __init__(self, gazetteer=None):
        self.gazetteer = gazetteer

    def fit(self, X, y=None):
        self.gazetteer_ = default_gazetteer() if self.gazetteer is None else self.gazetteer
        return self

    def transform(self, X: Sequence) -> list[str]:
        g = getattr(self, "gazetteer_", None)
        if g is None:
            g = default_gazetteer() if self.gazetteer is None else self.gazetteer
        out = []
        for item in X:
            if isinstance(item, str):
                out.append(item)
            else:
                text, description = item
                out.append(enriched_text(text, description, g))
        return out
