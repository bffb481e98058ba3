"""Synthetic geotagged corpora with per-cell signature vocabularies."""
from __future__ import annotations

import itertools
from typing import Iterator

import numpy as np

from .corpus import CleanTweet, LabeledExample, Variant
from .enrich import Gazetteer, GeoEntity
from .geo_grid import GeoPoint, LatticeSpec, grid_bounds, grid_centroid, grid_index
from .text import default_stopwords

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"
_SYLLABLES = [c + v for c in _CONSONANTS for v in _VOWELS]

_FILLER_BIOS = ["coffee lover", "music fan and dreamer", "software engineer",
                "dog person", "views my own", "just here for the memes"]


def _pseudo_words(prefix: str) -> Iterator[str]:
    stop = default_stopwords()
    base = len(_SYLLABLES)
    for i in itertools.count():
        a, rest = divmod(i, base * base)
        b, c = divmod(rest, base)
        word = prefix + _SYLLABLES[a % base] + _SYLLABLES[b] + _SYLLABLES[c]
        if a >= base:
            word += str(a // base)
        if word not in stop:
            yield word


def signature_vocabulary(lattice: LatticeSpec, vocab_per_cell: int) -> dict[int, list[str]]:
    """Disjoint word lists, one per cell."""
    words = _pseudo_words("")
    return {g: [next(words) for _ in range(vocab_per_cell)] for g in lattice.labels()}


def city_names(lattice: LatticeSpec) -> dict[int, str]:
    """A two-word synthetic place name per cell (``"<word> springs"``)."""
    words = _pseudo_words("q")
    return {g: f"{next(words)} springs" for g in lattice.labels()}


def synthetic_gazetteer(lattice: LatticeSpec) -> Gazetteer:
    return Gazetteer(GeoEntity(name, grid_centroid(g, lattice), 10_000)
                     for g, name in city_names(lattice).items())


def generate_synthetic_corpus(lattice: LatticeSpec, docs_per_cell: int, vocab_per_cell: int,
                              noise_fraction: float, seed: int, doc_length: int = 8,
                              description_fraction: float = 0.0,
                              docs_per_user: int = 5) -> list[LabeledExample]:
    """Labelled documents drawn cell by cell.

    Each token is one of the cell's own signature words with probability
    ``1 - noise_fraction``, otherwise a signature word of some other cell
    chosen uniformly. Geotags are uniform inside the cell. A
    ``description_fraction`` share of documents name the cell's synthetic city
    (see :func:`synthetic_gazetteer`) in the profile description only.
    """
    if docs_per_cell < 1 or vocab_per_cell < 1 or doc_length < 1 or docs_per_user < 1:
        raise ValueError("docs_per_cell, vocab_per_cell, doc_length and docs_per_user must be positive")
    if not 0.0 <= noise_fraction < 1.0:
        raise ValueError(f"noise_fraction must lie in [0, 1), got {noise_fraction}")
    if not 0.0 <= description_fraction <= 1.0:
        raise ValueError(f"description_fraction must lie in [0, 1], got {description_fraction}")
    rng = np.random.default_rng(seed)
    sig = signature_vocabulary(lattice, vocab_per_cell)
    cities = city_names(lattice)
    all_words = np.array([w for g in lattice.labels() for w in sig[g]])
    n_cells = lattice.cell_count
    out = []
    for g in lattice.labels():
        own = np.array(sig[g])
        others = np.concatenate([all_words[:(g - 1) * vocab_per_cell],
                                 all_words[g * vocab_per_cell:]]) if n_cells > 1 else own
        box = grid_bounds(g, lattice)
        h, w = box.lat_max - box.lat_min, box.lon_max - box.lon_min
        for j in range(docs_per_cell):
            noisy = rng.random(doc_length) < noise_fraction
            tokens = np.where(noisy, rng.choice(others, doc_length), rng.choice(own, doc_length))
            # stay off the cell edges so the geotag labels back to g
            lat = box.lat_min + h * rng.uniform(0.001, 0.999)
            lon = box.lon_min + w * rng.uniform(0.001, 0.999)
            if rng.random() < description_fraction:
                description = f"proud resident of {cities[g]}"
            else:
                description = _FILLER_BIOS[rng.integers(len(_FILLER_BIOS))]
            tweet = CleanTweet(id=f"s{g:05d}-{j:06d}", user_id=f"u{g:05d}-{j // docs_per_user:05d}",
                               content=" ".join(tokens.tolist()), geo=GeoPoint(lat, lon),
                               user_description=description)
            label = grid_index(tweet.geo, lattice)
            assert label == g
            out.append(LabeledExample(tweet, label, Variant.TEXT_ONLY))
    return out
