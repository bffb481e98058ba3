"""Assemble enrich -> vectorize -> MNB pipelines for a corpus variant."""
from __future__ import annotations

from typing import Sequence

from sklearn.pipeline import Pipeline

from .corpus import LabeledExample, Variant
from .enrich import GeoEnricher
from .mnb import MultinomialNB
from .text import TweetVectorizer


def build_pipeline(variant=Variant.TEXT_ONLY, gazetteer=None, alpha=1.0, min_df=2,
                   min_token_length=2, stopwords=None, stem=False) -> Pipeline:
    steps = []
    if Variant(variant) is Variant.TEXT_PLUS_GEO_ENTITIES:
        steps.append(("enrich", GeoEnricher(gazetteer)))
    steps.append(("vectorize", TweetVectorizer(min_df=min_df, min_token_length=min_token_length,
                                               stopwords=stopwords, stem=stem)))
    steps.append(("mnb", MultinomialNB(alpha=alpha)))
    return Pipeline(steps)


def pipeline_inputs(examples: Sequence[LabeledExample], variant=Variant.TEXT_ONLY) -> list:
    """Pipeline ``X`` for ``examples``.

    For the enriched variant each not-yet-enriched example becomes a
    ``(text, description)`` pair; everything else is its text.
    """
    want_geo = Variant(variant) is Variant.TEXT_PLUS_GEO_ENTITIES
    out = []
    for ex in examples:
        if want_geo and ex.variant is Variant.TEXT_ONLY:
            out.append((ex.tweet.content, ex.tweet.user_description))
        else:
            out.append(ex.tweet.content)
    return out
