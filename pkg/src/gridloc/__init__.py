"""Grid-cell geolocation of short messages with Multinomial Naive Bayes."""
from .corpus import CleanTweet, LabeledExample, RawTweetRecord, Variant
from .enrich import Gazetteer, GeoEnricher, GeoEntity, enrich, extract_geo_entities, load_gazetteer
from .evaluation import MetricsReport, SplitSpec, evaluate, split
from .geo_grid import (US_BBOX, GeoBoundingBox, GeoPoint, LatticeSpec, grid_bounds, grid_centroid,
                       grid_index, haversine_distance, radius_for_lattice)
from .mnb import MultinomialNB, load_model, save_model
from .pipeline import build_pipeline, pipeline_inputs
from .synth import generate_synthetic_corpus
from .text import TweetVectorizer, Vocabulary, build_vocabulary, normalize, tokenize, vectorize

__version__ = "0.1.0"
