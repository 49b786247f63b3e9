"""Collective emotion indices from social-media posts.

Pipeline: lexicon -> ingest (filter, match, count) -> index (power mean,
baseline normalization) -> decompose (additive trend/yearly/weekly model)
-> impact (out-of-sample differential ratios).
"""

from .decompose import Decomposition, ModelFit, ModelSpec, fit, predict
from .errors import DataError, UsageError
from .impact import ImpactRecord, event_impact, rank_impacts
from .index import (IndexConfig, IndexSeries, build_all_indices, generalized_mean,
                    normalize_baseline, zscore_index)
from .ingest import DailyCounts, PostRecord, aggregate, filter_post, match_words
from .lexicon import EmotionCategory, Lexicon, LexiconEntry, load_lexicon, validate_sizes

__version__ = "0.1.0"

__all__ = [
    "DailyCounts", "DataError", "Decomposition", "EmotionCategory", "ImpactRecord",
    "IndexConfig", "IndexSeries", "Lexicon", "LexiconEntry", "ModelFit", "ModelSpec",
    "PostRecord", "UsageError", "aggregate", "build_all_indices",
    "event_impact", "filter_post", "fit", "generalized_mean", "load_lexicon",
    "match_words", "normalize_baseline", "predict", "rank_impacts", "validate_sizes",
    "zscore_index",
]
