"""Response parsing and the heuristic answer-quality features."""
from .citations import citation_metrics
from .features import (
    ALL_FEATURES,
    EXTERNAL_FEATURES,
    FEATURE_RANGES,
    PRESETS,
    FeatureError,
    FeatureName,
    FeatureRecord,
    FeatureVector,
    aggregate_features,
    ingest_external_scores,
    make_response,
    resolve_subset,
    response_features,
)
from .langid import (LanguageProfile, TextTooShort, build_profile, corpus_text, detect_language, load_profiles,
                     rebuild_bundled_profiles, supported_languages)
from .overlap import bleu, lcs_tokens, rouge_l, tokenize
from .parsing import parse_citations, parse_rag_output

__all__ = [
    "ALL_FEATURES", "EXTERNAL_FEATURES", "FEATURE_RANGES", "PRESETS",
    "FeatureError", "FeatureName", "FeatureRecord", "FeatureVector",
    "LanguageProfile", "TextTooShort",
    "aggregate_features", "bleu", "build_profile", "citation_metrics", "corpus_text", "detect_language",
    "ingest_external_scores", "lcs_tokens", "load_profiles", "make_response", "parse_citations",
    "parse_rag_output", "rebuild_bundled_profiles", "resolve_subset", "response_features", "rouge_l",
    "supported_languages", "tokenize",
]
