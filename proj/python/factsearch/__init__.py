"""Retrieval-augmented fact checking: corpus handling, agent loop metrics and
evaluation utilities, backed by the C++ core."""

from ._core import (
    ConfigError,
    Corpus,
    FormatError,
    Statement,
    binarize_label,
    brier,
    cache_key,
    ci95_over_trials,
    ece,
    extract_prediction,
    load_corpus,
    macro_f1,
    majority_vote,
    normalize_domain,
    parse_search_directive,
    per_class_f1,
    registered_domain,
    run_experiment,
    subsample,
    verify_statement,
)

__all__ = [
    "ConfigError",
    "Corpus",
    "FormatError",
    "Statement",
    "binarize_label",
    "brier",
    "cache_key",
    "ci95_over_trials",
    "ece",
    "extract_prediction",
    "load_corpus",
    "macro_f1",
    "majority_vote",
    "normalize_domain",
    "parse_search_directive",
    "per_class_f1",
    "registered_domain",
    "run_experiment",
    "subsample",
    "verify_statement",
]
