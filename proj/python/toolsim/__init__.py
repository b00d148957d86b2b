"""Tool-use corpus generation and evaluation toolkit."""

from toolsim._core import (
    canonicalize_params,
    compute_stats,
    executor_validate,
    filter_instances,
    is_textual_only,
    load_corpus,
    parse_react_block,
    prompt_digest,
    render_instance_transcript,
    render_react_block,
    run_cli,
    save_corpus,
    score_structured,
    subsample_by_toolcount,
    validate_schema,
)

__all__ = [
    "canonicalize_params",
    "compute_stats",
    "executor_validate",
    "filter_instances",
    "is_textual_only",
    "load_corpus",
    "parse_react_block",
    "prompt_digest",
    "render_instance_transcript",
    "render_react_block",
    "run_cli",
    "save_corpus",
    "score_structured",
    "subsample_by_toolcount",
    "validate_schema",
]
