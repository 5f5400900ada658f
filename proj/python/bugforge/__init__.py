"""Source to sink analysis and bug insertion for C corpora."""

import json

from . import _bugforge
from ._bugforge import (
    EXIT_BUILD_FAILURE,
    EXIT_EMPTY_CORPUS,
    EXIT_NOTHING_BUGDOORABLE,
    EXIT_SUMMARY_PARSE,
    SCHEMA_VERSION,
    BugforgeError,
)

__all__ = [
    "BugforgeError",
    "EXIT_BUILD_FAILURE",
    "EXIT_EMPTY_CORPUS",
    "EXIT_NOTHING_BUGDOORABLE",
    "EXIT_SUMMARY_PARSE",
    "SCHEMA_VERSION",
    "analyze",
    "insert",
    "list_sites",
    "verify",
]


def _paths(items):
    return [str(p) for p in items or ()]


def analyze(corpus, summaries=(), max_depth=64, max_paths=256, sink_classes=(), timings=False):
    """Report dict for a directory of .c/.i files."""
    return json.loads(
        _bugforge.analyze(str(corpus), _paths(summaries), max_depth, max_paths, list(sink_classes), timings)
    )


def list_sites(corpus, summaries=(), max_depth=64, max_paths=256, sink_classes=()):
    return json.loads(_bugforge.list_sites(str(corpus), _paths(summaries), max_depth, max_paths, list(sink_classes)))


def insert(corpus, out, seed=1, count=1, summaries=(), max_depth=64, max_paths=256, sink_classes=()):
    """Writes out/<seed+i>/ for each variant and returns [{seed, dir, ground_truth}]."""
    return json.loads(
        _bugforge.insert(
            str(corpus), str(out), seed, count, _paths(summaries), max_depth, max_paths, list(sink_classes)
        )
    )


def verify(variant, inputs, compiler="gcc", harness=None, original=None, sanitize=True, timeout=20):
    return json.loads(
        _bugforge.verify(
            str(variant),
            str(inputs),
            compiler,
            None if harness is None else str(harness),
            None if original is None else str(original),
            sanitize,
            timeout,
        )
    )
