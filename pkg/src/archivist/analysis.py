"""Query/document text analysis for the full-text arm.

Pipeline: unicode word segmentation -> casefold -> stopword removal ->
optional light suffix stripping. Everything is pure and deterministic for a
given config, so the same config must be used at index and query time.

The suffix stemmer is intentionally crude (strip one common English ending
when the remaining stem is long enough); language-specific morphology is a
pluggable concern, not built in.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

DEFAULT_STOPWORDS = frozenset(
    """
    a an and are as at be but by for from had has have he her his i in is it
    its not of on or she so that the their them they this to was were what
    when where which who will with
    """.split()
)

# Longest-first so "running" loses "ing", not "g".
_SUFFIXES = ("ing", "edly", "ed", "es", "ly", "s")
_MIN_STEM = 3


@dataclass(frozen=True)
class AnalyzerConfig:
    lowercase: bool = True
    stopwords: frozenset[str] = DEFAULT_STOPWORDS
    stemmer: str = "light-suffix"  # "none" | "light-suffix"
    token_pattern: str = r"\w+"

    def __post_init__(self) -> None:
        if self.stemmer not in ("none", "light-suffix"):
            raise ValueError(f"unknown stemmer {self.stemmer!r}")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))


def light_suffix_stem(token: str) -> str:
    """Strip one common suffix if the remaining stem keeps >= 3 characters."""
    for suffix in _SUFFIXES:
        if token.endswith(suffix) and len(token) - len(suffix) >= _MIN_STEM:
            # "ss"/"us"/"is" endings are not plurals; leave them alone.
            if suffix == "s" and token[-2:] in ("ss", "us", "is"):
                continue
            return token[: -len(suffix)]
    return token


def analyze(text: str, config: AnalyzerConfig | None = None) -> list[str]:
    """Tokenize ``text`` under ``config``; empty input yields an empty list."""
    config = config or AnalyzerConfig()
    tokens = re.findall(config.token_pattern, text, flags=re.UNICODE)
    if config.lowercase:
        tokens = [t.lower() for t in tokens]
    tokens = [t for t in tokens if t not in config.stopwords]
    if config.stemmer == "light-suffix":
        tokens = [light_suffix_stem(t) for t in tokens]
    return tokens
