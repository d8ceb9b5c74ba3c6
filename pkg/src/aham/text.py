"""Tokenization and the pinned English stopword list.

Every component that looks at words (bag-of-words weights, keyword
candidates, string metrics, mock backends) goes through `tokenize` so the
whole engine agrees on what a token is: lowercase runs of alphanumerics.
"""
from __future__ import annotations

import re
import unicodedata

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def normalize_nfc(text: str) -> str:
    """Unicode NFC normalization, applied before hashing or concatenation."""
    return unicodedata.normalize("NFC", text)


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens: maximal runs of [a-z0-9] after lowercasing."""
    return _TOKEN_RE.findall(text.lower())


def ngrams(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    """Consecutive n-grams of a token sequence."""
    if n <= 0:
        raise ValueError("n must be positive")
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


# Frozen stopword list. Do not edit casually: keyword candidates, c-TF-IDF
# vocabularies, and persisted topic representations all depend on it.
STOPWORDS: frozenset[str] = frozenset(
    """
    a about above after again against all am an and any are aren as at be
    because been before being below between both but by can cannot could
    couldn did didn do does doesn doing don down during each few for from
    further had hadn has hasn have haven having he her here hers herself him
    himself his how i if in into is isn it its itself just ll m ma me might
    mightn more most must mustn my myself no nor not now o of off on once
    only or other our ours ourselves out over own re s same shan she should
    shouldn so some such t than that the their theirs them themselves then
    there these they this those through to too under until up ve very was
    wasn we were weren what when where which while who whom why will with
    won would wouldn y you your yours yourself yourselves
    """.split()
)


def content_tokens(text: str) -> list[str]:
    """Tokens with stopwords removed; order preserved."""
    return [t for t in tokenize(text) if t not in STOPWORDS]
