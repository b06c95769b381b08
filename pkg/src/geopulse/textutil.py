"""Tokenization shared by term counting and toponym extraction.

Rules: Unicode word tokens after NFKC casefold; hashtags contribute their
tag text with '#' stripped; URLs and @-handles are dropped entirely.
"""

from __future__ import annotations

import re
import unicodedata

_WORD = re.compile(r"\w+", re.UNICODE)
_DROP = re.compile(r"(?:https?://\S+|www\.\S+|@\w+)", re.UNICODE | re.IGNORECASE)


def fold(s: str) -> str:
    return unicodedata.normalize("NFKC", s).casefold()


def tokenize_spans(text: str) -> list[tuple[str, int, int]]:
    """(folded token, start, end) triples; offsets index the original text.

    Tokens are folded individually so that offsets stay valid even when
    NFKC changes string length.
    """
    masked = []
    for m in _DROP.finditer(text):
        masked.append((m.start(), m.end()))
    out = []
    for m in _WORD.finditer(text):
        if any(a <= m.start() < b for a, b in masked):
            continue
        out.append((fold(m.group()), m.start(), m.end()))
    return out


def tokenize(text: str) -> list[str]:
    return [tok for tok, _, _ in tokenize_spans(text)]


def token_set(text: str) -> set[str]:
    return set(tokenize(text))


def norm_key(name: str) -> str:
    """Canonical lookup key: folded word tokens joined by single spaces."""
    return " ".join(_WORD.findall(fold(name)))
