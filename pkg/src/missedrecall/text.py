"""Text normalization and tokenization shared by every stage.

All string comparisons in the package (dedup, token overlap, name
fallback matching) go through these helpers so that they agree.
"""

from __future__ import annotations

import re
import unicodedata

_WS = re.compile(r"\s+")
# word runs, allowing inner apostrophes ("Chen's", "Jing'an")
_WORD = re.compile(r"[^\W_]+(?:['’][^\W_]+)*")
_PAREN_SUFFIX = re.compile(r"\s*[(（][^()（）]*[)）]\s*$")


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def clean(text: str) -> str:
    """NFC-normalize, trim and collapse internal whitespace."""
    return _WS.sub(" ", nfc(text)).strip()


def dedup_key(text: str) -> str:
    """Equivalence key for query dedup: canonical form, case-fold, whitespace collapse."""
    return clean(text).casefold()


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return (
        0x3400 <= cp <= 0x4DBF
        or 0x4E00 <= cp <= 0x9FFF
        or 0xF900 <= cp <= 0xFAFF
        or 0x3040 <= cp <= 0x30FF
        or 0xAC00 <= cp <= 0xD7AF
    )


def _split_script(word: str) -> list[str]:
    parts: list[str] = []
    start = 0
    for i in range(1, len(word)):
        if _is_cjk(word[i]) != _is_cjk(word[i - 1]):
            parts.append(word[start:i])
            start = i
    parts.append(word[start:])
    return parts


def raw_tokens(text: str) -> list[str]:
    """Tokens in their original case, split on whitespace, punctuation and script boundaries."""
    out: list[str] = []
    for m in _WORD.finditer(nfc(text)):
        out.extend(p for p in _split_script(m.group(0).replace("’", "'")) if p)
    return out


def tokens(text: str) -> list[str]:
    """Case-folded tokens used for indexing and matching."""
    return [t.casefold() for t in raw_tokens(text)]


def strip_parenthetical(name: str) -> str:
    """Drop a trailing "(branch)" suffix, ASCII or full-width parentheses."""
    return clean(_PAREN_SUFFIX.sub("", nfc(name)))


def parenthetical(name: str) -> str | None:
    m = _PAREN_SUFFIX.search(nfc(name))
    if not m:
        return None
    inner = clean(m.group(0).strip().strip("()（）"))
    return inner or None


def name_key(text: str) -> str:
    """Key for id-less name matching: tokens joined by single spaces."""
    return " ".join(tokens(text))
