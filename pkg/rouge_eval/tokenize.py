"""
rouge_eval/tokenize.py
Language-aware tokenization for ROUGE: lowercase, split on whitespace and
punctuation; character-scripted languages yield one token per character.
"""
import re
import unicodedata
from typing import Iterable, Optional

from config.settings import settings

_WORD = re.compile(r"[^\W_]+", re.UNICODE)


def _is_punctuation(ch: str) -> bool:
    return unicodedata.category(ch).startswith(("P", "S"))


def tokenize_for_rouge(text: str, language: str = "", char_languages: Optional[Iterable[str]] = None) -> list[str]:
    """
    >>> tokenize_for_rouge("The cat.", "en")
    ['the', 'cat']
    """
    scripted = set(char_languages) if char_languages is not None else settings.char_scripted_languages
    lowered = text.lower()
    if language.lower() in scripted:
        return [ch for ch in lowered if not ch.isspace() and not _is_punctuation(ch)]
    return _WORD.findall(lowered)
