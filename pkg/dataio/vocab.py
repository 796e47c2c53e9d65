"""
dataio/vocab.py
Surface forms for token ids. Ids 0..3 are reserved: PAD, END, START, UNK.
"""
from pathlib import Path
from typing import Iterable, Sequence

from config.settings import settings
from tensor_core import InvalidInputError

RESERVED = ("<pad>", "</s>", "<s>", "<unk>")


class Vocabulary:
    def __init__(self, tokens: Sequence[str]) -> None:
        tokens = list(tokens)
        if tuple(tokens[: len(RESERVED)]) != RESERVED:
            raise InvalidInputError(f"vocabulary must start with {RESERVED}")
        if len(set(tokens)) != len(tokens):
            raise InvalidInputError("vocabulary surface forms must be unique")
        self.tokens = tokens
        self._index = {t: i for i, t in enumerate(tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, words: Iterable[str]) -> list[int]:
        return [self._index.get(w, settings.unk_id) for w in words]

    def decode(self, ids: Iterable[int], skip_special: bool = True) -> list[str]:
        out: list[str] = []
        for i in ids:
            i = int(i)
            if skip_special and i in (settings.pad_id, settings.start_id):
                continue
            if skip_special and i == settings.end_id:
                break
            out.append(self.tokens[i] if 0 <= i < len(self.tokens) else RESERVED[settings.unk_id])
        return out

    def detokenize(self, ids: Iterable[int]) -> str:
        """Surface text with tokens joined by single spaces."""
        return " ".join(self.decode(ids))

    @classmethod
    def load(cls, path: Path) -> "Vocabulary":
        path = Path(path)
        if not path.exists():
            raise InvalidInputError(f"vocabulary file not found: {path}")
        return cls(path.read_text(encoding="utf-8").splitlines())

    @classmethod
    def numeric(cls, size: int) -> "Vocabulary":
        """Fallback when no vocabulary file exists: surface form "w<id>"."""
        return cls(list(RESERVED) + [f"w{i}" for i in range(len(RESERVED), size)])
