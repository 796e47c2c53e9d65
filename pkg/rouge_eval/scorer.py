"""
rouge_eval/scorer.py
ROUGE-N (clipped n-gram overlap) and ROUGE-L (longest common subsequence),
F-measure with beta = 1. No stemming, no stopword removal.
"""
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from tensor_core import InvalidInputError

Tokens = Sequence[Hashable]

METRICS = ("rouge1", "rouge2", "rougeL")


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall:    float
    f1:        float

    @classmethod
    def from_overlap(cls, overlap: int, candidate_total: int, reference_total: int) -> "RougeScore":
        if overlap == 0 or candidate_total == 0 or reference_total == 0:
            return cls(0.0, 0.0, 0.0)
        p = overlap / candidate_total
        r = overlap / reference_total
        return cls(p, r, 2 * p * r / (p + r))


def _ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Tokens, reference: Tokens, n: int = 1) -> RougeScore:
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    cand, ref = _ngrams(list(candidate), n), _ngrams(list(reference), n)
    overlap = sum((cand & ref).values())
    return RougeScore.from_overlap(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Tokens, b: Tokens) -> int:
    """Dynamic programming over one rolling row."""
    if not a or not b:
        return 0
    row = np.zeros(len(b) + 1, dtype=np.int64)
    for x in a:
        prev_diag = 0
        for j, y in enumerate(b, start=1):
            cur = row[j]
            row[j] = prev_diag + 1 if x == y else max(row[j], row[j - 1])
            prev_diag = cur
    return int(row[-1])


def rouge_l(candidate: Tokens, reference: Tokens) -> RougeScore:
    candidate, reference = list(candidate), list(reference)
    return RougeScore.from_overlap(lcs_length(candidate, reference), len(candidate), len(reference))


def score_all(candidate: Tokens, reference: Tokens) -> dict[str, RougeScore]:
    return {
        "rouge1": rouge_n(candidate, reference, 1),
        "rouge2": rouge_n(candidate, reference, 2),
        "rougeL": rouge_l(candidate, reference),
    }


def average_f1(pairs: Sequence[tuple[Tokens, Tokens]]) -> dict[str, float]:
    """Mean F1 over pairs, in percent."""
    if not pairs:
        raise InvalidInputError("cannot average ROUGE over zero pairs")
    totals = {m: 0.0 for m in METRICS}
    for cand, ref in pairs:
        for metric, score in score_all(cand, ref).items():
            totals[metric] += score.f1
    return {m: 100.0 * v / len(pairs) for m, v in totals.items()}
