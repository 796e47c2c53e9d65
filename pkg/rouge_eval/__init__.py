"""rouge_eval package"""
from .scorer import METRICS, RougeScore, average_f1, lcs_length, rouge_l, rouge_n, score_all
from .significance import SigReport, paired_significance
from .tokenize import tokenize_for_rouge

__all__ = [
    "RougeScore", "rouge_n", "rouge_l", "lcs_length", "score_all", "average_f1", "METRICS",
    "SigReport", "paired_significance",
    "tokenize_for_rouge",
]
