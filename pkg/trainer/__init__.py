"""trainer package"""
from .config import TrainConfig
from .engine import (
    BEST_CHECKPOINT,
    LAST_CHECKPOINT,
    METRICS_LOG,
    PLOT_CSV,
    Trainer,
    TrainResult,
    few_shot_continue,
    train,
)
from .evaluation import AVG_ROW, RougeTable, decode_examples, evaluate, rouge_table, to_rouge_tokens
from .experiments import ABLATION_ROWS, AblationResult, run_ablation
from .metrics import EvalRecord, RunMetrics, StepRecord

__all__ = [
    "TrainConfig", "Trainer", "TrainResult", "train", "few_shot_continue",
    "BEST_CHECKPOINT", "LAST_CHECKPOINT", "METRICS_LOG", "PLOT_CSV",
    "RougeTable", "evaluate", "rouge_table", "decode_examples", "to_rouge_tokens", "AVG_ROW",
    "ABLATION_ROWS", "AblationResult", "run_ablation",
    "RunMetrics", "StepRecord", "EvalRecord",
]
