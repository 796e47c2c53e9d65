"""tensor_core package"""
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import (
    CheckpointError,
    CorpusFormatError,
    InvalidInputError,
    NonFiniteError,
    NonFiniteInputError,
    SovMasError,
    TrainingDivergedError,
)
from .functional import (
    cross_entropy,
    dropout,
    gelu,
    kl_divergence,
    log_softmax,
    relu,
    rms_norm,
    sigmoid,
    softmax,
)
from .gradcheck import GradCheckReport, grad_check, grad_check_report
from .optim import LrSchedule, OptimizerState, adam_step, clip_grad_norm, lr_at
from .tensor import Tensor, backward, concat, dtype_for, embedding, matmul, no_grad

__all__ = [
    "SovMasError", "InvalidInputError", "NonFiniteError", "NonFiniteInputError", "TrainingDivergedError",
    "CheckpointError", "CorpusFormatError",
    "Tensor", "backward", "matmul", "concat", "embedding", "no_grad", "dtype_for",
    "softmax", "log_softmax", "sigmoid", "gelu", "relu", "dropout", "rms_norm",
    "cross_entropy", "kl_divergence",
    "grad_check", "grad_check_report", "GradCheckReport",
    "OptimizerState", "LrSchedule", "adam_step", "lr_at", "clip_grad_norm",
    "save_checkpoint", "load_checkpoint",
]
