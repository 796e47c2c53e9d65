"""
trainer/config.py
Training-run hyperparameters.
"""
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from model.beam import DEFAULT_BEAM, DEFAULT_LENGTH_PENALTY
from objectives import DEFAULT_REGION_PROBABILITY, LossWeights
from tensor_core import LrSchedule

TrainMode = Literal["mono", "multi"]
MaskMode = Literal["mim", "mrm", "off"]


class TrainConfig(BaseModel):
    """
    mono trains on exactly one language; multi draws each batch's language
    from the temperature-smoothed sampler.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    mode:                TrainMode = "mono"
    languages:           list[str] = Field(default_factory=list)
    steps:               int   = Field(default=1000, ge=0)
    batch_size:          int   = Field(default=8, gt=0)
    alpha:               float = Field(default=1.0, ge=0.0)
    beta:                float = Field(default=1.0, ge=0.0)
    mask_mode:           MaskMode = "mim"
    mask_probability:    float = Field(default=DEFAULT_REGION_PROBABILITY, gt=0.0, lt=1.0)
    peak_lr:             float = Field(default=5e-4, gt=0.0)
    warmup_steps:        int   = Field(default=5000, gt=0)
    schedule:            Literal["inverse_sqrt_warmup", "constant"] = "inverse_sqrt_warmup"
    clip_norm:           float = Field(default=1.0, ge=0.0)
    seed:                int   = Field(default=0, ge=0)
    checkpoint_interval: int   = Field(default=500, ge=0)
    eval_interval:       int   = Field(default=250, ge=0)
    eval_examples:       int   = Field(default=32, gt=0)
    sampler_exponent:    float = Field(default=0.5, gt=0.0)
    beam:                int   = Field(default=DEFAULT_BEAM, ge=1)
    length_penalty:      float = Field(default=DEFAULT_LENGTH_PENALTY, ge=0.0)
    few_shot_steps:      int   = Field(default=3000, ge=0)
    max_bad_steps:       int   = Field(default=3, gt=0)

    @model_validator(mode="after")
    def _check(self) -> "TrainConfig":
        if self.mask_mode == "off" and self.beta > 0:
            raise ValueError("mask_mode=off cannot be combined with beta > 0")
        if self.mode == "mono" and len(self.languages) > 1:
            raise ValueError(f"mono mode takes exactly one language, got {self.languages}")
        return self

    @property
    def weights(self) -> LossWeights:
        return LossWeights(alpha=self.alpha, beta=self.beta)

    @property
    def lr_schedule(self) -> LrSchedule:
        return LrSchedule(peak_lr=self.peak_lr, warmup_steps=self.warmup_steps, kind=self.schedule)
