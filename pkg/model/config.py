"""
model/config.py
Architecture hyperparameters, validated with pydantic.
"""
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ModelConfig(BaseModel):
    """
    All architecture hyperparameters of the vision-guided summarizer.

    d is the text/model width, d_c the fusion width, d_v the visual width;
    `layers` is the depth of both the text encoder and the decoder,
    `visual_layers` the depth of the visual encoder.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    vocab_size:        int   = Field(default=512, gt=4)
    d:                 int   = Field(default=64, gt=0)
    d_c:               int   = Field(default=32, gt=0)
    d_v:               int   = Field(default=32, gt=1)
    layers:            int   = Field(default=2, ge=0)
    visual_layers:     int   = Field(default=1, ge=0)
    heads:             int   = Field(default=4, gt=0)
    ffn_dim:           int   = Field(default=128, gt=0)
    max_text_len:      int   = Field(default=64, gt=0)
    max_summary_len:   int   = Field(default=16, gt=1)
    n_images:          int   = Field(default=3, gt=0)
    regions_per_image: int   = Field(default=4, gt=0)
    detector_classes:  int   = Field(default=16, gt=1)
    dropout:           float = Field(default=0.1, ge=0.0, lt=1.0)
    label_smoothing:   float = Field(default=0.1, ge=0.0, lt=1.0)
    precision:         int   = 32
    init_seed:         int   = Field(default=0, ge=0)

    @field_validator("precision")
    @classmethod
    def _check_precision(cls, value: int) -> int:
        if value not in (32, 64):
            raise ValueError(f"precision must be 32 or 64, got {value}")
        return value

    @model_validator(mode="after")
    def _check_divisibility(self) -> "ModelConfig":
        for name in ("d", "d_c", "d_v"):
            width = getattr(self, name)
            if width % self.heads:
                raise ValueError(f"{name}={width} must be divisible by heads={self.heads}")
        return self

    @property
    def visual_len(self) -> int:
        """Length of the flattened region sequence, n * m."""
        return self.n_images * self.regions_per_image


FULL_MODEL = ModelConfig(
    vocab_size=512,
    d=768, d_c=256, d_v=2048,
    layers=12, visual_layers=4, heads=8, ffn_dim=2048,
    max_text_len=512, max_summary_len=84,
    n_images=5, regions_per_image=36, detector_classes=1600,
    dropout=0.1, label_smoothing=0.1,
)

DESK_MODEL = ModelConfig()

TINY_MODEL = ModelConfig(
    vocab_size=32, d=8, d_c=8, d_v=16,
    layers=1, visual_layers=1, heads=2, ffn_dim=16,
    max_text_len=12, max_summary_len=6,
    n_images=2, regions_per_image=3, detector_classes=5,
    dropout=0.0, label_smoothing=0.1,
)

PRESETS: dict[str, ModelConfig] = {
    "full": FULL_MODEL,
    "desk": DESK_MODEL,
    "tiny": TINY_MODEL,
}
