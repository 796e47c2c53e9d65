"""model package"""
from .beam import Hypothesis, beam_search, generate, greedy_decode, length_penalty
from .config import DESK_MODEL, FULL_MODEL, PRESETS, TINY_MODEL, ModelConfig
from .decoder import Decoder
from .encoders import TextEncoder, VisualEncoder
from .fusion import FusionLayer
from .sovmas import SovMasModel

__all__ = [
    "ModelConfig", "FULL_MODEL", "DESK_MODEL", "TINY_MODEL", "PRESETS",
    "TextEncoder", "VisualEncoder", "FusionLayer", "Decoder", "SovMasModel",
    "Hypothesis", "beam_search", "greedy_decode", "length_penalty", "generate",
]
