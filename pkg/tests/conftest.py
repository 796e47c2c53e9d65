"""
tests/conftest.py
Shared fixtures: the tiny reference configuration, a matching synthetic
corpus, and ready-made batches.
Run with: pytest tests/ -v   (add -m "not slow" to skip training runs)
"""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from dataio import SynthSpec, make_batch, synth_corpus  # noqa: E402
from model import TINY_MODEL, ModelConfig, SovMasModel  # noqa: E402


def tiny_synth_spec(languages=("en",), sizes=(8,), informativeness: float = 1.0) -> SynthSpec:
    """Synthetic corpus whose shapes match TINY_MODEL."""
    return SynthSpec(
        languages=list(languages),
        sizes=list(sizes),
        vocab_size=TINY_MODEL.vocab_size,
        classes=TINY_MODEL.detector_classes,
        n_images=TINY_MODEL.n_images,
        regions_per_image=TINY_MODEL.regions_per_image,
        d_v=TINY_MODEL.d_v,
        informativeness=informativeness,
        article_filler=(3, 6),
    )


@pytest.fixture
def tiny_config() -> ModelConfig:
    return TINY_MODEL


@pytest.fixture
def tiny_config64() -> ModelConfig:
    return TINY_MODEL.model_copy(update={"precision": 64})


@pytest.fixture
def tiny_corpus():
    return synth_corpus(0, tiny_synth_spec())


@pytest.fixture
def bilingual_corpus():
    return synth_corpus(1, tiny_synth_spec(languages=("en", "fr"), sizes=(8, 6)))


@pytest.fixture
def tiny_batch(tiny_corpus, tiny_config64):
    return make_batch(tiny_corpus.examples[:2], tiny_config64)


@pytest.fixture
def model64(tiny_config64) -> SovMasModel:
    return SovMasModel(tiny_config64).eval()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
