"""dataio package"""
from .batching import BatchStream, PaddedExample, collate, iterate_batches, make_batch, pad_truncate
from .corpus_io import feature_path, load_corpus, vocab_path, write_corpus
from .records import Batch, Corpus, ManifestRecord, MultimodalExample
from .sampler import LanguageSampler, SamplerSpec, language_probabilities, language_sampler
from .splits import FEW_SHOT_SIZE, TIERS, CorpusSplit, split_corpus, split_ids
from .synth import SynthSpec, synth_corpus, synth_vocabulary
from .vocab import Vocabulary

__all__ = [
    "MultimodalExample", "Corpus", "ManifestRecord", "Batch",
    "load_corpus", "write_corpus", "feature_path", "vocab_path",
    "pad_truncate", "collate", "make_batch", "iterate_batches", "BatchStream", "PaddedExample",
    "CorpusSplit", "split_corpus", "split_ids", "TIERS", "FEW_SHOT_SIZE",
    "SamplerSpec", "LanguageSampler", "language_sampler", "language_probabilities",
    "SynthSpec", "synth_corpus", "synth_vocabulary",
    "Vocabulary",
]
