"""
tests/test_dataio.py
Records, corpus persistence, padding/truncation, batching, splits, the
language sampler, vocabularies and the synthetic corpus generator.
"""
import json
from dataclasses import replace

import numpy as np
import pytest

from config.settings import settings
from dataio import (
    FEW_SHOT_SIZE,
    BatchStream,
    CorpusSplit,
    LanguageSampler,
    MultimodalExample,
    SamplerSpec,
    SynthSpec,
    Vocabulary,
    collate,
    feature_path,
    iterate_batches,
    language_probabilities,
    load_corpus,
    make_batch,
    pad_truncate,
    split_corpus,
    split_ids,
    synth_corpus,
    synth_vocabulary,
    write_corpus,
)
from model import ModelConfig
from tensor_core import CorpusFormatError, InvalidInputError

from .conftest import tiny_synth_spec


def blank_example(config: ModelConfig, article_len: int = 5, summary_len: int = 3,
                  image_count: int = 1, example_id: str = "x", language: str = "en") -> MultimodalExample:
    n, m, c = config.n_images, config.regions_per_image, config.detector_classes
    q = np.zeros((n, m, c), dtype=np.float32)
    q[:image_count, :, 0] = 1.0
    return MultimodalExample(
        id=example_id,
        language=language,
        article_ids=np.arange(article_len) % 50 + 4,
        summary_ids=np.arange(summary_len) % 50 + 4,
        features=np.zeros((n, m, config.d_v)),
        boxes=np.zeros((n, m, 4)),
        q=q,
        image_count=image_count,
    )


# ── Records ───────────────────────────────────────────────────────────────────

class TestExampleValidation:

    def test_synthetic_examples_are_valid(self, tiny_corpus, tiny_config):
        for ex in tiny_corpus:
            ex.validate(tiny_config.vocab_size)

    def test_q_row_not_summing_to_one(self, tiny_corpus):
        ex = tiny_corpus.examples[0]
        q = ex.q.copy()
        q[0, 1] *= 0.8
        with pytest.raises(InvalidInputError, match=r"^q\[0\]\[1\]"):
            replace(ex, q=q).validate()

    def test_padded_image_rows_are_not_checked(self, tiny_config):
        blank_example(tiny_config, image_count=1).validate()

    def test_box_outside_unit_square(self, tiny_corpus):
        ex = tiny_corpus.examples[0]
        boxes = ex.boxes.copy()
        boxes[0, 0, 2] = 1.2
        with pytest.raises(InvalidInputError, match="^boxes"):
            replace(ex, boxes=boxes).validate()

    def test_token_outside_vocabulary(self, tiny_corpus):
        ex = replace(tiny_corpus.examples[0], summary_ids=np.array([40]))
        with pytest.raises(InvalidInputError, match="^summary_ids"):
            ex.validate(vocab_size=32)


# ── Corpus persistence ────────────────────────────────────────────────────────

class TestCorpusIO:

    def test_written_corpus_loads_back(self, tmp_path, tiny_corpus):
        manifest = tmp_path / "corpus.jsonl"
        write_corpus(tiny_corpus, manifest, vocab=synth_vocabulary(tiny_synth_spec()))
        loaded = load_corpus(manifest, vocab_size=32)
        assert [ex.id for ex in loaded] == [ex.id for ex in tiny_corpus]
        first, original = loaded.examples[0], tiny_corpus.examples[0]
        np.testing.assert_array_equal(first.article_ids, original.article_ids)
        np.testing.assert_array_equal(first.features, original.features)
        np.testing.assert_array_equal(first.q, original.q)
        assert first.image_count == original.image_count
        assert (loaded.n_images, loaded.regions_per_image, loaded.d_v, loaded.classes) == (2, 3, 16, 5)

    def test_empty_manifest(self, tmp_path):
        manifest = tmp_path / "empty.jsonl"
        manifest.write_text("")
        assert len(load_corpus(manifest)) == 0

    def test_bad_q_row_names_line_and_field(self, tmp_path, tiny_corpus):
        examples = list(tiny_corpus.examples[:3])
        q = examples[1].q.copy()
        q[0, 0] *= 0.8
        examples[1] = replace(examples[1], q=q)
        manifest = tmp_path / "bad.jsonl"
        write_corpus(tiny_corpus.with_examples(examples), manifest)
        with pytest.raises(CorpusFormatError) as info:
            load_corpus(manifest)
        assert info.value.line == 2
        assert info.value.field == "q[0][0]"
        assert str(manifest) in str(info.value)

    def test_malformed_record(self, tmp_path, tiny_corpus):
        manifest = tmp_path / "m.jsonl"
        write_corpus(tiny_corpus, manifest)
        lines = manifest.read_text().splitlines()
        record = json.loads(lines[2])
        del record["lang"]
        lines[2] = json.dumps(record)
        manifest.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorpusFormatError) as info:
            load_corpus(manifest)
        assert info.value.line == 3
        assert info.value.field == "lang"

    def test_duplicate_id(self, tmp_path, tiny_corpus):
        manifest = tmp_path / "dup.jsonl"
        first = tiny_corpus.examples[0]
        write_corpus(tiny_corpus.with_examples([first, first]), manifest)
        with pytest.raises(CorpusFormatError, match="duplicate"):
            load_corpus(manifest)

    def test_missing_feature_file(self, tmp_path, tiny_corpus):
        manifest = tmp_path / "c.jsonl"
        write_corpus(tiny_corpus, manifest)
        feature_path(manifest).unlink()
        with pytest.raises(CorpusFormatError):
            load_corpus(manifest)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(CorpusFormatError):
            load_corpus(tmp_path / "absent.jsonl")


# ── Padding and batching ──────────────────────────────────────────────────────

class TestPadTruncate:

    def test_long_article_keeps_head(self):
        config = ModelConfig(max_text_len=512)
        padded = pad_truncate(blank_example(config, article_len=600), config)
        assert padded.article_ids.shape == (512,)
        np.testing.assert_array_equal(padded.article_ids, np.arange(512) % 50 + 4)
        assert padded.article_mask.all()

    def test_region_slots_for_three_of_five_images(self):
        config = ModelConfig(n_images=5, regions_per_image=36, d_v=4)
        padded = pad_truncate(blank_example(config, image_count=3), config)
        assert padded.region_mask.shape == (180,)
        assert int(padded.region_mask.sum()) == 108
        assert int((~padded.region_mask).sum()) == 72

    def test_summary_is_clipped_and_terminated(self, tiny_config):
        s = tiny_config.max_summary_len
        padded = pad_truncate(blank_example(tiny_config, summary_len=10), tiny_config)
        np.testing.assert_array_equal(padded.target_ids[: s - 1], (np.arange(10) % 50 + 4)[: s - 1])
        assert padded.target_ids[-1] == settings.end_id
        assert padded.summary_mask.all()
        assert padded.decoder_input[0] == settings.start_id
        np.testing.assert_array_equal(padded.decoder_input[1:], padded.target_ids[:-1])

    def test_short_summary_is_padded(self, tiny_config):
        padded = pad_truncate(blank_example(tiny_config, summary_len=2), tiny_config)
        np.testing.assert_array_equal(padded.target_ids, [4, 5, settings.end_id, 0, 0, 0])
        np.testing.assert_array_equal(padded.summary_mask, [True, True, True, False, False, False])

    def test_exact_article_length_is_identity(self, tiny_config):
        ex = blank_example(tiny_config, article_len=tiny_config.max_text_len)
        padded = pad_truncate(ex, tiny_config)
        np.testing.assert_array_equal(padded.article_ids, ex.article_ids)
        assert padded.article_mask.all()

    def test_feature_width_must_match(self, tiny_config):
        ex = blank_example(tiny_config.model_copy(update={"d_v": 8}), example_id="narrow")
        with pytest.raises(InvalidInputError):
            pad_truncate(ex, tiny_config)


class TestBatching:

    def test_single_language_only(self, bilingual_corpus, tiny_config):
        pool = bilingual_corpus.by_language()
        with pytest.raises(InvalidInputError):
            make_batch([pool["en"][0], pool["fr"][0]], tiny_config)

    def test_empty_batch(self):
        with pytest.raises(InvalidInputError):
            collate([])

    def test_iterate_keeps_order(self, tiny_corpus, tiny_config):
        ids = [i for batch in iterate_batches(tiny_corpus.examples, tiny_config, 3) for i in batch.example_ids]
        assert ids == [ex.id for ex in tiny_corpus]

    def test_stream_covers_every_example_each_epoch(self, tiny_corpus, tiny_config, rng):
        stream = BatchStream(tiny_corpus.examples, tiny_config, 4, rng)
        seen = stream.next().example_ids + stream.next().example_ids
        assert sorted(seen) == sorted(ex.id for ex in tiny_corpus)
        assert stream.epoch == 1
        stream.next()
        assert stream.epoch == 2

    def test_stream_is_seeded(self, tiny_corpus, tiny_config):
        a = BatchStream(tiny_corpus.examples, tiny_config, 3, np.random.default_rng(5))
        b = BatchStream(tiny_corpus.examples, tiny_config, 3, np.random.default_rng(5))
        assert [a.next().example_ids for _ in range(4)] == [b.next().example_ids for _ in range(4)]


# ── Splits ────────────────────────────────────────────────────────────────────

IDS = [f"ex-{i:04d}" for i in range(1000)]


class TestSplits:

    def test_low_tier_ratios(self):
        assert split_ids(IDS, "low", 0).sizes() == {"train": 800, "validation": 100, "test": 100, "few_shot": 0}

    def test_zero_tier(self):
        split = split_ids(IDS, "zero", 0)
        assert split.sizes() == {"train": 0, "validation": 450, "test": 450, "few_shot": FEW_SHOT_SIZE}

    def test_parts_are_disjoint_and_complete(self):
        split = split_ids(IDS, "mid-high", 3)
        parts = split.train + split.validation + split.test
        assert sorted(parts) == IDS

    def test_same_seed_same_split(self):
        assert split_ids(IDS, "low", 11) == split_ids(IDS, "low", 11)
        assert split_ids(IDS, "low", 11) != split_ids(IDS, "low", 12)

    def test_zero_tier_needs_enough_examples(self):
        with pytest.raises(InvalidInputError):
            split_ids(IDS[:101], "zero", 0)

    def test_unknown_tier(self):
        with pytest.raises(InvalidInputError):
            split_ids(IDS, "high", 0)

    def test_per_language_split(self, bilingual_corpus):
        split = split_corpus(bilingual_corpus, {"en": "mid-high", "fr": "low"}, seed=0)
        assert sum(split.sizes().values()) == len(bilingual_corpus)

    def test_save_and_load(self, tmp_path):
        split = split_ids(IDS[:20], "low", 0)
        split.save(tmp_path / "split.json")
        assert CorpusSplit.load(tmp_path / "split.json") == split


# ── Language sampler ──────────────────────────────────────────────────────────

class TestSampler:

    def test_square_root_smoothing(self):
        probs = language_probabilities({"A": 400, "B": 100}, 0.5)
        assert probs["A"] == pytest.approx(2 / 3)
        assert probs["B"] == pytest.approx(1 / 3)

    def test_equal_counts_are_uniform(self):
        probs = language_probabilities({"A": 7, "B": 7, "C": 7})
        assert all(p == pytest.approx(1 / 3) for p in probs.values())

    def test_exponent_one_is_proportional(self):
        probs = language_probabilities({"A": 300, "B": 100}, 1.0)
        assert probs["A"] == pytest.approx(0.75)

    def test_empirical_frequencies(self):
        sampler = LanguageSampler(SamplerSpec(counts={"A": 400, "B": 100}, seed=0))
        draws = sampler.draws(100_000)
        assert abs(draws.count("A") / len(draws) - 2 / 3) < 0.02

    def test_rejects_empty_pool(self):
        with pytest.raises(InvalidInputError):
            language_probabilities({"A": 0})


# ── Vocabulary ────────────────────────────────────────────────────────────────

class TestVocabulary:

    def test_encode_and_decode(self):
        vocab = Vocabulary(["<pad>", "</s>", "<s>", "<unk>", "cat", "sat"])
        assert vocab.encode(["cat", "dog", "sat"]) == [4, settings.unk_id, 5]
        assert vocab.decode([2, 4, 5, 1, 4, 0]) == ["cat", "sat"]
        assert vocab.detokenize([4, 5]) == "cat sat"

    def test_reserved_prefix_required(self):
        with pytest.raises(InvalidInputError):
            Vocabulary(["cat", "sat"])

    def test_numeric_fallback(self):
        assert Vocabulary.numeric(8).detokenize([4, 7]) == "w4 w7"


# ── Synthetic corpus ──────────────────────────────────────────────────────────

class TestSynth:

    def test_same_seed_same_corpus(self):
        spec = tiny_synth_spec(sizes=(5,))
        a, b = synth_corpus(3, spec), synth_corpus(3, spec)
        for x, y in zip(a, b):
            assert x.id == y.id
            np.testing.assert_array_equal(x.article_ids, y.article_ids)
            np.testing.assert_array_equal(x.features, y.features)

    def test_informative_regions_spell_the_summary(self):
        spec = tiny_synth_spec(sizes=(20,), informativeness=1.0)
        for ex in synth_corpus(0, spec):
            topics = ex.q[: ex.image_count].argmax(axis=-1)
            assert (topics == topics[:, :1]).all()
            decoded = [spec.topic_word(0, int(t)) for t in topics[:, 0]]
            assert decoded == ex.summary_ids.tolist()

    def test_uninformative_image_count_is_independent_of_summary(self):
        spec = tiny_synth_spec(sizes=(500,), informativeness=0.0)
        corpus = synth_corpus(5, spec)
        same = sum(ex.image_count == ex.summary_ids.size for ex in corpus)
        # two image slots: a match happens half the time when the draws are independent
        assert 200 < same < 300

    def test_informative_image_count_follows_summary(self):
        for ex in synth_corpus(5, tiny_synth_spec(sizes=(50,), informativeness=1.0)):
            assert ex.image_count == ex.summary_ids.size

    def test_sizes_and_ids(self):
        corpus = synth_corpus(7, tiny_synth_spec(languages=("en", "fr"), sizes=(4, 2)))
        assert [len(v) for v in corpus.by_language().values()] == [4, 2]
        assert corpus.examples[0].id == "en-000000"

    def test_spec_checks_sizes(self):
        with pytest.raises(ValueError):
            SynthSpec(languages=["en", "fr"], sizes=[10])
