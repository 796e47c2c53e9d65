"""
tests/test_model.py
Encoders, fusion, decoder, the three forward paths and beam search.
All numeric checks run the tiny configuration in 64-bit.
"""
import math
from dataclasses import replace

import numpy as np
import pytest
from pydantic import ValidationError

from dataio import make_batch
from model import ModelConfig, SovMasModel, VisualEncoder, beam_search, generate, greedy_decode, length_penalty
from model.beam import model_step_fn, strip_special
from model.layers import TransformerStack
from objectives import MaskPlan, loss_mas, loss_mim, mask_one_image, mim_targets
from tensor_core import CheckpointError, InvalidInputError, Tensor, backward, log_softmax


# ── Configuration ─────────────────────────────────────────────────────────────

class TestModelConfig:

    def test_widths_must_divide_heads(self):
        with pytest.raises(ValidationError):
            ModelConfig(d=10, heads=4)

    def test_precision_must_be_32_or_64(self):
        with pytest.raises(ValidationError):
            ModelConfig(precision=16)

    def test_visual_len(self, tiny_config):
        assert tiny_config.visual_len == tiny_config.n_images * tiny_config.regions_per_image


# ── Encoders and fusion ───────────────────────────────────────────────────────

class TestEncoders:

    def test_zero_token_table_yields_positions(self, model64):
        model64.text_encoder.token_embedding.data[:] = 0.0
        out = model64.embed_text(np.array([[5, 6, 7]]))
        np.testing.assert_array_equal(out.data[0], model64.text_encoder.positions[:3])

    def test_same_token_differs_by_position(self, model64):
        out = model64.embed_text(np.array([[9, 9]])).data[0]
        pe = model64.text_encoder.positions
        np.testing.assert_allclose(out[0] - out[1], pe[0] - pe[1], atol=1e-12)

    def test_full_length_accepted_longer_rejected(self, model64, tiny_config64):
        t = tiny_config64.max_text_len
        assert model64.embed_text(np.ones((1, t), dtype=np.int64)).shape == (1, t, tiny_config64.d)
        with pytest.raises(InvalidInputError):
            model64.embed_text(np.ones((1, t + 1), dtype=np.int64))

    def test_out_of_vocabulary_id(self, model64):
        with pytest.raises(InvalidInputError):
            model64.embed_text(np.array([[99]]))

    def test_text_encoder_is_permutation_equivariant(self, model64, tiny_batch):
        assert tiny_batch.article_mask[:, :3].all()
        z0 = model64.embed_text(tiny_batch.article_ids)
        perm = np.arange(z0.shape[1])
        perm[[0, 2]] = perm[[2, 0]]
        base = model64.encode_text(z0, tiny_batch.article_mask).data
        swapped = model64.encode_text(Tensor(z0.data[:, perm], dtype=np.float64), tiny_batch.article_mask[:, perm])
        np.testing.assert_allclose(swapped.data, base[:, perm], atol=1e-10)

    def test_empty_stack_is_identity(self, rng):
        stack = TransformerStack(8, 0, 2, 16, rng, np.float64, 0.0, None)
        x = Tensor(rng.normal(size=(2, 3, 8)), dtype=np.float64)
        assert stack(x, np.ones((2, 3), dtype=bool)) is x

    def test_zero_visual_tables_pass_features_through(self, model64, tiny_batch):
        enc = model64.visual_encoder
        for t in (enc.box_projection.w, enc.box_projection.b, enc.image_embedding, enc.region_embedding):
            t.data[:] = 0.0
        out = model64.embed_vision(tiny_batch.features, tiny_batch.boxes)
        np.testing.assert_allclose(out.data, tiny_batch.features, atol=1e-7)

    def test_image_embedding_alone_ties_regions_of_an_image(self, model64, tiny_config64):
        enc = model64.visual_encoder
        for t in (enc.box_projection.w, enc.box_projection.b, enc.region_embedding):
            t.data[:] = 0.0
        n, m, d_v = tiny_config64.n_images, tiny_config64.regions_per_image, tiny_config64.d_v
        out = model64.embed_vision(np.zeros((1, n * m, d_v)), np.zeros((1, n * m, 4))).data[0]
        for i in range(n):
            block = out[i * m:(i + 1) * m]
            np.testing.assert_array_equal(block, np.broadcast_to(block[0], block.shape))

    def test_large_image_grid_length(self, rng):
        enc = VisualEncoder(5, 36, 8, 0, 2, 16, rng, np.float64, 0.0, None)
        out = enc.embed(np.zeros((1, 5, 36, 8)), np.zeros((1, 180, 4)))
        assert out.shape == (1, 180, 8)

    def test_box_outside_unit_square(self, model64, tiny_batch):
        boxes = tiny_batch.boxes.copy()
        boxes[0, 0, 0] = 1.5
        with pytest.raises(InvalidInputError):
            model64.embed_vision(tiny_batch.features, boxes)


class TestFusion:

    def _encoded(self, model, batch):
        z_text = model.encode_text(model.embed_text(batch.article_ids), batch.article_mask)
        z_vision = model.encode_vision(model.embed_vision(batch.features, batch.boxes), batch.region_mask)
        return z_text, z_vision

    def test_zero_pre_activation_gives_half_gate(self, model64, tiny_batch):
        model64.fusion.gate.w.data[:] = 0.0
        model64.fusion.gate.b.data[:] = 0.0
        _, gate = model64.fuse(*self._encoded(model64, tiny_batch), tiny_batch.region_mask)
        np.testing.assert_allclose(gate.data, 0.5)

    def test_closed_gate_suppresses_vision(self, model64, tiny_batch):
        model64.fusion.gate.w.data[:] = 0.0
        model64.fusion.gate.b.data[:] = -1e4
        z_text, z_vision = self._encoded(model64, tiny_batch)
        fused, gate = model64.fuse(z_text, z_vision, tiny_batch.region_mask)
        assert np.all(gate.data == 0.0)
        text_only = np.concatenate([z_text.data, np.zeros(z_text.shape[:2] + (model64.config.d_c,))], axis=-1)
        merge = model64.fusion.merge
        np.testing.assert_allclose(fused.data, text_only @ merge.w.data + merge.b.data, atol=1e-10)

    def test_output_width_is_d(self, model64, tiny_batch, tiny_config64):
        fused, gate = model64.fuse(*self._encoded(model64, tiny_batch), tiny_batch.region_mask)
        assert fused.shape == (2, tiny_config64.max_text_len, tiny_config64.d)
        assert gate.shape == (2, tiny_config64.max_text_len, tiny_config64.d_c)


# ── Forward paths ─────────────────────────────────────────────────────────────

class TestForwardPaths:

    def test_mas_shapes_and_normalisation(self, model64, tiny_batch, tiny_config64):
        out = model64.forward_mas(tiny_batch)
        assert out.shape == (2, tiny_config64.max_summary_len, tiny_config64.vocab_size)
        np.testing.assert_allclose(np.exp(out.data).sum(axis=-1), 1.0, atol=1e-10)

    def test_identical_examples_identical_rows(self, model64, tiny_corpus, tiny_config64):
        ex = tiny_corpus.examples[0]
        out = model64.forward_mas(make_batch([ex, ex], tiny_config64)).data
        np.testing.assert_allclose(out[0], out[1], atol=1e-12)

    def test_zero_output_head_gives_ln_v(self, model64, tiny_batch, tiny_config64):
        model64.decoder.w_o.data[:] = 0.0
        model64.decoder.b_o.data[:] = 0.0
        loss = loss_mas(model64.forward_mas(tiny_batch), tiny_batch.target_ids, 0.1)
        assert loss.item() == pytest.approx(math.log(tiny_config64.vocab_size))

    def test_zero_bridge_equals_vision_free_decoding(self, model64, tiny_batch, tiny_config64):
        model64.vis2sum_bridge.w.data[:] = 0.0
        out = model64.forward_vis2sum(tiny_batch).data
        zero_memory = Tensor(np.zeros(tiny_batch.region_mask.shape + (tiny_config64.d,)), dtype=np.float64)
        expected = log_softmax(model64.decode(tiny_batch.decoder_input, zero_memory, tiny_batch.region_mask)).data
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_decoder_is_causal(self, model64, tiny_batch, tiny_config64):
        memory, mask = model64.mas_memory(tiny_batch)
        ids = tiny_batch.decoder_input.copy()
        base = model64.decode(ids, memory, mask).data
        ids[:, 3] = (ids[:, 3] + 7) % tiny_config64.vocab_size
        changed = model64.decode(ids, memory, mask).data
        np.testing.assert_allclose(base[:, :3], changed[:, :3], atol=1e-12)
        assert not np.allclose(base[:, 3], changed[:, 3])

    def test_article_padding_is_invisible(self, model64, tiny_batch):
        assert not tiny_batch.article_mask[:, -1].any()
        articles = tiny_batch.article_ids.copy()
        articles[:, -1] = 5
        before = model64.forward_mas(tiny_batch).data
        after = model64.forward_mas(tiny_batch.with_articles(articles)).data
        np.testing.assert_allclose(before, after, atol=1e-12)

    def test_padded_image_slots_are_invisible(self, model64, tiny_corpus, tiny_config64, rng):
        ex = replace(tiny_corpus.examples[0], image_count=1)
        batch = make_batch([ex], tiny_config64)
        m = tiny_config64.regions_per_image
        assert batch.region_mask[0, :m].all() and not batch.region_mask[0, m:].any()
        features = batch.features.copy()
        features[:, m:] = rng.normal(size=features[:, m:].shape)
        noisy = batch.with_features(features)
        np.testing.assert_allclose(model64.forward_mas(batch).data, model64.forward_mas(noisy).data, atol=1e-12)
        np.testing.assert_allclose(
            model64.forward_vis2sum(batch).data, model64.forward_vis2sum(noisy).data, atol=1e-12
        )

    def test_example_without_images_ignores_every_slot(self, model64, tiny_corpus, tiny_config64, rng):
        ex = replace(tiny_corpus.examples[0], image_count=0)
        batch = make_batch([ex], tiny_config64)
        assert not batch.region_mask.any()
        noisy = batch.with_features(rng.normal(size=batch.features.shape) * 10.0)
        for forward in (model64.forward_mas, model64.forward_vis2sum):
            before = loss_mas(forward(batch), batch.target_ids, 0.1).item()
            assert loss_mas(forward(noisy), batch.target_ids, 0.1).item() == before

    def test_empty_article_ignores_padded_tokens(self, model64, tiny_corpus, tiny_config64):
        ex = replace(tiny_corpus.examples[0], article_ids=np.zeros(0, dtype=np.int64))
        batch = make_batch([ex], tiny_config64)
        assert not batch.article_mask.any()
        changed = batch.with_articles(np.full_like(batch.article_ids, 5))
        np.testing.assert_array_equal(model64.forward_mas(batch).data, model64.forward_mas(changed).data)

    def test_mim_distributions_per_masked_slot(self, model64, tiny_batch, tiny_config64, rng):
        masked, plan = mask_one_image(tiny_batch, rng, tiny_config64.regions_per_image)
        out = model64.forward_mim(masked, plan)
        assert out.shape == (plan.count, tiny_config64.detector_classes)
        np.testing.assert_allclose(out.data.sum(axis=-1), 1.0, atol=1e-12)

    def test_masked_features_get_no_gradient(self, model64, tiny_batch, tiny_config64, rng):
        masked, plan = mask_one_image(tiny_batch, rng, tiny_config64.regions_per_image)
        features = Tensor(tiny_batch.features, requires_grad=True, dtype=np.float64)
        predicted = model64.forward_mim(masked, plan, features=features)
        backward(loss_mim(predicted, mim_targets(tiny_batch.q, plan), plan))
        assert np.all(features.grad[plan.masked] == 0.0)
        visible = ~plan.masked & tiny_batch.region_mask
        assert np.any(features.grad[visible] != 0.0)

    def test_mim_needs_a_masked_region(self, model64, tiny_batch):
        plan = MaskPlan("mim", np.zeros(tiny_batch.region_mask.shape, dtype=bool))
        with pytest.raises(InvalidInputError):
            model64.forward_mim(tiny_batch, plan)

    def test_mim_plan_shape_must_match(self, model64, tiny_batch):
        plan = MaskPlan("mim", np.ones((1, 2), dtype=bool))
        with pytest.raises(InvalidInputError):
            model64.forward_mim(tiny_batch, plan)


# ── Parameters ────────────────────────────────────────────────────────────────

class TestStateDict:

    def test_load_reproduces_outputs(self, tiny_config64, tiny_batch):
        source = SovMasModel(tiny_config64).eval()
        target = SovMasModel(tiny_config64.model_copy(update={"init_seed": 9})).eval()
        target.load_state_dict(source.state_dict())
        np.testing.assert_array_equal(source.forward_mas(tiny_batch).data, target.forward_mas(tiny_batch).data)

    def test_missing_parameter(self, model64):
        state = model64.state_dict()
        state.pop(next(iter(state)))
        with pytest.raises(CheckpointError):
            model64.load_state_dict(state)

    def test_shape_mismatch(self, model64):
        state = model64.state_dict()
        state["decoder.b_o"] = np.zeros(3)
        with pytest.raises(CheckpointError):
            model64.load_state_dict(state)

    def test_parameter_names_are_dotted(self, model64):
        names = model64.named_parameters()
        assert "text_encoder.token_embedding" in names
        assert "visual_encoder.stack.layers.0.attn.w_q" in names
        assert model64.parameter_count() == sum(p.size for p in names.values())


# ── Decoding ──────────────────────────────────────────────────────────────────

END = 1


def table_step_fn(table: dict[tuple, list[float]], default: list[float]):
    """Step function over a fixed prefix -> distribution table (tokens 0..3)."""

    def step(prefixes):
        return np.log(np.array([table.get(tuple(p), default) for p in prefixes]))

    return step


class TestBeamSearch:

    def test_length_penalty(self):
        assert length_penalty(1, 0.6) == pytest.approx(1.0)
        assert length_penalty(7, 0.0) == 1.0
        assert length_penalty(7, 1.0) == pytest.approx(2.0)

    def test_beam_one_matches_greedy(self, rng):
        table = rng.dirichlet(np.ones(6), size=(8, 6))

        def step(prefixes):
            rows = [table[len(p) % 8, p[-1] if p else 0] for p in prefixes]
            return np.log(np.array(rows))

        greedy = greedy_decode(step, max_len=8, end_id=END)
        beam = beam_search(step, beam=1, gamma=0.6, max_len=8, end_id=END)
        assert beam.tokens == greedy.tokens
        assert beam.log_prob == greedy.log_prob

    def test_wider_beam_finds_the_better_summary(self):
        table = {
            (): [1e-9, 0.1, 0.5, 0.4],
            (2,): [1e-9, 0.3, 0.4, 0.3],
            (3,): [1e-9, 0.9, 0.05, 0.05],
        }
        step = table_step_fn(table, default=[1e-9, 1.0, 1e-9, 1e-9])
        assert greedy_decode(step, max_len=5, end_id=END).tokens == (2, 2, END)
        best = beam_search(step, beam=2, gamma=0.0, max_len=5, end_id=END)
        assert best.tokens == (3, END)
        assert best.log_prob == pytest.approx(math.log(0.36))

    def test_max_len_keeps_unfinished(self):
        step = table_step_fn({}, default=[1e-9, 1e-9, 0.9, 0.1])
        best = beam_search(step, beam=2, gamma=0.6, max_len=3, end_id=END)
        assert len(best.tokens) == 3 and END not in best.tokens

    def test_invalid_arguments(self):
        step = table_step_fn({}, default=[0.25] * 4)
        with pytest.raises(InvalidInputError):
            beam_search(step, beam=0)
        with pytest.raises(InvalidInputError):
            beam_search(step, beam=2, max_len=0)

    def test_strip_special(self):
        assert strip_special([5, 6, END, 7], END) == [5, 6]

    def test_model_beam_one_is_greedy(self, model64, tiny_batch, tiny_config64):
        single = tiny_batch.select([0])
        memory, mask = model64.mas_memory(single)
        step = model_step_fn(model64, memory, mask, start_id=2)
        s = tiny_config64.max_summary_len
        assert beam_search(step, 1, 0.6, s, END).tokens == greedy_decode(step, s, END).tokens

    def test_generate_returns_ids_without_end(self, model64, tiny_batch, tiny_config64):
        for path in ("mas", "vis2sum"):
            outputs = generate(model64, tiny_batch, beam=2, gamma=0.6, path=path)
            assert len(outputs) == tiny_batch.size
            for tokens in outputs:
                assert len(tokens) <= tiny_config64.max_summary_len
                assert END not in tokens
                assert all(0 <= t < tiny_config64.vocab_size for t in tokens)
