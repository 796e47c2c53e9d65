"""
tests/test_trainer.py
Training configuration, the joint training loop, run artefacts, evaluation
tables, few-shot continuation and the objective ablation.
"""
import numpy as np
import pytest
from pydantic import ValidationError

from config.settings import settings
from dataio import SynthSpec, Vocabulary, iterate_batches, synth_vocabulary
from model import SovMasModel
from tensor_core import (
    InvalidInputError,
    NonFiniteError,
    TrainingDivergedError,
    load_checkpoint,
    save_checkpoint,
)
from trainer import (
    AVG_ROW,
    BEST_CHECKPOINT,
    LAST_CHECKPOINT,
    METRICS_LOG,
    PLOT_CSV,
    RunMetrics,
    StepRecord,
    TrainConfig,
    Trainer,
    evaluate,
    few_shot_continue,
    rouge_table,
    run_ablation,
    to_rouge_tokens,
)


def quick_config(**overrides) -> TrainConfig:
    base = dict(languages=["en"], steps=3, batch_size=2, warmup_steps=10,
                checkpoint_interval=0, eval_interval=0, eval_examples=4, beam=2)
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture
def pools(tiny_corpus):
    return tiny_corpus.by_language()


class TestTrainConfig:

    def test_defaults(self):
        cfg = TrainConfig()
        assert (cfg.alpha, cfg.beta, cfg.mask_mode, cfg.mask_probability) == (1.0, 1.0, "mim", 0.15)
        assert cfg.weights.alpha == 1.0

    def test_mask_off_with_mim_weight(self):
        with pytest.raises(ValidationError):
            TrainConfig(mask_mode="off", beta=1.0)

    def test_mono_takes_one_language(self):
        with pytest.raises(ValidationError):
            TrainConfig(mode="mono", languages=["en", "fr"])

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            TrainConfig(learning_rate=0.1)


class TestTrainingLoop:

    def test_same_seed_same_parameters(self, tiny_config, pools):
        results = []
        for _ in range(2):
            model = SovMasModel(tiny_config)
            Trainer(model, quick_config()).train(pools)
            results.append(model.state_dict())
        for name, value in results[0].items():
            np.testing.assert_array_equal(value, results[1][name])

    def test_parameters_move(self, tiny_config, pools):
        model = SovMasModel(tiny_config)
        before = model.state_dict()
        Trainer(model, quick_config(steps=1)).train(pools)
        after = model.state_dict()
        assert any(not np.array_equal(before[k], after[k]) for k in before)

    def test_zero_weighted_objectives_are_still_logged(self, tiny_config, pools):
        result = Trainer(SovMasModel(tiny_config), quick_config(alpha=0.0, beta=0.5)).train(pools)
        for rec in result.metrics.steps:
            assert rec.status == "ok"
            assert rec.l_vis2sum is not None and rec.l_mim is not None
            assert rec.j == pytest.approx(rec.l_mas + 0.5 * rec.l_mim)

    def test_mask_off_has_no_mim_loss(self, tiny_config, pools):
        result = Trainer(SovMasModel(tiny_config), quick_config(mask_mode="off", beta=0.0)).train(pools)
        assert all(rec.l_mim is None for rec in result.metrics.steps)

    def test_region_masking_mode(self, tiny_config, pools):
        result = Trainer(SovMasModel(tiny_config), quick_config(mask_mode="mrm", mask_probability=0.5)).train(pools)
        assert [rec.step for rec in result.metrics.steps] == [1, 2, 3]

    def test_multilingual_batches_are_single_language(self, tiny_config, bilingual_corpus):
        cfg = quick_config(mode="multi", languages=["en", "fr"], steps=6)
        result = Trainer(SovMasModel(tiny_config), cfg).train(bilingual_corpus.by_language())
        assert {rec.language for rec in result.metrics.steps} <= {"en", "fr"}
        assert len(result.metrics.steps) == 6

    @pytest.mark.slow
    def test_objective_descends_for_most_seeds(self, tiny_config, pools):
        descended = 0
        for seed in range(10):
            cfg = quick_config(steps=500, batch_size=4, seed=seed, schedule="constant", peak_lr=3e-3)
            model = SovMasModel(tiny_config.model_copy(update={"init_seed": seed}))
            j = {rec.step: rec.j for rec in Trainer(model, cfg).train(pools).metrics.steps}
            descended += j[500] < j[10]
        assert descended >= 9

    def test_missing_language_pool(self, tiny_config, pools):
        with pytest.raises(InvalidInputError):
            Trainer(SovMasModel(tiny_config), quick_config(languages=["de"])).train(pools)

    def test_non_finite_step_is_skipped(self, tiny_config, pools, monkeypatch):
        trainer = Trainer(SovMasModel(tiny_config), quick_config())
        original = trainer.compute_losses
        calls = {"n": 0}

        def flaky(batch):
            calls["n"] += 1
            if calls["n"] == 1:
                raise NonFiniteError("L_MAS is nan")
            return original(batch)

        monkeypatch.setattr(trainer, "compute_losses", flaky)
        before = trainer.model.state_dict()
        record = trainer.train_step(next(iterate_batches(pools["en"], tiny_config, 2)))
        assert record.status == "skipped"
        assert trainer.optimizer.step == 0
        for name, value in trainer.model.state_dict().items():
            np.testing.assert_array_equal(value, before[name])
        result = trainer.train(pools)
        assert [rec.status for rec in result.metrics.steps] == ["ok"] * 3

    def test_consecutive_non_finite_steps_abort(self, tiny_config, pools, monkeypatch):
        trainer = Trainer(SovMasModel(tiny_config), quick_config(steps=10, max_bad_steps=3))

        def always_nan(batch):
            raise NonFiniteError("L_MAS is nan")

        monkeypatch.setattr(trainer, "compute_losses", always_nan)
        with pytest.raises(TrainingDivergedError):
            trainer.train(pools)
        assert trainer.step == 3


class TestRunArtefacts:

    def test_run_directory_contents(self, tmp_path, tiny_config, tiny_corpus, pools):
        cfg = quick_config(steps=2, eval_interval=1, checkpoint_interval=1)
        result = Trainer(SovMasModel(tiny_config), cfg, tmp_path).train(pools, tiny_corpus.examples[:3])
        for name in (BEST_CHECKPOINT, LAST_CHECKPOINT, METRICS_LOG, PLOT_CSV):
            assert (tmp_path / name).exists()
        assert result.best_score is not None
        loaded = RunMetrics.load(tmp_path / METRICS_LOG)
        assert [r.step for r in loaded.steps] == [1, 2]
        assert {e.language for e in loaded.evals} == {"en", AVG_ROW}
        header = (tmp_path / PLOT_CSV).read_text().splitlines()[0]
        assert header == "step,language,l_mas,l_vis2sum,l_mim,j,lr"

    def test_prometheus_textfile(self, tmp_path, tiny_config, pools, monkeypatch):
        monkeypatch.setattr(settings, "write_metrics_file", True)
        Trainer(SovMasModel(tiny_config), quick_config(steps=1), tmp_path).train(pools)
        text = (tmp_path / "metrics.prom").read_text()
        assert "sovmas_train_steps_total" in text
        assert 'sovmas_step_duration_seconds_count{stage="train_step"}' in text

    def test_steps_must_increase(self):
        metrics = RunMetrics()
        metrics.add_step(StepRecord(step=2, language="en"))
        with pytest.raises(InvalidInputError):
            metrics.add_step(StepRecord(step=2, language="en"))

    def test_checkpoint_reload_decodes_identically(self, tmp_path, tiny_config, tiny_corpus, pools):
        model = SovMasModel(tiny_config)
        result = Trainer(model, quick_config(steps=2), tmp_path).train(pools)
        params, optimizer = load_checkpoint(result.last_checkpoint)
        assert optimizer is not None and optimizer.step == 2
        restored = SovMasModel(tiny_config)
        restored.load_state_dict(params)
        restored.eval()
        test = tiny_corpus.examples[:4]
        a = evaluate(model, test, beam=2)
        b = evaluate(restored, test, beam=2)
        assert a.rows == b.rows


class TestRougeTable:

    def test_perfect_candidates(self):
        table = rouge_table([("en", [4, 5], [4, 5]), ("fr", [6], [6])])
        assert table.rows[AVG_ROW] == pytest.approx({"rouge1": 100.0, "rouge2": 50.0, "rougeL": 100.0})
        assert table.rows["en"]["rouge2"] == pytest.approx(100.0)

    def test_average_is_unweighted_over_languages(self):
        table = rouge_table([("en", [4], [4]), ("en", [4], [4]), ("fr", [6], [7])])
        assert table.rows[AVG_ROW]["rouge1"] == pytest.approx(50.0)

    def test_empty_candidates_score_zero(self):
        table = rouge_table([("en", [], [4, 5])])
        assert table.rows["en"] == {"rouge1": 0.0, "rouge2": 0.0, "rougeL": 0.0}

    @pytest.mark.parametrize("language", ["en", "zh"])
    def test_one_token_per_vocabulary_id(self, language):
        spec = SynthSpec(languages=["en", "zh"], sizes=[1, 1], vocab_size=32, classes=5,
                         n_images=2, regions_per_image=3, d_v=16)
        k = spec.languages.index(language)
        vocab = Vocabulary(synth_vocabulary(spec))
        ref = [spec.topic_word(k, 1), spec.topic_word(k, 2), settings.end_id]
        wrong = [spec.topic_word(k, 3), spec.topic_word(k, 4)]
        assert to_rouge_tokens(ref, vocab) == [f"{language}:t1", f"{language}:t2"]
        table = rouge_table([(language, to_rouge_tokens(wrong, vocab), to_rouge_tokens(ref, vocab))])
        assert table.rows[language] == {"rouge1": 0.0, "rouge2": 0.0, "rougeL": 0.0}

    def test_numeric_vocabulary_keeps_ids_whole(self):
        vocab = Vocabulary.numeric(32)
        table = rouge_table([("zh", to_rouge_tokens([12, 21], vocab), to_rouge_tokens([11, 22], vocab))])
        assert table.rows["zh"]["rouge1"] == 0.0

    def test_empty_split(self):
        with pytest.raises(InvalidInputError):
            rouge_table([])

    def test_tsv(self):
        tsv = rouge_table([("en", [4], [4])]).to_tsv().splitlines()
        assert tsv[0] == "language\tR-1\tR-2\tR-L"
        assert tsv[1] == "en\t100.00\t0.00\t100.00"


class TestFewShot:

    def test_zero_steps_copies_checkpoint(self, tmp_path, tiny_config, pools):
        source = tmp_path / "source.sovm"
        save_checkpoint(source, SovMasModel(tiny_config).state_dict())
        out = few_shot_continue(source, tiny_config, pools, 0, quick_config(), tmp_path / "run")
        assert out.read_bytes() == source.read_bytes()

    def test_restarts_missing_optimizer(self, tmp_path, tiny_config, pools):
        source = tmp_path / "source.sovm"
        save_checkpoint(source, SovMasModel(tiny_config).state_dict())
        out = few_shot_continue(source, tiny_config, pools, 2, quick_config(), tmp_path / "run")
        params, optimizer = load_checkpoint(out)
        assert optimizer is not None and optimizer.step == 2
        assert set(params) == set(SovMasModel(tiny_config).state_dict())

    def test_step_counter_continues(self, tmp_path, tiny_config, pools):
        first = Trainer(SovMasModel(tiny_config), quick_config(steps=2), tmp_path / "a").train(pools)
        few_shot_continue(first.last_checkpoint, tiny_config, pools, 1, quick_config(), tmp_path / "b")
        steps = RunMetrics.load(tmp_path / "b" / METRICS_LOG).steps
        assert [s.step for s in steps] == [3]


class TestAblation:

    def test_rows_and_table(self, tmp_path, tiny_config, tiny_corpus, pools):
        result = run_ablation(tiny_config, quick_config(steps=1), pools, tiny_corpus.examples[:3],
                              seeds=(0,), rows=(0, 3), run_dir=tmp_path)
        assert [r.row for r in result.rows] == [0, 3]
        assert all(len(r.per_seed) == 1 for r in result.rows)
        lines = result.to_tsv().splitlines()
        assert lines[0] == "row\tconfiguration\tR-1\tR-2\tR-L"
        assert lines[1].startswith("0\tbaseline\t")
        assert (tmp_path / "row3" / "seed0" / LAST_CHECKPOINT).exists()

    def test_unknown_row(self, tiny_config, tiny_corpus, pools):
        with pytest.raises(InvalidInputError):
            run_ablation(tiny_config, quick_config(), pools, tiny_corpus.examples, seeds=(0,), rows=(9,))


@pytest.mark.slow
def test_single_example_is_memorised(tiny_config, tiny_corpus):
    config = tiny_config.model_copy(update={"label_smoothing": 0.0})
    cfg = quick_config(steps=400, batch_size=1, alpha=0.0, beta=0.0, mask_mode="off",
                       schedule="constant", peak_lr=1e-2)
    result = Trainer(SovMasModel(config), cfg).train({"en": tiny_corpus.examples[:1]})
    assert result.metrics.steps[-1].l_mas < 0.05
