"""
trainer/engine.py
Monolingual and multilingual joint training, checkpointing, best-validation
selection, and few-shot continuation from a checkpoint.

Per step: pick a language (sampler in multi mode), take a batch from that
language, build the mask plan, compute L_MAS, L_Vis2Sum and L_MIM (zero-weighted
objectives are computed without a graph, for logging only), form
J = L_MAS + alpha L_Vis2Sum + beta L_MIM, backpropagate, clip, and take one
Adam step at lr_at(step).
"""
import time
from contextlib import nullcontext
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from config.settings import settings
from dataio.batching import BatchStream
from dataio.records import Batch, MultimodalExample
from dataio.sampler import LanguageSampler, SamplerSpec
from model.config import ModelConfig
from model.sovmas import SovMasModel
from monitoring import get_logger, metrics, timed, write_metrics_file
from objectives import joint_mono, loss_mas, loss_mim, loss_vis2sum, mask_one_image, mask_regions, mim_targets
from rouge_eval import METRICS
from tensor_core import (
    InvalidInputError,
    NonFiniteError,
    OptimizerState,
    Tensor,
    TrainingDivergedError,
    adam_step,
    backward,
    clip_grad_norm,
    load_checkpoint,
    lr_at,
    no_grad,
    save_checkpoint,
)
from tensor_core.checkpoint import atomic_write_bytes
from trainer.config import TrainConfig
from trainer.evaluation import evaluate
from trainer.metrics import EvalRecord, RunMetrics, StepRecord

log = get_logger(__name__)

BEST_CHECKPOINT = "best.sovm"
LAST_CHECKPOINT = "last.sovm"
METRICS_LOG = "metrics.jsonl"
PLOT_CSV = "plot.csv"
PROM_FILE = "metrics.prom"


@dataclass
class TrainResult:
    metrics:         RunMetrics
    optimizer:       OptimizerState
    step:            int
    best_checkpoint: Optional[Path] = None
    last_checkpoint: Optional[Path] = None
    best_score:      Optional[float] = None


@dataclass
class StepLosses:
    l_mas:     Tensor
    l_vis2sum: Optional[Tensor]
    l_mim:     Optional[Tensor]
    j:         Tensor


def _value(t: Optional[Tensor]) -> Optional[float]:
    return None if t is None else t.item()


class Trainer:
    """Owns one model exclusively for the duration of a run."""

    def __init__(
        self,
        model: SovMasModel,
        config: TrainConfig,
        run_dir: Optional[Path] = None,
        optimizer: Optional[OptimizerState] = None,
        start_step: int = 0,
    ) -> None:
        self.model = model
        self.config = config
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.params = model.named_parameters()
        self.optimizer = optimizer if optimizer is not None else OptimizerState.for_params(self.params)
        self.step = start_step
        data_seq, mask_seq, sampler_seq = np.random.SeedSequence(config.seed).spawn(3)
        self._data_rng = np.random.default_rng(data_seq)
        self._mask_rng = np.random.default_rng(mask_seq)
        self._sampler_rng = np.random.default_rng(sampler_seq)
        self.metrics = RunMetrics(self.run_dir / METRICS_LOG if self.run_dir else None)

    # ── Losses ───────────────────────────────────────────────────────────────

    def _mask(self, batch: Batch):
        if self.config.mask_mode == "mim":
            return mask_one_image(batch, self._mask_rng, self.model.config.regions_per_image)
        return mask_regions(batch, self._mask_rng, self.config.mask_probability)

    def compute_losses(self, batch: Batch) -> StepLosses:
        cfg, eps = self.config, self.model.config.label_smoothing
        l_mas = loss_mas(self.model.forward_mas(batch), batch.target_ids, eps, settings.pad_id)

        with nullcontext() if cfg.alpha > 0 else no_grad():
            l_v2s = loss_vis2sum(self.model.forward_vis2sum(batch), batch.target_ids, eps, settings.pad_id)

        l_mim = None
        if cfg.mask_mode != "off":
            masked, plan = self._mask(batch)
            if plan.count > 0:
                with nullcontext() if cfg.beta > 0 else no_grad():
                    predicted = self.model.forward_mim(masked, plan)
                    l_mim = loss_mim(predicted, mim_targets(batch.q, plan), plan)

        for name, value in (("L_MAS", l_mas), ("L_Vis2Sum", l_v2s), ("L_MIM", l_mim)):
            if value is not None and not np.isfinite(value.item()):
                raise NonFiniteError(f"{name} is {value.item()}")
        j = joint_mono(l_mas, l_v2s, l_mim if l_mim is not None else 0.0, cfg.weights)
        return StepLosses(l_mas, l_v2s, l_mim, j)

    # ── One optimisation step ────────────────────────────────────────────────

    @timed("train_step")
    def train_step(self, batch: Batch) -> StepRecord:
        """Returns the step record; status "skipped" when anything turned non-finite."""
        self.step += 1
        lr = lr_at(self.config.lr_schedule, self.step)
        for p in self.params.values():
            p.zero_grad()
        try:
            losses = self.compute_losses(batch)
            backward(losses.j)
            grads = {
                name: p.grad if p.grad is not None else np.zeros_like(p.data)
                for name, p in self.params.items()
            }
            norm = clip_grad_norm(grads, self.config.clip_norm)
            adam_step(self.params, grads, self.optimizer, lr)
        except NonFiniteError as exc:
            log.warning("Non-finite step skipped", step=self.step, language=batch.language, error=str(exc))
            metrics["train_steps"].labels(language=batch.language, status="skipped").inc()
            return StepRecord(step=self.step, language=batch.language, lr=lr, status="skipped")

        record = StepRecord(
            step=self.step,
            language=batch.language,
            l_mas=losses.l_mas.item(),
            l_vis2sum=_value(losses.l_vis2sum),
            l_mim=_value(losses.l_mim),
            j=losses.j.item(),
            lr=lr,
            grad_norm=norm,
        )
        metrics["train_steps"].labels(language=batch.language, status="ok").inc()
        for objective in ("l_mas", "l_vis2sum", "l_mim", "j"):
            value = getattr(record, objective)
            if value is not None:
                metrics["loss"].labels(objective=objective).set(value)
        return record

    # ── Checkpoints and quick evaluation ─────────────────────────────────────

    def save(self, name: str) -> Optional[Path]:
        if self.run_dir is None:
            return None
        path = self.run_dir / name
        save_checkpoint(path, self.model.state_dict(), self.optimizer)
        metrics["checkpoints"].labels(kind=name.split(".")[0]).inc()
        return path

    def quick_eval(self, validation: Sequence[MultimodalExample]) -> float:
        """Greedy decoding on a prefix of the validation split; returns mean of R-1/R-2/R-L."""
        subset = list(validation)[: self.config.eval_examples]
        table = evaluate(self.model, subset, beam=1, split="validation")
        for lang, row in table.rows.items():
            self.metrics.add_eval(EvalRecord(step=self.step, split="validation", language=lang, **row))
        avg = table.rows["Avg."]
        return sum(avg[m] for m in METRICS) / len(METRICS)

    # ── Training loop ────────────────────────────────────────────────────────

    def _languages(self, pools: Mapping[str, Sequence[MultimodalExample]]) -> list[str]:
        languages = list(self.config.languages) or [k for k, v in pools.items() if v]
        missing = [k for k in languages if not pools.get(k)]
        if missing:
            raise InvalidInputError(f"no training examples for languages {missing}")
        if not languages:
            raise InvalidInputError("training needs at least one non-empty language pool")
        if self.config.mode == "mono" and len(languages) != 1:
            raise InvalidInputError(f"mono mode takes exactly one language, got {languages}")
        return languages

    def train(
        self,
        pools: Mapping[str, Sequence[MultimodalExample]],
        validation: Optional[Sequence[MultimodalExample]] = None,
    ) -> TrainResult:
        cfg = self.config
        languages = self._languages(pools)
        streams = {
            lang: BatchStream(pools[lang], self.model.config, cfg.batch_size, self._data_rng)
            for lang in languages
        }
        sampler = None
        if cfg.mode == "multi":
            spec = SamplerSpec(counts={k: len(pools[k]) for k in languages}, exponent=cfg.sampler_exponent, seed=cfg.seed)
            sampler = LanguageSampler(spec, self._sampler_rng)

        log.info("Training started", mode=cfg.mode, languages=languages, steps=cfg.steps,
                 start_step=self.step, alpha=cfg.alpha, beta=cfg.beta, mask_mode=cfg.mask_mode)
        self.model.train()
        best_score: Optional[float] = None
        best_path: Optional[Path] = None
        bad_in_a_row = 0
        t0 = time.perf_counter()

        for _ in range(cfg.steps):
            lang = sampler.draw() if sampler is not None else languages[0]
            record = self.train_step(streams[lang].next())
            self.metrics.add_step(record)

            if record.status == "skipped":
                bad_in_a_row += 1
                if bad_in_a_row >= cfg.max_bad_steps:
                    log.error("Training diverged", step=self.step, consecutive_skipped=bad_in_a_row)
                    raise TrainingDivergedError(
                        f"{bad_in_a_row} consecutive non-finite steps ending at step {self.step}"
                    )
                continue
            bad_in_a_row = 0

            if cfg.checkpoint_interval and self.step % cfg.checkpoint_interval == 0:
                self.save(LAST_CHECKPOINT)
            if validation and cfg.eval_interval and self.step % cfg.eval_interval == 0:
                score = self.quick_eval(validation)
                self.model.train()
                if best_score is None or score > best_score:
                    best_score, best_path = score, self.save(BEST_CHECKPOINT)
                    log.info("New best checkpoint", step=self.step, score=round(score, 3))

        self.model.eval()
        last_path = self.save(LAST_CHECKPOINT)
        if best_path is None:
            best_path = self.save(BEST_CHECKPOINT)
        if self.run_dir is not None:
            self.metrics.write_plot_csv(self.run_dir / PLOT_CSV)
            if settings.write_metrics_file:
                write_metrics_file(self.run_dir / PROM_FILE)
        log.info("Training finished", steps=self.step, seconds=round(time.perf_counter() - t0, 2),
                 best_score=best_score)
        return TrainResult(self.metrics, self.optimizer, self.step, best_path, last_path, best_score)


def train(
    model: SovMasModel,
    pools: Mapping[str, Sequence[MultimodalExample]],
    config: TrainConfig,
    run_dir: Optional[Path] = None,
    validation: Optional[Sequence[MultimodalExample]] = None,
) -> TrainResult:
    return Trainer(model, config, run_dir).train(pools, validation)


def few_shot_continue(
    checkpoint: Path,
    model_config: ModelConfig,
    pools: Mapping[str, Sequence[MultimodalExample]],
    steps: int,
    config: TrainConfig,
    run_dir: Path,
    start_step: Optional[int] = None,
) -> Path:
    """
    Resume from `checkpoint` on the merged few-shot pools and write the
    continued checkpoint to run_dir/last.sovm. The step counter continues
    from `start_step` (default: the restored optimizer's step).
    """
    checkpoint, run_dir = Path(checkpoint), Path(run_dir)
    out = run_dir / LAST_CHECKPOINT
    params, optimizer = load_checkpoint(checkpoint)

    if steps == 0:
        atomic_write_bytes(out, checkpoint.read_bytes())
        log.info("Few-shot continuation with zero steps; checkpoint copied", path=str(out))
        return out

    model = SovMasModel(model_config)
    model.load_state_dict(params)
    if optimizer is None:
        log.warning("Checkpoint has no optimizer state; restarting optimizer", path=str(checkpoint))
        optimizer = OptimizerState.for_params(model.named_parameters())

    languages = [k for k, v in pools.items() if v]
    cont = config.model_copy(update={
        "steps": steps,
        "mode": "multi" if len(languages) > 1 else "mono",
        "languages": languages,
    })
    trainer = Trainer(model, cont, run_dir, optimizer, start_step=optimizer.step if start_step is None else start_step)
    result = trainer.train(pools)
    return result.last_checkpoint
