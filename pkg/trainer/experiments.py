"""
trainer/experiments.py
Auxiliary-objective ablation: trains each configuration over several seeds
and reports held-out ROUGE averaged over seeds.

  row 0  baseline          alpha=0, beta=0
  row 1  + Vis2Sum         alpha=1, beta=0
  row 2  + MIM             alpha=0, beta=1
  row 3  + Vis2Sum + MIM   alpha=1, beta=1
  row 4  + Vis2Sum + MRM   alpha=1, beta=1, random-region masking
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from dataio.records import MultimodalExample
from model.config import ModelConfig
from model.sovmas import SovMasModel
from monitoring import get_logger
from rouge_eval import METRICS
from tensor_core import InvalidInputError
from tensor_core.checkpoint import atomic_write_bytes
from trainer.config import TrainConfig
from trainer.engine import Trainer
from trainer.evaluation import AVG_ROW, evaluate

log = get_logger(__name__)

ABLATION_ROWS: dict[int, tuple[str, dict]] = {
    0: ("baseline",        {"alpha": 0.0, "beta": 0.0, "mask_mode": "off"}),
    1: ("w/ Vis2Sum",      {"alpha": 1.0, "beta": 0.0, "mask_mode": "off"}),
    2: ("w/ MIM",          {"alpha": 0.0, "beta": 1.0, "mask_mode": "mim"}),
    3: ("w/ Vis2Sum+MIM",  {"alpha": 1.0, "beta": 1.0, "mask_mode": "mim"}),
    4: ("w/ Vis2Sum+MRM",  {"alpha": 1.0, "beta": 1.0, "mask_mode": "mrm"}),
}


@dataclass
class AblationRow:
    row:      int
    label:    str
    scores:   dict[str, float]
    per_seed: list[dict[str, float]] = field(default_factory=list)


@dataclass
class AblationResult:
    rows: list[AblationRow] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = ["row\tconfiguration\tR-1\tR-2\tR-L"]
        for r in self.rows:
            lines.append("\t".join([str(r.row), r.label] + [f"{r.scores[m]:.2f}" for m in METRICS]))
        return "\n".join(lines) + "\n"

    def write_tsv(self, path: Path) -> None:
        atomic_write_bytes(Path(path), self.to_tsv().encode("utf-8"))


def run_ablation(
    model_config: ModelConfig,
    train_config: TrainConfig,
    pools: Mapping[str, Sequence[MultimodalExample]],
    test: Sequence[MultimodalExample],
    seeds: Sequence[int] = (0, 1, 2),
    rows: Sequence[int] = tuple(ABLATION_ROWS),
    run_dir: Optional[Path] = None,
    validation: Optional[Sequence[MultimodalExample]] = None,
) -> AblationResult:
    if not seeds:
        raise InvalidInputError("ablation needs at least one seed")
    unknown = [r for r in rows if r not in ABLATION_ROWS]
    if unknown:
        raise InvalidInputError(f"unknown ablation rows {unknown}; expected {sorted(ABLATION_ROWS)}")

    result = AblationResult()
    for row in rows:
        label, overrides = ABLATION_ROWS[row]
        per_seed: list[dict[str, float]] = []
        for seed in seeds:
            model = SovMasModel(model_config.model_copy(update={"init_seed": seed}))
            cfg = train_config.model_copy(update={**overrides, "seed": seed})
            seed_dir = run_dir / f"row{row}" / f"seed{seed}" if run_dir is not None else None
            Trainer(model, cfg, seed_dir).train(pools, validation)
            table = evaluate(model, test, beam=cfg.beam, length_penalty=cfg.length_penalty, split="test")
            per_seed.append(dict(table.rows[AVG_ROW]))
        means = {m: sum(s[m] for s in per_seed) / len(per_seed) for m in METRICS}
        result.rows.append(AblationRow(row, label, means, per_seed))
        log.info("Ablation row complete", row=row, label=label, seeds=len(seeds),
                 **{m: round(v, 2) for m, v in means.items()})
    return result
