"""
trainer/evaluation.py
Decode a split and score it: one ROUGE row per language plus an "Avg." row
holding the unweighted mean of the language rows.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional, Sequence

from config.settings import settings
from dataio.batching import iterate_batches
from dataio.records import MultimodalExample
from dataio.vocab import Vocabulary
from model.beam import DEFAULT_BEAM, DEFAULT_LENGTH_PENALTY, generate, strip_special
from monitoring import get_logger, metrics
from rouge_eval import METRICS, score_all
from tensor_core import InvalidInputError
from tensor_core.checkpoint import atomic_write_bytes

log = get_logger(__name__)

AVG_ROW = "Avg."
TSV_HEADER = ("language", "R-1", "R-2", "R-L")


@dataclass
class RougeTable:
    """rows: language -> {metric: F1 percent}; per_example: metric -> F1 per example (0..1)."""
    rows:        dict[str, dict[str, float]] = field(default_factory=dict)
    per_example: dict[str, list[float]] = field(default_factory=lambda: {m: [] for m in METRICS})
    example_ids: list[str] = field(default_factory=list)

    def average(self) -> dict[str, float]:
        langs = [k for k in self.rows if k != AVG_ROW]
        return {m: sum(self.rows[k][m] for k in langs) / len(langs) for m in METRICS}

    def to_tsv(self) -> str:
        lines = ["\t".join(TSV_HEADER)]
        for lang, row in self.rows.items():
            lines.append("\t".join([lang] + [f"{row[m]:.2f}" for m in METRICS]))
        return "\n".join(lines) + "\n"

    def write_tsv(self, path: Path) -> None:
        atomic_write_bytes(Path(path), self.to_tsv().encode("utf-8"))


def to_rouge_tokens(ids: Sequence[int], vocab: Optional[Vocabulary]) -> list:
    """
    One ROUGE token per token id: the surface form when a vocabulary exists,
    else the raw id. Surface forms are never re-split.
    """
    if vocab is None:
        return [int(i) for i in strip_special(ids, settings.end_id)]
    return vocab.decode(ids)


def rouge_table(
    pairs: Sequence[tuple[str, Sequence, Sequence]],
    example_ids: Optional[Sequence[str]] = None,
) -> RougeTable:
    """pairs: (language, candidate tokens, reference tokens)."""
    if not pairs:
        raise InvalidInputError("cannot evaluate an empty split")
    table = RougeTable(example_ids=list(example_ids or []))
    sums: dict[str, dict[str, float]] = {}
    counts: dict[str, int] = {}
    for lang, cand, ref in pairs:
        scores = score_all(cand, ref)
        row = sums.setdefault(lang, {m: 0.0 for m in METRICS})
        counts[lang] = counts.get(lang, 0) + 1
        for m in METRICS:
            row[m] += scores[m].f1
            table.per_example[m].append(scores[m].f1)
    for lang, row in sums.items():
        table.rows[lang] = {m: 100.0 * v / counts[lang] for m, v in row.items()}
    table.rows[AVG_ROW] = table.average()
    return table


def decode_examples(
    model,
    examples: Sequence[MultimodalExample],
    beam: int = DEFAULT_BEAM,
    length_penalty: float = DEFAULT_LENGTH_PENALTY,
    path: Literal["mas", "vis2sum"] = "mas",
    batch_size: int = 8,
) -> list[list[int]]:
    """Candidate ids (without END) for examples of a single language, in order."""
    outputs: list[list[int]] = []
    for batch in iterate_batches(list(examples), model.config, batch_size):
        outputs.extend(generate(model, batch, beam=beam, gamma=length_penalty, path=path,
                                end_id=settings.end_id, start_id=settings.start_id))
    return outputs


def evaluate(
    model,
    examples: Sequence[MultimodalExample],
    beam: int = DEFAULT_BEAM,
    length_penalty: float = DEFAULT_LENGTH_PENALTY,
    vocab: Optional[Vocabulary] = None,
    split: str = "test",
    path: Literal["mas", "vis2sum"] = "mas",
    batch_size: int = 8,
) -> RougeTable:
    """Beam-decode every example (beam 1 is greedy) and score against references."""
    if not examples:
        raise InvalidInputError(f"cannot evaluate an empty {split} split")
    by_language: dict[str, list[MultimodalExample]] = {}
    for ex in examples:
        by_language.setdefault(ex.language, []).append(ex)

    pairs: list[tuple[str, list, list]] = []
    ids: list[str] = []
    for lang, pool in by_language.items():
        for ex, cand in zip(pool, decode_examples(model, pool, beam, length_penalty, path, batch_size)):
            ids.append(ex.id)
            pairs.append((
                lang,
                to_rouge_tokens(cand, vocab),
                to_rouge_tokens(list(ex.summary_ids), vocab),
            ))
    table = rouge_table(pairs, ids)
    for lang, row in table.rows.items():
        for m in METRICS:
            metrics["eval_rouge"].labels(language=lang, metric=m).set(row[m])
    log.info("Evaluation complete", split=split, examples=len(pairs), beam=beam,
             **{m: round(table.rows[AVG_ROW][m], 2) for m in METRICS})
    return table
