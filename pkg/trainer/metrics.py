"""
trainer/metrics.py
Per-step and per-evaluation records, their JSON Lines log and the plot CSV.
"""
import csv
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, Field

from tensor_core import InvalidInputError


class StepRecord(BaseModel):
    kind:      Literal["step"] = "step"
    step:      int = Field(ge=1)
    language:  str
    l_mas:     Optional[float] = None
    l_vis2sum: Optional[float] = None
    l_mim:     Optional[float] = None
    j:         Optional[float] = None
    lr:        float = 0.0
    grad_norm: Optional[float] = None
    status:    Literal["ok", "skipped"] = "ok"


class EvalRecord(BaseModel):
    kind:     Literal["eval"] = "eval"
    step:     int = Field(ge=0)
    split:    str
    language: str
    rouge1:   float
    rouge2:   float
    rougeL:   float


Record = Union[StepRecord, EvalRecord]

PLOT_COLUMNS = ("step", "language", "l_mas", "l_vis2sum", "l_mim", "j", "lr")


class RunMetrics:
    """
    In-memory run history, optionally mirrored to a JSON Lines file as
    records arrive. Step numbers must strictly increase.
    """

    def __init__(self, log_path: Optional[Path] = None) -> None:
        self.steps: list[StepRecord] = []
        self.evals: list[EvalRecord] = []
        self._path = Path(log_path) if log_path is not None else None
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)

    @property
    def last_step(self) -> int:
        return self.steps[-1].step if self.steps else 0

    def _write(self, record: Record) -> None:
        if self._path is None:
            return
        with self._path.open("a", encoding="utf-8") as f:
            f.write(record.model_dump_json() + "\n")

    def add_step(self, record: StepRecord) -> None:
        if record.step <= self.last_step:
            raise InvalidInputError(f"step {record.step} does not follow {self.last_step}")
        self.steps.append(record)
        self._write(record)

    def add_eval(self, record: EvalRecord) -> None:
        self.evals.append(record)
        self._write(record)

    def write_plot_csv(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(PLOT_COLUMNS)
            for rec in self.steps:
                row = rec.model_dump()
                writer.writerow(["" if row[c] is None else row[c] for c in PLOT_COLUMNS])

    @classmethod
    def load(cls, path: Path) -> "RunMetrics":
        """Read a JSON Lines log back (without re-attaching it for writing)."""
        metrics = cls()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            if '"kind":"eval"' in line.replace(" ", ""):
                metrics.evals.append(EvalRecord.model_validate_json(line))
            else:
                metrics.steps.append(StepRecord.model_validate_json(line))
        return metrics
