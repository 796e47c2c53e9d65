"""
cli/manifest.py
Run manifest: which config produced a run directory, with what seed, and the
hashes of the artifacts it left behind.
"""
import hashlib
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field

from tensor_core.checkpoint import atomic_write_bytes

MANIFEST_NAME = "run.json"
CONFIG_NAME = "config.txt"


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunManifest(BaseModel):
    command:     str
    config_path: Optional[str] = None
    config:      dict[str, str] = Field(default_factory=dict)
    seed:        int
    output_dir:  str
    created_at:  str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    artifacts:   dict[str, str] = Field(default_factory=dict)

    def hash_artifacts(self, run_dir: Path) -> "RunManifest":
        """Record sha256 of every regular file under run_dir except the manifest itself."""
        run_dir = Path(run_dir)
        self.artifacts = {
            str(p.relative_to(run_dir)): sha256_file(p)
            for p in sorted(run_dir.rglob("*"))
            if p.is_file() and p.name != MANIFEST_NAME and not p.name.startswith(".")
        }
        return self

    def write(self, run_dir: Path) -> Path:
        path = Path(run_dir) / MANIFEST_NAME
        atomic_write_bytes(path, self.model_dump_json(indent=2).encode("utf-8"))
        return path

    @classmethod
    def load(cls, run_dir: Path) -> "RunManifest":
        return cls.model_validate_json((Path(run_dir) / MANIFEST_NAME).read_text(encoding="utf-8"))
