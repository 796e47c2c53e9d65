"""
dataio/corpus_io.py
Corpus persistence: a JSON Lines manifest plus a binary feature file.

Feature file layout (little-endian):
  magic b"SOVF", version u32, n u32, m u32, d_v u32, C u32
  then per example, at its manifest `feat_offset`:
    features f32[n*m*d_v], boxes f32[n*m*4], q f32[n*m*C]

For manifest X.jsonl the feature file is X.sovf.
"""
import struct
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from dataio.records import Corpus, ManifestRecord, MultimodalExample
from monitoring import get_logger
from tensor_core import CorpusFormatError, InvalidInputError
from tensor_core.checkpoint import atomic_write_bytes

log = get_logger(__name__)

FEATURE_MAGIC = b"SOVF"
FEATURE_VERSION = 1
HEADER = struct.Struct("<4s5I")


def feature_path(manifest: Path) -> Path:
    return Path(manifest).with_suffix(".sovf")


def vocab_path(manifest: Path) -> Path:
    return Path(manifest).with_suffix(".vocab.txt")


def _record_size(n: int, m: int, d_v: int, classes: int) -> int:
    return 4 * n * m * (d_v + 4 + classes)


def _read_header(path: Path, payload: bytes) -> tuple[int, int, int, int]:
    if len(payload) < HEADER.size:
        raise CorpusFormatError("truncated header", path=str(path))
    magic, version, n, m, d_v, classes = HEADER.unpack_from(payload, 0)
    if magic != FEATURE_MAGIC:
        raise CorpusFormatError(f"bad magic {magic!r}, expected {FEATURE_MAGIC!r}", path=str(path))
    if version != FEATURE_VERSION:
        raise CorpusFormatError(f"unsupported version {version}", path=str(path))
    return n, m, d_v, classes


def _pydantic_field(exc: ValidationError) -> str:
    first = exc.errors()[0]
    return ".".join(str(p) for p in first.get("loc", ())) or "record"


def load_corpus(manifest: Path, vocab_size: Optional[int] = None) -> Corpus:
    """
    Load and validate every record. Errors name the manifest line and field.
    An empty manifest yields an empty corpus.
    """
    manifest = Path(manifest)
    if not manifest.exists():
        raise CorpusFormatError("manifest not found", path=str(manifest))
    lines = manifest.read_text(encoding="utf-8").splitlines()
    records: list[tuple[int, ManifestRecord]] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append((lineno, ManifestRecord.model_validate_json(line)))
        except ValidationError as exc:
            raise CorpusFormatError(
                exc.errors()[0].get("msg", "invalid record"),
                path=str(manifest), line=lineno, field=_pydantic_field(exc),
            ) from exc

    feats = feature_path(manifest)
    if not feats.exists():
        if records:
            raise CorpusFormatError("feature file not found", path=str(feats))
        return Corpus(0, 0, 0, 0)

    payload = feats.read_bytes()
    n, m, d_v, classes = _read_header(feats, payload)
    size = _record_size(n, m, d_v, classes)
    corpus = Corpus(n, m, d_v, classes)

    seen: set[str] = set()
    for lineno, rec in records:
        if rec.id in seen:
            raise CorpusFormatError(f"duplicate id {rec.id!r}", path=str(manifest), line=lineno, field="id")
        seen.add(rec.id)
        if rec.feat_offset < HEADER.size or rec.feat_offset + size > len(payload):
            raise CorpusFormatError(
                f"offset {rec.feat_offset} outside feature file", path=str(manifest), line=lineno, field="feat_offset",
            )
        block = np.frombuffer(payload, dtype="<f4", count=size // 4, offset=rec.feat_offset)
        a = n * m * d_v
        b = a + n * m * 4
        example = MultimodalExample(
            id=rec.id,
            language=rec.lang,
            article_ids=np.asarray(rec.article_ids),
            summary_ids=np.asarray(rec.summary_ids),
            features=block[:a].reshape(n, m, d_v),
            boxes=block[a:b].reshape(n, m, 4),
            q=block[b:].reshape(n, m, classes),
            image_count=rec.n_images,
        )
        try:
            example.validate(vocab_size)
        except InvalidInputError as exc:
            field, _, message = str(exc).partition(": ")
            raise CorpusFormatError(message or str(exc), path=str(manifest), line=lineno, field=field) from exc
        corpus.examples.append(example)

    log.info("Corpus loaded", path=str(manifest), examples=len(corpus), languages=len(corpus.languages()))
    return corpus


def write_corpus(corpus: Corpus, manifest: Path, vocab: Optional[list[str]] = None) -> None:
    """Write manifest, feature file and (optionally) vocabulary, each atomically."""
    manifest = Path(manifest)
    n, m, d_v, classes = corpus.n_images, corpus.regions_per_image, corpus.d_v, corpus.classes
    chunks = [HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, n, m, d_v, classes)]
    offset = HEADER.size
    lines: list[str] = []
    for ex in corpus.examples:
        if ex.features.shape != (n, m, d_v) or ex.q.shape != (n, m, classes):
            raise InvalidInputError(f"example {ex.id!r} does not match corpus shape {(n, m, d_v, classes)}")
        rec = ManifestRecord(
            id=ex.id,
            lang=ex.language,
            article_ids=[int(t) for t in ex.article_ids],
            summary_ids=[int(t) for t in ex.summary_ids],
            n_images=ex.image_count,
            feat_offset=offset,
        )
        lines.append(rec.model_dump_json())
        for arr in (ex.features, ex.boxes, ex.q):
            raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
            chunks.append(raw)
            offset += len(raw)

    atomic_write_bytes(feature_path(manifest), b"".join(chunks))
    atomic_write_bytes(manifest, ("\n".join(lines) + "\n" if lines else "").encode("utf-8"))
    if vocab is not None:
        atomic_write_bytes(vocab_path(manifest), ("\n".join(vocab) + "\n").encode("utf-8"))
    log.info("Corpus written", path=str(manifest), examples=len(corpus))
