"""
tensor_core/checkpoint.py
Binary checkpoint container.

Layout (all integers little-endian):
  magic  b"SOVM"
  version u32
  repeated until EOF:
    name length u32, UTF-8 name
    rank u32, extents u64 * rank
    data  float32 * prod(extents)

Optimizer state lives in the same container under reserved name prefixes.
"""
import os
import struct
import tempfile
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from monitoring import get_logger
from tensor_core.errors import CheckpointError
from tensor_core.optim import OptimizerState

log = get_logger(__name__)

MAGIC = b"SOVM"
FORMAT_VERSION = 1

ADAM_M_PREFIX = "__adam_m__."
ADAM_V_PREFIX = "__adam_v__."
ADAM_STEP = "__adam_step__"
ADAM_HYPER = "__adam_hyper__"
RESERVED_PREFIX = "__"


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    """Write to a temp file in the target directory, then rename over `path`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def encode_tensors(tensors: Mapping[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    for name, arr in tensors.items():
        raw_name = name.encode("utf-8")
        arr = np.asarray(arr)
        chunks.append(struct.pack("<I", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(chunks)


def decode_tensors(payload: bytes, source: str = "<bytes>") -> dict[str, np.ndarray]:
    if payload[:4] != MAGIC:
        raise CheckpointError(f"{source}: bad magic {payload[:4]!r}, expected {MAGIC!r}")
    if len(payload) < 8:
        raise CheckpointError(f"{source}: truncated header")
    (version,) = struct.unpack_from("<I", payload, 4)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{source}: unsupported format version {version}")

    out: dict[str, np.ndarray] = {}
    pos = 8
    try:
        while pos < len(payload):
            (name_len,) = struct.unpack_from("<I", payload, pos)
            pos += 4
            name = payload[pos:pos + name_len].decode("utf-8")
            pos += name_len
            (rank,) = struct.unpack_from("<I", payload, pos)
            pos += 4
            shape = struct.unpack_from(f"<{rank}Q", payload, pos)
            pos += 8 * rank
            count = int(np.prod(shape, dtype=np.int64)) if rank else 1
            end = pos + 4 * count
            if end > len(payload):
                raise CheckpointError(f"{source}: tensor {name!r} runs past end of file")
            out[name] = np.frombuffer(payload[pos:end], dtype="<f4").reshape(shape).astype(np.float32)
            pos = end
    except (struct.error, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{source}: corrupt container ({exc})") from exc
    return out


def save_checkpoint(
    path: Path,
    params: Mapping[str, np.ndarray],
    optimizer: Optional[OptimizerState] = None,
) -> None:
    tensors: dict[str, np.ndarray] = dict(params)
    if optimizer is not None:
        for name, m in optimizer.m.items():
            tensors[ADAM_M_PREFIX + name] = m
        for name, v in optimizer.v.items():
            tensors[ADAM_V_PREFIX + name] = v
        tensors[ADAM_STEP] = np.asarray(float(optimizer.step))
        tensors[ADAM_HYPER] = np.asarray([optimizer.beta1, optimizer.beta2, optimizer.epsilon])
    atomic_write_bytes(Path(path), encode_tensors(tensors))
    log.info("Checkpoint written", path=str(path), tensors=len(params), optimizer=optimizer is not None)


def load_checkpoint(path: Path) -> tuple[dict[str, np.ndarray], Optional[OptimizerState]]:
    """Return (parameters, optimizer state or None when the container holds none)."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    tensors = decode_tensors(path.read_bytes(), source=str(path))

    params = {k: v for k, v in tensors.items() if not k.startswith(RESERVED_PREFIX)}
    if ADAM_STEP not in tensors:
        return params, None
    state = OptimizerState(step=int(tensors[ADAM_STEP]))
    if ADAM_HYPER in tensors:
        # stored as float32; 7 significant digits recovers the configured values
        b1, b2, eps = (float(f"{x:.7g}") for x in tensors[ADAM_HYPER])
        state.beta1, state.beta2, state.epsilon = b1, b2, eps
    for key, arr in tensors.items():
        if key.startswith(ADAM_M_PREFIX):
            state.m[key[len(ADAM_M_PREFIX):]] = arr
        elif key.startswith(ADAM_V_PREFIX):
            state.v[key[len(ADAM_V_PREFIX):]] = arr
    return params, state
