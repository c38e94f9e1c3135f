"""File formats: the PJEQ checkpoint container, CSV metrics, JSON reports.

Checkpoints are a flat binary container: magic bytes ``PJEQ``, a u32
version, then one record per tensor: u32 name length, the utf-8 name,
u32 rank, u64 dimensions, and the raw little-endian float64 payload.
Records run to the end of the file.

All JSON is written with sorted keys and no whitespace dependence on the
environment, so outputs are byte-identical across reruns.
"""

from __future__ import annotations

import json
import struct

import numpy as np

PJEQ_MAGIC = b"PJEQ"
PJEQ_VERSION = 1


class CheckpointError(ValueError):
    pass


def write_checkpoint(path, tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(PJEQ_MAGIC)
        f.write(struct.pack("<I", PJEQ_VERSION))
        for name, tensor in tensors.items():
            if np.iscomplexobj(tensor):
                raise CheckpointError(f"tensor {name!r} is complex; store real and imaginary parts separately")
            arr = np.asarray(tensor, dtype="<f8")  # tobytes emits C order regardless of layout
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<Q", dim))
            f.write(arr.tobytes("C"))


def read_checkpoint(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != PJEQ_MAGIC:
        raise CheckpointError(f"{path}: bad magic {blob[:4]!r}")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != PJEQ_VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    tensors: dict[str, np.ndarray] = {}
    offset = 8
    while offset < len(blob):
        if offset + 4 > len(blob):
            raise CheckpointError(f"{path}: truncated record header")
        (name_len,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        dims = struct.unpack_from(f"<{rank}Q", blob, offset)
        offset += 8 * rank
        count = int(np.prod(dims)) if rank else 1
        end = offset + 8 * count
        if end > len(blob):
            raise CheckpointError(f"{path}: truncated payload for {name!r}")
        tensors[name] = np.frombuffer(blob[offset:end], dtype="<f8").reshape(dims).copy()
        offset = end
    return tensors


def metrics_to_csv(rows) -> str:
    lines = ["epoch,split,loss,accuracy"]
    lines.extend(r.as_csv() for r in rows)
    return "\n".join(lines) + "\n"


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def basis_grid_text(vectors, rows: int, cols: int) -> str:
    """Plain-text rendering of basis vectors as rows x cols grids."""
    blocks = []
    for i, v in enumerate(vectors):
        grid = np.asarray(v).reshape(rows, cols)
        lines = [f"basis {i}:"]
        for r in range(rows):
            lines.append("  " + " ".join(f"{grid[r, c]:+.4f}" for c in range(cols)))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
