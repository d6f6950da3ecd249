"""Dataset files: little-endian binary records and JSON lines."""

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from muss.core import Dataset
from muss.errors import DatasetFormatError

logger = logging.getLogger(__name__)

MAGIC = b"MUSS"
VERSION = 1
FLAG_LABELS = 1

HEADER = np.dtype(
    [("magic", "S4"), ("version", "<u4"), ("n", "<u8"), ("d", "<u4"), ("flags", "<u4")]
)


class DatasetFormat(str, Enum):
    BIN = "bin"
    JSONL = "jsonl"


class JsonlRecord(BaseModel):
    """One line of a JSONL dataset."""

    id: int = Field(ge=0)
    embedding: list[float]
    quality: float = Field(ge=0.0)
    label: Optional[bool] = None


def record_dtype(dim: int, labels: bool) -> np.dtype:
    fields = [("embedding", "<f4", (dim,)), ("quality", "<f4")]
    if labels:
        fields.append(("label", "u1"))
    return np.dtype(fields)


def binary_size(n: int, dim: int, labels: bool) -> int:
    """Exact byte size of a binary dataset file."""
    return HEADER.itemsize + n * record_dtype(dim, labels).itemsize


def write_binary(ds: Dataset, path: Path) -> None:
    """Write the binary format (embeddings and qualities stored as float32)."""
    header = np.zeros(1, dtype=HEADER)
    header["magic"] = MAGIC
    header["version"] = VERSION
    header["n"] = ds.n
    header["d"] = ds.dim
    header["flags"] = FLAG_LABELS if ds.has_labels else 0

    records = np.zeros(ds.n, dtype=record_dtype(ds.dim, ds.has_labels))
    records["embedding"] = ds.embeddings
    records["quality"] = ds.qualities
    if ds.has_labels:
        records["label"] = ds.labels

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(records.tobytes())


def read_binary(path: Path) -> Dataset:
    """
    Read the binary format.

    Raises:
        DatasetFormatError: On a bad magic, unsupported version, or size mismatch
    """
    raw = path.read_bytes()
    if len(raw) < HEADER.itemsize:
        raise DatasetFormatError(f"File too short for a header ({len(raw)} bytes)", path)
    header = np.frombuffer(raw, dtype=HEADER, count=1)[0]
    if bytes(header["magic"]) != MAGIC:
        raise DatasetFormatError(f"Bad magic {bytes(header['magic'])!r}", path)
    if int(header["version"]) != VERSION:
        raise DatasetFormatError(f"Unsupported version {int(header['version'])}", path)

    n, dim = int(header["n"]), int(header["d"])
    labels = bool(int(header["flags"]) & FLAG_LABELS)
    expected = binary_size(n, dim, labels)
    if len(raw) != expected:
        raise DatasetFormatError(
            f"Expected {expected} bytes for n={n}, d={dim}, got {len(raw)}", path
        )
    records = np.frombuffer(raw, dtype=record_dtype(dim, labels), count=n, offset=HEADER.itemsize)
    embeddings = records["embedding"].astype(np.float64).reshape(n, dim)
    return Dataset(
        embeddings,
        records["quality"].astype(np.float64),
        records["label"].astype(bool) if labels else None,
    )


def write_jsonl(ds: Dataset, path: Path) -> None:
    """Write one JSON object per item, values rounded to float32 like the binary format."""
    embeddings = ds.embeddings.astype(np.float32).astype(np.float64)
    qualities = ds.qualities.astype(np.float32).astype(np.float64)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for i in range(ds.n):
            record = {
                "id": i,
                "embedding": embeddings[i].tolist(),
                "quality": float(qualities[i]),
            }
            if ds.has_labels:
                record["label"] = int(ds.labels[i])
            f.write(json.dumps(record) + "\n")


def read_jsonl(path: Path) -> Dataset:
    """
    Read a JSONL dataset; ids must be dense 0..n-1 in any order.

    Records without a label count as not relevant when any record carries one.

    Raises:
        DatasetFormatError: On malformed lines, mixed dimensions, or missing/duplicate ids
    """
    records: list[JsonlRecord] = []
    dim: Optional[int] = None
    with open(path, "r") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = JsonlRecord.model_validate_json(line)
            except ValidationError as e:
                raise DatasetFormatError(f"Invalid record: {e.errors()[0]['msg']}", path, line_no)
            if dim is None:
                dim = len(record.embedding)
            elif len(record.embedding) != dim:
                raise DatasetFormatError(
                    f"Embedding has {len(record.embedding)} dimensions, expected {dim}",
                    path,
                    line_no,
                )
            records.append(record)

    records.sort(key=lambda r: r.id)
    for position, record in enumerate(records):
        if record.id != position:
            if position and records[position - 1].id == record.id:
                raise DatasetFormatError(f"Duplicate id {record.id}; ids must be 0..n-1", path)
            raise DatasetFormatError(f"Missing id {position}; ids must be 0..n-1", path)

    if not records:
        return Dataset(np.zeros((0, 0)), np.zeros(0))
    has_labels = any(r.label is not None for r in records)
    return Dataset(
        np.array([r.embedding for r in records], dtype=np.float64),
        np.array([r.quality for r in records], dtype=np.float64),
        np.array([bool(r.label) for r in records]) if has_labels else None,
    )


def detect_format(path: Path) -> DatasetFormat:
    suffix = path.suffix.lower()
    if suffix == ".bin":
        return DatasetFormat.BIN
    if suffix in (".jsonl", ".json"):
        return DatasetFormat.JSONL
    raise DatasetFormatError(
        f"Cannot infer format from suffix '{suffix}' (use .bin or .jsonl)", path
    )


def load_dataset(path: Path, fmt: Optional[DatasetFormat] = None) -> Dataset:
    """Load a dataset, inferring the format from the suffix unless given."""
    fmt = fmt or detect_format(path)
    ds = read_binary(path) if fmt is DatasetFormat.BIN else read_jsonl(path)
    logger.info("Loaded %s: n=%d, d=%d, labels=%s", path, ds.n, ds.dim, ds.has_labels)
    return ds


def save_dataset(ds: Dataset, path: Path, fmt: Optional[DatasetFormat] = None) -> None:
    """Save a dataset, inferring the format from the suffix unless given."""
    fmt = fmt or detect_format(path)
    if fmt is DatasetFormat.BIN:
        write_binary(ds, path)
    else:
        write_jsonl(ds, path)
