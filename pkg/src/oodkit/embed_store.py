"""Embedding data model and the binary/CSV interchange formats.

The binary container is self-describing: an 8-byte magic, a u32
little-endian length prefix, a UTF-8 JSON header, then raw payload bytes.
Embedding payloads are n*d little-endian f32 values in row-major order,
followed by n little-endian u32 labels when labels are present.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

EMBED_MAGIC = b"OODEMB01"

_HEADER_LEN = struct.Struct("<I")


class FormatError(ValueError):
    """Raised when a file does not conform to the container or CSV format."""


@dataclass(frozen=True)
class EmbeddingSet:
    """An N x D matrix of f32 embeddings (or logits) with optional labels.

    Immutable after construction; safe to share across threads.
    """

    data: np.ndarray
    labels: np.ndarray | None = None
    dataset_tag: str = ""
    class_names: list[str] | None = None

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise FormatError(f"data must be 2-D, got shape {data.shape}")
        n, d = data.shape
        if n < 1 or d < 1:
            raise FormatError(f"need N >= 1 and D >= 1, got N={n}, D={d}")
        bad = ~np.isfinite(data)
        if bad.any():
            row = int(np.argwhere(bad)[0, 0])
            raise FormatError(f"non-finite value in data at row {row}")
        object.__setattr__(self, "data", data)
        if self.labels is not None:
            labels = np.ascontiguousarray(self.labels, dtype=np.uint32)
            if labels.shape != (n,):
                raise FormatError(
                    f"labels must have length N={n}, got shape {labels.shape}"
                )
            if self.class_names is not None:
                limit = len(self.class_names)
                over = labels >= limit
                if over.any():
                    row = int(np.argmax(over))
                    raise FormatError(
                        f"label {int(labels[row])} at row {row} out of range "
                        f"for {limit} class names"
                    )
            object.__setattr__(self, "labels", labels)
        data.setflags(write=False)
        if self.labels is not None:
            self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        if self.dataset_tag != other.dataset_tag:
            return False
        if self.class_names != other.class_names:
            return False
        if not np.array_equal(self.data, other.data):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        return self.labels is None or np.array_equal(self.labels, other.labels)


@dataclass(frozen=True)
class ClassPartition:
    """Counts of in-distribution (K) and outlier (O) classes for a head."""

    k_in: int
    o_out: int
    mode: str = "labeled_outliers"  # or "collapsed_single_class"

    def __post_init__(self):
        if self.k_in < 1:
            raise ValueError(f"k_in must be >= 1, got {self.k_in}")
        if self.o_out < 1:
            raise ValueError(f"o_out must be >= 1, got {self.o_out}")
        if self.mode not in ("labeled_outliers", "collapsed_single_class"):
            raise ValueError(f"unknown partition mode {self.mode!r}")

    @property
    def head_width(self) -> int:
        """Output width of the head: K+O labeled, K+1 collapsed."""
        if self.mode == "collapsed_single_class":
            return self.k_in + 1
        return self.k_in + self.o_out


def write_container(path, magic: bytes, header: dict, payload: bytes) -> None:
    """Write a generic container file: magic, length-prefixed JSON header, payload."""
    if len(magic) != 8:
        raise ValueError("magic must be exactly 8 bytes")
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(magic)
        f.write(_HEADER_LEN.pack(len(blob)))
        f.write(blob)
        f.write(payload)


def read_container(path, magic: bytes) -> tuple[dict, bytes]:
    """Read a container file, checking the magic; returns (header, payload)."""
    with open(path, "rb") as f:
        got = f.read(8)
        if got != magic:
            raise FormatError(
                f"{path}: bad magic {got!r} at byte 0, expected {magic!r}"
            )
        raw = f.read(4)
        if len(raw) != 4:
            raise FormatError(f"{path}: truncated header length at byte 8")
        (hlen,) = _HEADER_LEN.unpack(raw)
        blob = f.read(hlen)
        if len(blob) != hlen:
            raise FormatError(f"{path}: truncated header at byte 12")
        try:
            header = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise FormatError(f"{path}: malformed JSON header: {e}") from e
        payload = f.read()
    return header, payload


def save_embeddings(
    es: EmbeddingSet, path, format: str = "binary", csv_labels: bool | None = None
) -> None:
    """Write an EmbeddingSet; binary round-trips bit-exactly.

    csv_labels controls the trailing label column for CSV output and
    defaults to whether labels are present.
    """
    if format == "binary":
        header = {
            "n": es.n,
            "d": es.dim,
            "has_labels": es.labels is not None,
            "dataset_tag": es.dataset_tag,
            "class_names": es.class_names,
        }
        payload = es.data.astype("<f4", copy=False).tobytes()
        if es.labels is not None:
            payload += es.labels.astype("<u4", copy=False).tobytes()
        write_container(path, EMBED_MAGIC, header, payload)
    elif format == "csv":
        if csv_labels is None:
            csv_labels = es.labels is not None
        if csv_labels and es.labels is None:
            raise ValueError("csv_labels requested but set has no labels")
        with open(path, "w") as f:
            for i in range(es.n):
                row = [repr(float(v)) for v in es.data[i]]
                if csv_labels:
                    row.append(str(int(es.labels[i])))
                f.write(",".join(row) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")


def load_embeddings(path, format: str = "binary", csv_labels: bool = False) -> EmbeddingSet:
    """Load an EmbeddingSet, validating shape, finiteness and label range."""
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path, csv_labels)
    raise ValueError(f"unknown format {format!r}")


def _load_binary(path) -> EmbeddingSet:
    header, payload = read_container(path, EMBED_MAGIC)
    try:
        n = int(header["n"])
        d = int(header["d"])
        has_labels = bool(header["has_labels"])
    except KeyError as e:
        raise FormatError(f"{path}: header missing field {e}") from e
    expected = n * d * 4 + (n * 4 if has_labels else 0)
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, header {{n:{n}, d:{d}}} "
            f"requires {expected}"
        )
    data = np.frombuffer(payload[: n * d * 4], dtype="<f4").reshape(n, d)
    labels = None
    if has_labels:
        labels = np.frombuffer(payload[n * d * 4 :], dtype="<u4")
    return EmbeddingSet(
        data=data,
        labels=labels,
        dataset_tag=header.get("dataset_tag") or "",
        class_names=header.get("class_names"),
    )


def _load_csv(path, csv_labels: bool) -> EmbeddingSet:
    rows: list[list[float]] = []
    labels: list[int] = []
    width = None
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise FormatError(
                    f"{path}:{lineno}: expected {width} fields, got {len(fields)}"
                )
            try:
                if csv_labels:
                    labels.append(int(fields[-1]))
                    rows.append([float(v) for v in fields[:-1]])
                else:
                    rows.append([float(v) for v in fields])
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: {e}") from e
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    return EmbeddingSet(
        data=np.asarray(rows, dtype=np.float32),
        labels=np.asarray(labels, dtype=np.uint32) if csv_labels else None,
    )


def split_by_label(es: EmbeddingSet) -> dict[int, np.ndarray]:
    """Partition row indices by class id; every row lands in exactly one group."""
    if es.labels is None:
        raise ValueError("embedding set has no labels")
    order = np.argsort(es.labels, kind="stable")
    sorted_labels = es.labels[order]
    boundaries = np.flatnonzero(np.diff(sorted_labels.astype(np.int64))) + 1
    groups: dict[int, np.ndarray] = {}
    for chunk in np.split(order, boundaries):
        groups[int(es.labels[chunk[0]])] = chunk
    return groups
