"""Persistence: the REMB embedding-store format and benchmark data files.

REMB byte layout (everything little-endian):

    offset  size  field
    0       4     magic, the ASCII bytes "REMB"
    4       2     u16 format version (currently 1)
    6       4     u32 embedding dimension
    10      8     u64 record count
    18      1     u8 dtype tag: bytes per component, 4 = f32 or 8 = f64
    19      ...   records

    each record:
    +0      2     u16 key length in bytes
    +2      klen  key, UTF-8
    +2+klen d*sz  vector components, IEEE-754 little-endian

Vectors are widened to float64 in memory regardless of the on-disk dtype.
Hierarchy, lexical-pair, and label-task files are line-delimited or plain
JSON text so they stay diff-able; loaders validate the schema and report
line numbers on failure.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import (
    CorruptHeader,
    DimensionMismatch,
    DuplicateKey,
    KeyNotFound,
    SchemaError,
    TruncatedFile,
)
from .geometry import Embedding

MAGIC = b"REMB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIQB")
_KEYLEN = struct.Struct("<H")

_DTYPE_BY_TAG = {4: np.dtype("<f4"), 8: np.dtype("<f8")}
_TAG_BY_DTYPE = {np.dtype(np.float32): 4, np.dtype(np.float64): 8}


class EmbeddingStore:
    """Ordered id -> vector table with a remembered on-disk dtype.

    Vectors are held as float64; ``dtype`` controls how they are written
    back to disk.  Keys are unique; the reserved key "" conventionally holds
    the entailment-root (empty string) embedding.
    """

    def __init__(self, dtype=np.float32):
        self._table: dict[str, np.ndarray] = {}
        self.dim: int | None = None
        dtype = np.dtype(dtype)
        if dtype not in _TAG_BY_DTYPE:
            raise ValueError(f"unsupported store dtype {dtype}")
        self.dtype = dtype

    @classmethod
    def from_table(cls, table: Mapping[str, np.ndarray], dtype=np.float32) -> "EmbeddingStore":
        store = cls(dtype=dtype)
        for key, values in table.items():
            store.add(key, values)
        return store

    def add(self, key: str, values) -> None:
        if key in self._table:
            raise ValueError(f"duplicate key {key!r}")
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise DimensionMismatch(f"vector for {key!r} must be 1-D and non-empty")
        if self.dim is None:
            self.dim = arr.shape[0]
        elif arr.shape[0] != self.dim:
            raise DimensionMismatch(
                f"vector for {key!r} has dimension {arr.shape[0]}, store holds {self.dim}"
            )
        self._table[key] = arr

    def replace(self, key: str, values) -> None:
        if key not in self._table:
            raise KeyNotFound(key, "replace")
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise DimensionMismatch(f"replacement for {key!r} has shape {arr.shape}")
        self._table[key] = arr

    def __getitem__(self, key: str) -> np.ndarray:
        try:
            return self._table[key]
        except KeyError:
            raise KeyNotFound(key, "store lookup") from None

    def embedding(self, key: str) -> Embedding:
        return Embedding(id=key, values=self[key])

    def __contains__(self, key: str) -> bool:
        return key in self._table

    def __len__(self) -> int:
        return len(self._table)

    def __iter__(self) -> Iterator[str]:
        return iter(self._table)

    def keys(self):
        return self._table.keys()

    def items(self):
        return self._table.items()


def write_store(path, table: EmbeddingStore | Mapping[str, np.ndarray], dtype=None) -> None:
    """Serialize a table to the REMB format (atomically: temp file + rename)."""
    if isinstance(table, EmbeddingStore):
        items = list(table.items())
        dim = table.dim
        out_dtype = np.dtype(dtype) if dtype is not None else table.dtype
    else:
        items = [(k, np.asarray(v, dtype=np.float64)) for k, v in table.items()]
        dims = {v.shape[-1] for _, v in items}
        if len(dims) > 1:
            raise DimensionMismatch(f"table vectors have mixed dimensions: {sorted(dims)}")
        dim = dims.pop() if dims else 0
        out_dtype = np.dtype(dtype) if dtype is not None else np.dtype(np.float32)
    if out_dtype not in _TAG_BY_DTYPE:
        raise ValueError(f"unsupported store dtype {out_dtype}")
    if dim is None or dim < 1:
        raise DimensionMismatch("cannot write a store with no vectors")

    le_dtype = np.dtype("<f4") if out_dtype == np.float32 else np.dtype("<f8")
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as f:
        f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, dim, len(items), _TAG_BY_DTYPE[out_dtype]))
        for key, values in items:
            encoded = key.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"key too long to serialize ({len(encoded)} bytes)")
            f.write(_KEYLEN.pack(len(encoded)))
            f.write(encoded)
            f.write(np.ascontiguousarray(values, dtype=le_dtype).tobytes())
    os.replace(tmp, path)


def read_store(path) -> EmbeddingStore:
    """Parse a REMB file; every failure names the offending byte offset."""
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise CorruptHeader("header truncated", len(header))
        magic, version, dim, count, tag = _HEADER.unpack(header)
        if magic != MAGIC:
            raise CorruptHeader(f"bad magic {magic!r}", 0)
        if version != FORMAT_VERSION:
            raise CorruptHeader(f"unsupported format version {version}", 4)
        if dim < 1:
            raise CorruptHeader(f"bad dimension {dim}", 6)
        if tag not in _DTYPE_BY_TAG:
            raise CorruptHeader(f"bad dtype tag {tag}", 18)
        le_dtype = _DTYPE_BY_TAG[tag]
        vec_bytes = dim * le_dtype.itemsize

        store = EmbeddingStore(dtype=np.float32 if tag == 4 else np.float64)
        offset = _HEADER.size
        for _ in range(count):
            record_offset = offset
            raw = f.read(_KEYLEN.size)
            if len(raw) < _KEYLEN.size:
                raise TruncatedFile("record key length truncated", offset + len(raw))
            (klen,) = _KEYLEN.unpack(raw)
            offset += _KEYLEN.size
            key_raw = f.read(klen)
            if len(key_raw) < klen:
                raise TruncatedFile("record key truncated", offset + len(key_raw))
            try:
                key = key_raw.decode("utf-8")
            except UnicodeDecodeError:
                raise CorruptHeader("record key is not valid UTF-8", offset) from None
            offset += klen
            payload = f.read(vec_bytes)
            if len(payload) < vec_bytes:
                raise TruncatedFile(f"vector payload truncated for key {key!r}", offset + len(payload))
            offset += vec_bytes
            if key in store:
                raise DuplicateKey(f"key {key!r} occurs twice", record_offset)
            store.add(key, np.frombuffer(payload, dtype=le_dtype).astype(np.float64))
        if f.read(1):
            raise CorruptHeader("trailing data after declared records", offset)
    return store


# ----------------------------------------------------------------------
# Hierarchy dataset files (JSON lines).
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Caption:
    text: str
    key: str


@dataclass(frozen=True)
class HierarchyRecord:
    """One image with its 4-tier positive caption chain (general to specific)
    and, for training records, 4 tier-matched negative captions."""

    image_id: str
    image_key: str
    positives: tuple[Caption, ...]
    negatives: tuple[Caption, ...] = ()

    def __post_init__(self):
        if len(self.positives) != 4:
            raise SchemaError(f"record {self.image_id!r} needs exactly 4 positives")
        if len(self.negatives) not in (0, 4):
            raise SchemaError(f"record {self.image_id!r} needs 0 or 4 negatives")

    @property
    def has_negatives(self) -> bool:
        return len(self.negatives) == 4

    def caption_keys(self) -> list[str]:
        return [c.key for c in self.positives + self.negatives]


def _parse_caption(obj, line: int, where: str) -> Caption:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object", line=line)
    text = obj.get("text")
    key = obj.get("key")
    if not isinstance(text, str) or not isinstance(key, str):
        raise SchemaError(f"{where} needs string 'text' and 'key'", line=line)
    return Caption(text=text, key=key)


def load_hierarchies(path, store: EmbeddingStore | None = None) -> list[HierarchyRecord]:
    """Load a line-delimited hierarchy file; when a store is given, verify
    that every referenced key resolves (all unresolved keys are reported)."""
    records: list[HierarchyRecord] = []
    unresolved: list[tuple[int, str]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=line_no) from None
            if not isinstance(obj, dict):
                raise SchemaError("record must be an object", line=line_no)
            image_id = obj.get("image_id")
            image_key = obj.get("image_key")
            if not isinstance(image_id, str) or not isinstance(image_key, str):
                raise SchemaError("record needs string 'image_id' and 'image_key'", line=line_no)
            raw_pos = obj.get("positives")
            if not isinstance(raw_pos, list) or len(raw_pos) != 4:
                raise SchemaError("'positives' must list exactly 4 captions", line=line_no)
            raw_neg = obj.get("negatives", [])
            if not isinstance(raw_neg, list) or len(raw_neg) not in (0, 4):
                raise SchemaError("'negatives' must list 0 or 4 captions", line=line_no)
            positives = tuple(_parse_caption(c, line_no, "positive caption") for c in raw_pos)
            negatives = tuple(_parse_caption(c, line_no, "negative caption") for c in raw_neg)
            record = HierarchyRecord(
                image_id=image_id, image_key=image_key, positives=positives, negatives=negatives
            )
            if store is not None:
                for key in [record.image_key, *record.caption_keys()]:
                    if key not in store:
                        unresolved.append((line_no, key))
            records.append(record)
    if unresolved:
        line_no, key = unresolved[0]
        raise KeyNotFound(key, f"line {line_no}; {len(unresolved)} unresolved key(s) in total")
    return records


# ----------------------------------------------------------------------
# Lexical pair files (tab-separated).
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LexicalPair:
    word1: str
    word2: str
    score: float
    pos: str | None = None


def load_pairs(path) -> list[LexicalPair]:
    """Load word pairs with gold scores: word1 TAB word2 TAB score [TAB pos]."""
    pairs: list[LexicalPair] = []
    seen: set[tuple[str, str]] = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.rstrip("\n")
            if not stripped.strip():
                continue
            fields = stripped.split("\t")
            if len(fields) not in (3, 4):
                raise SchemaError(
                    f"expected 3 or 4 tab-separated fields, got {len(fields)}", line=line_no
                )
            word1, word2, raw_score = fields[0], fields[1], fields[2]
            try:
                score = float(raw_score)
            except ValueError:
                raise SchemaError(f"gold score {raw_score!r} is not numeric", line=line_no) from None
            if not np.isfinite(score):
                raise SchemaError(f"gold score {raw_score!r} is not finite", line=line_no)
            if (word1, word2) in seen:
                raise SchemaError(f"duplicate pair ({word1!r}, {word2!r})", line=line_no)
            seen.add((word1, word2))
            pos = fields[3] if len(fields) == 4 and fields[3] else None
            pairs.append(LexicalPair(word1=word1, word2=word2, score=score, pos=pos))
    return pairs


# ----------------------------------------------------------------------
# Two-tier label tasks (single JSON document).
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Label:
    text: str
    key: str


@dataclass(frozen=True)
class LabelTaskImage:
    image_id: str
    key: str
    coarse: str
    fine: str


@dataclass(frozen=True)
class LabelTask:
    """Coarse and fine label sets plus images with their ground-truth
    (coarse, fine) label pair."""

    coarse: tuple[Label, ...]
    fine: tuple[Label, ...]
    images: tuple[LabelTaskImage, ...]

    def __post_init__(self):
        coarse_texts = {l.text for l in self.coarse}
        fine_texts = {l.text for l in self.fine}
        for img in self.images:
            if img.coarse not in coarse_texts:
                raise SchemaError(
                    f"image {img.image_id!r} ground-truth coarse label {img.coarse!r} "
                    "missing from coarse label set"
                )
            if img.fine not in fine_texts:
                raise SchemaError(
                    f"image {img.image_id!r} ground-truth fine label {img.fine!r} "
                    "missing from fine label set"
                )

    def all_labels(self) -> list[Label]:
        return list(self.coarse) + list(self.fine)


def _parse_label(obj, where: str) -> Label:
    if not isinstance(obj, dict) or not isinstance(obj.get("text"), str) or not isinstance(
        obj.get("key"), str
    ):
        raise SchemaError(f"{where} entries need string 'text' and 'key'", field=where)
    return Label(text=obj["text"], key=obj["key"])


def load_label_task(path) -> LabelTask:
    """Load a two-tier label task from a JSON document."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(obj, dict):
        raise SchemaError("label task must be a JSON object")
    raw_coarse = obj.get("coarse_labels")
    raw_fine = obj.get("fine_labels")
    raw_images = obj.get("images")
    if not isinstance(raw_coarse, list) or not raw_coarse:
        raise SchemaError("'coarse_labels' must be a non-empty list", field="coarse_labels")
    if not isinstance(raw_fine, list) or not raw_fine:
        raise SchemaError("'fine_labels' must be a non-empty list", field="fine_labels")
    if not isinstance(raw_images, list) or not raw_images:
        raise SchemaError("'images' must be a non-empty list", field="images")
    coarse = tuple(_parse_label(l, "coarse_labels") for l in raw_coarse)
    fine = tuple(_parse_label(l, "fine_labels") for l in raw_fine)
    images = []
    for entry in raw_images:
        if not isinstance(entry, dict):
            raise SchemaError("image entries must be objects", field="images")
        try:
            images.append(
                LabelTaskImage(
                    image_id=str(entry["image_id"]),
                    key=str(entry["key"]),
                    coarse=str(entry["coarse"]),
                    fine=str(entry["fine"]),
                )
            )
        except KeyError as exc:
            raise SchemaError(f"image entry missing {exc.args[0]!r}", field="images") from None
    return LabelTask(coarse=coarse, fine=fine, images=tuple(images))


# ----------------------------------------------------------------------
# Cross-modal retrieval tasks (single JSON document).
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class KnnTask:
    """Queries with ground-truth keys; corpus lists the candidate keys
    (when omitted, callers fall back to every non-query key in the store)."""

    queries: tuple[tuple[str, str], ...]
    corpus: tuple[str, ...] | None = None


def load_knn_task(path) -> KnnTask:
    with open(path, "r", encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(obj, dict) or not isinstance(obj.get("queries"), list) or not obj["queries"]:
        raise SchemaError("retrieval task needs a non-empty 'queries' list", field="queries")
    queries = []
    for entry in obj["queries"]:
        if not isinstance(entry, dict) or not isinstance(entry.get("key"), str) or not isinstance(
            entry.get("gt"), str
        ):
            raise SchemaError("query entries need string 'key' and 'gt'", field="queries")
        queries.append((entry["key"], entry["gt"]))
    corpus = obj.get("corpus")
    if corpus is not None:
        if not isinstance(corpus, list) or not all(isinstance(k, str) for k in corpus):
            raise SchemaError("'corpus' must be a list of keys", field="corpus")
        corpus = tuple(corpus)
    return KnnTask(queries=tuple(queries), corpus=corpus)


# ----------------------------------------------------------------------
# Checkpoint sidecar metadata (key=value text).
# ----------------------------------------------------------------------


def write_metadata(path, values: Mapping[str, object]) -> None:
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        for key, value in values.items():
            f.write(f"{key}={value}\n")
    os.replace(tmp, path)


def read_metadata(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or "=" not in line:
                continue
            key, _, value = line.partition("=")
            out[key] = value
    return out
