"""On-disk formats for embedding matrices, item ids, and relevance judgments.

Two matrix formats are supported:

* EMB1 binary: magic ``EMB1``, a version byte (1), two little-endian uint32
  counts (n_items, dim), then n_items*dim little-endian float32 values in
  row-major order.  13-byte header total.
* TSV text: one row per line, tab-separated decimal floats.

Either format may carry a sidecar ``<path>.ids`` file with one UTF-8 id per
row; without it ids are synthesized as ``row_0``, ``row_1``, ...

Qrels are tab-separated ``query_id<TAB>doc_id<TAB>relevance`` lines.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1
_HEADER = struct.Struct("<4sBII")
HEADER_SIZE = _HEADER.size  # 13 bytes


def _ids_path(path: Path) -> Path:
    return path.with_name(path.name + ".ids")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A dense (n_items x dim) float matrix with one id per row.

    Loaded data is float32; derived matrices (projections) may be float64.
    Instances are treated as immutable and are safe to share across threads.
    """

    data: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.data.ndim != 2:
            raise ValueError(f"embedding data must be 2-D, got shape {self.data.shape}")
        n, d = self.data.shape
        if n < 1 or d < 1:
            raise ValueError(f"embedding matrix must be at least 1x1, got {n}x{d}")
        if len(self.ids) != n:
            raise ValueError(f"got {len(self.ids)} ids for {n} rows")
        if not all(self.ids):
            raise ValueError("ids must be non-empty strings")
        if len(set(self.ids)) != n:
            raise ValueError("ids must be unique")
        if not np.all(np.isfinite(self.data)):
            bad = np.argwhere(~np.isfinite(self.data))[0]
            raise ValueError(f"non-finite value at row {bad[0]}, column {bad[1]}")

    @property
    def n_items(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def row(self, item_id: str) -> np.ndarray:
        return self.data[self.ids.index(item_id)]


@dataclass(frozen=True)
class Qrels:
    """Relevance judgments: query id -> {doc id -> integer grade >= 0}.

    Grade 0 entries are kept but treated as non-relevant.
    """

    entries: dict[str, dict[str, int]]

    def __post_init__(self) -> None:
        for qid, docs in self.entries.items():
            if not qid:
                raise ValueError("query ids must be non-empty")
            for did, rel in docs.items():
                if not did:
                    raise ValueError(f"doc ids must be non-empty (query {qid!r})")
                if rel < 0:
                    raise ValueError(f"negative relevance for ({qid!r}, {did!r})")

    def relevance(self, query_id: str, doc_id: str) -> int:
        return self.entries.get(query_id, {}).get(doc_id, 0)

    def positives(self, query_id: str) -> dict[str, int]:
        """Docs with relevance > 0 for one query."""
        return {d: r for d, r in self.entries.get(query_id, {}).items() if r > 0}

    @property
    def query_ids(self) -> tuple[str, ...]:
        return tuple(self.entries.keys())


def _synth_ids(n: int) -> tuple[str, ...]:
    return tuple(f"row_{i}" for i in range(n))


def _load_ids(path: Path, n: int) -> tuple[str, ...]:
    ids_file = _ids_path(path)
    if not ids_file.exists():
        return _synth_ids(n)
    lines = ids_file.read_text(encoding="utf-8").splitlines()
    if len(lines) != n:
        raise FormatError(f"{ids_file}: expected {n} ids, found {len(lines)}")
    seen: dict[str, int] = {}
    for lineno, item_id in enumerate(lines, start=1):
        if not item_id:
            raise FormatError(f"{ids_file}: empty id at line {lineno}")
        if item_id in seen:
            raise FormatError(
                f"{ids_file}: duplicate id {item_id!r} at line {lineno} "
                f"(first seen at line {seen[item_id]})"
            )
        seen[item_id] = lineno
    return tuple(lines)


def _load_emb1(path: Path, raw: bytes) -> EmbeddingMatrix:
    if len(raw) < HEADER_SIZE:
        raise FormatError(
            f"{path}: malformed header, need {HEADER_SIZE} bytes but file has {len(raw)}"
        )
    magic, version, n, d = _HEADER.unpack_from(raw, 0)
    if magic != EMB1_MAGIC:
        raise FormatError(f"{path}: malformed header, bad magic at byte 0")
    if version != EMB1_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 4")
    if n < 1 or d < 1:
        raise FormatError(f"{path}: header declares empty matrix ({n}x{d}) at byte 5")
    expected = HEADER_SIZE + 4 * n * d
    if len(raw) != expected:
        got_floats = (len(raw) - HEADER_SIZE) // 4
        raise FormatError(
            f"{path}: payload length mismatch, header declares n={n}, dim={d} "
            f"({n * d} floats) but payload holds {got_floats} "
            f"(file is {len(raw)} bytes, expected {expected})"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=HEADER_SIZE).reshape(n, d)
    bad = np.argwhere(~np.isfinite(data))
    if bad.size:
        i, j = bad[0]
        offset = HEADER_SIZE + 4 * (int(i) * d + int(j))
        raise FormatError(
            f"{path}: non-finite value at row {i}, column {j} (byte {offset})"
        )
    return EmbeddingMatrix(data=data, ids=_load_ids(path, n))


def _load_tsv(path: Path, raw: bytes) -> EmbeddingMatrix:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not EMB1 and not UTF-8 text ({exc})") from None
    rows: list[list[float]] = []
    dim = -1
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if dim == -1:
            dim = len(fields)
        elif len(fields) != dim:
            raise FormatError(
                f"{path}: line {lineno} has {len(fields)} columns, expected {dim}"
            )
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise FormatError(f"{path}: non-numeric value at line {lineno}") from None
        for col, v in enumerate(values):
            if not math.isfinite(v):
                raise FormatError(
                    f"{path}: non-finite value at line {lineno}, column {col}"
                )
        rows.append(values)
    if not rows:
        raise FormatError(f"{path}: empty matrix")
    data = np.asarray(rows, dtype=np.float32)
    return EmbeddingMatrix(data=data, ids=_load_ids(path, len(rows)))


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Load a matrix from an EMB1 or TSV file, validating as it goes."""
    path = Path(path)
    raw = path.read_bytes()
    if not raw:
        raise FormatError(f"{path}: empty file")
    if raw[:4] == EMB1_MAGIC:
        return _load_emb1(path, raw)
    return _load_tsv(path, raw)


def _write_ids(path: Path, ids: tuple[str, ...]) -> None:
    _ids_path(path).write_text("\n".join(ids) + "\n", encoding="utf-8")


def save_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write an EMB1 file plus its ids sidecar.

    Data is stored as float32; a float32 matrix round-trips bit-exactly.
    """
    path = Path(path)
    payload = np.ascontiguousarray(matrix.data, dtype="<f4").tobytes()
    header = _HEADER.pack(EMB1_MAGIC, EMB1_VERSION, matrix.n_items, matrix.dim)
    path.write_bytes(header + payload)
    _write_ids(path, matrix.ids)


def save_embeddings_tsv(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write a TSV matrix plus its ids sidecar (float32-limited precision)."""
    path = Path(path)
    data = matrix.data.astype(np.float32)
    lines = ["\t".join(repr(float(v)) for v in row) for row in data]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_ids(path, matrix.ids)


def load_qrels(path: str | Path) -> Qrels:
    """Load qrels; duplicate (query, doc) pairs keep the maximum relevance."""
    path = Path(path)
    entries: dict[str, dict[str, int]] = {}
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise FormatError(
                    f"{path}: line {lineno} has {len(fields)} columns, "
                    "expected query_id<TAB>doc_id<TAB>relevance"
                )
            qid, did, rel_text = fields
            if not qid or not did:
                raise FormatError(f"{path}: empty id at line {lineno}")
            try:
                rel = int(rel_text)
            except ValueError:
                raise FormatError(
                    f"{path}: non-integer relevance {rel_text!r} at line {lineno}"
                ) from None
            if rel < 0:
                raise FormatError(f"{path}: negative relevance at line {lineno}")
            docs = entries.setdefault(qid, {})
            docs[did] = max(rel, docs.get(did, 0))
    if not entries:
        raise FormatError(f"{path}: no qrels entries")
    return Qrels(entries=entries)
