"""Reading inputs and persisting artifacts.

Inputs: dense matrices (NPY v1/v2 or numeric CSV), sparse ``.npz`` matrices,
label files, JSONL text corpora, and a term-frequency bag-of-words
featurizer.  Artifacts are CSV files whose first line is
``#repralign-format: <name>/<version>``, followed by a header row, data
rows, and a trailing block of ``# key: <json>`` metadata lines.
"""

from __future__ import annotations

import ast
import hashlib
import json
import re
import struct
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .core import CurveSeries, EmbeddedDataset, validate_dataset
from .errors import (
    BadJson,
    EmptyFile,
    EmptyVocabulary,
    FormatError,
    MissingField,
    NonFinite,
    RowCountMismatch,
    VersionMismatch,
)
from .hierclust import Dendrogram

FORMAT_VERSION = 1
TAG_PREFIX = "#repralign-format: "
NPY_MAGIC = b"\x93NUMPY"

# ---------------------------------------------------------------- matrices


def read_npy(path) -> np.ndarray:
    """Read a 2-D little-endian float32/float64 C-order NPY file as float64."""
    raw = Path(path).read_bytes()
    if raw[:6] != NPY_MAGIC:
        raise FormatError(0, "not an NPY file (bad magic string)")
    if len(raw) < 10:
        raise FormatError(6, "truncated header")
    major, minor = raw[6], raw[7]
    if major == 1:
        (hlen,) = struct.unpack("<H", raw[8:10])
        start = 10
    elif major in (2, 3):
        if len(raw) < 12:
            raise FormatError(8, "truncated header")
        (hlen,) = struct.unpack("<I", raw[8:12])
        start = 12
    else:
        raise FormatError(6, f"unsupported NPY version {major}.{minor}")
    try:
        header = ast.literal_eval(raw[start : start + hlen].decode("latin1" if major < 3 else "utf8"))
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise FormatError(start, f"unreadable header: {exc}") from None
    if not isinstance(header, dict) or not {"descr", "fortran_order", "shape"} <= header.keys():
        raise FormatError(start, "header must define descr, fortran_order and shape")
    descr = header["descr"]
    if descr not in ("<f8", "<f4", "|f8", "|f4"):
        raise FormatError(start, f"unsupported dtype {descr!r}; expected little-endian float32/float64")
    if header["fortran_order"]:
        raise FormatError(start, "Fortran-ordered arrays are not supported")
    shape = tuple(header["shape"])
    if len(shape) != 2:
        raise FormatError(start, f"expected a 2-D array, got shape {shape}")
    offset = start + hlen
    dtype = np.dtype(descr.replace("|", "<"))
    need = shape[0] * shape[1] * dtype.itemsize
    if len(raw) - offset < need:
        raise FormatError(len(raw), f"truncated data: need {need} bytes, have {len(raw) - offset}")
    data = np.frombuffer(raw, dtype=dtype, count=shape[0] * shape[1], offset=offset)
    return data.reshape(shape).astype(np.float64)


def write_npy(path, array: np.ndarray) -> None:
    """Write a 2-D float array as NPY v1.0 (float32 stays float32)."""
    array = np.asarray(array)
    if array.dtype not in (np.float32, np.float64):
        array = array.astype(np.float64)
    array = np.ascontiguousarray(array, dtype=array.dtype.newbyteorder("<"))
    header = "{'descr': '%s', 'fortran_order': False, 'shape': %r, }" % (array.dtype.str, tuple(array.shape))
    pad = 64 - (10 + len(header) + 1) % 64
    header = header + " " * pad + "\n"
    with open(path, "wb") as fh:
        fh.write(NPY_MAGIC + bytes([1, 0]) + struct.pack("<H", len(header)) + header.encode("latin1"))
        fh.write(array.tobytes())


def read_csv_matrix(path) -> np.ndarray:
    """Numeric CSV, optional single header row."""
    raw = Path(path).read_bytes()
    rows: list[list[float]] = []
    offset = 0
    width = None
    for lineno, line in enumerate(raw.splitlines(keepends=True), start=1):
        text = line.decode("utf8", errors="replace").strip()
        if text:
            fields = [f.strip() for f in text.split(",")]
            try:
                values = [float(f) for f in fields]
            except ValueError:
                if lineno == 1:
                    offset += len(line)
                    continue
                bad = next(f for f in fields if not _is_float(f))
                raise FormatError(offset, f"line {lineno}: not a number: {bad!r}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise FormatError(offset, f"line {lineno}: expected {width} fields, got {len(values)}")
            rows.append(values)
        offset += len(line)
    if not rows:
        raise EmptyFile(f"{path}: no numeric rows")
    return np.array(rows, dtype=np.float64)


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def load_dense_matrix(path, format: str | None = None):
    """Load a matrix; format is inferred from the extension when not given.

    ``.npz`` files (scipy sparse) load as CSR; everything else as a dense
    float64 array.  Non-finite entries raise :class:`NonFinite`.
    """
    path = Path(path)
    fmt = format or path.suffix.lstrip(".").lower()
    if fmt == "npy":
        m = read_npy(path)
    elif fmt == "csv":
        m = read_csv_matrix(path)
    elif fmt == "npz":
        try:
            m = sp.load_npz(path).tocsr().astype(np.float64)
        except (ValueError, OSError, KeyError) as exc:
            raise FormatError(0, f"unreadable sparse matrix: {exc}") from None
        if not np.all(np.isfinite(m.data)):
            coo = m.tocoo()
            i = int(np.argmax(~np.isfinite(coo.data)))
            raise NonFinite(int(coo.row[i]), int(coo.col[i]))
        return m
    else:
        raise FormatError(0, f"unknown matrix format {fmt!r} (expected csv, npy or npz)")
    bad = ~np.isfinite(m)
    if bad.any():
        r, c = np.unravel_index(int(np.argmax(bad.ravel())), m.shape)
        raise NonFinite(int(r), int(c))
    return m


# ------------------------------------------------------------------ labels


def load_labels(path, expected_rows: int | None = None) -> tuple[np.ndarray, list[str]]:
    """Labels as one name per line, or a two-column ``id,label`` CSV.

    Ids are assigned in order of first occurrence.
    """
    lines = Path(path).read_text(encoding="utf8").splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise EmptyFile(f"{path}: no labels")
    two_col = all(line.count(",") == 1 for line in lines)
    if two_col:
        if lines[0].replace(" ", "").lower() == "id,label":
            lines = lines[1:]
        names = [line.split(",", 1)[1].strip() for line in lines]
    else:
        names = [line.strip() for line in lines]
    if not names:
        raise EmptyFile(f"{path}: no labels")
    vocab: dict[str, int] = {}
    ids = np.empty(len(names), dtype=np.int64)
    for i, name in enumerate(names):
        if not name:
            raise FormatError(i, f"line {i + 1}: empty label")
        ids[i] = vocab.setdefault(name, len(vocab))
    if expected_rows is not None and len(ids) != expected_rows:
        raise RowCountMismatch(f"{len(ids)} labels for {expected_rows} matrix rows")
    return ids, list(vocab)


def write_labels(path, labels: Sequence[int], vocab: Sequence[str]) -> None:
    Path(path).write_text("".join(f"{vocab[int(i)]}\n" for i in labels), encoding="utf8")


def load_dataset(matrix_path, labels_path, positive: str | int, matrix_format: str | None = None) -> EmbeddedDataset:
    matrix = load_dense_matrix(matrix_path, matrix_format)
    labels, vocab = load_labels(labels_path, expected_rows=matrix.shape[0])
    return validate_dataset(matrix, labels, vocab, positive)


# ------------------------------------------------------------------ corpora


@dataclass(frozen=True, eq=False)
class TextCorpus:
    texts: list[str]
    labels: np.ndarray
    label_vocab: tuple[str, ...]
    positive_class: int | None = None

    def __post_init__(self):
        if not self.texts:
            raise EmptyFile("corpus is empty")
        if len(self.texts) != len(self.labels):
            raise RowCountMismatch("texts and labels differ in length")
        if np.any(self.labels < 0) or np.any(self.labels >= len(self.label_vocab)):
            raise ValueError("label id outside vocabulary")

    @property
    def documents(self) -> list[tuple[str, int]]:
        return list(zip(self.texts, (int(l) for l in self.labels)))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for t in self.texts:
            h.update(t.encode("utf8"))
            h.update(b"\0")
        h.update(self.labels.astype(np.int64).tobytes())
        return h.hexdigest()[:16]


def load_jsonl_corpus(path, text_field: str = "text", label_field: str = "label", positive: str | None = None) -> TextCorpus:
    texts: list[str] = []
    names: list[str] = []
    with open(path, encoding="utf8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BadJson(lineno, f"({exc.msg})") from None
            if not isinstance(record, dict):
                raise BadJson(lineno, "(expected an object)")
            for fld in (text_field, label_field):
                if fld not in record:
                    raise MissingField(lineno, fld)
            texts.append(str(record[text_field]))
            names.append(str(record[label_field]))
    if not texts:
        raise EmptyFile(f"{path}: no records")
    vocab: dict[str, int] = {}
    labels = np.array([vocab.setdefault(n, len(vocab)) for n in names], dtype=np.int64)
    pos = None
    if positive is not None:
        if positive not in vocab:
            raise ValueError(f"positive class {positive!r} not found among labels {list(vocab)}")
        pos = vocab[positive]
    return TextCorpus(texts, labels, tuple(vocab), pos)


# --------------------------------------------------------------------- BoW

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Case-folded runs of Unicode alphanumerics."""
    return _TOKEN.findall(text.casefold())


@dataclass(frozen=True)
class BowVocabulary:
    terms: tuple[str, ...]
    min_count: int
    built_from: str

    @property
    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)


def _count_chunk(texts: list[str]) -> list[Counter]:
    return [Counter(tokenize(t)) for t in texts]


def _doc_counts(texts: list[str], workers: int) -> list[Counter]:
    if workers <= 1 or len(texts) < 1000:
        return _count_chunk(texts)
    size = -(-len(texts) // (workers * 4))
    chunks = [texts[i : i + size] for i in range(0, len(texts), size)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return [c for part in ex.map(_count_chunk, chunks) for c in part]


def bow_featurize(
    corpus: TextCorpus | Sequence[str],
    min_count: int = 2,
    vocab: BowVocabulary | None = None,
    workers: int = 1,
) -> tuple[sp.csr_matrix, BowVocabulary]:
    """Raw term counts per document.

    Without ``vocab`` the vocabulary is fit: terms occurring at least
    ``min_count`` times in the corpus, sorted.  With ``vocab`` the given
    columns are reused and unknown terms dropped.
    """
    texts = corpus.texts if isinstance(corpus, TextCorpus) else list(corpus)
    counts = _doc_counts(texts, workers)
    if vocab is None:
        total: Counter = Counter()
        for c in counts:
            total.update(c)
        terms = tuple(sorted(t for t, n in total.items() if n >= min_count))
        if not terms:
            raise EmptyVocabulary(f"no term occurs at least {min_count} times")
        fp = corpus.fingerprint() if isinstance(corpus, TextCorpus) else hashlib.sha256("\0".join(texts).encode()).hexdigest()[:16]
        vocab = BowVocabulary(terms, min_count, fp)
    index = vocab.index
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for c in counts:
        cols = sorted((index[t], n) for t, n in c.items() if t in index)
        indices.extend(j for j, _ in cols)
        data.extend(float(n) for _, n in cols)
        indptr.append(len(indices))
    matrix = sp.csr_matrix(
        (np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(texts), len(vocab)),
    )
    return matrix, vocab


# --------------------------------------------------------------- artifacts


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_tagged_csv(path, kind: str, header: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None) -> None:
    lines = [f"{TAG_PREFIX}{kind}/{FORMAT_VERSION}", ",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    for key in sorted(meta or {}):
        lines.append(f"# {key}: {json.dumps(meta[key], sort_keys=True)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf8")


def read_tagged_csv(path, kind: str | None = None) -> tuple[str, list[str], list[list[str]], dict]:
    text = Path(path).read_text(encoding="utf8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith(TAG_PREFIX):
        raise FormatError(0, f"{path}: missing '{TAG_PREFIX.strip()}' tag on the first line")
    tag = lines[0][len(TAG_PREFIX) :].strip()
    name, _, version = tag.rpartition("/")
    if not name or not version.isdigit():
        raise FormatError(len(TAG_PREFIX), f"malformed format tag {tag!r}")
    if kind is not None and name != kind:
        raise FormatError(len(TAG_PREFIX), f"expected a {kind!r} artifact, found {name!r}")
    if int(version) != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: {name} version {version}, reader supports {FORMAT_VERSION}")
    if len(lines) < 2:
        raise FormatError(len(lines[0]) + 1, "missing header row")
    header = lines[1].split(",")
    rows, meta = [], {}
    for line in lines[2:]:
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            try:
                meta[key] = json.loads(value)
            except json.JSONDecodeError:
                raise FormatError(0, f"bad metadata line {line!r}") from None
        elif line.strip():
            rows.append(line.split(","))
    return name, header, rows, meta


def save_dendrogram(path, dn: Dendrogram, meta: dict | None = None) -> None:
    rows = ((m, l, r, c, s) for m, (l, r, c, s) in enumerate(dn.merges()))
    write_tagged_csv(path, "dendrogram", ["step", "left_id", "right_id", "cost", "size"], rows, {"n": dn.n, **dn.meta, **(meta or {})})


def load_dendrogram(path) -> Dendrogram:
    _, header, rows, meta = read_tagged_csv(path, "dendrogram")
    if header != ["step", "left_id", "right_id", "cost", "size"]:
        raise FormatError(0, f"unexpected dendrogram columns {header}")
    n = int(meta.get("n", len(rows) + 1))
    if len(rows) != n - 1:
        raise FormatError(0, f"dendrogram for n={n} must have {n - 1} merges, found {len(rows)}")
    try:
        left = np.array([int(r[1]) for r in rows], dtype=np.int64)
        right = np.array([int(r[2]) for r in rows], dtype=np.int64)
        cost = np.array([float(r[3]) for r in rows], dtype=np.float64)
        size = np.array([int(r[4]) for r in rows], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise FormatError(0, f"bad dendrogram row: {exc}") from None
    extra = {k: v for k, v in meta.items() if k != "n"}
    return Dendrogram(n, left, right, cost, size, extra)


def save_curve(path, kind: str, columns: Sequence[str], table: Sequence[np.ndarray], meta: dict | None = None) -> None:
    write_tagged_csv(path, kind, columns, zip(*table), meta)


def load_curve(path, kind: str | None = None) -> tuple[dict[str, np.ndarray], dict]:
    _, header, rows, meta = read_tagged_csv(path, kind)
    cols = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in rows]
        cols[name] = np.array([float(v) for v in vals])
        if all(v.lstrip("-").isdigit() for v in vals):
            cols[name] = cols[name].astype(np.int64)
    return cols, meta


def curve_from_file(path, kind: str, index_col: str, value_col: str) -> CurveSeries:
    cols, meta = load_curve(path, kind)
    area = meta.get("area", float(np.mean(cols[value_col])))
    return CurveSeries(cols[index_col], cols[value_col], float(area), meta)


def save_cells(path, cells: Iterable, meta: dict | None = None) -> None:
    rows = [(c.representation, c.dataset, c.metric, c.value) if hasattr(c, "metric") else tuple(c) for c in cells]
    write_tagged_csv(path, "cells", ["representation", "dataset", "metric", "value"], rows, meta)


def load_cells(path) -> list[tuple[str, str, str, float]]:
    """Cells from a tagged artifact or a plain CSV with the same columns."""
    text = Path(path).read_text(encoding="utf8")
    if text.startswith(TAG_PREFIX):
        _, header, rows, _ = read_tagged_csv(path, "cells")
    else:
        lines = [l for l in text.splitlines() if l.strip() and not l.startswith("#")]
        if not lines:
            raise EmptyFile(f"{path}: no cells")
        header, rows = lines[0].split(","), [l.split(",") for l in lines[1:]]
    want = ["representation", "dataset", "metric", "value"]
    if [h.strip() for h in header] != want:
        raise FormatError(0, f"cells file needs columns {want}, got {header}")
    out = []
    for i, r in enumerate(rows):
        if len(r) != 4:
            raise FormatError(i + 1, f"cell row {i + 1} has {len(r)} fields")
        value = r[3].strip()
        out.append((r[0].strip(), r[1].strip(), r[2].strip(), float("nan") if value in ("", "nan", "NA") else float(value)))
    return out


def save_report(path, report, meta: dict | None = None) -> None:
    rows = [(r, *row, m) for r, row, m in zip(report.rows, report.cells, report.row_means)]
    write_tagged_csv(path, "report", ["repr", *report.cols, "mean"], rows, {"metric": report.metric, **(meta or {})})


def load_report(path):
    from .stats import ReportMatrix

    _, header, rows, meta = read_tagged_csv(path, "report")
    cells = np.array([[float(v) for v in r[1:-1]] for r in rows])
    means = np.array([float(r[-1]) for r in rows])
    return ReportMatrix(meta["metric"], [r[0] for r in rows], header[1:-1], cells, means)


def save_vocabulary(path, vocab: BowVocabulary) -> None:
    write_tagged_csv(
        path,
        "bow-vocabulary",
        ["term", "index"],
        ((t, i) for i, t in enumerate(vocab.terms)),
        {"min_count": vocab.min_count, "built_from": vocab.built_from},
    )


def load_vocabulary(path) -> BowVocabulary:
    _, _, rows, meta = read_tagged_csv(path, "bow-vocabulary")
    terms = [None] * len(rows)
    for term, idx in rows:
        terms[int(idx)] = term
    return BowVocabulary(tuple(terms), int(meta["min_count"]), str(meta["built_from"]))
