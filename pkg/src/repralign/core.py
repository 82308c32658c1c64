"""Shared domain types, validation, seeded subsampling and the distance kernel."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    DegenerateLabels,
    DimensionMismatch,
    LabelOutOfRange,
    NonFinite,
    ShapeMismatch,
    SizeOutOfRange,
)
from .rng import Xoshiro256


@dataclass(frozen=True, eq=False)
class EmbeddedDataset:
    """Labeled points in a fixed representation space.

    ``vectors`` is a float64 ``(n, d)`` array, or a CSR matrix for sparse
    representations such as bag-of-words counts.  Build instances through
    :func:`validate_dataset`; the constructor does not check invariants.
    """

    vectors: np.ndarray | sp.csr_matrix
    labels: np.ndarray
    label_vocab: tuple[str, ...]
    positive_class: int

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.vectors)

    @property
    def n_labels(self) -> int:
        return len(self.label_vocab)

    @property
    def positive_mask(self) -> np.ndarray:
        return self.labels == self.positive_class

    @property
    def prevalence(self) -> float:
        return int(self.positive_mask.sum()) / self.n

    def label_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_labels)

    def dense_vectors(self) -> np.ndarray:
        if self.is_sparse:
            return np.asarray(self.vectors.toarray(), dtype=np.float64)
        return self.vectors

    def take(self, rows: np.ndarray) -> "EmbeddedDataset":
        """Rows in the given order; no re-validation."""
        rows = np.asarray(rows, dtype=np.intp)
        return EmbeddedDataset(
            self.vectors[rows], self.labels[rows], self.label_vocab, self.positive_class
        )

    def fingerprint(self) -> str:
        """Short content hash used to tie cached dendrograms to their data."""
        h = hashlib.sha256()
        h.update(np.asarray(self.vectors.shape, dtype=np.int64).tobytes())
        if self.is_sparse:
            m = self.vectors
            for part in (m.indptr, m.indices, m.data):
                h.update(np.ascontiguousarray(part).tobytes())
        else:
            h.update(np.ascontiguousarray(self.vectors).tobytes())
        h.update(self.labels.astype(np.int64).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class CurveSeries:
    """A metric over a strictly increasing sweep index, plus its aggregate."""

    index: np.ndarray
    values: np.ndarray
    area: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.index) != len(self.values):
            raise ShapeMismatch("curve index and values differ in length")
        if len(self.index) > 1 and np.any(np.diff(self.index) <= 0):
            raise ValueError("curve index must be strictly increasing")


def _first_nonfinite(matrix) -> tuple[int, int] | None:
    if sp.issparse(matrix):
        coo = matrix.tocoo()
        bad = ~np.isfinite(coo.data)
        if not bad.any():
            return None
        order = np.lexsort((coo.col[bad], coo.row[bad]))
        return int(coo.row[bad][order[0]]), int(coo.col[bad][order[0]])
    bad = ~np.isfinite(matrix)
    if not bad.any():
        return None
    row, col = np.unravel_index(int(np.argmax(bad.ravel())), matrix.shape)
    return int(row), int(col)


def validate_dataset(
    raw_matrix,
    raw_labels: Sequence[int],
    vocab: Sequence[str],
    positive_class: int | str,
) -> EmbeddedDataset:
    """Check and normalize inputs into an :class:`EmbeddedDataset`.

    The matrix is widened to float64.  ``positive_class`` may be a class id
    or a class name from ``vocab``.
    """
    if sp.issparse(raw_matrix):
        matrix = sp.csr_matrix(raw_matrix, dtype=np.float64)
        matrix.sort_indices()
    else:
        matrix = np.array(raw_matrix, dtype=np.float64, order="C")
        if matrix.ndim == 1:
            raise ShapeMismatch("expected a 2-D matrix, got a 1-D array")
        if matrix.ndim != 2:
            raise ShapeMismatch(f"expected a 2-D matrix, got {matrix.ndim} dimensions")
    labels = np.asarray(raw_labels)
    if labels.ndim != 1:
        raise ShapeMismatch("labels must be one-dimensional")
    n, d = matrix.shape
    if labels.shape[0] != n:
        raise ShapeMismatch(f"{n} vectors but {labels.shape[0]} labels")
    if n < 2:
        raise ShapeMismatch("need at least 2 points")
    if d < 1:
        raise ShapeMismatch("need at least 1 dimension")
    vocab = tuple(str(v) for v in vocab)
    if isinstance(positive_class, str):
        if positive_class not in vocab:
            raise DegenerateLabels(
                f"positive class {positive_class!r} not in label vocabulary {list(vocab)}"
            )
        positive_class = vocab.index(positive_class)
    positive_class = int(positive_class)
    if not 0 <= positive_class < len(vocab):
        raise DegenerateLabels(f"positive class id {positive_class} outside vocabulary")

    bad = _first_nonfinite(matrix)
    if bad is not None:
        raise NonFinite(*bad)

    if labels.dtype.kind not in "iu":
        if labels.dtype.kind == "f" and np.all(np.isfinite(labels)) and np.all(labels == np.round(labels)):
            labels = labels.astype(np.int64)
        else:
            raise LabelOutOfRange(0)
    labels = labels.astype(np.int64)
    out_of_range = (labels < 0) | (labels >= len(vocab))
    if out_of_range.any():
        row = int(np.argmax(out_of_range))
        raise LabelOutOfRange(row, int(labels[row]))

    _check_both_classes(labels, positive_class)
    return EmbeddedDataset(matrix, labels, vocab, positive_class)


def _check_both_classes(labels: np.ndarray, positive_class: int, hint: str = "") -> None:
    n_pos = int(np.count_nonzero(labels == positive_class))
    if n_pos == 0:
        raise DegenerateLabels("positive class absent" + hint)
    if n_pos == labels.shape[0]:
        raise DegenerateLabels("every point carries the positive class" + hint)


def subsample_indices(n: int, size: int, seed: int) -> np.ndarray:
    """Sorted uniform sample of ``size`` row indices without replacement."""
    if not 2 <= size <= n:
        raise SizeOutOfRange(f"subsample size {size} outside [2, {n}]")
    if size == n:
        return np.arange(n)
    rng = Xoshiro256(seed)
    return np.sort(np.asarray(rng.sample_indices(n, size), dtype=np.int64))


def subsample(ds: EmbeddedDataset, size: int, seed: int) -> EmbeddedDataset:
    """Uniform subsample preserving the original row order."""
    rows = subsample_indices(ds.n, size, seed)
    out = ds.take(rows)
    _check_both_classes(
        out.labels,
        out.positive_class,
        f" in subsample (size={size}, seed={seed}); try another seed or a larger size",
    )
    return out


def squared_euclidean(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    diff = a - b
    return float(diff @ diff)
