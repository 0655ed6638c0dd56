"""Supervised data ingestion and the supervised-to-bandit environment.

CSV files are parsed with numeric columns kept as-is, non-numeric columns
one-hot encoded, and labels indexed by first appearance. Features are scaled
per dimension by 1/(max - min) computed over the full file (after shifting by
the per-feature minimum), so every non-constant feature spans [0, 1]. Runs
then stream a seeded subsample as a partial-feedback environment: actions are
class indices and the chosen action's reward is the correctness indicator.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np


class DatasetError(ValueError):
    """Raised for unreadable, malformed or unusable dataset inputs."""


@dataclass
class SupervisedDataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    feature_names: list[str] = field(default_factory=list)
    class_names: list[str] = field(default_factory=list)
    imputed_cells: int = 0

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim == 1:
            self.features = self.features[:, None]
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.features) != len(self.labels):
            raise DatasetError("features and labels disagree on row count")
        if self.n_classes < 2:
            raise DatasetError("need at least 2 classes")
        if not self.feature_names:
            self.feature_names = [f"f{j}" for j in range(self.features.shape[1])]

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, label_column: Union[int, str] = -1,
             has_header: bool = True) -> SupervisedDataset:
    """Parse a CSV file into a SupervisedDataset.

    ``label_column`` selects by header name or by index (negative indices
    count from the end). Empty numeric cells are imputed to 0 and counted in
    ``imputed_cells``; empty categorical cells one-hot to all zeros.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        raw = list(csv.reader(fh))
    raw = [row for row in raw if row]  # tolerate trailing blank lines
    if not raw:
        raise DatasetError(f"{path}: file is empty")
    header = raw[0] if has_header else None
    rows = raw[1:] if has_header else raw
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    width = len(header) if header is not None else len(rows[0])
    for offset, row in enumerate(rows):
        line = offset + (2 if has_header else 1)
        if len(row) != width:
            raise DatasetError(f"{path}: row at line {line} has {len(row)} fields, expected {width}")

    if isinstance(label_column, str):
        if header is None:
            raise DatasetError("label column by name requires a header row")
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise DatasetError(f"unknown label column {label_column!r}; "
                               f"available: {header}") from None
    else:
        label_idx = label_column if label_column >= 0 else width + label_column
        if not 0 <= label_idx < width:
            raise DatasetError(f"label column index {label_column} out of range for {width} columns")

    col_names = header if header is not None else [f"col{j}" for j in range(width)]

    class_names: list[str] = []
    class_index: dict[str, int] = {}
    labels = np.empty(len(rows), dtype=np.int64)
    for i, row in enumerate(rows):
        cell = row[label_idx]
        if cell not in class_index:
            class_index[cell] = len(class_names)
            class_names.append(cell)
        labels[i] = class_index[cell]
    if len(class_names) < 2:
        raise DatasetError(f"{path}: need at least 2 classes, found {len(class_names)}")

    blocks: list[np.ndarray] = []
    names: list[str] = []
    imputed = 0
    for j in range(width):
        if j == label_idx:
            continue
        cells = [row[j] for row in rows]
        if all(cell == "" or _is_float(cell) for cell in cells):
            col = np.empty(len(cells))
            for i, cell in enumerate(cells):
                if cell == "":
                    col[i] = 0.0
                    imputed += 1
                else:
                    col[i] = float(cell)
            blocks.append(col[:, None])
            names.append(col_names[j])
        else:
            cats: list[str] = []
            cat_index: dict[str, int] = {}
            for cell in cells:
                if cell != "" and cell not in cat_index:
                    cat_index[cell] = len(cats)
                    cats.append(cell)
            block = np.zeros((len(cells), len(cats)))
            for i, cell in enumerate(cells):
                if cell == "":
                    imputed += 1
                else:
                    block[i, cat_index[cell]] = 1.0
            blocks.append(block)
            names.extend(f"{col_names[j]}={cat}" for cat in cats)
    if not blocks:
        raise DatasetError(f"{path}: no feature columns besides the label")

    return SupervisedDataset(features=np.hstack(blocks), labels=labels,
                             n_classes=len(class_names), feature_names=names,
                             class_names=class_names, imputed_cells=imputed)


@dataclass
class ScalingTransform:
    """Per-feature shift/scale mapping observed ranges onto [0, 1]."""

    mins: np.ndarray
    factors: np.ndarray


def fit_scaling(ds: SupervisedDataset) -> ScalingTransform:
    """Per-feature min and 1/(max - min) over the full dataset.

    Constant features get factor 0 and map to 0.
    """
    if len(ds) == 0:
        raise DatasetError("cannot fit scaling on an empty dataset")
    mins = ds.features.min(axis=0)
    spans = ds.features.max(axis=0) - mins
    factors = np.divide(1.0, spans, out=np.zeros_like(spans), where=spans > 0)
    return ScalingTransform(mins=mins, factors=factors)


def apply_scaling(ds: SupervisedDataset, transform: ScalingTransform) -> SupervisedDataset:
    scaled = (ds.features - transform.mins) * transform.factors
    return SupervisedDataset(features=scaled, labels=ds.labels.copy(),
                             n_classes=ds.n_classes,
                             feature_names=list(ds.feature_names),
                             class_names=list(ds.class_names),
                             imputed_cells=ds.imputed_cells)


def subsample(ds: SupervisedDataset, n: int, seed) -> SupervisedDataset:
    """Seeded uniform subsample without replacement, order shuffled.

    When n >= len(ds) this is a plain permutation of all rows.
    """
    if n < 1:
        raise ValueError("subsample size must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.permutation(len(ds))[:n]
    return SupervisedDataset(features=ds.features[idx], labels=ds.labels[idx],
                             n_classes=ds.n_classes,
                             feature_names=list(ds.feature_names),
                             class_names=list(ds.class_names),
                             imputed_cells=ds.imputed_cells)


class BanditEnv:
    """Partial-feedback stream over a classification dataset.

    Each step yields the next context and a reveal function mapping the
    chosen action to its 0/1 reward (1 iff the action equals the row's
    class index). Exhaustion raises StopIteration.
    """

    def __init__(self, ds: SupervisedDataset):
        self._features = ds.features
        self._labels = ds.labels
        self.n_actions = ds.n_classes
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._labels)

    @property
    def remaining(self) -> int:
        return len(self._labels) - self._cursor

    def step(self) -> tuple[np.ndarray, Callable[[int], float]]:
        if self._cursor >= len(self._labels):
            raise StopIteration("environment exhausted")
        i = self._cursor
        self._cursor += 1
        label = int(self._labels[i])
        n_actions = self.n_actions

        def reveal(a: int) -> float:
            if not 0 <= a < n_actions:
                raise ValueError(f"action {a} out of range [0, {n_actions})")
            return 1.0 if a == label else 0.0

        return self._features[i].copy(), reveal

    def __iter__(self):
        return self

    def __next__(self):
        return self.step()


def top_eigen_explained_variance(ds: SupervisedDataset) -> float:
    """Fraction of feature variance carried by the top covariance eigenvector."""
    if len(ds) < 2:
        raise DatasetError("need at least 2 rows")
    cov = np.atleast_2d(np.cov(ds.features, rowvar=False))
    eigvals = np.clip(np.linalg.eigvalsh(cov), 0.0, None)
    total = float(eigvals.sum())
    if total == 0.0:
        warnings.warn("dataset has zero total variance", RuntimeWarning)
        return 0.0
    return float(eigvals[-1] / total)
