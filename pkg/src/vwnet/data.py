"""Questionnaire CSV ingestion, feature encoding, deduplication and splits.

Features come out in a fixed order: the age bin scaled to ``bin / 5``, gender
(Male = 1) and fourteen yes/no symptoms (Yes = 1). Labels are 1 for Positive.
"""

from __future__ import annotations

import csv
import io
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream
from .exceptions import EmptyDatasetError, RowError, SchemaError

POSITIVE = "Positive"
NEGATIVE = "Negative"

AGE = "Age"
GENDER = "Gender"
SYMPTOMS = (
    "Polyuria",
    "Polydipsia",
    "sudden weight loss",
    "weakness",
    "Polyphagia",
    "Genital thrush",
    "visual blurring",
    "Itching",
    "Irritability",
    "delayed healing",
    "partial paresis",
    "muscle stiffness",
    "Alopecia",
    "Obesity",
)
CLASS = "class"
FEATURE_NAMES = (AGE, GENDER) + SYMPTOMS
COLUMNS = FEATURE_NAMES + (CLASS,)
N_AGE_BINS = 5

_ALIASES = {"sex": GENDER}


def normalize_name(name):
    """Canonical column name for a header cell, or None if unrecognized."""
    key = re.sub(r"[\s_]+", " ", name.strip()).lower()
    if key in _ALIASES:
        return _ALIASES[key]
    for col in COLUMNS:
        if col.lower() == key:
            return col
    return None


@dataclass(frozen=True)
class RawRecord:
    """One questionnaire row with values normalized to canonical spelling."""

    age: int
    gender: str
    symptoms: tuple
    label: str
    row: int = field(default=0, compare=False)

    def as_dict(self):
        out = {AGE: self.age, GENDER: self.gender}
        out.update(zip(SYMPTOMS, self.symptoms))
        out[CLASS] = self.label
        return out


def _parse_choice(value, choices, row, name):
    v = str(value).strip().lower()
    for choice in choices:
        if v == choice.lower():
            return choice
    raise RowError(row, name, value, f"expected one of {'/'.join(choices)}")


def _parse_age(value, row):
    try:
        age = int(str(value).strip())
    except ValueError:
        raise RowError(row, AGE, value, "expected an integer") from None
    if age < 1:
        raise RowError(row, AGE, value, "age must be at least 1")
    return age


def parse_fields(values, row=0, require_class=True):
    """Build a :class:`RawRecord` from a mapping of canonical column -> text."""
    missing = [c for c in COLUMNS if c not in values and (require_class or c != CLASS)]
    if missing:
        raise SchemaError(f"missing field(s): {', '.join(missing)}")
    age = _parse_age(values[AGE], row)
    gender = _parse_choice(values[GENDER], ("Male", "Female"), row, GENDER)
    symptoms = tuple(_parse_choice(values[s], ("Yes", "No"), row, s) for s in SYMPTOMS)
    label = _parse_choice(values[CLASS], (POSITIVE, NEGATIVE), row, CLASS) if CLASS in values else ""
    return RawRecord(age, gender, symptoms, label, row)


def _read_header(header):
    mapping = []
    seen = set()
    for cell in header:
        col = normalize_name(cell)
        if col is None:
            raise SchemaError(f"unknown column {cell.strip()!r}")
        if col in seen:
            raise SchemaError(f"duplicate column {cell.strip()!r}")
        seen.add(col)
        mapping.append(col)
    for col in COLUMNS:
        if col not in seen:
            raise SchemaError(f"missing column {col!r}")
    return mapping


def parse_csv(source):
    """Parse a questionnaire CSV into records, in file order.

    ``source`` is a path or an open text stream. Row numbers in errors count
    the header as row 1, matching what a text editor shows.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8-sig") as fh:
            return _parse_stream(fh)
    return _parse_stream(source)


def _parse_stream(stream):
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("file is empty; expected a header row") from None
    columns = _read_header(header)
    records = []
    for line, cells in enumerate(reader, start=2):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(columns):
            raise RowError(line, "*", ",".join(cells), f"expected {len(columns)} fields, found {len(cells)}")
        records.append(parse_fields(dict(zip(columns, cells)), row=line))
    return records


def parse_csv_text(text):
    return parse_csv(io.StringIO(text))


def age_bin(age):
    """Ordinal age band 1..5: <=35, 36-45, 46-55, 56-65, >65."""
    if age <= 35:
        return 1
    if age <= 45:
        return 2
    if age <= 55:
        return 3
    if age <= 65:
        return 4
    return 5


def encode_record(record):
    """``(features, label)`` for one record; ``label`` is None when unlabelled."""
    features = np.empty(len(FEATURE_NAMES))
    features[0] = age_bin(record.age) / N_AGE_BINS
    features[1] = 1.0 if record.gender == "Male" else 0.0
    features[2:] = [1.0 if s == "Yes" else 0.0 for s in record.symptoms]
    label = None if not record.label else int(record.label == POSITIVE)
    return features, label


@dataclass
class EncodedDataset:
    features: np.ndarray
    labels: np.ndarray
    source_rows: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64).reshape(-1, len(FEATURE_NAMES))
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.source_rows = np.asarray(self.source_rows, dtype=np.int64)
        if not (len(self.features) == len(self.labels) == len(self.source_rows)):
            raise ValueError("features, labels and source rows must have equal length")

    def __len__(self):
        return len(self.labels)

    @property
    def counts(self):
        """``{label: count}`` for labels 0 (Negative) and 1 (Positive)."""
        return {0: int(np.sum(self.labels == 0)), 1: int(np.sum(self.labels == 1))}

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return EncodedDataset(self.features[idx], self.labels[idx], self.source_rows[idx])


def preprocess(records):
    """Encode records and drop exact duplicate (features, label) rows.

    The first occurrence of each duplicate is kept, so applying this to an
    already deduplicated dataset changes nothing.
    """
    seen = set()
    feats, labels, rows = [], [], []
    for i, rec in enumerate(records):
        x, y = encode_record(rec)
        if y is None:
            raise ValueError(f"record {i} has no class label")
        key = (x.tobytes(), y)
        if key in seen:
            continue
        seen.add(key)
        feats.append(x)
        labels.append(y)
        rows.append(rec.row or i)
    if not feats:
        raise EmptyDatasetError("no usable rows in the dataset")
    return EncodedDataset(np.array(feats), np.array(labels), np.array(rows))


def load_dataset(path):
    return preprocess(parse_csv(path))


@dataclass
class FoldPlan:
    folds: list
    seed: int

    @property
    def k(self):
        return len(self.folds)

    def train_indices(self, i):
        return np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != i]))

    def test_indices(self, i):
        return self.folds[i]


def stratified_kfold(data, k=10, seed=42):
    """Deal each label group, shuffled, round-robin into ``k`` folds.

    The dealing position carries over from one label group to the next, which
    keeps overall fold sizes within one of each other as well as the
    per-label counts.
    """
    labels = data.labels if hasattr(data, "labels") else np.asarray(data)
    n = len(labels)
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > n:
        raise ValueError(f"cannot make {k} folds from {n} rows")
    rng = RngStream(seed, "folds")
    buckets = [[] for _ in range(k)]
    pos = 0
    for label in np.unique(labels):
        group = np.flatnonzero(labels == label)
        for i in group[rng.permutation(len(group))]:
            buckets[pos % k].append(int(i))
            pos += 1
    return FoldPlan([np.array(sorted(b), dtype=np.int64) for b in buckets], seed)


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def percentage_split(data, train_fraction=0.8, seed=42):
    """Stratified shuffle split into ``(train, test)`` datasets.

    The test side holds ``N - round(N * train_fraction)`` rows, apportioned
    across labels by largest remainder.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train fraction must lie strictly between 0 and 1, got {train_fraction}")
    train_idx, test_idx = split_indices(data.labels, train_fraction, seed)
    return data.subset(train_idx), data.subset(test_idx)


def split_indices(labels, train_fraction=0.8, seed=42):
    labels = np.asarray(labels)
    n = len(labels)
    n_test = n - _round_half_up(n * train_fraction)
    if n_test <= 0 or n_test >= n:
        raise ValueError(f"a {train_fraction:g} split of {n} rows leaves one side empty")
    classes = np.unique(labels)
    groups = [np.flatnonzero(labels == c) for c in classes]
    quotas = [len(g) * n_test / n for g in groups]
    take = [int(math.floor(q)) for q in quotas]
    by_remainder = sorted(range(len(groups)), key=lambda i: (-(quotas[i] - take[i]), i))
    for i in by_remainder[: n_test - sum(take)]:
        take[i] += 1
    rng = RngStream(seed, "split")
    test = []
    for group, t in zip(groups, take):
        test.extend(group[rng.permutation(len(group))][:t].tolist())
    test = np.array(sorted(test), dtype=np.int64)
    train = np.setdiff1d(np.arange(n), test)
    return train, test
