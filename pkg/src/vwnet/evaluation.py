"""Accuracy bookkeeping, cross-validation and split drivers, report tables."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .core import RngStream
from .data import split_indices, stratified_kfold
from .estimators import GradientDescentLogisticRegression, NaiveBayesClassifier, NetworkClassifier

ALGORITHMS = ("nb", "lr", "nn", "vb", "vw")
COLUMN_ORDER = ("nb", "lr", "j48", "rf", "nn", "vb", "vw")

# Published J48 / random-forest results on the same data; shown for comparison only.
REFERENCE_RESULTS = {
    "crossval": {"j48": (478, 500), "rf": (487, 500)},
    "split": {"j48": (95, 100), "rf": (99, 100)},
}


class FoldError(RuntimeError):
    def __init__(self, fold, exc):
        self.fold = fold
        super().__init__(f"fold {fold} failed: {exc}")


def accuracy(predictions, truth):
    """``(correct, incorrect, percent)`` for equal-length label sequences."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise ValueError(f"{predictions.size} predictions but {truth.size} true labels")
    if truth.size == 0:
        raise ValueError("cannot score an empty prediction set")
    correct = int(np.sum(predictions == truth))
    return correct, truth.size - correct, 100.0 * correct / truth.size


def format_pct(correct, total):
    """One decimal place, halves rounded up: 487/500 -> '97.4%'."""
    value = Decimal(100 * correct) / Decimal(total)
    return f"{value.quantize(Decimal('0.1'), rounding=ROUND_HALF_UP)}%"


@dataclass
class EvalEntry:
    algorithm: str
    total: int
    correct: int
    quoted: bool = False

    def __post_init__(self):
        if not 0 <= self.correct <= self.total:
            raise ValueError(f"correct count {self.correct} outside 0..{self.total}")

    @property
    def incorrect(self):
        return self.total - self.correct

    @property
    def accuracy(self):
        return self.correct / self.total

    def as_dict(self):
        d = asdict(self)
        d.update(incorrect=self.incorrect, accuracy_pct=float(100 * self.correct / self.total))
        return d


@dataclass
class EvalReport:
    protocol: str  # "crossval" or "split"
    entries: list
    settings: dict = field(default_factory=dict)

    def entry(self, algorithm):
        for e in self.entries:
            if e.algorithm == algorithm:
                return e
        raise KeyError(algorithm)

    def as_dict(self):
        ordered = sorted(self.entries, key=lambda e: COLUMN_ORDER.index(e.algorithm))
        return {"protocol": self.protocol, "settings": dict(self.settings),
                "entries": [e.as_dict() for e in ordered]}

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def reference_entries(protocol):
    return [EvalEntry(name, total, correct, quoted=True)
            for name, (correct, total) in REFERENCE_RESULTS[protocol].items()]


def make_estimator(algorithm, seed=42, epochs=None, learning_rate=None):
    """Fresh unfitted estimator for one of ``ALGORITHMS``."""
    if algorithm == "nb":
        return NaiveBayesClassifier()
    if algorithm == "lr":
        kw = {}
        if epochs is not None:
            kw["epochs"] = epochs
        if learning_rate is not None:
            kw["learning_rate"] = learning_rate
        return GradientDescentLogisticRegression(**kw)
    if algorithm in ("nn", "vb", "vw"):
        kw = {"arch": algorithm, "seed": seed}
        if epochs is not None:
            kw["epochs"] = epochs
        if learning_rate is not None:
            kw["learning_rate"] = learning_rate
        return NetworkClassifier(**kw)
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")


def fold_seed(seed, fold):
    return RngStream(seed, f"fold-{fold}").integer_seed()


def _fit_score(algorithm, seed, X_train, y_train, X_test, y_test, epochs, learning_rate):
    est = make_estimator(algorithm, seed, epochs, learning_rate)
    est.fit(X_train, y_train)
    return accuracy(est.predict(X_test), y_test)[0]


def _run_fold(args):
    algorithm, data, plan, i, seed, epochs, learning_rate = args
    train_idx, test_idx = plan.train_indices(i), plan.test_indices(i)
    if np.intersect1d(train_idx, test_idx).size:
        raise AssertionError(f"fold {i}: test rows leak into the training set")
    try:
        return _fit_score(algorithm, fold_seed(seed, i),
                          data.features[train_idx], data.labels[train_idx],
                          data.features[test_idx], data.labels[test_idx],
                          epochs, learning_rate)
    except Exception as exc:
        raise FoldError(i, exc) from exc


def run_crossval(algorithm, data, k=10, seed=42, epochs=None, learning_rate=None, parallel=False):
    """Pooled k-fold accuracy: correct predictions summed over held-out folds.

    Each fold trains with a seed derived from ``(seed, fold index)``, so a
    parallel run gives exactly the sequential result.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
    plan = stratified_kfold(data, k, seed)
    jobs = [(algorithm, data, plan, i, seed, epochs, learning_rate) for i in range(plan.k)]
    if parallel:
        with ProcessPoolExecutor() as pool:
            correct = list(pool.map(_run_fold, jobs))
    else:
        correct = [_run_fold(job) for job in jobs]
    return EvalEntry(algorithm, len(data), int(sum(correct)))


def run_split(algorithm, data, fraction=0.8, seed=42, epochs=None, learning_rate=None):
    """Train on a stratified ``fraction`` of the rows and score the rest."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
    train_idx, test_idx = split_indices(data.labels, fraction, seed)
    correct = _fit_score(algorithm, RngStream(seed, "split-model").integer_seed(),
                         data.features[train_idx], data.labels[train_idx],
                         data.features[test_idx], data.labels[test_idx],
                         epochs, learning_rate)
    return EvalEntry(algorithm, len(test_idx), int(correct))


def crossval_report(data, algorithms=ALGORITHMS, k=10, seed=42, include_reference=True, **kw):
    entries = [run_crossval(a, data, k, seed, **kw) for a in algorithms]
    if include_reference:
        entries += reference_entries("crossval")
    return EvalReport("crossval", entries, {"folds": k, "seed": seed, "n": len(data)})


def split_report(data, algorithms=ALGORITHMS, fraction=0.8, seed=42, include_reference=True, **kw):
    entries = [run_split(a, data, fraction, seed, **kw) for a in algorithms]
    if include_reference:
        entries += reference_entries("split")
    return EvalReport("split", entries, {"fraction": fraction, "seed": seed, "n": len(data)})


def render_report(report):
    """Plain-text comparison table, columns in fixed NB..VW order."""
    entries = report.entries if isinstance(report, EvalReport) else list(report)
    if not entries:
        raise ValueError("nothing to render")
    entries = sorted(entries, key=lambda e: COLUMN_ORDER.index(e.algorithm))
    heads = [e.algorithm.upper() + ("*" if e.quoted else "") for e in entries]
    rows = [
        ("Total instances", [str(e.total) for e in entries]),
        ("Correct", [str(e.correct) for e in entries]),
        ("Correct %", [format_pct(e.correct, e.total) for e in entries]),
        ("Incorrect", [str(e.incorrect) for e in entries]),
        ("Incorrect %", [format_pct(e.incorrect, e.total) for e in entries]),
    ]
    label_w = max(len("Metric"), *(len(r[0]) for r in rows))
    col_w = max(8, *(len(h) + 2 for h in heads))
    lines = []
    if isinstance(report, EvalReport):
        lines.append(_title(report))
    lines.append("Metric".ljust(label_w) + "".join(h.rjust(col_w) for h in heads))
    for label, cells in rows:
        lines.append(label.ljust(label_w) + "".join(c.rjust(col_w) for c in cells))
    if any(e.quoted for e in entries):
        lines.append("* published reference value, not measured by this run")
    return "\n".join(lines) + "\n"


def _title(report):
    s = report.settings
    if report.protocol == "crossval":
        return f"{s.get('folds', '?')}-fold cross-validation, seed {s.get('seed', '?')}, N={s.get('n', '?')}"
    frac = s.get("fraction", 0.8)
    train_pct = Decimal(str(frac)) * 100
    return (f"percentage split {train_pct.normalize():f}:{(100 - train_pct).normalize():f}, "
            f"seed {s.get('seed', '?')}, N={s.get('n', '?')}")
