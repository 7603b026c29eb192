"""Classification metrics, sublabel recall, and inter-annotator agreement.

Zero-denominator metrics are reported as undefined (None), never silently as
zero, so that model comparison tables stay honest. Unclassified predictions
are excluded from confusion counts and surfaced as a separate tally.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import PRIMARY_CLASSES, SUBLABEL_ORDER, AnnotatedSample
from .errors import DataError

UNCLASSIFIED = "Unclassified"


@dataclass
class ConfusionMatrix:
    classes: tuple[str, ...]
    counts: list[list[int]]
    unclassified: int = 0

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def row(self, cls: str) -> list[int]:
        return self.counts[self.classes.index(cls)]

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "counts": [list(row) for row in self.counts],
            "unclassified": self.unclassified,
        }


@dataclass
class ClassMetrics:
    precision: float | None
    recall: float | None
    f1: float | None
    support: int


@dataclass
class MetricsReport:
    per_class: dict[str, ClassMetrics]
    accuracy: float | None
    total: int
    unclassified: int = 0

    def to_dict(self) -> dict:
        return {
            "per_class": {
                cls: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for cls, m in self.per_class.items()
            },
            "accuracy": self.accuracy,
            "total": self.total,
            "unclassified": self.unclassified,
        }


@dataclass
class SublabelRecall:
    recall: float | None
    support: int
    proportion: float


@dataclass
class SublabelReport:
    rows: dict[str, SublabelRecall] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    total: int = 0

    def to_dict(self) -> dict:
        return {
            "rows": {
                s: {"recall": r.recall, "support": r.support, "proportion": r.proportion}
                for s, r in self.rows.items()
            },
            "notes": self.notes,
            "total": self.total,
        }


@dataclass
class AgreementReport:
    observed: float | None
    expected: float | None
    kappa: float | None
    n: int
    note: str | None = None

    def to_dict(self) -> dict:
        return {
            "observed_agreement": self.observed,
            "expected_agreement": self.expected,
            "kappa": self.kappa,
            "n": self.n,
            "note": self.note,
        }


def confusion(
    preds: Mapping[str, str],
    truth: Mapping[str, str],
    classes: Sequence[str] = PRIMARY_CLASSES,
) -> ConfusionMatrix:
    """Count (truth, prediction) pairs; Unclassified predictions are excluded
    from the matrix and counted separately."""
    missing = sorted(set(preds) - set(truth))
    if missing:
        raise DataError(f"predictions without ground truth: {missing}")
    classes = tuple(classes)
    index = {cls: i for i, cls in enumerate(classes)}
    counts = [[0] * len(classes) for _ in classes]
    unclassified = 0
    for post_id in sorted(preds):
        pred = preds[post_id]
        true = truth[post_id]
        if true not in index:
            raise DataError(f"unknown truth label {true!r} for post {post_id!r}")
        if pred == UNCLASSIFIED:
            unclassified += 1
            continue
        if pred not in index:
            raise DataError(f"unknown predicted label {pred!r} for post {post_id!r}")
        counts[index[true]][index[pred]] += 1
    return ConfusionMatrix(classes=classes, counts=counts, unclassified=unclassified)


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Per-class precision/recall/F1 and overall accuracy from a confusion matrix."""
    per_class: dict[str, ClassMetrics] = {}
    n = len(cm.classes)
    for i, cls in enumerate(cm.classes):
        tp = cm.counts[i][i]
        row_total = sum(cm.counts[i])
        col_total = sum(cm.counts[j][i] for j in range(n))
        precision = tp / col_total if col_total > 0 else None
        recall = tp / row_total if row_total > 0 else None
        if precision is None or recall is None or precision + recall == 0:
            f1 = None
        else:
            f1 = 2 * precision * recall / (precision + recall)
        per_class[cls] = ClassMetrics(precision=precision, recall=recall, f1=f1, support=row_total)
    total = cm.total
    trace = sum(cm.counts[i][i] for i in range(n))
    accuracy = trace / total if total > 0 else None
    return MetricsReport(
        per_class=per_class, accuracy=accuracy, total=total, unclassified=cm.unclassified
    )


def recall_by_sublabel(
    preds: Mapping[str, str], annotations: Sequence[AnnotatedSample]
) -> SublabelReport:
    """Recall per sublabel: among truth samples carrying the sublabel, the
    fraction whose predicted primary matches the true primary."""
    considered = [s for s in annotations if s.post_id in preds]
    report = SublabelReport(total=len(considered))
    for sublabel in SUBLABEL_ORDER:
        carrying = [s for s in considered if sublabel in s.label.sublabels]
        if not carrying:
            report.notes.append(f"sublabel {sublabel} has zero support; omitted")
            continue
        hits = sum(1 for s in carrying if preds[s.post_id] == s.label.primary)
        report.rows[sublabel] = SublabelRecall(
            recall=hits / len(carrying),
            support=len(carrying),
            proportion=len(carrying) / len(considered) if considered else 0.0,
        )
    return report


def cohen_kappa(a: Mapping[str, str], b: Mapping[str, str]) -> AgreementReport:
    """Cohen's kappa over two annotators' labels for the same sample ids."""
    if set(a) != set(b):
        diff = sorted(set(a) ^ set(b))
        raise DataError(f"annotator label sets cover different ids: {diff}")
    n = len(a)
    if n < 1:
        raise DataError("kappa requires at least one doubly-labeled sample")
    ids = sorted(a)
    observed = sum(1 for i in ids if a[i] == b[i]) / n
    counts_a = Counter(a[i] for i in ids)
    counts_b = Counter(b[i] for i in ids)
    expected = sum(
        (counts_a[label] / n) * (counts_b[label] / n) for label in set(counts_a) | set(counts_b)
    )
    if expected == 1.0:
        return AgreementReport(
            observed=observed,
            expected=expected,
            kappa=None,
            n=n,
            note="expected agreement is 1 (degenerate single-class marginals); kappa undefined",
        )
    kappa = (observed - expected) / (1.0 - expected)
    return AgreementReport(observed=observed, expected=expected, kappa=kappa, n=n)


def _fmt(value: float | None, width: int = 6) -> str:
    if value is None:
        return "Undef".rjust(width)
    return f"{value:.2f}".rjust(width)


def render_metrics_text(report: MetricsReport, run_label: str = "run") -> str:
    """Aligned text table: one block of P/R/F1 per class plus overall accuracy."""
    classes = list(report.per_class)
    header_cells = []
    for cls in classes:
        header_cells.append(f"{cls} (n={report.per_class[cls].support})".center(24))
    lines = []
    lines.append(" " * 28 + "".join(header_cells))
    sub = "".join(f"{'P':>8}{'R':>8}{'F1':>8}" for _ in classes)
    lines.append(f"{'Model':<28}" + sub + f"{'Accuracy':>10}")
    row = f"{run_label:<28}"
    for cls in classes:
        m = report.per_class[cls]
        row += f"{_fmt(m.precision, 8)}{_fmt(m.recall, 8)}{_fmt(m.f1, 8)}"
    row += _fmt(report.accuracy, 10)
    lines.append(row)
    if report.unclassified:
        lines.append(f"unclassified (excluded): {report.unclassified}")
    return "\n".join(lines) + "\n"


def render_sublabel_text(report: SublabelReport, run_label: str = "run") -> str:
    """Aligned text grid of recall by sublabel with a proportion-of-sample row."""
    sublabels = [s for s in SUBLABEL_ORDER if s in report.rows]
    lines = []
    lines.append(f"{'Model':<28}" + "".join(f"{s:>8}" for s in sublabels))
    lines.append(
        f"{run_label:<28}" + "".join(_fmt(report.rows[s].recall, 8) for s in sublabels)
    )
    lines.append(
        f"{'Proportion of Sample':<28}"
        + "".join(_fmt(report.rows[s].proportion, 8) for s in sublabels)
    )
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def render_agreement_text(report: AgreementReport, reference: float | None = None) -> str:
    lines = [
        f"doubly-labeled samples: {report.n}",
        f"observed agreement:     {_fmt(report.observed)}",
        f"expected agreement:     {_fmt(report.expected)}",
        f"Cohen kappa:            {_fmt(report.kappa)}",
    ]
    if reference is not None:
        lines.append(f"reference kappa:        {_fmt(reference)}")
    if report.note:
        lines.append(f"note: {report.note}")
    return "\n".join(lines) + "\n"
