"""Example-based multi-label metrics and fold aggregation.

Label matrices use the {-1,+1} convention; an instance's positive set is the
columns holding +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NAMES = ("hamming_loss", "one_error", "precision", "recall")


def _pair(pred, truth):
    pred = np.atleast_2d(np.asarray(pred))
    truth = np.atleast_2d(np.asarray(truth))
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("empty label matrix")
    return pred > 0, truth > 0


def hamming_loss(pred, truth) -> float:
    P, T = _pair(pred, truth)
    return float(np.mean(P != T))


def one_error_counts(scores, truth):
    """Return ``(misses, counted, skipped)``.

    Instances with no true label are skipped; argmax ties go to the lowest index.
    """
    S = np.atleast_2d(np.asarray(scores, dtype=float))
    _, T = _pair(S, truth)
    keep = T.any(axis=1)
    top = np.argmax(S, axis=1)
    hit = T[np.arange(len(top)), top]
    return int(np.sum(keep & ~hit)), int(keep.sum()), int((~keep).sum())


def one_error(scores, truth) -> float:
    misses, counted, _ = one_error_counts(scores, truth)
    return misses / counted if counted else 0.0


def precision_counts(pred, truth):
    P, T = _pair(pred, truth)
    size = P.sum(axis=1)
    inter = (P & T).sum(axis=1)
    # an empty predicted set contributes 0
    per = np.divide(inter, size, out=np.zeros(len(size)), where=size > 0)
    return float(per.mean()), int(np.sum(size == 0))


def precision(pred, truth) -> float:
    return precision_counts(pred, truth)[0]


def recall_counts(pred, truth):
    P, T = _pair(pred, truth)
    size = T.sum(axis=1)
    keep = size > 0
    if not keep.any():
        return 0.0, int(len(size))
    inter = (P & T).sum(axis=1)
    return float(np.mean(inter[keep] / size[keep])), int((~keep).sum())


def recall(pred, truth) -> float:
    return recall_counts(pred, truth)[0]


def evaluate(pred, scores, truth) -> dict:
    """All four metrics plus skip counts for one fold."""
    err, _, oe_skip = one_error_counts(scores, truth)
    counted = len(np.atleast_2d(truth)) - oe_skip
    pre, pre_empty = precision_counts(pred, truth)
    rec, rec_skip = recall_counts(pred, truth)
    return {
        "hamming_loss": hamming_loss(pred, truth),
        "one_error": err / counted if counted else 0.0,
        "precision": pre,
        "recall": rec,
        "skipped": {"one_error": oe_skip, "recall": rec_skip, "precision_empty_pred": pre_empty},
    }


def _fmt(mean, std, digits=3):
    return f"{mean:.{digits}f} ± {std:.{digits}f}"


@dataclass
class MetricsReport:
    per_fold: dict
    mean: dict
    std: dict
    skipped: dict = field(default_factory=dict)

    @property
    def folds(self) -> int:
        return len(self.per_fold[NAMES[0]])

    def render(self, metric: str, digits: int = 3) -> str:
        return _fmt(self.mean[metric], self.std[metric], digits)

    def to_dict(self) -> dict:
        return {"folds": self.folds, "per_fold": self.per_fold, "mean": self.mean,
                "std": self.std, "skipped": self.skipped,
                "rendered": {k: self.render(k) for k in NAMES}}


def aggregate(per_fold) -> MetricsReport:
    """Sample mean and sample (k-1) standard deviation per metric.

    ``per_fold`` holds dicts from :func:`evaluate` or plain 4-tuples ordered as
    ``NAMES``.
    """
    rows = list(per_fold)
    if not rows:
        raise ValueError("aggregate needs at least one fold")
    values = {k: [] for k in NAMES}
    skipped = {}
    for row in rows:
        if isinstance(row, dict):
            for k in NAMES:
                values[k].append(float(row[k]))
            for k, v in row.get("skipped", {}).items():
                skipped[k] = skipped.get(k, 0) + v
        else:
            if len(row) != len(NAMES):
                raise ValueError(f"expected {len(NAMES)} metric values, got {len(row)}")
            for k, v in zip(NAMES, row):
                values[k].append(float(v))
    mean = {k: float(np.mean(v)) for k, v in values.items()}
    std = {k: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0 for k, v in values.items()}
    return MetricsReport(values, mean, std, skipped)


def format_table(reports: dict, digits: int = 3) -> str:
    """Aligned text table: one row per algorithm, one "mean ± std" column per metric."""
    head = ["algorithm"] + list(NAMES)
    body = [[name] + [rep.render(k, digits) for k in NAMES] for name, rep in reports.items()]
    widths = [max(len(r[c]) for r in [head] + body) for c in range(len(head))]
    line = lambda r: "  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip()
    return "\n".join([line(head), line(["-" * w for w in widths])] + [line(r) for r in body])
