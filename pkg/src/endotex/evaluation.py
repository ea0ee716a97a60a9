"""Evaluation: confusion-matrix metrics, ranking AUC, significance, speed.

Per-class precision/recall/specificity/F1 are aggregated two ways: macro
(unweighted mean) and support-weighted (the headline numbers).  Any metric
whose denominator is empty scores 0 and sets a ``degenerate`` flag rather than
dividing by zero.  The correlation coefficient uses the K-class generalisation
that reduces exactly to the familiar binary formula at K = 2.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import stdtr
from scipy.stats import rankdata

from .errors import (
    EmptyBatch,
    InvalidParameters,
    IoFailure,
    LengthMismatch,
    SingleClassPresent,
    TooFewRuns,
)


def confusion_matrix(y_true, y_pred, n_classes: int | None = None) -> np.ndarray:
    """Rows index the true class, columns the predicted class."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{y_true.shape} true vs {y_pred.shape} predicted")
    if y_true.size == 0:
        raise EmptyBatch("no samples to score")
    if n_classes is None:
        n_classes = int(max(y_true.max(), y_pred.max())) + 1
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _safe_div(num: float, den: float) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


@dataclass
class EvalReport:
    confusion: np.ndarray
    per_class: dict[str, np.ndarray]
    support: np.ndarray
    accuracy: float
    macro: dict[str, float]
    weighted: dict[str, float]
    mcc: float
    degenerate: list[str] = field(default_factory=list)
    auc: dict | None = None
    class_names: list[str] | None = None
    fps: dict | None = None
    extras: dict | None = None

    def to_dict(self) -> dict:
        doc = {
            "confusion": self.confusion.tolist(),
            "per_class": {k: v.tolist() for k, v in self.per_class.items()},
            "support": self.support.tolist(),
            "accuracy": self.accuracy,
            "macro": self.macro,
            "weighted": self.weighted,
            "mcc": self.mcc,
            "degenerate": list(self.degenerate),
        }
        if self.auc is not None:
            doc["auc"] = self.auc
        if self.class_names is not None:
            doc["class_names"] = self.class_names
        if self.fps is not None:
            doc["fps"] = self.fps
        if self.extras is not None:
            doc["extras"] = self.extras
        return doc

    def render_text(self) -> str:
        names = self.class_names or [str(i) for i in range(self.confusion.shape[0])]
        width = max(9, max(len(n) for n in names) + 1)
        lines = []
        header = f"{'class':<{width}}{'prec':>8}{'rec':>8}{'spec':>8}{'f1':>8}{'support':>9}"
        lines.append(header)
        lines.append("-" * len(header))
        for i, name in enumerate(names):
            lines.append(
                f"{name:<{width}}"
                f"{self.per_class['precision'][i]:>8.4f}"
                f"{self.per_class['recall'][i]:>8.4f}"
                f"{self.per_class['specificity'][i]:>8.4f}"
                f"{self.per_class['f1'][i]:>8.4f}"
                f"{int(self.support[i]):>9d}"
            )
        lines.append("-" * len(header))
        lines.append(
            f"{'macro':<{width}}{self.macro['precision']:>8.4f}{self.macro['recall']:>8.4f}"
            f"{self.macro['specificity']:>8.4f}{self.macro['f1']:>8.4f}"
        )
        lines.append(
            f"{'weighted':<{width}}{self.weighted['precision']:>8.4f}{self.weighted['recall']:>8.4f}"
            f"{self.weighted['specificity']:>8.4f}{self.weighted['f1']:>8.4f}"
        )
        lines.append(f"accuracy {self.accuracy:.4f}   mcc {self.mcc:.4f}")
        if self.auc is not None:
            lines.append(f"macro auc {self.auc['macro']:.4f}")
        if self.degenerate:
            lines.append("degenerate: " + ", ".join(sorted(set(self.degenerate))))
        if self.extras:
            for key in sorted(self.extras):
                lines.append(f"{key}: {self.extras[key]}")
        return "\n".join(lines) + "\n"


def evaluate_predictions(
    y_true,
    y_pred,
    n_classes: int | None = None,
    class_names: list[str] | None = None,
    scores: np.ndarray | None = None,
) -> EvalReport:
    """Full report from labels (and optionally per-class scores for AUC)."""
    if class_names is not None and n_classes is None:
        n_classes = len(class_names)
    cm = confusion_matrix(y_true, y_pred, n_classes)
    k = cm.shape[0]
    total = cm.sum()
    tp = np.diag(cm).astype(np.float64)
    pred_k = cm.sum(axis=0).astype(np.float64)
    true_k = cm.sum(axis=1).astype(np.float64)
    fp = pred_k - tp
    fn = true_k - tp
    tn = total - tp - fp - fn

    degenerate: list[str] = []
    precision = np.zeros(k)
    recall = np.zeros(k)
    specificity = np.zeros(k)
    f1 = np.zeros(k)
    for i in range(k):
        precision[i], d1 = _safe_div(tp[i], tp[i] + fp[i])
        recall[i], d2 = _safe_div(tp[i], tp[i] + fn[i])
        specificity[i], d3 = _safe_div(tn[i], tn[i] + fp[i])
        f1[i], d4 = _safe_div(2 * precision[i] * recall[i], precision[i] + recall[i])
        if d1 or d2 or d3 or d4:
            degenerate.append(f"class_{i}")
    support = true_k

    def agg(values: np.ndarray) -> tuple[float, float]:
        macro = float(values.mean())
        wsum = support.sum()
        weighted = float((values * support).sum() / wsum) if wsum else 0.0
        return macro, weighted

    macro = {}
    weighted = {}
    for name, vals in (
        ("precision", precision),
        ("recall", recall),
        ("specificity", specificity),
        ("f1", f1),
    ):
        macro[name], weighted[name] = agg(vals)

    accuracy = float(tp.sum() / total)
    mcc = mcc_from_confusion(cm)

    auc = None
    if scores is not None:
        y_true_arr = np.asarray(y_true, dtype=np.int64)
        auc = auc_one_vs_rest(y_true_arr, scores)
        if auc["skipped"]:
            degenerate.extend(f"auc_class_{i}" for i in auc["skipped"])

    return EvalReport(
        confusion=cm,
        per_class={
            "precision": precision,
            "recall": recall,
            "specificity": specificity,
            "f1": f1,
        },
        support=support,
        accuracy=accuracy,
        macro=macro,
        weighted=weighted,
        mcc=mcc,
        degenerate=degenerate,
        auc=auc,
        class_names=class_names,
    )


def mcc_from_confusion(cm: np.ndarray) -> float:
    """K-class correlation coefficient.

    cov-based form: (c s - sum_k p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum
    t_k^2)); equals the binary TP/TN/FP/FN formula when K = 2.  Degenerate
    denominators (all-one-row/column) return 0.
    """
    cm = np.asarray(cm, dtype=np.float64)
    s = cm.sum()
    c = np.trace(cm)
    p = cm.sum(axis=0)
    t = cm.sum(axis=1)
    num = c * s - float(p @ t)
    den_sq = (s * s - float(p @ p)) * (s * s - float(t @ t))
    if den_sq <= 0:
        return 0.0
    return float(num / np.sqrt(den_sq))


def metrics_from_counts(tp: int, tn: int, fp: int, fn: int) -> dict[str, float]:
    """Binary metrics straight from the four counts (0 on empty denominators)."""
    precision, _ = _safe_div(tp, tp + fp)
    recall, _ = _safe_div(tp, tp + fn)
    specificity, _ = _safe_div(tn, tn + fp)
    f1, _ = _safe_div(2 * precision * recall, precision + recall)
    accuracy, _ = _safe_div(tp + tn, tp + tn + fp + fn)
    mcc_den = np.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = float((tp * tn - fp * fn) / mcc_den) if mcc_den > 0 else 0.0
    return {
        "precision": precision,
        "recall": recall,
        "specificity": specificity,
        "f1": f1,
        "accuracy": accuracy,
        "mcc": mcc,
    }


def weighted_f1(y_true, y_pred, n_classes: int | None = None) -> float:
    """Support-weighted F1 (the default search fitness)."""
    return evaluate_predictions(y_true, y_pred, n_classes).weighted["f1"]


def auc_one_vs_rest(y_true: np.ndarray, scores: np.ndarray) -> dict:
    """Rank-statistic AUC per class (ties get average rank), macro-averaged.

    Classes absent from ``y_true`` (or covering all of it) are skipped and
    reported; if fewer than two classes occur at all, that's an error.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != y_true.shape[0]:
        raise LengthMismatch(f"scores {scores.shape} vs labels {y_true.shape}")
    if np.unique(y_true).size < 2:
        raise SingleClassPresent("ranking needs at least two observed classes")
    k = scores.shape[1]
    per_class = np.full(k, np.nan)
    skipped = []
    for c in range(k):
        pos = y_true == c
        n_pos = int(pos.sum())
        n_neg = y_true.size - n_pos
        if n_pos == 0 or n_neg == 0:
            skipped.append(c)
            continue
        ranks = rankdata(scores[:, c], method="average")
        auc = (ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
        per_class[c] = auc
    valid = ~np.isnan(per_class)
    return {
        "per_class": [None if np.isnan(v) else float(v) for v in per_class],
        "macro": float(per_class[valid].mean()) if valid.any() else 0.0,
        "skipped": skipped,
    }


def welch_t_test(a, b) -> dict[str, float]:
    """Two-sided Welch t-test for independent samples of unequal variance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise TooFewRuns("each group needs at least two observations")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    na, nb = a.size, b.size
    se_sq = va / na + vb / nb
    if se_sq == 0.0:
        t = 0.0 if a.mean() == b.mean() else np.inf * np.sign(a.mean() - b.mean())
        return {"t": float(t), "df": float(na + nb - 2), "p": 1.0 if t == 0 else 0.0}
    t = (a.mean() - b.mean()) / np.sqrt(se_sq)
    df = se_sq**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = 2.0 * float(stdtr(df, -abs(t)))
    return {"t": float(t), "df": float(df), "p": p}


@dataclass
class BenchResult:
    fps: float
    mean_latency_ms: float
    p95_latency_ms: float
    n_items: int
    warmup: int
    workers: int = 1

    def to_dict(self) -> dict:
        return {
            "fps": self.fps,
            "mean_latency_ms": self.mean_latency_ms,
            "p95_latency_ms": self.p95_latency_ms,
            "n_items": self.n_items,
            "warmup": self.warmup,
            "workers": self.workers,
        }


def fps_benchmark(fn, items, warmup: int = 5, workers: int = 1) -> BenchResult:
    """Throughput of ``fn`` over ``items``.

    The reported numbers come from the single-worker path; ``workers > 1``
    runs a thread pool and is informational only (latency percentiles are
    not comparable across modes).  Warmup calls are excluded from timing.
    """
    items = list(items)
    if not items:
        raise EmptyBatch("no items to benchmark")
    if warmup < 0 or workers < 1:
        raise InvalidParameters("warmup must be >= 0 and workers >= 1")
    for it in items[:warmup]:
        fn(it)
    if workers == 1:
        latencies = np.empty(len(items))
        t_all0 = time.perf_counter()
        for i, it in enumerate(items):
            t0 = time.perf_counter()
            fn(it)
            latencies[i] = time.perf_counter() - t0
        total = time.perf_counter() - t_all0
    else:
        from concurrent.futures import ThreadPoolExecutor

        t_all0 = time.perf_counter()
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fn, items))
        total = time.perf_counter() - t_all0
        latencies = np.full(len(items), total / len(items))
    return BenchResult(
        fps=len(items) / total,
        mean_latency_ms=float(latencies.mean() * 1e3),
        p95_latency_ms=float(np.percentile(latencies, 95) * 1e3),
        n_items=len(items),
        warmup=warmup,
        workers=workers,
    )


def save_report(report: EvalReport, json_path: str | Path, text_path: str | Path | None = None) -> None:
    import json as _json

    json_path = Path(json_path)
    try:
        json_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(_json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        if text_path is not None:
            Path(text_path).write_text(report.render_text())
    except OSError as exc:
        raise IoFailure(f"cannot write report: {exc}") from exc
