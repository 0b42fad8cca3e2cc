"""Answer-triggering metrics, threshold sweeps and ranking diagnostics.

Precision, recall and F are question-level percentages: precision over the
questions where a sentence was returned, recall over the questions that
have at least one correct sentence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .numcore import ContractError, EmptySequenceError

__all__ = [
    "TriggerReport",
    "DEFAULT_GRID",
    "decide",
    "f_measure",
    "trigger_metrics",
    "sweep_threshold",
    "rank_metrics",
    "format_report",
]

DEFAULT_GRID = tuple(round(0.01 * i, 2) for i in range(101))


@dataclass
class TriggerReport:
    precision: float
    recall: float
    f1: float
    num_predicted: int
    num_correct: int
    num_answerable: int
    per_question: List[Tuple[str, Optional[int], bool]] = field(default_factory=list)


def decide(scores: Sequence[float], threshold: float) -> Optional[int]:
    """Index of the best-scoring sentence, or ``None`` if it falls below ``threshold``.

    Ties on the maximum go to the earliest sentence.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size == 0:
        raise EmptySequenceError("decide: no candidate scores")
    best = int(np.argmax(scores))
    return best if scores[best] >= threshold else None


def f_measure(precision: float, recall: float) -> float:
    if precision + recall <= 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def trigger_metrics(
    decisions: Sequence[Optional[int]],
    gold: Sequence[Sequence[int]],
    question_ids: Optional[Sequence[str]] = None,
) -> TriggerReport:
    if len(decisions) != len(gold):
        raise ContractError(f"{len(decisions)} decisions for {len(gold)} questions")
    if question_ids is None:
        question_ids = [str(i) for i in range(len(gold))]
    predicted = correct = answerable = 0
    per_question = []
    for qid, d, labels in zip(question_ids, decisions, gold):
        labels = list(labels)
        if any(int(y) == 1 for y in labels):
            answerable += 1
        ok = False
        if d is not None:
            if not 0 <= d < len(labels):
                raise ContractError(f"question {qid}: decision {d} out of range 0..{len(labels) - 1}")
            predicted += 1
            ok = int(labels[d]) == 1
            correct += ok
        per_question.append((qid, d, ok))
    precision = 100.0 * correct / predicted if predicted else 0.0
    recall = 100.0 * correct / answerable if answerable else 0.0
    return TriggerReport(
        precision, recall, f_measure(precision, recall), predicted, correct, answerable, per_question
    )


def sweep_threshold(
    scores: Sequence[Sequence[float]],
    gold: Sequence[Sequence[int]],
    grid: Sequence[float] = DEFAULT_GRID,
    question_ids: Optional[Sequence[str]] = None,
) -> Tuple[float, TriggerReport, List[Tuple[float, TriggerReport]]]:
    """Pick the grid threshold with the highest F.

    F ties are broken by fewer wrong returns, then by the smaller threshold,
    so a split where nothing can be answered correctly prefers rejection.
    Returns the chosen threshold, its report, and the full ``(threshold, report)`` table.
    """
    if len(grid) == 0:
        raise ContractError("threshold grid is empty")
    if any(not 0.0 <= t <= 1.0 for t in grid):
        raise ContractError("threshold grid values must lie in [0, 1]")
    table = []
    best_t, best = None, None
    for t in sorted(grid):
        report = trigger_metrics([decide(s, t) for s in scores], gold, question_ids)
        table.append((t, report))
        if best is None or _sweep_key(report) > _sweep_key(best):
            best_t, best = t, report
    return best_t, best, table


def _sweep_key(report: TriggerReport):
    return report.f1, report.num_correct - report.num_predicted


def _average_precision(scores, labels) -> Tuple[float, float]:
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    hits, precisions, first = 0, [], None
    for rank, i in enumerate(order, start=1):
        if int(labels[i]) == 1:
            hits += 1
            precisions.append(hits / rank)
            if first is None:
                first = rank
    return 1.0 / first, float(np.mean(precisions))


def rank_metrics(
    scores: Sequence[Sequence[float]], gold: Sequence[Sequence[int]]
) -> Tuple[float, float]:
    """MRR and MAP over answerable questions; score ties keep document order."""
    rr, ap = [], []
    for s, labels in zip(scores, gold):
        if not any(int(y) == 1 for y in labels):
            continue
        r, a = _average_precision(list(np.asarray(s, dtype=float).reshape(-1)), list(labels))
        rr.append(r)
        ap.append(a)
    if not rr:
        raise ContractError("rank_metrics needs at least one answerable question")
    return float(np.mean(rr)), float(np.mean(ap))


def format_report(report: TriggerReport, name: str = "HGRNT") -> str:
    """Tab-separated ``Model Prec Rec F`` block."""
    return (
        "Model\tPrec\tRec\tF\n"
        f"{name}\t{report.precision:.2f}\t{report.recall:.2f}\t{report.f1:.2f}\n"
    )


def format_diagnostics(report: TriggerReport) -> str:
    lines = ["QuestionID\tDecision\tCorrect"]
    for qid, d, ok in report.per_question:
        lines.append(f"{qid}\t{'-' if d is None else d}\t{int(ok)}")
    return "\n".join(lines) + "\n"
