"""Input checks shared by the estimator entry points."""

from __future__ import annotations

from typing import List, Optional, Sequence

from .data import Candidate, QaQuestion
from .numcore import EmptySequenceError


def check_questions(X, y: Optional[Sequence[Sequence[int]]] = None) -> List[QaQuestion]:
    """Validate a batch of questions, optionally overriding candidate labels with ``y``.

    Raises ``TypeError`` for non-question items, ``EmptySequenceError`` for a
    paragraph with no candidates and ``ValueError`` for misaligned labels.
    """
    if isinstance(X, QaQuestion):
        raise TypeError("expected a sequence of QaQuestion, got a single question")
    questions = list(X)
    for i, q in enumerate(questions):
        if not isinstance(q, QaQuestion):
            raise TypeError(f"item {i} is {type(q).__name__}, expected QaQuestion")
        if not q.candidates:
            raise EmptySequenceError(f"question {q.question_id!r} has no candidate sentences")
    if y is None:
        return questions
    y = list(y)
    if len(y) != len(questions):
        raise ValueError(f"{len(y)} label rows for {len(questions)} questions")
    relabelled = []
    for q, labels in zip(questions, y):
        labels = [int(v) for v in labels]
        if len(labels) != len(q.candidates):
            raise ValueError(
                f"question {q.question_id!r}: {len(labels)} labels for {len(q.candidates)} candidates"
            )
        if any(v not in (0, 1) for v in labels):
            raise ValueError(f"question {q.question_id!r}: labels must be 0 or 1")
        relabelled.append(
            QaQuestion(
                q.question_id,
                q.tokens,
                [Candidate(c.sentence_id, c.tokens, v) for c, v in zip(q.candidates, labels)],
            )
        )
    return relabelled


def check_threshold(threshold: float) -> float:
    threshold = float(threshold)
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    return threshold
