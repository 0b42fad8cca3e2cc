"""scikit-learn style wrapper around the answer-triggering model."""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data import EmbeddingTable, embed, fallback_embeddings
from .metrics import DEFAULT_GRID, TriggerReport, decide, sweep_threshold, trigger_metrics
from .model import ModelConfig, ModelParams, score_paragraph, train
from .optim import AdamHyper
from .validation import check_questions, check_threshold

logger = logging.getLogger(__name__)


class AnswerTrigger(BaseEstimator):
    """Score every candidate sentence of a paragraph and return the best one,
    or nothing when its score is below the decision threshold.

    ``fit`` takes a sequence of :class:`~hgrnt.data.QaQuestion`; labels are
    read from the candidates unless ``y`` (one 0/1 list per question) is
    given.  When ``X_dev`` is supplied, training early-stops on dev F and the
    threshold is picked on dev from ``threshold_grid``, unless ``threshold``
    was fixed up front.  ``on_epoch(epoch, train_loss, dev)`` is called after
    every epoch with ``dev`` either ``None`` or ``(threshold, TriggerReport)``.

    Parameters
    ----------
    embeddings : EmbeddingTable, optional
        Frozen word vectors.  When omitted, seeded random vectors are built
        for the training vocabulary.
    use_context, use_tensor : bool
        Ablation switches for the paragraph-level GRU and the tensor layer.
    threshold : float, optional
        Fixed decision threshold; ``None`` means select it on dev (or 0.5
        without a dev split).

    Attributes
    ----------
    params_ : ModelParams
    threshold_ : float
    embeddings_ : EmbeddingTable
    loss_curve_ : list of float
        Mean per-question training loss of each epoch.
    dev_log_ : list of tuple
        ``(epoch, train_loss, precision, recall, f1)`` on the dev split.
    """

    def __init__(
        self,
        embeddings: Optional[EmbeddingTable] = None,
        embed_dim: int = 100,
        sent_hidden: int = 128,
        ctx_hidden: int = 128,
        r: int = 4,
        use_context: bool = True,
        use_tensor: bool = True,
        learning_rate: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        max_epochs: int = 50,
        patience: int = 5,
        clip_norm: Optional[float] = 5.0,
        threshold: Optional[float] = None,
        threshold_grid: Sequence[float] = DEFAULT_GRID,
        seed: int = 42,
    ):
        self.embeddings = embeddings
        self.embed_dim = embed_dim
        self.sent_hidden = sent_hidden
        self.ctx_hidden = ctx_hidden
        self.r = r
        self.use_context = use_context
        self.use_tensor = use_tensor
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.max_epochs = max_epochs
        self.patience = patience
        self.clip_norm = clip_norm
        self.threshold = threshold
        self.threshold_grid = threshold_grid
        self.seed = seed

    def _model_config(self, embed_dim: int) -> ModelConfig:
        return ModelConfig(
            embed_dim=embed_dim,
            sent_hidden=self.sent_hidden,
            ctx_hidden=self.ctx_hidden,
            r=self.r,
            use_context=self.use_context,
            use_tensor=self.use_tensor,
            threshold=0.5 if self.threshold is None else check_threshold(self.threshold),
            seed=self.seed,
        )

    def fit(self, X, y=None, X_dev=None, on_epoch=None):
        questions = check_questions(X, y)
        if not questions:
            raise ValueError("cannot fit on an empty training set")
        dev_questions = None if X_dev is None else check_questions(X_dev)
        if self.embeddings is None:
            table = fallback_embeddings(questions, self.embed_dim, self.seed)
        else:
            table = self.embeddings
            if table.dim != self.embed_dim:
                raise ValueError(
                    f"embeddings have dimension {table.dim} but embed_dim={self.embed_dim}"
                )
        config = self._model_config(table.dim)
        train_set = [embed(q, table) for q in questions]
        dev_set = None if dev_questions is None else [embed(q, table) for q in dev_questions]
        result = train(
            train_set,
            config,
            AdamHyper(self.learning_rate, self.beta1, self.beta2, self.epsilon),
            epochs=self.max_epochs,
            dev=dev_set,
            patience=self.patience,
            clip_norm=self.clip_norm,
            grid=self.threshold_grid,
            on_epoch=on_epoch,
        )
        self.embeddings_ = table
        self.config_ = config
        self.params_ = result.params
        self.loss_curve_ = result.loss_log
        self.dev_log_ = result.dev_log
        self.best_dev_f_ = result.best_dev_f
        self.best_epoch_ = result.best_epoch
        if self.threshold is not None:
            self.threshold_ = config.threshold
        elif dev_set is not None:
            self.threshold_ = result.threshold
        else:
            self.threshold_ = 0.5
        return self

    def predict_proba(self, X) -> List[np.ndarray]:
        """Per-candidate confidence scores, one array per question."""
        check_is_fitted(self, "params_")
        out = []
        for q in check_questions(X):
            e = embed(q, self.embeddings_)
            out.append(score_paragraph(e.question, e.candidates, self.params_, self.config_))
        return out

    def decision_function(self, X) -> np.ndarray:
        """Highest candidate score per question (the value compared with the threshold)."""
        return np.array([s.max() for s in self.predict_proba(X)])

    def predict(self, X, threshold: Optional[float] = None) -> List[Optional[int]]:
        check_is_fitted(self, "params_")
        t = self.threshold_ if threshold is None else check_threshold(threshold)
        return [decide(s, t) for s in self.predict_proba(X)]

    def evaluate(self, X, threshold: Optional[float] = None) -> TriggerReport:
        questions = check_questions(X)
        decisions = self.predict(questions, threshold)
        return trigger_metrics(
            decisions, [q.labels for q in questions], [q.question_id for q in questions]
        )

    def score(self, X, y=None) -> float:
        """Triggering F on ``X`` as a fraction in [0, 1]."""
        return self.evaluate(check_questions(X, y)).f1 / 100.0

    def select_threshold(self, X, grid: Optional[Sequence[float]] = None):
        """Re-pick ``threshold_`` on ``X``; returns ``(threshold, report, table)``."""
        questions = check_questions(X)
        grid = self.threshold_grid if grid is None else grid
        best_t, report, table = sweep_threshold(
            self.predict_proba(questions),
            [q.labels for q in questions],
            grid,
            [q.question_id for q in questions],
        )
        self.threshold_ = best_t
        return best_t, report, table
