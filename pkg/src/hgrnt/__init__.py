"""Hierarchical gated recurrent neural tensor model for answer triggering."""

from .data import Candidate, EmbeddingTable, QaQuestion, load_embeddings, parse_wikiqa_tsv, tokenize
from .estimator import AnswerTrigger
from .metrics import TriggerReport, decide, sweep_threshold, trigger_metrics
from .model import ModelConfig, ModelParams, forward, loss, train

__all__ = [
    "AnswerTrigger",
    "Candidate",
    "EmbeddingTable",
    "ModelConfig",
    "ModelParams",
    "QaQuestion",
    "TriggerReport",
    "decide",
    "forward",
    "load_embeddings",
    "loss",
    "parse_wikiqa_tsv",
    "sweep_threshold",
    "tokenize",
    "train",
    "trigger_metrics",
]

__version__ = "0.1.0"
