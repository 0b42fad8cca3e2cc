"""Finite-difference verification of the model's end-to-end gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .data import EmbeddedQuestion
from .model import ModelConfig, ModelParams, example_value_and_grad
from .numcore import grad_check_report

ABLATIONS: Dict[str, Tuple[bool, bool]] = {
    "base": (False, False),
    "+tensor": (False, True),
    "+context": (True, False),
    "+context&tensor": (True, True),
}


@dataclass
class GradFailure:
    variant: str
    parameter: str
    error: float
    coordinate: Tuple[int, ...]


def toy_example(rng: np.random.Generator, embed_dim: int, sentences: int) -> EmbeddedQuestion:
    lengths = rng.integers(2, 5, size=sentences)
    labels = np.zeros(sentences)
    labels[rng.integers(sentences)] = 1.0
    return EmbeddedQuestion(
        "toy",
        rng.normal(size=(3, embed_dim)),
        [rng.normal(size=(int(n), embed_dim)) for n in lengths],
        labels,
    )


def toy_config(use_context: bool, use_tensor: bool, seed: int = 0) -> ModelConfig:
    return ModelConfig(
        embed_dim=5, sent_hidden=4, ctx_hidden=3, r=2,
        use_context=use_context, use_tensor=use_tensor, seed=seed,
    )


def check_variant(
    use_context: bool, use_tensor: bool, seed: int = 0, sentences: int = 3, eps: float = 1e-5
) -> Dict[str, Tuple[float, Tuple[int, ...]]]:
    """Per-parameter worst relative error for one ablation on a seeded toy paragraph."""
    config = toy_config(use_context, use_tensor, seed)
    rng = np.random.default_rng(seed)
    params = ModelParams.init(config, rng)
    example = toy_example(rng, config.embed_dim, sentences)

    def f(arrays):
        return example_value_and_grad(example, ModelParams.from_named(config, arrays), config)

    return grad_check_report(f, params.named_arrays(), eps)


def run_suite(tolerance: float = 1e-4, seed: int = 0) -> Tuple[List[str], List[GradFailure]]:
    """Check all four ablations on 2-, 3- and 4-sentence paragraphs.

    Returns printable summary lines and the failures (empty when all pass).
    """
    lines, failures = [], []
    for name, (ctx, tensor) in ABLATIONS.items():
        worst = 0.0
        for sentences in (2, 3, 4):
            report = check_variant(ctx, tensor, seed + sentences, sentences)
            for param, (err, coord) in report.items():
                worst = max(worst, err)
                if err >= tolerance:
                    failures.append(GradFailure(f"{name}/{sentences}s", param, err, coord))
        lines.append(f"{name}\tmax_rel_err={worst:.3e}\t{'PASS' if worst < tolerance else 'FAIL'}")
    return lines, failures
