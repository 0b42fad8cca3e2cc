"""Adam (Kingma & Ba) over a named set of float64 arrays."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from .numcore import ContractError, DimensionError


@dataclass(frozen=True)
class AdamHyper:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ContractError(f"betas must lie in [0, 1): {self.beta1}, {self.beta2}")
        if self.learning_rate < 0 or not self.epsilon > 0:
            raise ContractError("learning_rate must be >= 0 and epsilon > 0")


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Mapping[str, np.ndarray]) -> "AdamState":
        return cls(
            {k: np.zeros_like(p) for k, p in params.items()},
            {k: np.zeros_like(p) for k, p in params.items()},
            0,
        )


def adam_step(
    params: Dict[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    hyper: AdamHyper = AdamHyper(),
) -> None:
    """Apply one bias-corrected Adam update in place to ``params`` and ``state``."""
    for k, p in params.items():
        if k not in state.m:
            state.m[k] = np.zeros_like(p)
            state.v[k] = np.zeros_like(p)
        if grads[k].shape != p.shape or state.m[k].shape != p.shape:
            raise DimensionError(
                f"adam_step: {k} param {p.shape}, grad {grads[k].shape}, state {state.m[k].shape}"
            )
    state.t += 1
    b1, b2 = hyper.beta1, hyper.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for k, p in params.items():
        g = grads[k]
        m = state.m[k] = b1 * state.m[k] + (1.0 - b1) * g
        v = state.v[k] = b2 * state.v[k] + (1.0 - b2) * g * g
        p -= hyper.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + hyper.epsilon)
