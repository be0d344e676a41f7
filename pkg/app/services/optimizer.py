from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from ..errors import ShapeMismatchError


@dataclass
class AdamState:
    first_moment: List[np.ndarray] = field(default_factory=list)
    second_moment: List[np.ndarray] = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
        )


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Bias-corrected Adam update, applied to ``params`` in place."""
    if not (len(params) == len(grads) == len(state.first_moment) == len(state.second_moment)):
        raise ShapeMismatchError("adam_step: params, grads and state differ in length")
    for p, g, m in zip(params, grads, state.first_moment):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeMismatchError(f"adam_step: shape mismatch {p.shape} / {g.shape} / {m.shape}")

    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
