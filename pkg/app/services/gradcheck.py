"""Central finite-difference checks of every differentiable op and of the full network.

All checks run in float64. Op inputs are drawn away from the non-differentiable
points (ReLU and clamp at their corners, max-pool ties) so one step of size
STEP never crosses a kink; inside the network an entry that fails at STEP is
measured again at FINE_STEP.
"""
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..models.model_config import ModelConfig
from .autodiff import (
    Tape,
    Tensor,
    backward,
    clamp01,
    concat_channels,
    conv2d,
    conv_transpose2d,
    maxpool2d,
    mse_loss,
    relu,
    zero_grad,
)
from .network import forward, init_model
from .rng import STREAM_GRADCHECK, derive_generator

logger = logging.getLogger(__name__)

STEP = 1e-5
FINE_STEP = 1e-7
TOLERANCE = 1e-5
ERROR_FLOOR = 1e-4
ENTRIES_PER_TENSOR = 6

LossFn = Callable[[Optional[Tape]], Tensor]


class CheckResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(json_schema_extra={"description": "Checked op, or 'model' for the whole network."})
    max_relative_error: float = Field(ge=0)
    checked: int = Field(json_schema_extra={"description": "Number of gradient entries compared."}, ge=0)

    @property
    def passed(self) -> bool:
        return self.max_relative_error <= TOLERANCE


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(ERROR_FLOOR, abs(analytic) + abs(numeric))


def _leaf(data: np.ndarray, name: str) -> Tensor:
    return Tensor.parameter(np.ascontiguousarray(data, dtype=np.float64), name=name)


def _away_from_zero(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    return rng.uniform(0.1, 1.0, shape) * rng.choice((-1.0, 1.0), shape)


def _against_random_target(rng: np.random.Generator, op: Callable[[Optional[Tape]], Tensor]) -> LossFn:
    target = None

    def loss(tape: Optional[Tape]) -> Tensor:
        nonlocal target
        out = op(tape)
        if target is None:
            target = rng.random(out.shape)
        return mse_loss(out, target, tape=tape)

    return loss


def _op_cases(rng: np.random.Generator) -> List[Tuple[str, List[Tensor], LossFn]]:
    cases = []

    x = _leaf(rng.standard_normal((2, 3, 5, 5)), "x")
    w = _leaf(rng.standard_normal((4, 3, 3, 3)) * 0.3, "w")
    b = _leaf(rng.standard_normal(4), "b")
    cases.append(("conv2d_3x3", [x, w, b], _against_random_target(rng, lambda tape: conv2d(x, w, b, pad=1, tape=tape))))

    x1 = _leaf(rng.standard_normal((2, 3, 4, 4)), "x")
    w1 = _leaf(rng.standard_normal((2, 3, 1, 1)), "w")
    b1 = _leaf(rng.standard_normal(2), "b")
    cases.append(("conv2d_1x1", [x1, w1, b1], _against_random_target(rng, lambda tape: conv2d(x1, w1, b1, pad=0, tape=tape))))

    xt = _leaf(rng.standard_normal((2, 3, 3, 3)), "x")
    wt = _leaf(rng.standard_normal((3, 2, 2, 2)) * 0.5, "w")
    bt = _leaf(rng.standard_normal(2), "b")
    cases.append(("conv_transpose2d", [xt, wt, bt], _against_random_target(rng, lambda tape: conv_transpose2d(xt, wt, bt, tape=tape))))

    xp = _leaf(rng.permutation(2 * 2 * 4 * 4).reshape(2, 2, 4, 4) * 0.01, "x")
    cases.append(("maxpool2d", [xp], _against_random_target(rng, lambda tape: maxpool2d(xp, tape=tape))))

    xr = _leaf(_away_from_zero(rng, (2, 2, 3, 3)), "x")
    cases.append(("relu", [xr], _against_random_target(rng, lambda tape: relu(xr, tape=tape))))

    bands = np.stack([rng.uniform(-0.5, -0.1, 18), rng.uniform(0.1, 0.9, 18), rng.uniform(1.1, 1.5, 18)], axis=1)
    xc = _leaf(rng.permuted(bands.reshape(-1)).reshape(2, 3, 3, 3), "x")
    cases.append(("clamp01", [xc], _against_random_target(rng, lambda tape: clamp01(xc, tape=tape))))

    xa = _leaf(rng.standard_normal((2, 1, 3, 3)), "a")
    xb = _leaf(rng.standard_normal((2, 2, 3, 3)), "b")
    cases.append(("concat_channels", [xa, xb], _against_random_target(rng, lambda tape: concat_channels([xa, xb], tape=tape))))

    pred = _leaf(rng.standard_normal((2, 1, 4, 4)), "pred")
    target = _leaf(rng.standard_normal((2, 1, 4, 4)), "target")
    cases.append(("mse_loss", [pred, target], lambda tape: mse_loss(pred, target, tape=tape)))
    return cases


def model_case(rng: np.random.Generator, seed: int) -> Tuple[str, List[Tensor], LossFn]:
    """
    The whole network at 8x8 with base width 2 and 2 spatial stages. Biases are
    redrawn positive: with zero biases an all-zero neighbourhood sits exactly on
    a ReLU kink.
    """
    config = ModelConfig(base_channels=2, max_channels=8, spatial_stages=2)
    params = init_model(config, seed, dtype=np.float64)
    for name, tensor in params.tensors.items():
        if name.endswith(".bias"):
            tensor.data[...] = rng.uniform(0.05, 0.2, tensor.shape)
    frames = [rng.random((2, 8, 8)) for _ in range(3)]
    target = rng.random((2, 1, 8, 8))

    def loss(tape: Optional[Tape]) -> Tensor:
        out = forward(params, list(frames[0]), list(frames[1]), list(frames[2]), tape=tape, clamp=False)
        return mse_loss(out, target, tape=tape)

    return "model", params.parameters(), loss


def _central_difference(leaf: Tensor, index: Tuple[int, ...], loss_fn: LossFn, step: float) -> float:
    original = leaf.data[index]
    leaf.data[index] = original + step
    plus = float(loss_fn(None).data)
    leaf.data[index] = original - step
    minus = float(loss_fn(None).data)
    leaf.data[index] = original
    return (plus - minus) / (2 * step)


def check_gradients(
    name: str,
    leaves: Sequence[Tensor],
    loss_fn: LossFn,
    rng: np.random.Generator,
    corrupt: bool = False,
) -> CheckResult:
    zero_grad(leaves)
    tape = Tape()
    loss = loss_fn(tape)
    backward(tape, loss)

    worst = 0.0
    checked = 0
    for leaf in leaves:
        analytic = np.zeros_like(leaf.data) if leaf.grad is None else leaf.grad
        if corrupt:
            analytic = analytic * 1.01 + 1e-3
        size = leaf.data.size
        picks = np.arange(size) if size <= ENTRIES_PER_TENSOR else np.sort(rng.choice(size, ENTRIES_PER_TENSOR, replace=False))
        for flat in picks:
            index = np.unravel_index(int(flat), leaf.data.shape)
            error = relative_error(float(analytic[index]), _central_difference(leaf, index, loss_fn, STEP))
            if error > TOLERANCE:
                # a step straddling a ReLU or max-pool switch inside the network is retried finer
                error = min(error, relative_error(float(analytic[index]), _central_difference(leaf, index, loss_fn, FINE_STEP)))
            worst = max(worst, error)
            checked += 1
    result = CheckResult(name=name, max_relative_error=worst, checked=checked)
    logger.debug("gradcheck %s: worst relative error %.3e over %d entries", name, worst, checked)
    return result


def run_gradcheck(seed: int = 0, corrupt: bool = False) -> List[CheckResult]:
    """Every op, then the end-to-end model; ``corrupt`` perturbs analytic gradients (self-test)."""
    rng = derive_generator(seed, STREAM_GRADCHECK)
    cases = _op_cases(rng)
    cases.append(model_case(rng, seed))
    return [check_gradients(name, leaves, loss_fn, rng, corrupt=corrupt) for name, leaves, loss_fn in cases]
