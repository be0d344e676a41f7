"""Appearance encoder, temporal bottleneck and reconstruction decoder.

Level k (0 = full resolution) has width c_k = min(base * 2**k, max_channels).

Encoder (shared weights for all three input frames):
    x_0 = relu(conv3x3(I))                          non-scaling block
    x_k = maxpool(relu(conv3x3(x_{k-1})))           k = 1..L
    skip_k = conv1x1(x_k)                           k = 0..L-1
Bottleneck:
    z = relu(conv3x3(relu(conv3x3(concat(x_L(t), x_L(t-T), x_L(t-2T))))))
    combined_k = conv1x1(concat(skip_k(t), skip_k(t-T), skip_k(t-2T)))
Decoder, k = L-1 .. 0:
    u = relu(convT2x2(h))
    h = relu(conv3x3(concat(u, skip_k(t), combined_k)))
    output = conv3x3(h) -> 1 channel, clamped to [0, 1] when configured
With skip_connections off the decoder sees only u and no skip or combiner
parameters exist.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ShapeMismatchError
from ..models.frame import Frame
from ..models.model_config import ModelConfig
from .autodiff import Tape, Tensor, clamp01, concat_channels, conv2d, conv_transpose2d, maxpool2d, relu, zero_grad
from .rng import STREAM_INIT, derive_generator

ParamSpec = Tuple[str, Tuple[int, ...], Optional[int]]

HEAD_GAIN = 0.1


def parameter_layout(config: ModelConfig) -> List[ParamSpec]:
    """Declared parameter order: (name, shape, fan_in); fan_in is None for biases."""
    c = config.widths
    stages = config.spatial_stages
    layout: List[ParamSpec] = []

    def conv(name: str, out_ch: int, in_ch: int, k: int) -> None:
        layout.append((f"{name}.weight", (out_ch, in_ch, k, k), in_ch * k * k))
        layout.append((f"{name}.bias", (out_ch,), None))

    def upconv(name: str, in_ch: int, out_ch: int) -> None:
        layout.append((f"{name}.weight", (in_ch, out_ch, 2, 2), in_ch))
        layout.append((f"{name}.bias", (out_ch,), None))

    conv("encoder.block0", c[0], 1, 3)
    for k in range(1, stages + 1):
        conv(f"encoder.block{k}", c[k], c[k - 1], 3)
    if config.skip_connections:
        for k in range(stages):
            conv(f"encoder.skip{k}", c[k], c[k], 1)

    conv("bottleneck.conv0", config.middle_channels, 3 * c[stages], 3)
    conv("bottleneck.conv1", c[stages], config.middle_channels, 3)
    if config.skip_connections:
        for k in range(stages):
            conv(f"bottleneck.combine{k}", c[k], 3 * c[k], 1)

    for k in reversed(range(stages)):
        upconv(f"decoder.up{k}", c[k + 1], c[k])
        conv(f"decoder.block{k}", c[k], (3 if config.skip_connections else 1) * c[k], 3)
    conv("decoder.head", 1, c[0], 3)
    return layout


@dataclass
class ModelParams:
    config: ModelConfig
    tensors: Dict[str, Tensor] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.tensors.values())

    def __len__(self) -> int:
        return len(self.tensors)

    def parameters(self) -> List[Tensor]:
        return list(self.tensors.values())

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self.tensors.values())).dtype

    def zero_grad(self) -> None:
        zero_grad(self.tensors.values())


def init_model(config: ModelConfig, seed: int, dtype=np.float32) -> ModelParams:
    """
    He-normal weights (std = sqrt(2 / fan_in)) from a seeded Philox stream; zero biases.
    The output head is scaled by HEAD_GAIN so the untrained network starts near zero.
    """
    rng = derive_generator(seed, STREAM_INIT)
    tensors: Dict[str, Tensor] = {}
    for name, shape, fan_in in parameter_layout(config):
        if fan_in is None:
            data = np.zeros(shape, dtype=dtype)
        else:
            scale = math.sqrt(2.0 / fan_in) * (HEAD_GAIN if name == "decoder.head.weight" else 1.0)
            data = (rng.standard_normal(shape) * scale).astype(dtype)
        tensors[name] = Tensor.parameter(data, name=name)
    return ModelParams(config=config, tensors=tensors)


def as_batch(frames, dtype=np.float32) -> Tensor:
    """Stacks frames (Frame objects or 2-D arrays) into a (B, 1, H, W) tensor."""
    if isinstance(frames, Tensor):
        return frames
    if isinstance(frames, (Frame, np.ndarray)):
        frames = [frames]
    arrays = [f.data if isinstance(f, Frame) else np.asarray(f) for f in frames]
    return Tensor(data=np.stack(arrays)[:, None, :, :].astype(dtype))


def _check_divisible(config: ModelConfig, x: Tensor) -> None:
    height, width = x.shape[2], x.shape[3]
    if not config.accepts(height, width):
        raise ShapeMismatchError(
            f"frame {height}x{width} is not divisible by 2**{config.spatial_stages} = {config.divisor}"
        )


def encode(params: ModelParams, frame, tape: Optional[Tape] = None) -> Tuple[Tensor, List[Tensor]]:
    """
    Runs the appearance encoder. Returns the bottleneck-resolution features
    (B, c_L, H/2**L, W/2**L) and one skip tensor per level 0..L-1 (none when skips are disabled).
    """
    config = params.config
    x = as_batch(frame, params.dtype)
    if x.shape[1] != 1:
        raise ShapeMismatchError(f"encoder expects single-channel input, got {x.shape[1]} channels")
    _check_divisible(config, x)

    h = relu(conv2d(x, params["encoder.block0.weight"], params["encoder.block0.bias"], pad=1, tape=tape), tape=tape)
    levels = [h]
    for k in range(1, config.spatial_stages + 1):
        h = relu(conv2d(h, params[f"encoder.block{k}.weight"], params[f"encoder.block{k}.bias"], pad=1, tape=tape), tape=tape)
        h = maxpool2d(h, tape=tape)
        levels.append(h)
    if not config.skip_connections:
        return levels[-1], []
    skips = [
        conv2d(levels[k], params[f"encoder.skip{k}.weight"], params[f"encoder.skip{k}.bias"], pad=0, tape=tape)
        for k in range(config.spatial_stages)
    ]
    return levels[-1], skips


def forward(
    params: ModelParams,
    current,
    previous,
    previous2,
    tape: Optional[Tape] = None,
    clamp: Optional[bool] = None,
) -> Tensor:
    """
    Predicts the reconstruction target from (I_t, I_{t-T}, I_{t-2T}); each
    argument is a Frame, a 2-D array, a list of them, or a (B, 1, H, W) tensor.
    ``clamp`` overrides ``config.clamp_output``.
    """
    config = params.config
    inputs = [as_batch(f, params.dtype) for f in (current, previous, previous2)]
    if not inputs[0].shape == inputs[1].shape == inputs[2].shape:
        raise ShapeMismatchError(
            f"input frames differ in shape: {[t.shape for t in inputs]}"
        )

    encoded = [encode(params, x, tape=tape) for x in inputs]
    features = concat_channels([features for features, _ in encoded], tape=tape)
    z = relu(conv2d(features, params["bottleneck.conv0.weight"], params["bottleneck.conv0.bias"], tape=tape), tape=tape)
    z = relu(conv2d(z, params["bottleneck.conv1.weight"], params["bottleneck.conv1.bias"], tape=tape), tape=tape)

    current_skips = encoded[0][1]
    h = z
    for k in reversed(range(config.spatial_stages)):
        up = relu(conv_transpose2d(h, params[f"decoder.up{k}.weight"], params[f"decoder.up{k}.bias"], tape=tape), tape=tape)
        merged = up
        if config.skip_connections:
            level_skips = concat_channels([skips[k] for _, skips in encoded], tape=tape)
            combined = conv2d(
                level_skips, params[f"bottleneck.combine{k}.weight"], params[f"bottleneck.combine{k}.bias"], pad=0, tape=tape
            )
            merged = concat_channels([up, current_skips[k], combined], tape=tape)
        h = relu(conv2d(merged, params[f"decoder.block{k}.weight"], params[f"decoder.block{k}.bias"], tape=tape), tape=tape)

    out = conv2d(h, params["decoder.head.weight"], params["decoder.head.bias"], tape=tape)
    should_clamp = config.clamp_output if clamp is None else clamp
    if should_clamp:
        out = clamp01(out, tape=tape)
    return out


def predict(params: ModelParams, current: Frame, previous: Frame, previous2: Frame) -> Frame:
    out = forward(params, current, previous, previous2)
    return Frame.clamped(out.data[0, 0].astype(np.float64))


def predict_batch(params: ModelParams, windows: Sequence[Tuple[Frame, Frame, Frame]]) -> List[Frame]:
    currents, previous, previous2 = zip(*windows)
    out = forward(params, list(currents), list(previous), list(previous2))
    return [Frame.clamped(out.data[i, 0].astype(np.float64)) for i in range(out.shape[0])]
