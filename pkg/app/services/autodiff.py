"""A small reverse-mode differentiation core over numpy arrays.

Only the operations the denoising network needs are provided: 3×3 (and 1×1)
convolution, 2×2 stride-2 transposed convolution, 2×2 max pooling, ReLU,
clamping to [0, 1], channel concatenation and mean squared error. Tensors are
(batch, channels, height, width) unless they are parameters or the scalar loss.

Every op takes an optional ``tape``; when given, the op appends a node whose
backward closure maps the output gradient to input gradients. ``backward``
walks the tape in reverse in a fixed order, so gradients are bit-identical
across runs on identical inputs.
"""
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeMismatchError, TapeError


@dataclass(eq=False)
class Tensor:
    data: np.ndarray
    requires_grad: bool = False
    grad: Optional[np.ndarray] = None
    name: str = ""

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def zero_grad(self) -> None:
        self.grad = None

    @classmethod
    def parameter(cls, data: np.ndarray, name: str = "") -> "Tensor":
        return cls(data=data, requires_grad=True, name=name)


GradFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


@dataclass(eq=False)
class Node:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: GradFn


@dataclass
class Tape:
    """Executed ops in forward order; inputs of a node always precede it."""
    nodes: List[Node] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.nodes)


def _emit(tape: Optional[Tape], op: str, inputs: Sequence[Tensor], data: np.ndarray, grad_fn: GradFn) -> Tensor:
    out = Tensor(data=data, requires_grad=any(t.requires_grad for t in inputs))
    if tape is not None and out.requires_grad:
        tape.nodes.append(Node(op=op, inputs=tuple(inputs), output=out, backward=grad_fn))
    return out


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ShapeMismatchError(message)


def _im2col(x: np.ndarray, k: int, pad: int) -> Tuple[np.ndarray, Tuple[int, int, int]]:
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(x, (k, k), axis=(2, 3))
    batch, channels, out_h, out_w = windows.shape[:4]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(batch * out_h * out_w, channels * k * k)
    return cols, (batch, out_h, out_w)


def _correlate(x: np.ndarray, w: np.ndarray, pad: int) -> Tuple[np.ndarray, np.ndarray]:
    out_ch, _, k, _ = w.shape
    cols, (batch, out_h, out_w) = _im2col(x, k, pad)
    out = cols @ w.reshape(out_ch, -1).T
    out = np.ascontiguousarray(out.reshape(batch, out_h, out_w, out_ch).transpose(0, 3, 1, 2))
    return out, cols


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, pad: int = 1, tape: Optional[Tape] = None) -> Tensor:
    """Stride-1 cross-correlation. weight is (out_ch, in_ch, k, k), bias (out_ch,)."""
    _require(x.data.ndim == 4, f"conv2d input must be 4-D, got {x.shape}")
    _require(weight.data.ndim == 4 and weight.shape[2] == weight.shape[3], f"bad conv2d weight {weight.shape}")
    _require(weight.shape[1] == x.shape[1], f"conv2d expects {weight.shape[1]} input channels, got {x.shape[1]}")
    _require(bias.shape == (weight.shape[0],), f"conv2d bias {bias.shape} does not match {weight.shape[0]} outputs")
    k = weight.shape[2]
    _require(0 <= pad <= k - 1, f"conv2d padding {pad} unsupported for kernel {k}")

    out, cols = _correlate(x.data, weight.data, pad)
    out += bias.data[None, :, None, None]

    def grad_fn(g: np.ndarray):
        out_ch = weight.shape[0]
        g_rows = g.transpose(0, 2, 3, 1).reshape(-1, out_ch)
        dw = (g_rows.T @ cols).reshape(weight.shape) if weight.requires_grad else None
        db = g.sum(axis=(0, 2, 3)) if bias.requires_grad else None
        dx = None
        if x.requires_grad:
            flipped = np.ascontiguousarray(weight.data[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
            dx, _ = _correlate(g, flipped, k - 1 - pad)
        return dx, dw, db

    return _emit(tape, "conv2d", (x, weight, bias), out, grad_fn)


def conv_transpose2d(x: Tensor, weight: Tensor, bias: Tensor, tape: Optional[Tape] = None) -> Tensor:
    """2×2 kernel, stride 2: every input pixel scatters into its own 2×2 output block.

    weight is (in_ch, out_ch, 2, 2); spatial size doubles exactly.
    """
    _require(x.data.ndim == 4, f"conv_transpose2d input must be 4-D, got {x.shape}")
    _require(weight.data.ndim == 4 and weight.shape[2:] == (2, 2), f"bad conv_transpose2d weight {weight.shape}")
    _require(weight.shape[0] == x.shape[1], f"conv_transpose2d expects {weight.shape[0]} input channels, got {x.shape[1]}")
    _require(bias.shape == (weight.shape[1],), f"conv_transpose2d bias {bias.shape} does not match {weight.shape[1]} outputs")
    batch, _, height, width = x.shape
    out_ch = weight.shape[1]

    blocks = np.tensordot(x.data, weight.data, axes=([1], [0]))
    out = np.ascontiguousarray(blocks.transpose(0, 3, 1, 4, 2, 5)).reshape(batch, out_ch, 2 * height, 2 * width)
    out += bias.data[None, :, None, None]

    def grad_fn(g: np.ndarray):
        g6 = g.reshape(batch, out_ch, height, 2, width, 2)
        dx = None
        if x.requires_grad:
            dx = np.ascontiguousarray(np.tensordot(g6, weight.data, axes=([1, 3, 5], [1, 2, 3])).transpose(0, 3, 1, 2))
        dw = np.tensordot(x.data, g6, axes=([0, 2, 3], [0, 2, 4])) if weight.requires_grad else None
        db = g.sum(axis=(0, 2, 3)) if bias.requires_grad else None
        return dx, dw, db

    return _emit(tape, "conv_transpose2d", (x, weight, bias), out, grad_fn)


def maxpool2d(x: Tensor, tape: Optional[Tape] = None) -> Tensor:
    """2×2 stride-2 max pool; ties go to the first element in row-major order."""
    _require(x.data.ndim == 4, f"maxpool2d input must be 4-D, got {x.shape}")
    batch, channels, height, width = x.shape
    _require(height % 2 == 0 and width % 2 == 0, f"maxpool2d needs even height and width, got {height}x{width}")
    oh, ow = height // 2, width // 2

    cells = x.data.reshape(batch, channels, oh, 2, ow, 2).transpose(0, 1, 2, 4, 3, 5).reshape(batch, channels, oh, ow, 4)
    winner = cells.argmax(axis=-1)[..., None]
    out = np.take_along_axis(cells, winner, axis=-1)[..., 0]

    def grad_fn(g: np.ndarray):
        routed = np.zeros(cells.shape, dtype=g.dtype)
        np.put_along_axis(routed, winner, g[..., None], axis=-1)
        dx = routed.reshape(batch, channels, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(batch, channels, height, width)
        return (np.ascontiguousarray(dx),)

    return _emit(tape, "maxpool2d", (x,), out, grad_fn)


def relu(x: Tensor, tape: Optional[Tape] = None) -> Tensor:
    mask = x.data > 0
    out = np.where(mask, x.data, 0).astype(x.dtype, copy=False)

    def grad_fn(g: np.ndarray):
        return (g * mask,)

    return _emit(tape, "relu", (x,), out, grad_fn)


def clamp01(x: Tensor, tape: Optional[Tape] = None) -> Tensor:
    """Clamps to [0, 1]; gradient passes only where 0 < x < 1."""
    inside = (x.data > 0) & (x.data < 1)
    out = np.clip(x.data, 0, 1)

    def grad_fn(g: np.ndarray):
        return (g * inside,)

    return _emit(tape, "clamp01", (x,), out, grad_fn)


def concat_channels(tensors: Sequence[Tensor], tape: Optional[Tape] = None) -> Tensor:
    _require(len(tensors) >= 1, "concat_channels needs at least one tensor")
    first = tensors[0].shape
    for t in tensors:
        _require(t.data.ndim == 4, f"concat_channels inputs must be 4-D, got {t.shape}")
        _require(
            (t.shape[0], t.shape[2], t.shape[3]) == (first[0], first[2], first[3]),
            f"concat_channels batch/height/width mismatch: {t.shape} vs {first}",
        )
    out = np.concatenate([t.data for t in tensors], axis=1)
    bounds = np.cumsum([t.shape[1] for t in tensors])[:-1]

    def grad_fn(g: np.ndarray):
        return tuple(np.ascontiguousarray(part) for part in np.split(g, bounds, axis=1))

    return _emit(tape, "concat_channels", tuple(tensors), out, grad_fn)


def mse_loss(pred: Tensor, target: Tensor | np.ndarray, tape: Optional[Tape] = None) -> Tensor:
    """Mean over all elements of (pred - target)^2, as a 0-d tensor."""
    if not isinstance(target, Tensor):
        target = Tensor(data=np.asarray(target, dtype=pred.dtype))
    _require(pred.shape == target.shape, f"mse_loss shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    n = diff.size
    out = np.asarray(np.mean(diff * diff), dtype=pred.dtype)

    def grad_fn(g: np.ndarray):
        dpred = (g * (2.0 / n)) * diff
        dtarget = -dpred if target.requires_grad else None
        return dpred.astype(pred.dtype, copy=False), dtarget

    return _emit(tape, "mse_loss", (pred, target), out, grad_fn)


def backward(tape: Tape, loss: Tensor) -> None:
    """
    Propagates d(loss)/d(leaf) into every leaf tensor that requires grad.
    Leaf grads accumulate across calls; call ``zero_grad`` between steps.
    """
    if not tape.nodes or not any(node.output is loss for node in tape.nodes):
        raise TapeError("backward called on a value that no recorded forward pass produced")
    if loss.data.size != 1:
        raise ShapeMismatchError(f"backward needs a scalar loss, got shape {loss.shape}")

    pending = {id(loss): np.ones_like(loss.data)}
    produced = {id(node.output) for node in tape.nodes}
    leaves: dict[int, Tensor] = {}
    for node in reversed(tape.nodes):
        g = pending.pop(id(node.output), None)
        if g is None:
            continue
        for tensor, grad in zip(node.inputs, node.backward(g)):
            if grad is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            if key not in produced:
                leaves[key] = tensor
            if key in pending:
                pending[key] = pending[key] + grad
            else:
                pending[key] = grad

    for key, tensor in leaves.items():
        grad = pending[key]
        tensor.grad = grad if tensor.grad is None else tensor.grad + grad


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.zero_grad()
