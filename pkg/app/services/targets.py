"""Reconstruction targets.

Each target is computed from raw float64 frame data. ``target_array`` returns
the (optionally unclamped) array the trainer regresses; the Frame-returning
operations always clamp to [0, 1].
"""
from typing import Sequence

import numpy as np

from ..errors import WindowRangeError
from ..models.frame import Clip, Frame, FrameWindow
from ..models.target_kind import (
    AbsDiffTarget,
    BackgroundSubTarget,
    PfdPairTarget,
    PfdTarget,
    RawTarget,
    SigmaTarget,
    SumMinusMeanTarget,
    TargetKind,
)


def mean_frame(clip: Clip) -> Frame:
    """Per-pixel temporal mean of the whole clip (cached on the clip)."""
    return Frame(data=clip.mean_data)


def _check_range(clip: Clip, first: int, last: int, what: str) -> None:
    if first < 0 or last > len(clip) - 1:
        raise WindowRangeError(
            f"{what} needs frames {first}..{last} but the clip has frames 0..{len(clip) - 1}"
        )


def _pfd(previous: np.ndarray, current: np.ndarray, future: np.ndarray, inverted: bool) -> np.ndarray:
    pick = np.minimum if inverted else np.maximum
    return pick(0.0, previous - current) + current + pick(0.0, future - current)


def pfd_target(window: FrameWindow, inverted: bool = False) -> Frame:
    """max(0, I_{t-T} - I_t) + I_t + max(0, I_{t+T} - I_t), clamped to [0, 1]."""
    values = _pfd(window.previous.data, window.current.data, window.future.data, inverted)
    return Frame.clamped(values)


def abs_diff_target(clip: Clip, t: int, stride: int) -> Frame:
    _check_range(clip, t, t + stride, "absolute difference")
    return Frame(data=np.abs(clip.frames[t].data - clip.frames[t + stride].data))


def background_sub_target(clip: Clip, t: int) -> Frame:
    _check_range(clip, t, t, "background subtraction")
    return Frame.clamped(clip.frames[t].data - clip.mean_data)


def _window_frames(clip: Clip, first: int, last: int) -> Sequence[np.ndarray]:
    return [clip.frames[i].data for i in range(first, last + 1)]


def _sigma(clip: Clip, t: int, radius: int) -> np.ndarray:
    _check_range(clip, t - radius, t + radius, "standard deviation window")
    frames = _window_frames(clip, t - radius, t + radius)
    total = np.zeros(clip.shape)
    for data in frames:
        total += data
    mean = total / len(frames)
    spread = np.zeros(clip.shape)
    for data in frames:
        spread += (data - mean) ** 2
    return np.sqrt(spread / len(frames))


def sigma_target(clip: Clip, t: int, radius: int) -> Frame:
    """Population standard deviation over frames t-N .. t+N."""
    return Frame.clamped(_sigma(clip, t, radius))


def _sum_minus_mean(clip: Clip, t: int, window: int) -> np.ndarray:
    half = window // 2
    _check_range(clip, t - half, t - half + window - 1, "summation window")
    total = np.zeros(clip.shape)
    for data in _window_frames(clip, t - half, t - half + window - 1):
        total += data
    return total - window * clip.mean_data


def sum_minus_mean_target(clip: Clip, t: int, window: int) -> Frame:
    """Sum of the N frames centred on t minus N times the mean frame, clamped to [0, 1]."""
    return Frame.clamped(_sum_minus_mean(clip, t, window))


def target_array(clip: Clip, t: int, kind: TargetKind, clamp: bool = True) -> np.ndarray:
    """
    The target for frame t as a float64 array. With ``clamp=False`` the PFD
    target keeps its natural range up to 2.0 and Σ−NĪ may exceed 1.
    """
    if isinstance(kind, RawTarget):
        _check_range(clip, t, t, "raw target")
        values = clip.frames[t].data
    elif isinstance(kind, PfdTarget):
        _check_range(clip, t - kind.stride, t + kind.stride, "PFD target")
        values = _pfd(
            clip.frames[t - kind.stride].data,
            clip.frames[t].data,
            clip.frames[t + kind.stride].data,
            kind.inverted,
        )
    elif isinstance(kind, PfdPairTarget):
        near, far = kind.stride, 2 * kind.stride
        _check_range(clip, t - far, t + far, "paired PFD target")
        current = clip.frames[t].data
        values = (
            _pfd(clip.frames[t - far].data, current, clip.frames[t + far].data, kind.inverted)
            + _pfd(clip.frames[t - near].data, current, clip.frames[t + near].data, kind.inverted)
            - current
        )
    elif isinstance(kind, AbsDiffTarget):
        _check_range(clip, t, t + kind.stride, "absolute difference")
        values = np.abs(clip.frames[t].data - clip.frames[t + kind.stride].data)
    elif isinstance(kind, BackgroundSubTarget):
        _check_range(clip, t, t, "background subtraction")
        values = np.maximum(0.0, clip.frames[t].data - clip.mean_data)
    elif isinstance(kind, SigmaTarget):
        values = _sigma(clip, t, kind.radius)
    elif isinstance(kind, SumMinusMeanTarget):
        values = np.maximum(0.0, _sum_minus_mean(clip, t, kind.window))
    else:
        raise TypeError(f"unsupported target kind {kind!r}")
    if clamp:
        values = np.clip(values, 0.0, 1.0)
    return values


def compute_target(clip: Clip, t: int, kind: TargetKind) -> Frame:
    """Dispatches on the target kind; always returns a frame in [0, 1]."""
    return Frame(data=target_array(clip, t, kind, clamp=True))


def target_supported(kind: TargetKind, clip_length: int, t: int) -> bool:
    past, future = kind.reach()
    return t - past >= 0 and t + future <= clip_length - 1
