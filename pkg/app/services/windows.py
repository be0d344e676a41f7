from typing import List

from ..models.frame import Clip, FrameWindow


def window_at(clip: Clip, t: int, stride: int) -> FrameWindow:
    return FrameWindow(
        center_index=t,
        stride=stride,
        current=clip.frames[t],
        previous=clip.frames[t - stride],
        previous2=clip.frames[t - 2 * stride],
        future=clip.frames[t + stride],
    )


def valid_windows(clip: Clip, stride: int) -> List[FrameWindow]:
    """
    Every window whose four frames exist: 2T <= t <= len - 1 - T, ascending.
    Boundary frames are skipped rather than padded.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    return [window_at(clip, t, stride) for t in range(2 * stride, len(clip) - stride)]
