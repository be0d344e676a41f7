"""Classical per-frame processors and three-channel composition for downstream models."""
from typing import Sequence

import numpy as np
from scipy import ndimage

from ..errors import ShapeMismatchError
from ..models.annotation import BoxAnnotation
from ..models.frame import ChannelClip, Clip, Frame


def background_subtract_clip(clip: Clip) -> Clip:
    """clamp(I_t - mean frame, 0, 1) for every frame."""
    mean = clip.mean_data
    return Clip(
        frames=[Frame.clamped(frame.data - mean) for frame in clip.frames],
        fps=clip.fps,
        source_id=f"{clip.source_id}-bgsub" if clip.source_id else "bgsub",
    )


def median_filter_frame(frame: Frame, k: int = 3) -> Frame:
    """Spatial k x k median with edge replication."""
    if k < 3 or k % 2 == 0:
        raise ValueError(f"median kernel must be odd and >= 3, got {k}")
    return Frame(data=ndimage.median_filter(frame.data, size=k, mode="nearest"))


def median_filter_clip(clip: Clip, k: int = 3) -> Clip:
    return Clip(
        frames=[median_filter_frame(frame, k) for frame in clip.frames],
        fps=clip.fps,
        source_id=f"{clip.source_id}-median{k}" if clip.source_id else f"median{k}",
    )


def _check_compatible(primary: Clip, aux: Clip) -> None:
    if len(primary) != len(aux) or primary.shape != aux.shape:
        raise ShapeMismatchError(
            f"cannot compose {len(primary)} frames of {primary.shape} with {len(aux)} frames of {aux.shape}"
        )


def compose_channels(primary: Clip, aux: Clip) -> ChannelClip:
    """Channels (primary, primary, aux), in that order."""
    _check_compatible(primary, aux)
    return ChannelClip(
        frames=[np.stack([p.data, p.data, a.data], axis=-1) for p, a in zip(primary.frames, aux.frames)],
        fps=primary.fps,
        source_id=primary.source_id,
    )


def baseline_channels(clip: Clip) -> ChannelClip:
    """
    (raw, background-subtracted, |I_t - I_{t+1}|) per frame; the last frame
    differences against its predecessor, a single-frame clip gets zeros.
    """
    subtracted = background_subtract_clip(clip)
    frames = []
    for t, frame in enumerate(clip.frames):
        if len(clip) == 1:
            difference = np.zeros(clip.shape)
        else:
            other = clip.frames[t + 1] if t + 1 < len(clip) else clip.frames[t - 1]
            difference = np.abs(frame.data - other.data)
        frames.append(np.stack([frame.data, subtracted.frames[t].data, difference], axis=-1))
    return ChannelClip(frames=frames, fps=clip.fps, source_id=clip.source_id)


def perfect_denoiser_clip(reference: Clip, annotations: Sequence[BoxAnnotation]) -> Clip:
    """Black frames with every annotated box filled white: the ideal denoiser output."""
    canvases = [np.zeros(reference.shape) for _ in range(len(reference))]
    for box in annotations:
        if box.frame_index >= len(reference) or not box.fits(reference.height, reference.width):
            raise ShapeMismatchError(f"box {box.to_csv_row()} does not fit the reference clip")
        canvases[box.frame_index][box.y:box.y_end, box.x:box.x_end] = 1.0
    return Clip.from_arrays(canvases, fps=reference.fps, source_id="perfect")
