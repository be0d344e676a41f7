import numpy as np
import pytest
from PIL import Image

from app.errors import ShapeMismatchError
from app.models.annotation import BoxAnnotation
from app.models.frame import Clip, Frame
from app.services.clip_io import save_channel_clip
from app.services.compose import (
    background_subtract_clip,
    baseline_channels,
    compose_channels,
    median_filter_clip,
    median_filter_frame,
    perfect_denoiser_clip,
)


def constant_clip(value: float, n_frames: int = 3, shape=(6, 6)) -> Clip:
    return Clip.from_arrays([np.full(shape, value) for _ in range(n_frames)], fps=5.0, source_id="const")


def test_background_subtraction_of_static_clip_is_zero():
    result = background_subtract_clip(constant_clip(0.7))
    assert all(np.all(frame.data == 0.0) for frame in result.frames)
    assert result.fps == 5.0


def test_background_subtraction_keeps_positive_excess():
    arrays = [np.full((4, 4), 0.2), np.full((4, 4), 0.2), np.full((4, 4), 0.5)]
    result = background_subtract_clip(Clip.from_arrays(arrays))
    np.testing.assert_allclose(result.frames[2].data, 0.2, atol=1e-12)
    assert np.all(result.frames[0].data == 0.0)


def test_median_of_constant_frame_is_unchanged():
    frame = Frame(data=np.full((5, 5), 0.4))
    np.testing.assert_array_equal(median_filter_frame(frame).data, frame.data)


def test_median_removes_isolated_salt_pixel():
    data = np.full((5, 5), 0.1)
    data[2, 2] = 1.0
    np.testing.assert_array_equal(median_filter_frame(Frame(data=data)).data, np.full((5, 5), 0.1))


def test_median_matches_sorted_neighbourhood(rng):
    data = rng.random((7, 6))
    result = median_filter_frame(Frame(data=data), k=3).data
    padded = np.pad(data, 1, mode="edge")
    for r in range(7):
        for c in range(6):
            assert result[r, c] == np.sort(padded[r:r + 3, c:c + 3].ravel())[4]


def test_median_kernel_must_be_odd():
    frame = Frame.zeros(4, 4)
    for k in (1, 2, 4):
        with pytest.raises(ValueError):
            median_filter_frame(frame, k)


def test_median_clip_keeps_length(rng):
    clip = Clip.from_arrays([rng.random((6, 6)) for _ in range(4)])
    assert len(median_filter_clip(clip, 5)) == 4


def test_compose_channel_order(tmp_path):
    composed = compose_channels(constant_clip(0.2, n_frames=2), constant_clip(0.6, n_frames=2))
    assert composed.frames[0].shape == (6, 6, 3)
    save_channel_clip(composed, tmp_path / "rgb")
    with Image.open(tmp_path / "rgb" / "frame_00000.ppm") as image:
        pixels = np.asarray(image)
    assert tuple(pixels[0, 0]) == (51, 51, 153)


def test_compose_rejects_mismatched_clips():
    with pytest.raises(ShapeMismatchError):
        compose_channels(constant_clip(0.2, n_frames=2), constant_clip(0.6, n_frames=3))
    with pytest.raises(ShapeMismatchError):
        compose_channels(constant_clip(0.2), constant_clip(0.6, shape=(6, 4)))


def test_baseline_channels(rng):
    clip = Clip.from_arrays([rng.random((4, 4)) for _ in range(3)])
    channels = baseline_channels(clip)
    first, last = channels.frames[0], channels.frames[-1]
    np.testing.assert_array_equal(first[..., 0], clip.frames[0].data)
    np.testing.assert_allclose(first[..., 1], np.clip(clip.frames[0].data - clip.mean_data, 0, 1), atol=1e-12)
    np.testing.assert_allclose(first[..., 2], np.abs(clip.frames[0].data - clip.frames[1].data), atol=1e-12)
    np.testing.assert_allclose(last[..., 2], np.abs(clip.frames[2].data - clip.frames[1].data), atol=1e-12)


def test_baseline_of_single_frame():
    channels = baseline_channels(constant_clip(0.3, n_frames=1))
    assert np.all(channels.frames[0][..., 2] == 0.0)


def test_perfect_denoiser_fills_boxes():
    boxes = [
        BoxAnnotation(frame_index=1, object_id=1, x=1, y=2, w=3, h=2),
        BoxAnnotation(frame_index=1, object_id=2, x=0, y=0, w=1, h=1),
    ]
    perfect = perfect_denoiser_clip(constant_clip(0.5), boxes)
    assert len(perfect) == 3
    assert np.all(perfect.frames[0].data == 0.0)
    assert perfect.frames[1].data.sum() == 7.0
    assert np.all(perfect.frames[1].data[2:4, 1:4] == 1.0)
    with pytest.raises(ShapeMismatchError):
        perfect_denoiser_clip(constant_clip(0.5), [BoxAnnotation(frame_index=0, object_id=1, x=4, y=4, w=4, h=4)])
