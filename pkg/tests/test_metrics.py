import math

import numpy as np
import pytest

from app.errors import EvaluationError, ShapeMismatchError
from app.models.annotation import BoxAnnotation
from app.models.frame import Clip, Frame
from app.models.reports import Histogram
from app.services.metrics import (
    fbd,
    find_background_frame,
    kl_divergence,
    pixel_histogram,
    psnr,
    quality_report,
    ssim,
)


def create_box(frame_index=0, x=2, y=2, w=3, h=3, object_id=1) -> BoxAnnotation:
    return BoxAnnotation(frame_index=frame_index, object_id=object_id, x=x, y=y, w=w, h=h)


def white_box_clip(n_frames=3, object_frame=1, size=8) -> Clip:
    arrays = [np.zeros((size, size)) for _ in range(n_frames)]
    arrays[object_frame][2:5, 2:5] = 1.0
    return Clip.from_arrays(arrays)


def test_histogram_of_black_region():
    frame = Frame.zeros(4, 4)
    hist = pixel_histogram(frame, create_box(x=0, y=0, w=4, h=4), bins=2)
    assert hist.mass[0] == pytest.approx(1.0, abs=1e-8)
    assert hist.mass[1] == pytest.approx(0.0, abs=1e-8)


def test_histogram_of_ramp_is_uniform():
    frame = Frame(data=((np.arange(16) + 0.5) / 16).reshape(4, 4))
    hist = pixel_histogram(frame, create_box(x=0, y=0, w=4, h=4), bins=16)
    np.testing.assert_allclose(hist.mass, 1 / 16, atol=1e-9)


def test_histogram_mass_sums_to_one(rng):
    frame = Frame(data=rng.random((16, 16)))
    hist = pixel_histogram(frame, create_box(x=3, y=1, w=9, h=7))
    assert hist.bin_count == 256
    assert math.fsum(hist.mass) == pytest.approx(1.0, abs=1e-12)
    assert np.all(hist.mass > 0)


def test_histogram_rejects_bad_arguments():
    frame = Frame.zeros(4, 4)
    with pytest.raises(EvaluationError):
        pixel_histogram(frame, create_box(x=2, y=0, w=3, h=2))
    with pytest.raises(EvaluationError):
        pixel_histogram(frame, create_box(x=0, y=0, w=2, h=2), bins=1)


def test_kl_divergence_values():
    p = Histogram(mass=[0.5, 0.5])
    q = Histogram(mass=[0.9, 0.1])
    assert kl_divergence(p, q) == pytest.approx(0.5108, abs=1e-4)
    assert kl_divergence(q, p) == pytest.approx(0.3681, abs=1e-4)
    assert kl_divergence(p, p) == 0.0


def test_kl_divergence_rejects_bin_mismatch():
    with pytest.raises(ShapeMismatchError):
        kl_divergence(Histogram(mass=[0.5, 0.5]), Histogram(mass=[0.25, 0.25, 0.5]))


def test_background_frame_skips_overlapping_frames():
    box = create_box(frame_index=2)
    annotations = [box, create_box(frame_index=1, x=3), create_box(frame_index=0, x=4)]
    assert find_background_frame(5, annotations, box) == 3


def test_background_frame_prefers_earlier_on_ties():
    box = create_box(frame_index=2)
    far_away = create_box(frame_index=1, x=5, y=5, w=2, h=2)
    assert find_background_frame(5, [box, far_away], box) == 1


def test_background_frame_missing():
    box = create_box(frame_index=0)
    annotations = [box, create_box(frame_index=1), create_box(frame_index=2, x=1, y=1)]
    assert find_background_frame(3, annotations, box) is None


def test_fbd_of_white_object_on_black_background():
    report = fbd(white_box_clip(), [create_box(frame_index=1)])
    assert report.evaluated == 1
    assert report.rows[0].background_frame == 0
    assert report.mean_fbd > 5.0


def test_fbd_near_zero_when_statistics_match(rng):
    """Independent uniform frames: the box and its background differ only by sampling noise."""
    clip = Clip.from_arrays([rng.random((32, 32)) for _ in range(3)])
    report = fbd(clip, [create_box(frame_index=1, x=0, y=0, w=32, h=32)], bins=4)
    assert report.mean_fbd < 0.05


def test_fbd_counts_skipped_boxes():
    annotations = [
        create_box(frame_index=0),
        create_box(frame_index=1),
        create_box(frame_index=1, x=5, y=5, w=2, h=2, object_id=2),
    ]
    report = fbd(white_box_clip(n_frames=2), annotations)
    assert report.skipped == 2
    assert [row.box_index for row in report.rows] == [2]


def test_fbd_mean_is_row_average_and_order_free(rng):
    clip = Clip.from_arrays([rng.random((8, 8)) for _ in range(4)])
    annotations = [
        create_box(frame_index=0),
        create_box(frame_index=2, x=0, y=0, w=4, h=4, object_id=2),
        create_box(frame_index=3, x=4, y=1, w=3, h=5, object_id=3),
    ]
    report = fbd(clip, annotations, bins=16)
    assert report.mean_fbd == pytest.approx(sum(row.kl for row in report.rows) / 3)
    reordered = fbd(clip, list(reversed(annotations)), bins=16)
    assert reordered.mean_fbd == pytest.approx(report.mean_fbd, rel=1e-12)


def test_fbd_needs_annotations():
    with pytest.raises(EvaluationError):
        fbd(white_box_clip(), [])
    with pytest.raises(EvaluationError):
        fbd(white_box_clip(n_frames=2), [create_box(frame_index=0), create_box(frame_index=1)])
    with pytest.raises(EvaluationError):
        fbd(white_box_clip(), [create_box(frame_index=7)])


def test_psnr_values(rng):
    clean = Frame(data=np.full((8, 8), 0.5))
    assert psnr(clean, Frame(data=np.full((8, 8), 0.6))) == pytest.approx(20.0)
    assert psnr(clean, clean) == math.inf

    image = Frame(data=rng.random((16, 16)) * 0.5 + 0.25)
    values = [psnr(image, Frame.clamped(image.data + rng.normal(0, sigma, image.shape))) for sigma in (0.02, 0.05, 0.1, 0.2)]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))


def test_psnr_rejects_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        psnr(Frame.zeros(4, 4), Frame.zeros(4, 5))


def test_ssim_values(rng):
    image = Frame(data=rng.random((16, 16)))
    assert ssim(image, image) == pytest.approx(1.0)
    assert ssim(image, Frame(data=1.0 - image.data)) < 0.5

    flat = Frame(data=np.full((16, 16), 0.3))
    assert ssim(flat, flat) == pytest.approx(1.0)


def test_ssim_needs_a_full_window():
    with pytest.raises(EvaluationError):
        ssim(Frame.zeros(4, 4), Frame.zeros(4, 4))


def test_quality_report(rng):
    clean = Clip.from_arrays([rng.random((8, 8)) for _ in range(3)])
    report = quality_report(clean, clean)
    assert [row.frame_index for row in report.rows] == [0, 1, 2]
    assert report.mean_ssim == pytest.approx(1.0)
    assert report.mean_psnr == math.inf
    with pytest.raises(ShapeMismatchError):
        quality_report(clean, Clip.from_arrays([rng.random((8, 8))]))
