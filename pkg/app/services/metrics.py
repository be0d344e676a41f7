"""Denoising quality metrics.

FBD (foreground-to-background divergence) needs only box annotations: for
every box it compares the intensity histogram inside the box with the same
region in the nearest frame where no annotated object touches it. PSNR and
SSIM need a clean reference and are only available on synthetic clips.
"""
import logging
import math
from collections import defaultdict
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import EvaluationError, ShapeMismatchError
from ..models.annotation import BoxAnnotation
from ..models.frame import Clip, Frame
from ..models.reports import BoxDivergence, FbdReport, FrameQuality, Histogram, QualityReport

logger = logging.getLogger(__name__)

SMOOTHING = 1e-8
DEFAULT_BINS = 256


def pixel_histogram(frame: Frame, box: BoxAnnotation, bins: int = DEFAULT_BINS) -> Histogram:
    """Uniform bins over [0, 1] with SMOOTHING added to every bin before normalizing."""
    if bins < 2:
        raise EvaluationError(f"histogram needs at least 2 bins, got {bins}")
    if not box.fits(frame.height, frame.width):
        raise EvaluationError(
            f"box x={box.x} y={box.y} w={box.w} h={box.h} lies outside the {frame.height}x{frame.width} frame"
        )
    region = frame.data[box.y:box.y_end, box.x:box.x_end]
    counts, _ = np.histogram(region, bins=bins, range=(0.0, 1.0))
    smoothed = counts.astype(np.float64) + SMOOTHING
    return Histogram(mass=smoothed / smoothed.sum())


def kl_divergence(p: Histogram, q: Histogram) -> float:
    """Sum of p_i ln(p_i / q_i) in nats."""
    if p.bin_count != q.bin_count:
        raise ShapeMismatchError(f"histograms differ in bin count: {p.bin_count} vs {q.bin_count}")
    value = math.fsum((p.mass * np.log(p.mass / q.mass)).tolist())
    return max(value, 0.0)


def _boxes_by_frame(annotations: Sequence[BoxAnnotation]) -> Dict[int, List[BoxAnnotation]]:
    grouped: Dict[int, List[BoxAnnotation]] = defaultdict(list)
    for annotation in annotations:
        grouped[annotation.frame_index].append(annotation)
    return grouped


def find_background_frame(
    clip: Clip | int,
    annotations: Sequence[BoxAnnotation],
    box: BoxAnnotation,
) -> Optional[int]:
    """
    Nearest frame to ``box.frame_index`` (earlier frame on ties) whose
    annotations have zero overlap with the box region. Frames without any
    annotation qualify. ``clip`` may be the clip or just its length.
    """
    length = clip if isinstance(clip, int) else len(clip)
    grouped = _boxes_by_frame(annotations)
    origin = box.frame_index
    for distance in range(1, length):
        for candidate in (origin - distance, origin + distance):
            if 0 <= candidate < length and all(
                other.overlap_area(box) == 0 for other in grouped.get(candidate, ())
            ):
                return candidate
    return None


def fbd(clip: Clip, annotations: Sequence[BoxAnnotation], bins: int = DEFAULT_BINS) -> FbdReport:
    if not annotations:
        raise EvaluationError("FBD needs at least one annotation")
    rows: List[BoxDivergence] = []
    skipped = 0
    for index, box in enumerate(annotations):
        if box.frame_index >= len(clip):
            raise EvaluationError(f"box {index} refers to frame {box.frame_index} of a {len(clip)}-frame clip")
        background = find_background_frame(clip, annotations, box)
        if background is None:
            skipped += 1
            logger.info("box %d (frame %d, id %d) has no object-free frame; skipped", index, box.frame_index, box.object_id)
            continue
        foreground_hist = pixel_histogram(clip.frames[box.frame_index], box, bins)
        background_hist = pixel_histogram(clip.frames[background], box, bins)
        rows.append(
            BoxDivergence(
                box_index=index,
                frame_index=box.frame_index,
                background_frame=background,
                kl=kl_divergence(foreground_hist, background_hist),
            )
        )
    if not rows:
        raise EvaluationError(f"none of the {len(annotations)} boxes has an object-free frame")
    return FbdReport(rows=rows, skipped=skipped)


def _check_same_shape(clean: Frame, test: Frame) -> None:
    if clean.shape != test.shape:
        raise ShapeMismatchError(f"frames differ in shape: {clean.shape} vs {test.shape}")


def psnr(clean: Frame, test: Frame) -> float:
    """10 log10(1 / MSE) with peak 1.0; identical frames give +inf."""
    _check_same_shape(clean, test)
    mse = float(np.mean((clean.data - test.data) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def ssim(clean: Frame, test: Frame, window: int = 8, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean SSIM over non-overlapping window x window tiles; a partial border is ignored."""
    _check_same_shape(clean, test)
    if clean.height < window or clean.width < window:
        raise EvaluationError(f"frame {clean.height}x{clean.width} is smaller than the {window}x{window} SSIM window")
    c1 = k1 ** 2
    c2 = k2 ** 2
    rows, cols = clean.height // window, clean.width // window

    def tiles(data: np.ndarray) -> np.ndarray:
        cropped = data[: rows * window, : cols * window]
        return cropped.reshape(rows, window, cols, window).transpose(0, 2, 1, 3).reshape(rows, cols, -1)

    x, y = tiles(clean.data), tiles(test.data)
    mu_x, mu_y = x.mean(axis=-1), y.mean(axis=-1)
    var_x = ((x - mu_x[..., None]) ** 2).mean(axis=-1)
    var_y = ((y - mu_y[..., None]) ** 2).mean(axis=-1)
    cov = ((x - mu_x[..., None]) * (y - mu_y[..., None])).mean(axis=-1)
    per_tile = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / ((mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2))
    return float(np.clip(per_tile.mean(), -1.0, 1.0))


def quality_report(clean: Clip, test: Clip) -> QualityReport:
    if len(clean) != len(test):
        raise ShapeMismatchError(f"clips differ in length: {len(clean)} vs {len(test)}")
    return QualityReport(
        rows=[
            FrameQuality(frame_index=i, psnr=psnr(c, t), ssim=ssim(c, t))
            for i, (c, t) in enumerate(zip(clean.frames, test.frames))
        ]
    )
