"""Threshold blob detector and greedy IoU matching, used as a downstream detectability proxy."""
import logging
from collections import defaultdict
from typing import List, Sequence, Tuple

import numpy as np
from scipy import ndimage

from ..errors import EvaluationError
from ..models.annotation import BoxAnnotation
from ..models.frame import Clip, Frame
from ..models.reports import DetectionReport, FrameDetection

logger = logging.getLogger(__name__)

IOU_THRESHOLD = 0.5


def detect_blobs(frame: Frame, threshold: float = 0.5, min_area: int = 1, frame_index: int = 0) -> List[BoxAnnotation]:
    """
    Tight boxes of the 4-connected components of {v >= threshold} with at
    least ``min_area`` pixels, in raster order of each component's first pixel.
    """
    if not 0.0 < threshold < 1.0:
        raise EvaluationError(f"threshold must lie strictly between 0 and 1, got {threshold}")
    labels, count = ndimage.label(frame.data >= threshold)
    if count == 0:
        return []
    areas = np.bincount(labels.ravel())
    boxes = []
    for label, region in enumerate(ndimage.find_objects(labels), start=1):
        if region is None or areas[label] < min_area:
            continue
        rows, cols = region
        boxes.append(
            BoxAnnotation(
                frame_index=frame_index,
                object_id=label,
                x=cols.start,
                y=rows.start,
                w=cols.stop - cols.start,
                h=rows.stop - rows.start,
            )
        )
    return boxes


def match_boxes(
    predictions: Sequence[BoxAnnotation], ground_truth: Sequence[BoxAnnotation], iou_threshold: float = IOU_THRESHOLD
) -> int:
    """One-to-one greedy matching by descending IoU; returns the number of matches."""
    pairs = []
    for i, pred in enumerate(predictions):
        for j, truth in enumerate(ground_truth):
            overlap = pred.iou(truth)
            if overlap >= iou_threshold:
                pairs.append((-overlap, i, j))
    pairs.sort()
    used_pred, used_truth = set(), set()
    for _, i, j in pairs:
        if i in used_pred or j in used_truth:
            continue
        used_pred.add(i)
        used_truth.add(j)
    return len(used_pred)


def detection_pr(
    predictions: Sequence[BoxAnnotation], ground_truth: Sequence[BoxAnnotation], iou_threshold: float = IOU_THRESHOLD
) -> Tuple[float, float]:
    """(precision, recall); an undefined ratio is reported as 0."""
    matched = match_boxes(predictions, ground_truth, iou_threshold)
    precision = matched / len(predictions) if predictions else 0.0
    recall = matched / len(ground_truth) if ground_truth else 0.0
    return precision, recall


def clip_detection_pr(
    clip: Clip,
    annotations: Sequence[BoxAnnotation],
    threshold: float = 0.5,
    min_area: int = 6,
    iou_threshold: float = IOU_THRESHOLD,
) -> DetectionReport:
    truth_by_frame = defaultdict(list)
    for box in annotations:
        truth_by_frame[box.frame_index].append(box)
    rows = []
    for index, frame in enumerate(clip.frames):
        predictions = detect_blobs(frame, threshold, min_area, frame_index=index)
        truth = truth_by_frame.get(index, [])
        matched = match_boxes(predictions, truth, iou_threshold)
        rows.append(
            FrameDetection(
                frame_index=index,
                true_positives=matched,
                false_positives=len(predictions) - matched,
                false_negatives=len(truth) - matched,
            )
        )
    report = DetectionReport(rows=rows)
    logger.debug("detection on %s: precision=%.4f recall=%.4f", clip.source_id or "clip", report.precision, report.recall)
    return report
