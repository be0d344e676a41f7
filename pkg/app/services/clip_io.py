"""On-disk formats for clips and annotations.

A clip directory holds ``manifest.txt`` (first line ``fps=<float>``, then one
frame filename per line) and one 8-bit binary PGM (P5) per frame. Annotations
are MOT-style CSV lines ``frame,id,x,y,w,h``.
"""
import csv
import logging
import os
from pathlib import Path
from typing import Iterable, List

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import AnnotationFormatError, ClipFormatError
from ..models.annotation import BoxAnnotation
from ..models.frame import ChannelClip, Clip, Frame

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.txt"


def quantize(values: np.ndarray) -> np.ndarray:
    """Maps intensities to bytes: round(clamp(v, 0, 1) * 255), half away from zero."""
    scaled = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def dequantize(pixels: np.ndarray) -> np.ndarray:
    return pixels.astype(np.float64) / 255.0


def _read_manifest(directory: Path) -> tuple[float, List[str]]:
    manifest = directory / MANIFEST_NAME
    if not manifest.is_file():
        raise ClipFormatError(f"missing {MANIFEST_NAME} in {directory}")
    lines = [line.strip() for line in manifest.read_text(encoding="utf-8").splitlines()]
    lines = [line for line in lines if line]
    if not lines or not lines[0].startswith("fps="):
        raise ClipFormatError(f"{manifest}: first line must be 'fps=<float>'")
    try:
        fps = float(lines[0][len("fps="):])
    except ValueError as exc:
        raise ClipFormatError(f"{manifest}: bad fps value '{lines[0]}'") from exc
    names = lines[1:]
    if not names:
        raise ClipFormatError(f"{manifest}: lists no frames")
    return fps, names


def _write_manifest(directory: Path, fps: float, names: Iterable[str]) -> None:
    body = "\n".join([f"fps={fps!r}", *names]) + "\n"
    (directory / MANIFEST_NAME).write_text(body, encoding="utf-8")


def _read_image(path: Path, mode: str) -> np.ndarray:
    if not path.is_file():
        raise ClipFormatError(f"listed frame file {path} is missing")
    try:
        with Image.open(path) as image:
            if image.mode != mode:
                raise ClipFormatError(
                    f"{path}: unsupported bit depth or channel layout (mode {image.mode}, expected {mode})"
                )
            return np.asarray(image, dtype=np.uint8).copy()
    except UnidentifiedImageError as exc:
        raise ClipFormatError(f"{path}: not a portable anymap") from exc


def load_clip(directory_path: str | os.PathLike) -> Clip:
    """
    Loads frames in manifest order. Byte p maps to intensity p / 255 exactly.
    """
    directory = Path(directory_path)
    fps, names = _read_manifest(directory)
    frames: List[Frame] = []
    shape = None
    for name in names:
        pixels = _read_image(directory / name, "L")
        if shape is None:
            shape = pixels.shape
        elif pixels.shape != shape:
            raise ClipFormatError(
                f"{directory / name}: dimensions {pixels.shape} differ from {shape}"
            )
        frames.append(Frame(data=dequantize(pixels)))
    logger.debug("loaded %d frames of %s from %s", len(frames), shape, directory)
    return Clip(frames=frames, fps=fps, source_id=directory.name)


def save_clip(clip: Clip, directory_path: str | os.PathLike) -> None:
    """Writes each frame as an 8-bit P5 PGM and the manifest listing them."""
    directory = Path(directory_path)
    directory.mkdir(parents=True, exist_ok=True)
    digits = max(5, len(str(len(clip))))
    names = []
    for index, frame in enumerate(clip.frames):
        name = f"frame_{index:0{digits}d}.pgm"
        Image.fromarray(quantize(frame.data)).save(directory / name, format="PPM")
        names.append(name)
    _write_manifest(directory, clip.fps, names)
    logger.debug("saved %d frames to %s", len(clip), directory)


def save_channel_clip(clip: ChannelClip, directory_path: str | os.PathLike) -> None:
    """Writes each three-channel frame as an 8-bit P6 pixmap plus a manifest."""
    directory = Path(directory_path)
    directory.mkdir(parents=True, exist_ok=True)
    digits = max(5, len(str(len(clip))))
    names = []
    for index, frame in enumerate(clip.frames):
        name = f"frame_{index:0{digits}d}.ppm"
        Image.fromarray(quantize(frame)).save(directory / name, format="PPM")
        names.append(name)
    _write_manifest(directory, clip.fps, names)


def load_channel_clip(directory_path: str | os.PathLike) -> ChannelClip:
    directory = Path(directory_path)
    fps, names = _read_manifest(directory)
    frames = []
    for name in names:
        pixels = _read_image(directory / name, "RGB")
        if frames and pixels.shape != frames[0].shape:
            raise ClipFormatError(f"{directory / name}: inconsistent dimensions")
        frames.append(dequantize(pixels))
    return ChannelClip(frames=frames, fps=fps, source_id=directory.name)


def load_annotations(file_path: str | os.PathLike) -> List[BoxAnnotation]:
    """
    Parses `frame,id,x,y,w,h` lines in file order. Blank lines and lines
    starting with '#' are ignored; any other malformed line raises with its
    1-based line number.
    """
    path = Path(file_path)
    if not path.is_file():
        raise AnnotationFormatError(f"annotation file {path} does not exist")
    boxes: List[BoxAnnotation] = []
    with path.open(newline="", encoding="utf-8") as handle:
        for line_number, row in enumerate(csv.reader(handle), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 6:
                raise AnnotationFormatError(f"expected 6 fields, got {len(row)}", line_number)
            try:
                frame, object_id, x, y, w, h = (int(field.strip()) for field in row)
            except ValueError as exc:
                raise AnnotationFormatError(f"non-integer field in {row}", line_number) from exc
            if w < 1 or h < 1:
                raise AnnotationFormatError(f"box extent must be positive, got w={w} h={h}", line_number)
            if frame < 0 or x < 0 or y < 0:
                raise AnnotationFormatError("frame index and coordinates must be non-negative", line_number)
            boxes.append(BoxAnnotation(frame_index=frame, object_id=object_id, x=x, y=y, w=w, h=h))
    return boxes


def save_annotations(annotations: Iterable[BoxAnnotation], file_path: str | os.PathLike) -> None:
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [box.to_csv_row() for box in annotations]
    path.write_text("".join(row + "\n" for row in rows), encoding="utf-8")


def bind_annotations(annotations: Iterable[BoxAnnotation], clip: Clip) -> List[BoxAnnotation]:
    """Checks every box against the clip's frame count and frame bounds."""
    bound = []
    for index, box in enumerate(annotations):
        if box.frame_index >= len(clip):
            raise AnnotationFormatError(
                f"box {index} refers to frame {box.frame_index} but the clip has {len(clip)} frames"
            )
        if not box.fits(clip.height, clip.width):
            raise AnnotationFormatError(
                f"box {index} ({box.x},{box.y},{box.w},{box.h}) leaves the {clip.width}x{clip.height} frame"
            )
        bound.append(box)
    return bound
