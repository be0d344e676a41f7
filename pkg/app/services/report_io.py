"""Line-oriented text reports.

Floats are written with 17 significant digits so a report read back gives the
same values; infinite PSNR is written as ``inf``.
"""
import csv
import io
import os
from pathlib import Path
from typing import Iterable, List

from ..models.reports import DetectionReport, EpochRecord, FbdReport, QualityReport, TrainReport


def format_float(value: float) -> str:
    return f"{value:.17g}"


def _render(header: Iterable[str], rows: Iterable[Iterable], summary: Iterable[tuple]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    for key, value in summary:
        buffer.write(f"{key}={format_float(value) if isinstance(value, float) else value}\n")
    return buffer.getvalue()


def _write(text: str, path: str | os.PathLike) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")


def render_train_report(report: TrainReport) -> str:
    return _render(
        ("epoch", "loss", "seconds"),
        ((r.epoch, r.loss, r.seconds) for r in report.epochs),
        (),
    )


def write_train_report(report: TrainReport, path: str | os.PathLike) -> None:
    _write(render_train_report(report), path)


def read_train_report(path: str | os.PathLike) -> List[EpochRecord]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        return [
            EpochRecord(epoch=int(row["epoch"]), loss=float(row["loss"]), seconds=float(row["seconds"]))
            for row in reader
        ]


def render_fbd_report(report: FbdReport) -> str:
    return _render(
        ("box_index", "frame", "kl"),
        ((r.box_index, r.frame_index, r.kl) for r in report.rows),
        (("mean_fbd", report.mean_fbd), ("evaluated", report.evaluated), ("skipped", report.skipped)),
    )


def render_quality_report(report: QualityReport) -> str:
    return _render(
        ("frame_index", "psnr", "ssim"),
        ((r.frame_index, r.psnr, r.ssim) for r in report.rows),
        (("mean_psnr", report.mean_psnr), ("mean_ssim", report.mean_ssim)),
    )


def render_detection_report(report: DetectionReport) -> str:
    return _render(
        ("frame_index", "tp", "fp", "fn"),
        ((r.frame_index, r.true_positives, r.false_positives, r.false_negatives) for r in report.rows),
        (("precision", report.precision), ("recall", report.recall)),
    )


def write_report(text: str, path: str | os.PathLike) -> None:
    _write(text, path)
