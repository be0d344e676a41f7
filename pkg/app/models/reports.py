import math
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Histogram(BaseModel):
    """
    Normalized density of pixel intensities over uniform bins on [0, 1].
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mass: np.ndarray = Field(
        json_schema_extra={"description": "Per-bin probability mass; non-negative, sums to 1."}
    )

    @field_validator("mass", mode="before")
    @classmethod
    def _check_mass(cls, value):
        mass = np.array(value, dtype=np.float64)
        if mass.ndim != 1 or mass.size < 2:
            raise ValueError("histogram needs at least 2 bins")
        if np.any(mass < 0):
            raise ValueError("histogram mass must be non-negative")
        if abs(math.fsum(mass) - 1.0) > 1e-12:
            raise ValueError(f"histogram mass sums to {math.fsum(mass)}, expected 1")
        mass.setflags(write=False)
        return mass

    @property
    def bin_count(self) -> int:
        return int(self.mass.size)


class BoxDivergence(BaseModel):
    """One FBD row: the divergence of a box against its object-free counterpart."""
    model_config = ConfigDict(frozen=True)

    box_index: int = Field(json_schema_extra={"description": "Position of the box in the annotation list."}, ge=0)
    frame_index: int = Field(json_schema_extra={"description": "Frame holding the object."}, ge=0)
    background_frame: int = Field(json_schema_extra={"description": "Object-free frame used for the comparison."}, ge=0)
    kl: float = Field(json_schema_extra={"description": "KL divergence in nats."}, ge=0)


class FbdReport(BaseModel):
    """Foreground-to-background divergence over every evaluable box."""
    model_config = ConfigDict(frozen=True)

    rows: List[BoxDivergence] = Field(json_schema_extra={"description": "Per-box divergences in annotation order."})
    skipped: int = Field(0, json_schema_extra={"description": "Boxes with no object-free frame."}, ge=0)

    @property
    def evaluated(self) -> int:
        return len(self.rows)

    @property
    def mean_fbd(self) -> float:
        return math.fsum(row.kl for row in self.rows) / len(self.rows)


class FrameQuality(BaseModel):
    model_config = ConfigDict(frozen=True)

    frame_index: int = Field(ge=0)
    psnr: float = Field(json_schema_extra={"description": "dB; +inf for identical frames."})
    ssim: float = Field(ge=-1, le=1)


class QualityReport(BaseModel):
    """Clean-reference PSNR/SSIM per frame of a synthetic clip."""
    model_config = ConfigDict(frozen=True)

    rows: List[FrameQuality]

    @property
    def mean_psnr(self) -> float:
        return math.fsum(row.psnr for row in self.rows) / len(self.rows)

    @property
    def mean_ssim(self) -> float:
        return math.fsum(row.ssim for row in self.rows) / len(self.rows)


class FrameDetection(BaseModel):
    model_config = ConfigDict(frozen=True)

    frame_index: int = Field(ge=0)
    true_positives: int = Field(ge=0)
    false_positives: int = Field(ge=0)
    false_negatives: int = Field(ge=0)


class DetectionReport(BaseModel):
    """Blob-detector precision and recall summed over a clip."""
    model_config = ConfigDict(frozen=True)

    rows: List[FrameDetection]

    @property
    def true_positives(self) -> int:
        return sum(row.true_positives for row in self.rows)

    @property
    def false_positives(self) -> int:
        return sum(row.false_positives for row in self.rows)

    @property
    def false_negatives(self) -> int:
        return sum(row.false_negatives for row in self.rows)

    @property
    def precision(self) -> float:
        predicted = self.true_positives + self.false_positives
        return self.true_positives / predicted if predicted else 0.0

    @property
    def recall(self) -> float:
        actual = self.true_positives + self.false_negatives
        return self.true_positives / actual if actual else 0.0


class EpochRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    epoch: int = Field(json_schema_extra={"description": "1-based epoch number."}, ge=1)
    loss: float = Field(json_schema_extra={"description": "Mean sample loss over the epoch."}, ge=0)
    seconds: float = Field(json_schema_extra={"description": "Wall-clock duration of the epoch."}, ge=0)

    @field_validator("loss")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("epoch loss must be finite")
        return value


class TrainReport(BaseModel):
    """Per-epoch losses and timings of one training run."""
    model_config = ConfigDict(frozen=True)

    epochs: List[EpochRecord] = Field(default_factory=list)
    checkpoint_path: Optional[Path] = Field(None, json_schema_extra={"description": "Final checkpoint location, if one was written."})
    samples_per_epoch: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _ordered(self) -> "TrainReport":
        for expected, record in enumerate(self.epochs, start=1):
            if record.epoch != expected:
                raise ValueError("epoch records must be consecutive from 1")
        return self

    @property
    def losses(self) -> List[float]:
        return [record.loss for record in self.epochs]
