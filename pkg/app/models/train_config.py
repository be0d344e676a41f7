from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .model_config import ModelConfig
from .target_kind import PfdPairTarget, PfdTarget, TargetKind


class AugmentationConfig(BaseModel):
    """
    Per-sample input augmentations. Each probability defaults to 0, so a
    default config trains on unmodified frames. Augmentations touch the three
    network inputs only, never the reconstruction target.
    """
    model_config = ConfigDict(frozen=True)

    salt_pepper_prob: float = Field(
        0.0, json_schema_extra={"description": "Chance of applying salt-and-pepper noise to a sample."}, ge=0, le=1
    )
    salt_pepper_fraction: float = Field(
        0.01, json_schema_extra={"description": "Fraction of pixels flipped to 0 or 1."}, ge=0, le=1
    )
    gaussian_blur_prob: float = Field(
        0.0, json_schema_extra={"description": "Chance of a Gaussian blur."}, ge=0, le=1
    )
    gaussian_blur_sigma: float = Field(
        1.0, json_schema_extra={"description": "Blur standard deviation in pixels."}, gt=0
    )
    motion_blur_prob: float = Field(
        0.0, json_schema_extra={"description": "Chance of a horizontal motion blur."}, ge=0, le=1
    )
    motion_blur_length: int = Field(
        5, json_schema_extra={"description": "Motion blur kernel length in pixels."}, ge=1
    )
    brightness_prob: float = Field(
        0.0, json_schema_extra={"description": "Chance of a brightness shift."}, ge=0, le=1
    )
    brightness_delta: float = Field(
        0.1, json_schema_extra={"description": "Maximum absolute brightness shift."}, ge=0, le=1
    )
    erasing_prob: float = Field(
        0.0, json_schema_extra={"description": "Chance of erasing a random rectangle."}, ge=0, le=1
    )
    erasing_max_fraction: float = Field(
        0.2, json_schema_extra={"description": "Largest erased side as a fraction of the frame side."}, gt=0, le=1
    )

    @property
    def enabled(self) -> bool:
        return any(
            p > 0
            for p in (
                self.salt_pepper_prob,
                self.gaussian_blur_prob,
                self.motion_blur_prob,
                self.brightness_prob,
                self.erasing_prob,
            )
        )


class TrainConfig(BaseModel):
    """
    Everything one training run depends on. The optimizer is Adam with a
    constant learning rate.
    """
    model_config = ConfigDict(frozen=True)

    target_kind: TargetKind = Field(
        default_factory=PfdTarget,
        json_schema_extra={"description": "Reconstruction target the network regresses."},
    )
    epochs: int = Field(20, json_schema_extra={"description": "Passes over the dataset.", "example": 30}, ge=1)
    batch_size: int = Field(4, json_schema_extra={"description": "Samples per optimizer step.", "example": 4}, ge=1)
    learning_rate: float = Field(
        1e-3,
        json_schema_extra={"description": "Adam step size; 0 freezes the parameters.", "example": 1e-3},
        ge=0,
    )
    beta1: float = Field(0.9, json_schema_extra={"description": "Adam first-moment decay."}, ge=0, lt=1)
    beta2: float = Field(0.999, json_schema_extra={"description": "Adam second-moment decay."}, ge=0, lt=1)
    eps: float = Field(1e-8, json_schema_extra={"description": "Adam denominator offset."}, gt=0)
    seed: int = Field(0, json_schema_extra={"description": "Seed for init, shuffling and augmentation.", "example": 0}, ge=0)
    clips: List[Path] = Field(
        default_factory=list,
        json_schema_extra={"description": "Clip directories to train on, in dataset order.", "example": ["runs/synth/noisy"]},
    )
    model: ModelConfig = Field(
        default_factory=ModelConfig,
        json_schema_extra={"description": "Network shape."},
    )
    clamp_target: bool = Field(
        True,
        json_schema_extra={"description": "Clamp targets to [0, 1] before they are used in the loss."},
    )
    augmentation: AugmentationConfig = Field(
        default_factory=AugmentationConfig,
        json_schema_extra={"description": "Input augmentation hooks; disabled by default."},
    )
    checkpoint_path: Optional[Path] = Field(
        None,
        json_schema_extra={"description": "Where the checkpoint is written after every epoch.", "example": "runs/model.ckpt"},
    )
    report_path: Optional[Path] = Field(
        None,
        json_schema_extra={"description": "Where `epoch,loss,seconds` rows are written.", "example": "runs/train_report.csv"},
    )

    @model_validator(mode="after")
    def _pfd_stride_matches_inputs(self) -> "TrainConfig":
        # the network sees I_{t-T}, I_{t-2T}; the PFD target must use the same T
        if isinstance(self.target_kind, (PfdTarget, PfdPairTarget)) and self.target_kind.stride != self.model.stride:
            raise ValueError(
                f"target stride {self.target_kind.stride} differs from model stride {self.model.stride}"
            )
        return self
