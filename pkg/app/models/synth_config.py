from typing import Annotated, List, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .annotation import BoxAnnotation
from .frame import Clip


class GaussianNoise(BaseModel):
    """Additive i.i.d. N(0, sigma^2) noise."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    type: Literal["Gaussian"] = Field("Gaussian", json_schema_extra={"description": "Fixed value 'Gaussian'."})
    sigma: float = Field(0.1, json_schema_extra={"description": "Noise standard deviation.", "example": 0.15}, ge=0)


class SpeckleNoise(BaseModel):
    """Multiplicative noise v * (1 + n), n ~ N(0, sigma^2)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    type: Literal["Speckle"] = Field("Speckle", json_schema_extra={"description": "Fixed value 'Speckle'."})
    sigma: float = Field(0.2, json_schema_extra={"description": "Standard deviation of the multiplier noise.", "example": 0.2}, ge=0)


class PinkNoise(BaseModel):
    """Additive spatial 1/f noise field with the requested standard deviation."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    type: Literal["Pink"] = Field("Pink", json_schema_extra={"description": "Fixed value 'Pink'."})
    amplitude: float = Field(0.1, json_schema_extra={"description": "Standard deviation of the field.", "example": 0.1}, ge=0)


NoiseSpec = Annotated[
    Union[GaussianNoise, SpeckleNoise, PinkNoise],
    Field(discriminator="type"),
]


class SynthConfig(BaseModel):
    """
    Parameters of a synthetic low-SNR clip: a drifting smooth background,
    soft-edged discs on reflecting linear paths, and one noise family.
    """
    model_config = ConfigDict(frozen=True)

    height: int = Field(64, json_schema_extra={"description": "Frame height in pixels.", "example": 64}, ge=8)
    width: int = Field(64, json_schema_extra={"description": "Frame width in pixels.", "example": 64}, ge=8)
    n_frames: int = Field(200, json_schema_extra={"description": "Clip length.", "example": 200}, ge=4)
    n_objects: int = Field(3, json_schema_extra={"description": "Number of moving discs.", "example": 3}, ge=0)
    object_radius: float = Field(3.0, json_schema_extra={"description": "Disc radius in pixels.", "example": 3.0}, gt=0)
    object_speed: float = Field(1.0, json_schema_extra={"description": "Disc speed in pixels per frame.", "example": 1.0}, ge=0)
    object_contrast: float = Field(
        0.35,
        json_schema_extra={"description": "Intensity added inside a disc; negative values give dark discs.", "example": 0.35},
        ge=-1,
        le=1,
    )
    background_drift_speed: float = Field(
        0.3, json_schema_extra={"description": "Background translation in pixels per frame.", "example": 0.3}, ge=0
    )
    background_level: float = Field(
        0.4, json_schema_extra={"description": "Mean background intensity.", "example": 0.4}, ge=0, le=1
    )
    background_amplitude: float = Field(
        0.08, json_schema_extra={"description": "Peak deviation of the background field around its level.", "example": 0.08}, ge=0, le=0.5
    )
    noise: NoiseSpec = Field(
        default_factory=GaussianNoise,
        json_schema_extra={"description": "Noise family and strength applied to the clean clip."},
    )
    fps: float = Field(10.0, json_schema_extra={"description": "Frame rate written to the manifest."}, gt=0)
    seed: int = Field(0, json_schema_extra={"description": "Seed for scene layout and noise.", "example": 0}, ge=0)
    divisor: int = Field(
        32,
        json_schema_extra={"description": "Height and width must be multiples of this (2**spatial_stages of the paired model).", "example": 32},
        ge=1,
    )

    @field_validator("object_contrast")
    @classmethod
    def _nonzero_contrast(cls, value: float) -> float:
        if value == 0:
            raise ValueError("object_contrast must be non-zero")
        return value

    @model_validator(mode="after")
    def _check_geometry(self) -> "SynthConfig":
        if self.height % self.divisor or self.width % self.divisor:
            raise ValueError(
                f"frame size {self.height}x{self.width} is not divisible by {self.divisor}"
            )
        if self.n_objects and 2 * self.object_radius + 4 > min(self.height, self.width):
            raise ValueError("object_radius is too large for the frame")
        return self


class SynthOutput(BaseModel):
    """Paired clean and noisy clips with per-frame boxes of every disc."""
    model_config = ConfigDict(frozen=True)

    clean: Clip
    noisy: Clip
    annotations: List[BoxAnnotation]
