from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class ModelConfig(BaseModel):
    """
    Shape of the encoder / temporal bottleneck / decoder network.
    Channel width at level k is min(base_channels * 2**k, max_channels).
    """
    model_config = ConfigDict(frozen=True)

    base_channels: int = Field(
        8,
        json_schema_extra={"description": "Width of the full-resolution level.", "example": 8},
        ge=1,
    )
    max_channels: int = Field(
        128,
        json_schema_extra={"description": "Cap on the doubling channel schedule (full scale: 512).", "example": 128},
        ge=1,
    )
    spatial_stages: int = Field(
        5,
        json_schema_extra={"description": "Number of 2x down/up stages; 5 reduces H, W by 32.", "example": 5},
        ge=1,
    )
    bottleneck_channels: Optional[int] = Field(
        None,
        json_schema_extra={"description": "Width of the middle layer of the temporal bottleneck; defaults to the top width.", "example": 128},
        ge=1,
    )
    stride: int = Field(
        1,
        json_schema_extra={"description": "Input stride T: the network sees I_t, I_{t-T}, I_{t-2T}.", "example": 1},
        ge=1,
    )
    clamp_output: bool = Field(
        True,
        json_schema_extra={"description": "Clamp the network output to [0, 1]."},
    )
    skip_connections: bool = Field(
        True,
        json_schema_extra={"description": "Carry per-level encoder skips (and their temporal combiners) into the decoder."},
    )

    @classmethod
    def desk(cls, **overrides) -> "ModelConfig":
        return cls(**{"base_channels": 8, "max_channels": 128, "spatial_stages": 5, **overrides})

    @classmethod
    def large(cls, **overrides) -> "ModelConfig":
        return cls(**{"base_channels": 16, "max_channels": 512, "spatial_stages": 5, **overrides})

    def width(self, level: int) -> int:
        return min(self.base_channels * 2 ** level, self.max_channels)

    @property
    def widths(self) -> List[int]:
        return [self.width(level) for level in range(self.spatial_stages + 1)]

    @property
    def top_channels(self) -> int:
        return self.width(self.spatial_stages)

    @property
    def middle_channels(self) -> int:
        return self.bottleneck_channels or self.top_channels

    @property
    def divisor(self) -> int:
        return 2 ** self.spatial_stages

    def accepts(self, height: int, width: int) -> bool:
        return height % self.divisor == 0 and width % self.divisor == 0
