from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator


class PfdTarget(BaseModel):
    """
    Directionally-positive frame difference with the current frame:
    max(0, I_{t-T} - I_t) + I_t + max(0, I_{t+T} - I_t).
    The inverted form uses min in place of max, for objects darker than the background.
    """
    model_config = ConfigDict(frozen=True)

    type: Literal["PFDwT"] = Field(
        "PFDwT", json_schema_extra={"description": "Target discriminator; fixed value 'PFDwT'."}
    )
    stride: int = Field(1, json_schema_extra={"description": "Temporal stride T.", "example": 1}, ge=1)
    inverted: bool = Field(
        False, json_schema_extra={"description": "Take the minimum difference instead of the maximum."}
    )

    def reach(self) -> tuple[int, int]:
        return self.stride, self.stride


class PfdPairTarget(BaseModel):
    """
    PFD at strides T and 2T summed, minus the current frame once:
    S(t, 2T) + S(t, T) - I_t.
    """
    model_config = ConfigDict(frozen=True)

    type: Literal["PFDwT12"] = Field(
        "PFDwT12", json_schema_extra={"description": "Target discriminator; fixed value 'PFDwT12'."}
    )
    stride: int = Field(1, json_schema_extra={"description": "Shorter temporal stride T.", "example": 1}, ge=1)
    inverted: bool = Field(
        False, json_schema_extra={"description": "Take the minimum difference instead of the maximum."}
    )

    def reach(self) -> tuple[int, int]:
        return 2 * self.stride, 2 * self.stride


class RawTarget(BaseModel):
    """The current frame I_t, unchanged."""
    model_config = ConfigDict(frozen=True)

    type: Literal["Raw"] = Field("Raw", json_schema_extra={"description": "Fixed value 'Raw'."})

    def reach(self) -> tuple[int, int]:
        return 0, 0


class AbsDiffTarget(BaseModel):
    """Absolute frame difference |I_t - I_{t+T}|."""
    model_config = ConfigDict(frozen=True)

    type: Literal["AbsDiff"] = Field("AbsDiff", json_schema_extra={"description": "Fixed value 'AbsDiff'."})
    stride: int = Field(1, json_schema_extra={"description": "Temporal stride T.", "example": 1}, ge=1)

    def reach(self) -> tuple[int, int]:
        return 0, self.stride


class BackgroundSubTarget(BaseModel):
    """I_t minus the clip's temporal mean frame, clamped at zero."""
    model_config = ConfigDict(frozen=True)

    type: Literal["BackgroundSub"] = Field(
        "BackgroundSub", json_schema_extra={"description": "Fixed value 'BackgroundSub'."}
    )

    def reach(self) -> tuple[int, int]:
        return 0, 0


class SigmaTarget(BaseModel):
    """Population standard deviation over the 2N+1 frames centred on t."""
    model_config = ConfigDict(frozen=True)

    type: Literal["Sigma"] = Field("Sigma", json_schema_extra={"description": "Fixed value 'Sigma'."})
    radius: int = Field(2, json_schema_extra={"description": "Window radius N.", "example": 2}, ge=1)

    def reach(self) -> tuple[int, int]:
        return self.radius, self.radius


class SumMinusMeanTarget(BaseModel):
    """Sum of the N frames centred on t minus N times the mean frame, clamped at zero."""
    model_config = ConfigDict(frozen=True)

    type: Literal["SumMinusMean"] = Field(
        "SumMinusMean", json_schema_extra={"description": "Fixed value 'SumMinusMean'."}
    )
    window: int = Field(3, json_schema_extra={"description": "Odd window size N (3 or 5 typical).", "example": 3}, ge=3)

    @field_validator("window")
    @classmethod
    def _odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("window must be odd")
        return value

    def reach(self) -> tuple[int, int]:
        half = self.window // 2
        return half, half


TargetKind = Annotated[
    Union[
        PfdTarget,
        PfdPairTarget,
        RawTarget,
        AbsDiffTarget,
        BackgroundSubTarget,
        SigmaTarget,
        SumMinusMeanTarget,
    ],
    Field(discriminator="type"),
]


TARGET_NAMES = ("pfdwt1", "pfdwt2", "pfdwt12", "inv-pfdwt1", "raw", "absdiff", "bgsub", "sigma", "sum-mean")


def parse_target_name(name: str, window: int | None = None) -> TargetKind:
    """
    Maps a command-line target name to its TargetKind. ``window`` overrides
    N for `sigma` (radius, default 2) and `sum-mean` (size, default 3).
    """
    if name == "pfdwt1":
        return PfdTarget(stride=1)
    if name == "pfdwt2":
        return PfdTarget(stride=2)
    if name == "pfdwt12":
        return PfdPairTarget(stride=1)
    if name == "inv-pfdwt1":
        return PfdTarget(stride=1, inverted=True)
    if name == "raw":
        return RawTarget()
    if name == "absdiff":
        return AbsDiffTarget(stride=1)
    if name == "bgsub":
        return BackgroundSubTarget()
    if name == "sigma":
        return SigmaTarget(radius=window or 2)
    if name == "sum-mean":
        return SumMinusMeanTarget(window=window or 3)
    raise ValueError(f"unknown target '{name}'; valid names: {', '.join(TARGET_NAMES)}")
