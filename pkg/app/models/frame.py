from functools import cached_property
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Frame(BaseModel):
    """
    A single grayscale frame: an H×W grid of intensities in [0, 1].
    The backing array is float64 and read-only once validated.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray = Field(
        json_schema_extra={"description": "Row-major H×W intensity grid, every value within [0, 1]."}
    )

    @field_validator("data", mode="before")
    @classmethod
    def _coerce_data(cls, value):
        array = np.array(value, dtype=np.float64)
        if array.ndim != 2:
            raise ValueError(f"frame data must be 2-D, got shape {array.shape}")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise ValueError("frame must be at least 1×1")
        if not np.all(np.isfinite(array)):
            raise ValueError("frame data contains non-finite values")
        if array.min() < 0.0 or array.max() > 1.0:
            raise ValueError(
                f"frame intensities must lie in [0, 1], got [{array.min()}, {array.max()}]"
            )
        array.setflags(write=False)
        return array

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    @classmethod
    def clamped(cls, values: np.ndarray) -> "Frame":
        """Builds a frame from arbitrary reals by clamping them to [0, 1]."""
        return cls(data=np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0))

    @classmethod
    def zeros(cls, height: int, width: int) -> "Frame":
        return cls(data=np.zeros((height, width)))


class Clip(BaseModel):
    """
    An ordered sequence of equally sized frames plus the manifest metadata.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    frames: List[Frame] = Field(
        json_schema_extra={"description": "Frames in temporal order; all share one height and width."}
    )
    fps: float = Field(
        25.0,
        json_schema_extra={"description": "Frames per second (metadata only).", "example": 10.0},
        gt=0,
    )
    source_id: str = Field(
        "",
        json_schema_extra={"description": "Free-text label of the clip's origin.", "example": "synthetic-noisy"},
    )

    @model_validator(mode="after")
    def _check_frames(self) -> "Clip":
        if not self.frames:
            raise ValueError("a clip needs at least one frame")
        shape = self.frames[0].shape
        for index, frame in enumerate(self.frames):
            if frame.shape != shape:
                raise ValueError(
                    f"frame {index} has shape {frame.shape}, expected {shape}"
                )
        return self

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames[0].shape

    @cached_property
    def mean_data(self) -> np.ndarray:
        """Per-pixel temporal mean, accumulated in float64 in frame order. Computed once per clip."""
        mean = np.zeros(self.shape, dtype=np.float64)
        for k, frame in enumerate(self.frames, start=1):
            mean += (frame.data - mean) / k
        mean.setflags(write=False)
        return mean

    def stack(self) -> np.ndarray:
        """Returns the frames as a (T, H, W) float64 array."""
        return np.stack([frame.data for frame in self.frames])

    @classmethod
    def from_arrays(cls, arrays, fps: float = 25.0, source_id: str = "") -> "Clip":
        return cls(frames=[Frame(data=a) for a in arrays], fps=fps, source_id=source_id)


class FrameWindow(BaseModel):
    """
    The four frames one training sample needs: network inputs
    (I_t, I_{t-T}, I_{t-2T}) and the future frame I_{t+T} used only by the target.
    """
    model_config = ConfigDict(frozen=True)

    center_index: int = Field(json_schema_extra={"description": "Index t of the current frame."}, ge=0)
    stride: int = Field(json_schema_extra={"description": "Temporal stride T."}, ge=1)
    current: Frame = Field(json_schema_extra={"description": "I_t."})
    previous: Frame = Field(json_schema_extra={"description": "I_{t-T}."})
    previous2: Frame = Field(json_schema_extra={"description": "I_{t-2T}."})
    future: Frame = Field(json_schema_extra={"description": "I_{t+T}; never fed to the network."})

    @model_validator(mode="after")
    def _check_window(self) -> "FrameWindow":
        if self.center_index - 2 * self.stride < 0:
            raise ValueError("window needs t - 2T >= 0")
        return self

    @property
    def inputs(self) -> tuple[Frame, Frame, Frame]:
        return self.current, self.previous, self.previous2


class ChannelClip(BaseModel):
    """
    A clip of three-channel frames, each stored as an (H, W, 3) array in [0, 1].
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    frames: List[np.ndarray] = Field(
        json_schema_extra={"description": "Per-frame (H, W, 3) float64 arrays, channel-last."}
    )
    fps: float = Field(25.0, json_schema_extra={"description": "Frames per second."}, gt=0)
    source_id: str = Field("", json_schema_extra={"description": "Free-text label."})

    @model_validator(mode="after")
    def _check_frames(self) -> "ChannelClip":
        if not self.frames:
            raise ValueError("a channel clip needs at least one frame")
        shape = self.frames[0].shape
        for index, frame in enumerate(self.frames):
            if frame.ndim != 3 or frame.shape[2] != 3:
                raise ValueError(f"frame {index} must be (H, W, 3), got {frame.shape}")
            if frame.shape != shape:
                raise ValueError(f"frame {index} has shape {frame.shape}, expected {shape}")
            if frame.min() < 0.0 or frame.max() > 1.0:
                raise ValueError(f"frame {index} leaves [0, 1]")
        return self

    def __len__(self) -> int:
        return len(self.frames)
