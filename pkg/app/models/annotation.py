from pydantic import BaseModel, ConfigDict, Field


class BoxAnnotation(BaseModel):
    """
    An axis-aligned object box on one frame, in integer pixel units with a
    top-left origin (MOT-style `frame,id,x,y,w,h`).
    """
    model_config = ConfigDict(frozen=True)

    frame_index: int = Field(
        json_schema_extra={"description": "0-based index of the annotated frame.", "example": 0},
        ge=0,
    )
    object_id: int = Field(
        json_schema_extra={"description": "Identifier of the object; stable across frames.", "example": 1}
    )
    x: int = Field(json_schema_extra={"description": "Left column of the box.", "example": 10}, ge=0)
    y: int = Field(json_schema_extra={"description": "Top row of the box.", "example": 12}, ge=0)
    w: int = Field(json_schema_extra={"description": "Box width in pixels.", "example": 5}, ge=1)
    h: int = Field(json_schema_extra={"description": "Box height in pixels.", "example": 6}, ge=1)

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def x_end(self) -> int:
        return self.x + self.w

    @property
    def y_end(self) -> int:
        return self.y + self.h

    def fits(self, height: int, width: int) -> bool:
        return self.x_end <= width and self.y_end <= height

    def overlap_area(self, other: "BoxAnnotation") -> int:
        dx = min(self.x_end, other.x_end) - max(self.x, other.x)
        dy = min(self.y_end, other.y_end) - max(self.y, other.y)
        if dx <= 0 or dy <= 0:
            return 0
        return dx * dy

    def iou(self, other: "BoxAnnotation") -> float:
        inter = self.overlap_area(other)
        union = self.area + other.area - inter
        return inter / union

    def to_csv_row(self) -> str:
        return f"{self.frame_index},{self.object_id},{self.x},{self.y},{self.w},{self.h}"
