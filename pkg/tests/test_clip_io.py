import numpy as np
import pytest
from PIL import Image

from app.errors import AnnotationFormatError, ClipFormatError
from app.models.annotation import BoxAnnotation
from app.models.frame import ChannelClip, Clip, Frame
from app.services.clip_io import (
    bind_annotations,
    load_annotations,
    load_channel_clip,
    load_clip,
    quantize,
    save_annotations,
    save_channel_clip,
    save_clip,
)
from app.services.windows import valid_windows


def create_clip(n_frames: int, height: int = 4, width: int = 5, fps: float = 25.0) -> Clip:
    frames = [np.full((height, width), (i % 256) / 255.0) for i in range(n_frames)]
    return Clip.from_arrays(frames, fps=fps, source_id="test")


def write_pgm(path, pixels: np.ndarray):
    Image.fromarray(pixels.astype(np.uint8)).save(path, format="PPM")


def test_load_three_frames_in_manifest_order(tmp_clip_dir):
    """
    Frames are loaded in the order the manifest lists them, not filename order.
    """
    for name, value in (("f1.pgm", 10), ("f2.pgm", 20), ("f3.pgm", 30)):
        write_pgm(tmp_clip_dir / name, np.full((64, 64), value))
    (tmp_clip_dir / "manifest.txt").write_text("fps=12.5\nf2.pgm\nf1.pgm\nf3.pgm\n")

    clip = load_clip(tmp_clip_dir)

    assert len(clip) == 3
    assert clip.shape == (64, 64)
    assert clip.fps == 12.5
    assert [f.data[0, 0] for f in clip.frames] == [20 / 255, 10 / 255, 30 / 255]
    assert clip.source_id == tmp_clip_dir.name


def test_byte_mapping_extremes(tmp_clip_dir):
    """
    Byte 255 maps to exactly 1.0 and byte 0 to exactly 0.0.
    """
    pixels = np.array([[0, 255], [255, 0]])
    write_pgm(tmp_clip_dir / "a.pgm", pixels)
    (tmp_clip_dir / "manifest.txt").write_text("fps=1\na.pgm\n")

    frame = load_clip(tmp_clip_dir).frames[0]
    assert frame.data[0, 1] == 1.0
    assert frame.data[0, 0] == 0.0


def test_quantization_rules():
    """
    Round half away from zero and clamp out-of-range values.
    """
    assert quantize(np.array([0.5]))[0] == 128
    assert quantize(np.array([1.3]))[0] == 255
    assert quantize(np.array([-0.2]))[0] == 0
    assert quantize(np.array([1 / 255]))[0] == 1


def test_save_load_round_trip_is_identity_on_byte_grid(tmp_clip_dir, rng):
    """
    Intensities on the 1/255 grid survive save then load exactly, and a second
    save writes identical bytes.
    """
    arrays = [rng.integers(0, 256, size=(8, 6)) / 255.0 for _ in range(4)]
    clip = Clip.from_arrays(arrays, fps=10.0)
    save_clip(clip, tmp_clip_dir)
    loaded = load_clip(tmp_clip_dir)

    assert loaded.fps == 10.0
    for original, restored in zip(clip.frames, loaded.frames):
        np.testing.assert_array_equal(original.data, restored.data)

    second = tmp_clip_dir.parent / "second"
    save_clip(loaded, second)
    for name in sorted(p.name for p in tmp_clip_dir.glob("*.pgm")):
        assert (tmp_clip_dir / name).read_bytes() == (second / name).read_bytes()


def test_saved_frames_are_binary_pgm(tmp_clip_dir):
    save_clip(create_clip(1), tmp_clip_dir)
    frame_file = next(tmp_clip_dir.glob("*.pgm"))
    assert frame_file.read_bytes().startswith(b"P5")


def test_missing_manifest(tmp_clip_dir):
    with pytest.raises(ClipFormatError, match="manifest"):
        load_clip(tmp_clip_dir)


def test_missing_listed_frame(tmp_clip_dir):
    (tmp_clip_dir / "manifest.txt").write_text("fps=1\nmissing.pgm\n")
    with pytest.raises(ClipFormatError, match="missing"):
        load_clip(tmp_clip_dir)


def test_inconsistent_dimensions(tmp_clip_dir):
    write_pgm(tmp_clip_dir / "a.pgm", np.zeros((4, 4)))
    write_pgm(tmp_clip_dir / "b.pgm", np.zeros((4, 5)))
    (tmp_clip_dir / "manifest.txt").write_text("fps=1\na.pgm\nb.pgm\n")
    with pytest.raises(ClipFormatError, match="dimensions"):
        load_clip(tmp_clip_dir)


def test_sixteen_bit_frame_is_rejected(tmp_clip_dir):
    Image.fromarray(np.full((4, 4), 1000, dtype=np.uint16)).save(tmp_clip_dir / "a.pgm", format="PPM")
    (tmp_clip_dir / "manifest.txt").write_text("fps=1\na.pgm\n")
    with pytest.raises(ClipFormatError, match="bit depth"):
        load_clip(tmp_clip_dir)


def test_channel_clip_round_trip(tmp_clip_dir, rng):
    frames = [rng.integers(0, 256, size=(4, 4, 3)) / 255.0 for _ in range(2)]
    save_channel_clip(ChannelClip(frames=frames, fps=5.0), tmp_clip_dir)
    loaded = load_channel_clip(tmp_clip_dir)
    for original, restored in zip(frames, loaded.frames):
        np.testing.assert_array_equal(original, restored)
    assert next(tmp_clip_dir.glob("*.ppm")).read_bytes().startswith(b"P6")


def test_load_annotation_line(tmp_path):
    path = tmp_path / "ann.csv"
    path.write_text("0,1,10,12,5,6\n")
    assert load_annotations(path) == [BoxAnnotation(frame_index=0, object_id=1, x=10, y=12, w=5, h=6)]


def test_empty_annotation_file(tmp_path):
    path = tmp_path / "ann.csv"
    path.write_text("")
    assert load_annotations(path) == []


def test_negative_extent_names_the_line(tmp_path):
    path = tmp_path / "ann.csv"
    path.write_text("0,1,10,12,-5,6\n")
    with pytest.raises(AnnotationFormatError, match="line 1") as excinfo:
        load_annotations(path)
    assert excinfo.value.line_number == 1


def test_malformed_line_number_counts_blank_lines(tmp_path):
    path = tmp_path / "ann.csv"
    path.write_text("0,1,1,1,2,2\n\n0,1,x,1,2,2\n")
    with pytest.raises(AnnotationFormatError, match="line 3"):
        load_annotations(path)


def test_annotations_round_trip(tmp_path):
    boxes = [
        BoxAnnotation(frame_index=2, object_id=7, x=0, y=1, w=3, h=4),
        BoxAnnotation(frame_index=0, object_id=1, x=5, y=5, w=1, h=1),
    ]
    save_annotations(boxes, tmp_path / "ann.csv")
    assert load_annotations(tmp_path / "ann.csv") == boxes


def test_bind_rejects_out_of_bounds_box():
    clip = create_clip(3, height=10, width=10)
    inside = BoxAnnotation(frame_index=2, object_id=1, x=5, y=5, w=5, h=5)
    assert bind_annotations([inside], clip) == [inside]
    with pytest.raises(AnnotationFormatError):
        bind_annotations([BoxAnnotation(frame_index=0, object_id=1, x=6, y=0, w=5, h=2)], clip)
    with pytest.raises(AnnotationFormatError):
        bind_annotations([BoxAnnotation(frame_index=3, object_id=1, x=0, y=0, w=1, h=1)], clip)


def test_frame_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        Frame(data=np.array([[0.5, 1.2]]))
    with pytest.raises(ValueError):
        Frame(data=np.array([[np.nan]]))
    assert Frame.clamped(np.array([[1.2, -0.1]])).data.tolist() == [[1.0, 0.0]]


def test_clip_rejects_mixed_shapes():
    with pytest.raises(ValueError):
        Clip.from_arrays([np.zeros((2, 2)), np.zeros((2, 3))])


@pytest.mark.parametrize(
    "n_frames, stride, expected",
    [(10, 1, list(range(2, 9))), (4, 2, []), (5, 1, [2, 3])],
)
def test_valid_windows(n_frames, stride, expected):
    windows = valid_windows(create_clip(n_frames), stride)
    assert [w.center_index for w in windows] == expected
    assert len(windows) == max(0, n_frames - 3 * stride)
    for window in windows:
        t = window.center_index
        assert window.previous2.data[0, 0] == (t - 2 * stride) / 255.0
        assert window.future.data[0, 0] == (t + stride) / 255.0


def test_valid_windows_rejects_zero_stride():
    with pytest.raises(ValueError):
        valid_windows(create_clip(5), 0)
