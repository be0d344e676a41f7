"""Synthetic low-SNR clips with known clean frames.

The scene (background field, disc paths) is drawn from the ``scene`` stream of
the config seed; per-frame noise from ``noise`` streams keyed by frame index.
Changing the noise settings therefore never changes the clean clip.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..models.annotation import BoxAnnotation
from ..models.frame import Clip, Frame
from ..models.synth_config import GaussianNoise, NoiseSpec, PinkNoise, SpeckleNoise, SynthConfig, SynthOutput
from .rng import STREAM_NOISE, STREAM_SCENE, derive_generator

logger = logging.getLogger(__name__)

BACKGROUND_COMPONENTS = 4
PINK_FLOOR = 1.0


def add_gaussian(frame: Frame, sigma: float, rng: np.random.Generator) -> Frame:
    """clamp(v + n), n ~ N(0, sigma^2) per pixel."""
    return Frame.clamped(frame.data + rng.normal(0.0, sigma, frame.shape))


def add_speckle(frame: Frame, sigma: float, rng: np.random.Generator) -> Frame:
    """clamp(v * (1 + n)), n ~ N(0, sigma^2) per pixel."""
    return Frame.clamped(frame.data * (1.0 + rng.normal(0.0, sigma, frame.shape)))


def pink_field(height: int, width: int, amplitude: float, rng: np.random.Generator) -> np.ndarray:
    """
    Zero-mean spatial noise whose Fourier amplitudes fall off as 1/max(f, 1),
    f in cycles per frame width, rescaled to standard deviation ``amplitude``.
    """
    white = rng.standard_normal((height, width))
    fy = np.fft.fftfreq(height) * width
    fx = np.fft.fftfreq(width) * width
    f = np.hypot(fy[:, None], fx[None, :])
    spectrum = np.fft.fft2(white) / np.maximum(f, PINK_FLOOR)
    spectrum[0, 0] = 0.0
    field = np.fft.ifft2(spectrum).real
    field -= field.mean()
    std = field.std()
    if std == 0.0 or amplitude == 0.0:
        return np.zeros((height, width))
    return field * (amplitude / std)


def add_pink(frame: Frame, amplitude: float, rng: np.random.Generator) -> Frame:
    return Frame.clamped(frame.data + pink_field(frame.height, frame.width, amplitude, rng))


def apply_noise(frame: Frame, noise: NoiseSpec, rng: np.random.Generator) -> Frame:
    if isinstance(noise, GaussianNoise):
        return add_gaussian(frame, noise.sigma, rng)
    if isinstance(noise, SpeckleNoise):
        return add_speckle(frame, noise.sigma, rng)
    if isinstance(noise, PinkNoise):
        return add_pink(frame, noise.amplitude, rng)
    raise TypeError(f"unsupported noise spec {noise!r}")


@dataclass(frozen=True)
class _Background:
    frequencies: np.ndarray  # (K, 2) cycles per frame along (y, x)
    phases: np.ndarray
    weights: np.ndarray
    drift: Tuple[float, float]


@dataclass(frozen=True)
class _Disc:
    start: Tuple[float, float]
    velocity: Tuple[float, float]


def _draw_background(config: SynthConfig, rng: np.random.Generator) -> _Background:
    frequencies = rng.uniform(0.5, 2.0, size=(BACKGROUND_COMPONENTS, 2)) * rng.choice((-1.0, 1.0), size=(BACKGROUND_COMPONENTS, 2))
    phases = rng.uniform(0.0, 2 * math.pi, size=BACKGROUND_COMPONENTS)
    weights = rng.uniform(0.5, 1.0, size=BACKGROUND_COMPONENTS)
    weights /= weights.sum()
    angle = rng.uniform(0.0, 2 * math.pi)
    drift = (config.background_drift_speed * math.sin(angle), config.background_drift_speed * math.cos(angle))
    return _Background(frequencies=frequencies, phases=phases, weights=weights, drift=drift)


def _draw_discs(config: SynthConfig, rng: np.random.Generator) -> List[_Disc]:
    discs = []
    for _ in range(config.n_objects):
        low_y, high_y = _travel_range(config.height, config.object_radius)
        low_x, high_x = _travel_range(config.width, config.object_radius)
        start = (rng.uniform(low_y, high_y), rng.uniform(low_x, high_x))
        angle = rng.uniform(0.0, 2 * math.pi)
        velocity = (config.object_speed * math.sin(angle), config.object_speed * math.cos(angle))
        discs.append(_Disc(start=start, velocity=velocity))
    return discs


def _travel_range(size: int, radius: float) -> Tuple[float, float]:
    return radius + 1.0, size - radius - 2.0


def reflect(position: float, low: float, high: float) -> float:
    """Folds an unbounded coordinate back into [low, high] by mirror reflection."""
    span = high - low
    if span <= 0:
        return low
    u = (position - low) % (2 * span)
    return low + (2 * span - u if u > span else u)


def _background_frame(background: _Background, config: SynthConfig, index: int) -> np.ndarray:
    rows = np.arange(config.height, dtype=np.float64)[:, None] + background.drift[0] * index
    cols = np.arange(config.width, dtype=np.float64)[None, :] + background.drift[1] * index
    field = np.zeros((config.height, config.width))
    for (fy, fx), phase, weight in zip(background.frequencies, background.phases, background.weights):
        field += weight * np.sin(2 * math.pi * (fy * rows / config.height + fx * cols / config.width) + phase)
    return config.background_level + config.background_amplitude * field


def disc_profile(height: int, width: int, center: Tuple[float, float], radius: float) -> np.ndarray:
    """Soft-edged unit disc: clip(radius + 0.5 - distance, 0, 1) per pixel."""
    rows = np.arange(height, dtype=np.float64)[:, None]
    cols = np.arange(width, dtype=np.float64)[None, :]
    distance = np.hypot(rows - center[0], cols - center[1])
    return np.clip(radius + 0.5 - distance, 0.0, 1.0)


def _support_box(profile: np.ndarray, frame_index: int, object_id: int) -> BoxAnnotation:
    rows = np.flatnonzero(profile.any(axis=1))
    cols = np.flatnonzero(profile.any(axis=0))
    return BoxAnnotation(
        frame_index=frame_index,
        object_id=object_id,
        x=int(cols[0]),
        y=int(rows[0]),
        w=int(cols[-1] - cols[0] + 1),
        h=int(rows[-1] - rows[0] + 1),
    )


def generate(config: SynthConfig) -> SynthOutput:
    scene = derive_generator(config.seed, STREAM_SCENE)
    background = _draw_background(config, scene)
    discs = _draw_discs(config, scene)
    low_y, high_y = _travel_range(config.height, config.object_radius)
    low_x, high_x = _travel_range(config.width, config.object_radius)

    clean_frames: List[Frame] = []
    noisy_frames: List[Frame] = []
    annotations: List[BoxAnnotation] = []
    for index in range(config.n_frames):
        values = _background_frame(background, config, index)
        for object_id, disc in enumerate(discs, start=1):
            center = (
                reflect(disc.start[0] + disc.velocity[0] * index, low_y, high_y),
                reflect(disc.start[1] + disc.velocity[1] * index, low_x, high_x),
            )
            profile = disc_profile(config.height, config.width, center, config.object_radius)
            values = values + config.object_contrast * profile
            annotations.append(_support_box(profile, index, object_id))
        clean = Frame.clamped(values)
        clean_frames.append(clean)
        noisy_frames.append(apply_noise(clean, config.noise, derive_generator(config.seed, STREAM_NOISE, index)))

    logger.info(
        "generated %d frames %dx%d with %d object(s), noise %s",
        config.n_frames, config.height, config.width, config.n_objects, config.noise.type,
    )
    return SynthOutput(
        clean=Clip(frames=clean_frames, fps=config.fps, source_id="synthetic-clean"),
        noisy=Clip(frames=noisy_frames, fps=config.fps, source_id="synthetic-noisy"),
        annotations=annotations,
    )
