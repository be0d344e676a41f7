"""Optional input augmentations for denoiser training.

Each augmentation fires with its own probability; once chosen, it is applied
with one set of parameters to all three input frames of the sample (salt and
pepper draws a fresh mask per frame). The reconstruction target is never
augmented.
"""
from typing import List, Sequence

import numpy as np
from scipy import ndimage

from ..models.train_config import AugmentationConfig


def salt_and_pepper(frame: np.ndarray, fraction: float, rng: np.random.Generator) -> np.ndarray:
    hit = rng.random(frame.shape) < fraction
    salt = rng.random(frame.shape) < 0.5
    return np.where(hit, salt.astype(frame.dtype), frame)


def gaussian_blur(frame: np.ndarray, sigma: float) -> np.ndarray:
    return ndimage.gaussian_filter(frame, sigma=sigma, mode="nearest")


def motion_blur(frame: np.ndarray, length: int) -> np.ndarray:
    return ndimage.uniform_filter1d(frame, size=length, axis=1, mode="nearest")


def erase(frame: np.ndarray, top: int, left: int, height: int, width: int) -> np.ndarray:
    erased = frame.copy()
    erased[top:top + height, left:left + width] = 0.0
    return erased


def augment_inputs(
    frames: Sequence[np.ndarray], config: AugmentationConfig, rng: np.random.Generator
) -> List[np.ndarray]:
    out = [np.array(f, dtype=np.float64) for f in frames]
    if not config.enabled:
        return out
    height, width = out[0].shape

    if rng.random() < config.salt_pepper_prob:
        out = [salt_and_pepper(f, config.salt_pepper_fraction, rng) for f in out]
    if rng.random() < config.gaussian_blur_prob:
        out = [gaussian_blur(f, config.gaussian_blur_sigma) for f in out]
    if rng.random() < config.motion_blur_prob:
        out = [motion_blur(f, config.motion_blur_length) for f in out]
    if rng.random() < config.brightness_prob:
        delta = rng.uniform(-config.brightness_delta, config.brightness_delta)
        out = [f + delta for f in out]
    if rng.random() < config.erasing_prob:
        erase_h = int(rng.integers(1, max(2, int(height * config.erasing_max_fraction) + 1)))
        erase_w = int(rng.integers(1, max(2, int(width * config.erasing_max_fraction) + 1)))
        top = int(rng.integers(0, height - erase_h + 1))
        left = int(rng.integers(0, width - erase_w + 1))
        out = [erase(f, top, left, erase_h, erase_w) for f in out]

    return [np.clip(f, 0.0, 1.0) for f in out]
