"""Seeded counter-based random streams.

Every random draw in the toolkit comes from a Philox generator keyed by
``(seed, stream, *counters)``, so each consumer (weight init, shuffling,
augmentation, scene layout, per-frame noise) gets an independent, reproducible
sequence that does not shift when another consumer draws more numbers.
"""
import zlib

import numpy as np

STREAM_INIT = "init"
STREAM_SHUFFLE = "shuffle"
STREAM_AUGMENT = "augment"
STREAM_SCENE = "scene"
STREAM_NOISE = "noise"
STREAM_GRADCHECK = "gradcheck"


def _stream_id(stream: str) -> int:
    return zlib.crc32(stream.encode("utf-8"))


def derive_generator(seed: int, stream: str, *counters: int) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFF, int(seed) >> 32, _stream_id(stream)]
    entropy.extend(int(c) for c in counters)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
