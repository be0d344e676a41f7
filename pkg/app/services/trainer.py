import logging
import math
import time
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import EmptyDatasetError, ShapeMismatchError, TrainingDivergedError
from ..models.frame import Clip, FrameWindow
from ..models.reports import EpochRecord, TrainReport
from ..models.train_config import TrainConfig
from .augment import augment_inputs
from .autodiff import Tape, backward, mse_loss
from .checkpoint import Checkpoint, save_checkpoint
from .clip_io import load_clip
from .network import ModelParams, forward, init_model, predict_batch
from .optimizer import AdamState, adam_step
from .report_io import write_train_report
from .rng import STREAM_AUGMENT, STREAM_SHUFFLE, derive_generator
from .targets import target_array, target_supported
from .windows import valid_windows

logger = logging.getLogger(__name__)

Sample = Tuple[int, FrameWindow]


def build_dataset(clips: Sequence[Clip], stride: int) -> List[Sample]:
    """Every valid window of every clip, in clip order then ascending t."""
    samples: List[Sample] = []
    for clip_id, clip in enumerate(clips):
        samples.extend((clip_id, window) for window in valid_windows(clip, stride))
    return samples


def shuffled_order(count: int, seed: int, epoch: int) -> List[int]:
    """Fisher-Yates permutation of range(count) drawn from the (seed, epoch) shuffle stream."""
    rng = derive_generator(seed, STREAM_SHUFFLE, epoch)
    order = list(range(count))
    for i in range(count - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return order


def _training_samples(clips: Sequence[Clip], config: TrainConfig) -> List[Sample]:
    samples = build_dataset(clips, config.model.stride)
    usable = [
        (clip_id, window)
        for clip_id, window in samples
        if target_supported(config.target_kind, len(clips[clip_id]), window.center_index)
    ]
    if len(usable) < len(samples):
        logger.warning(
            "dropped %d windows whose %s target reaches outside the clip",
            len(samples) - len(usable),
            config.target_kind.type,
        )
    if not usable:
        raise EmptyDatasetError(
            f"no training samples: {len(clips)} clip(s) yield no window for stride {config.model.stride} "
            f"and target {config.target_kind.type}"
        )
    return usable


def _check_dimensions(clips: Sequence[Clip], config: TrainConfig) -> None:
    for clip in clips:
        if not config.model.accepts(clip.height, clip.width):
            raise ShapeMismatchError(
                f"clip {clip.source_id or '?'} is {clip.height}x{clip.width}; "
                f"dimensions must be multiples of {config.model.divisor}"
            )


def _batch_arrays(
    batch: Sequence[int],
    samples: Sequence[Sample],
    clips: Sequence[Clip],
    config: TrainConfig,
    epoch: int,
) -> Tuple[List[np.ndarray], List[np.ndarray], List[np.ndarray], np.ndarray]:
    currents, previous, previous2, targets = [], [], [], []
    for index in batch:
        clip_id, window = samples[index]
        inputs = [frame.data for frame in window.inputs]
        if config.augmentation.enabled:
            rng = derive_generator(config.seed, STREAM_AUGMENT, epoch, index)
            inputs = augment_inputs(inputs, config.augmentation, rng)
        currents.append(inputs[0])
        previous.append(inputs[1])
        previous2.append(inputs[2])
        targets.append(
            target_array(clips[clip_id], window.center_index, config.target_kind, clamp=config.clamp_target)
        )
    target = np.stack(targets)[:, None, :, :].astype(np.float32)
    return currents, previous, previous2, target


def train(
    config: TrainConfig,
    clips: Optional[Sequence[Clip]] = None,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> Tuple[Checkpoint, TrainReport]:
    """
    Runs ``config.epochs`` passes of Adam over a seeded shuffle of every
    usable window. ``clips`` overrides ``config.clips`` (already loaded clips).
    The checkpoint and the report are rewritten after every epoch when
    their paths are set.
    """
    if clips is None:
        clips = [load_clip(path) for path in config.clips]
    clips = list(clips)
    _check_dimensions(clips, config)
    samples = _training_samples(clips, config)

    params = init_model(config.model, config.seed)
    tensors = params.parameters()
    state = AdamState.for_params([t.data for t in tensors])
    records: List[EpochRecord] = []
    checkpoint = Checkpoint(params=params, step=0, seed=config.seed)
    logger.info(
        "training on %d samples from %d clip(s), %d epochs, batch %d",
        len(samples), len(clips), config.epochs, config.batch_size,
    )

    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = shuffled_order(len(samples), config.seed, epoch)
        weighted_losses = []
        for offset in range(0, len(order), config.batch_size):
            batch = order[offset:offset + config.batch_size]
            currents, previous, previous2, target = _batch_arrays(batch, samples, clips, config, epoch)

            tape = Tape()
            # raw head output; clamp01 has no gradient outside (0, 1)
            prediction = forward(params, currents, previous, previous2, tape=tape, clamp=False)
            loss = mse_loss(prediction, target, tape=tape)
            value = float(loss.data)
            if not math.isfinite(value):
                raise TrainingDivergedError(
                    f"loss became {value} at epoch {epoch}, step {state.step + 1} "
                    f"(learning rate {config.learning_rate})"
                )
            params.zero_grad()
            backward(tape, loss)
            adam_step(
                [t.data for t in tensors],
                [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors],
                state,
                lr=config.learning_rate,
                beta1=config.beta1,
                beta2=config.beta2,
                eps=config.eps,
            )
            weighted_losses.append(value * len(batch))

        record = EpochRecord(
            epoch=epoch,
            loss=math.fsum(weighted_losses) / len(samples),
            seconds=time.perf_counter() - started,
        )
        records.append(record)
        logger.info("epoch=%d loss=%.6g seconds=%.2f", record.epoch, record.loss, record.seconds)
        if on_epoch is not None:
            on_epoch(record)

        checkpoint = Checkpoint(params=params, step=state.step, seed=config.seed)
        if config.checkpoint_path is not None:
            save_checkpoint(checkpoint, config.checkpoint_path)
        report = TrainReport(
            epochs=records, checkpoint_path=config.checkpoint_path, samples_per_epoch=len(samples)
        )
        if config.report_path is not None:
            write_train_report(report, config.report_path)

    return checkpoint, report


def denoise_clip(checkpoint: Checkpoint | ModelParams, clip: Clip, batch_size: int = 8) -> Clip:
    """
    One output frame per input frame. Past frames before the clip start are
    replaced by frame 0, so frame t uses (I_t, I_max(0,t-T), I_max(0,t-2T)).
    """
    params = checkpoint.params if isinstance(checkpoint, Checkpoint) else checkpoint
    config = params.config
    if not config.accepts(clip.height, clip.width):
        raise ShapeMismatchError(
            f"clip is {clip.height}x{clip.width} but the checkpoint's model needs multiples of {config.divisor}"
        )
    stride = config.stride
    triples = [
        (clip.frames[t], clip.frames[max(0, t - stride)], clip.frames[max(0, t - 2 * stride)])
        for t in range(len(clip))
    ]
    frames = []
    for offset in range(0, len(triples), batch_size):
        frames.extend(predict_batch(params, triples[offset:offset + batch_size]))
    logger.debug("denoised %d frames of %s", len(frames), clip.source_id or "clip")
    return Clip(frames=frames, fps=clip.fps, source_id=f"{clip.source_id}-denoised" if clip.source_id else "denoised")
