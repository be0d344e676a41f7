"""Subcommands of the ``vdenoise`` command line.

Each ``cmd_*`` takes the parsed namespace, prints its summary to stdout and
returns the process exit code. Failures are raised and mapped to exit codes
by ``app.main``.
"""
import argparse
import logging
from pathlib import Path
from typing import List, Optional

from ..errors import UsageError
from ..models.frame import Clip
from ..models.synth_config import SynthConfig
from ..models.target_kind import TARGET_NAMES, PfdPairTarget, PfdTarget, parse_target_name
from ..models.train_config import TrainConfig
from ..services import report_io
from ..services.checkpoint import load_checkpoint
from ..services.clip_io import (
    bind_annotations,
    load_annotations,
    load_clip,
    save_annotations,
    save_channel_clip,
    save_clip,
)
from ..services.compose import (
    background_subtract_clip,
    baseline_channels,
    compose_channels,
    median_filter_clip,
    perfect_denoiser_clip,
)
from ..services.detection import clip_detection_pr
from ..services.gradcheck import TOLERANCE, run_gradcheck
from ..services.metrics import DEFAULT_BINS, fbd, quality_report
from ..services.synth import generate
from ..services.targets import target_array, target_supported
from ..services.trainer import denoise_clip, train
from .config_loader import load_config_file, merge_config

logger = logging.getLogger(__name__)

NOISE_TYPES = {"gaussian": "Gaussian", "speckle": "Speckle", "pink": "Pink"}


def _noise_type(args: argparse.Namespace, file_data: dict) -> str:
    """
    Noise family from --noise, else the config file's, else inferred from which
    strength flag was given. A strength flag of another family is a usage error.
    """
    file_noise = file_data.get("noise")
    file_type = file_noise.get("type") if isinstance(file_noise, dict) else None
    if args.noise:
        family = NOISE_TYPES[args.noise]
    elif file_type:
        family = file_type
    elif args.amplitude is not None and args.sigma is None:
        family = "Pink"
    else:
        family = "Gaussian"
    if family == "Pink" and args.sigma is not None:
        raise UsageError("--sigma applies to gaussian and speckle noise; pink noise takes --amplitude")
    if family != "Pink" and args.amplitude is not None:
        raise UsageError(f"--amplitude applies to pink noise; {family.lower()} noise takes --sigma")
    return family


def _seed(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"seed must be >= 0, got {value}")
    return value


def cmd_synth(args: argparse.Namespace) -> int:
    file_data = load_config_file(args.config)
    noise_type = _noise_type(args, file_data)
    if isinstance(file_data.get("noise"), dict) and file_data["noise"].get("type") != noise_type:
        file_data = {**file_data, "noise": {}}
    overrides = {
        "height": args.height,
        "width": args.width,
        "n_frames": args.frames,
        "n_objects": args.objects,
        "object_radius": args.radius,
        "object_speed": args.speed,
        "object_contrast": args.contrast,
        "background_drift_speed": args.drift,
        "noise.type": noise_type,
        "noise.sigma": args.sigma,
        "noise.amplitude": args.amplitude,
        "fps": args.fps,
        "seed": args.seed,
        "divisor": args.divisor,
    }
    config = merge_config(SynthConfig, file_data, overrides)
    output = generate(config)
    out = Path(args.out)
    save_clip(output.clean, out / "clean")
    save_clip(output.noisy, out / "noisy")
    save_annotations(output.annotations, out / "annotations.csv")
    quality = quality_report(output.clean, output.noisy)
    print(f"frames={len(output.noisy)} boxes={len(output.annotations)} psnr_noisy_vs_clean={quality.mean_psnr:.4f}")
    return 0


def cmd_target(args: argparse.Namespace) -> int:
    clip = load_clip(args.input)
    kind = parse_target_name(args.target, args.window)
    indices = [t for t in range(len(clip)) if target_supported(kind, len(clip), t)]
    if not indices:
        raise UsageError(f"target {args.target} cannot be computed for any frame of a {len(clip)}-frame clip")
    frames = [target_array(clip, t, kind, clamp=True) for t in indices]
    save_clip(Clip.from_arrays(frames, fps=clip.fps, source_id=f"{clip.source_id}-{args.target}"), args.out)
    print(f"frames={len(frames)} first={indices[0]} last={indices[-1]}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    file_data = load_config_file(args.config)
    kind = parse_target_name(args.target, args.window) if args.target else None
    stride = args.stride
    if stride is None and isinstance(kind, (PfdTarget, PfdPairTarget)):
        stride = kind.stride
    overrides = {
        "target_kind": kind.model_dump() if kind else None,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
        "seed": args.seed,
        "clips": [str(path) for path in args.data] if args.data else None,
        "model.stride": stride,
        "model.base_channels": args.base_channels,
        "model.max_channels": args.max_channels,
        "model.spatial_stages": args.stages,
        "model.skip_connections": False if args.no_skips else None,
        "checkpoint_path": args.out,
        "report_path": args.report,
    }
    config = merge_config(TrainConfig, file_data, overrides)
    if not config.clips:
        raise UsageError("no training clips: pass --data or list 'clips' in the config file")
    if config.checkpoint_path is None:
        raise UsageError("no checkpoint destination: pass --out or set 'checkpoint_path'")
    if config.report_path is None:
        config = config.model_copy(update={"report_path": config.checkpoint_path.parent / "train_report.csv"})

    _, report = train(config)
    print(f"epochs={len(report.epochs)} final_loss={report.losses[-1]:.6g} checkpoint={config.checkpoint_path}")
    return 0


def cmd_denoise(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.ckpt)
    clip = load_clip(args.input)
    denoised = denoise_clip(checkpoint, clip, batch_size=args.batch_size)
    save_clip(denoised, args.out)
    print(f"frames={len(denoised)} out={args.out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    if args.mode == "psnr" and args.clean is None:
        raise UsageError("--mode psnr needs --clean")
    if args.mode != "psnr" and args.ann is None:
        raise UsageError(f"--mode {args.mode} needs --ann")
    clip = load_clip(args.input)
    if args.mode == "psnr":
        report = quality_report(load_clip(args.clean), clip)
        text = report_io.render_quality_report(report)
        summary = f"mean_psnr={report.mean_psnr:.4f} mean_ssim={report.mean_ssim:.4f}"
    else:
        annotations = bind_annotations(load_annotations(args.ann), clip)
        if args.mode == "fbd":
            report = fbd(clip, annotations, bins=args.bins)
            text = report_io.render_fbd_report(report)
            summary = f"mean_fbd={report_io.format_float(report.mean_fbd)} evaluated={report.evaluated} skipped={report.skipped}"
        else:
            report = clip_detection_pr(clip, annotations, threshold=args.threshold, min_area=args.min_area)
            text = report_io.render_detection_report(report)
            summary = f"precision={report.precision:.4f} recall={report.recall:.4f}"
    report_io.write_report(text, args.out)
    print(summary)
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    results = run_gradcheck(seed=args.seed, corrupt=args.corrupt_gradient)
    for result in results:
        status = "ok" if result.passed else "FAIL"
        print(f"op={result.name} max_rel_error={result.max_relative_error:.3e} checked={result.checked} {status}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"gradcheck failed (tolerance {TOLERANCE:g}): {', '.join(failed)}")
        return 1
    print(f"gradcheck passed: {len(results)} checks within {TOLERANCE:g}")
    return 0


def _compare_row(label: str, clip: Clip, annotations, clean: Optional[Clip], bins: int) -> List[str]:
    cells = [label, report_io.format_float(fbd(clip, annotations, bins=bins).mean_fbd)]
    if clean is not None:
        quality = quality_report(clean, clip)
        cells += [f"{quality.mean_psnr:.4f}", f"{quality.mean_ssim:.4f}"]
    return cells


def cmd_compare(args: argparse.Namespace) -> int:
    raw = load_clip(args.raw)
    denoised = load_clip(args.denoised)
    annotations = bind_annotations(load_annotations(args.ann), raw)
    clean = load_clip(args.clean) if args.clean else None

    header = ["clip", "fbd"] + (["psnr", "ssim"] if clean is not None else [])
    rows = [
        _compare_row("raw", raw, annotations, clean, args.bins),
        _compare_row("denoised", denoised, annotations, clean, args.bins),
    ]
    if args.perfect:
        rows.append(_compare_row("perfect", perfect_denoiser_clip(raw, annotations), annotations, clean, args.bins))
    widths = [max(len(row[i]) for row in [header, *rows]) for i in range(len(header))]
    for row in [header, *rows]:
        print("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
    return 0


def cmd_compose(args: argparse.Namespace) -> int:
    primary = load_clip(args.input)
    raw = load_clip(args.raw) if args.raw else primary
    if args.aux == "baseline":
        composed = baseline_channels(raw)
    else:
        aux = background_subtract_clip(raw) if args.aux == "bgsub" else median_filter_clip(raw, args.median_kernel)
        composed = compose_channels(primary, aux)
    save_channel_clip(composed, args.out)
    print(f"frames={len(composed)} aux={args.aux} out={args.out}")
    return 0


def add_subcommands(subparsers) -> None:
    synth = subparsers.add_parser("synth", help="Generate a synthetic clean/noisy clip pair with annotations.")
    synth.add_argument("--config", help="JSON SynthConfig; flags override it.")
    synth.add_argument("--out", required=True, help="Output directory (clean/, noisy/, annotations.csv).")
    synth.add_argument("--height", type=int)
    synth.add_argument("--width", type=int)
    synth.add_argument("--frames", type=int)
    synth.add_argument("--objects", type=int)
    synth.add_argument("--radius", type=float)
    synth.add_argument("--speed", type=float)
    synth.add_argument("--contrast", type=float)
    synth.add_argument("--drift", type=float)
    synth.add_argument("--noise", choices=sorted(NOISE_TYPES))
    synth.add_argument("--sigma", type=float, help="Gaussian/speckle standard deviation.")
    synth.add_argument("--amplitude", type=float, help="Pink noise standard deviation.")
    synth.add_argument("--fps", type=float)
    synth.add_argument("--seed", type=_seed)
    synth.add_argument("--divisor", type=int, help="Required divisor of height and width.")
    synth.set_defaults(handler=cmd_synth)

    target = subparsers.add_parser("target", help="Write the reconstruction target of every computable frame.")
    target.add_argument("--in", dest="input", required=True)
    target.add_argument("--target", required=True, choices=TARGET_NAMES)
    target.add_argument("--window", type=int, help="Radius for sigma, window size for sum-mean.")
    target.add_argument("--out", required=True)
    target.set_defaults(handler=cmd_target)

    trainer = subparsers.add_parser("train", help="Train the denoiser on one or more clips.")
    trainer.add_argument("--config", help="JSON TrainConfig; flags override it.")
    trainer.add_argument("--data", nargs="+", help="Clip directories.")
    trainer.add_argument("--target", choices=TARGET_NAMES)
    trainer.add_argument("--window", type=int, help="Radius for sigma, window size for sum-mean.")
    trainer.add_argument("--epochs", type=int)
    trainer.add_argument("--batch-size", type=int)
    trainer.add_argument("--lr", type=float)
    trainer.add_argument("--seed", type=_seed)
    trainer.add_argument("--stride", type=int)
    trainer.add_argument("--base-channels", type=int)
    trainer.add_argument("--max-channels", type=int)
    trainer.add_argument("--stages", type=int)
    trainer.add_argument("--no-skips", action="store_true", help="Train the network without encoder skip connections.")
    trainer.add_argument("--out", help="Checkpoint path.")
    trainer.add_argument("--report", help="Report path (default: train_report.csv next to the checkpoint).")
    trainer.set_defaults(handler=cmd_train)

    denoise = subparsers.add_parser("denoise", help="Denoise every frame of a clip.")
    denoise.add_argument("--ckpt", required=True)
    denoise.add_argument("--in", dest="input", required=True)
    denoise.add_argument("--out", required=True)
    denoise.add_argument("--batch-size", type=int, default=8)
    denoise.set_defaults(handler=cmd_denoise)

    evaluate = subparsers.add_parser("eval", help="Compute FBD, PSNR/SSIM or detection precision/recall.")
    evaluate.add_argument("--mode", required=True, choices=("fbd", "psnr", "detect"))
    evaluate.add_argument("--in", dest="input", required=True)
    evaluate.add_argument("--clean")
    evaluate.add_argument("--ann")
    evaluate.add_argument("--out", required=True, help="Report file.")
    evaluate.add_argument("--bins", type=int, default=DEFAULT_BINS)
    evaluate.add_argument("--threshold", type=float, default=0.5)
    evaluate.add_argument("--min-area", type=int, default=6)
    evaluate.set_defaults(handler=cmd_eval)

    gradcheck = subparsers.add_parser("gradcheck", help="Finite-difference check of every differentiable op.")
    gradcheck.add_argument("--seed", type=_seed, default=0)
    gradcheck.add_argument("--corrupt-gradient", action="store_true", help=argparse.SUPPRESS)
    gradcheck.set_defaults(handler=cmd_gradcheck)

    compare = subparsers.add_parser("compare", help="Tabulate FBD (and PSNR/SSIM) of raw against denoised.")
    compare.add_argument("--raw", required=True)
    compare.add_argument("--denoised", required=True)
    compare.add_argument("--ann", required=True)
    compare.add_argument("--clean")
    compare.add_argument("--perfect", action="store_true", help="Add a row for the ideal box-mask output.")
    compare.add_argument("--bins", type=int, default=DEFAULT_BINS)
    compare.set_defaults(handler=cmd_compare)

    compose = subparsers.add_parser("compose", help="Write three-channel P6 frames for downstream models.")
    compose.add_argument("--in", dest="input", required=True, help="Primary (usually denoised) clip.")
    compose.add_argument("--raw", help="Clip the auxiliary channel is derived from (default: --in).")
    compose.add_argument("--aux", choices=("bgsub", "median", "baseline"), default="bgsub")
    compose.add_argument("--median-kernel", type=int, default=3)
    compose.add_argument("--out", required=True)
    compose.set_defaults(handler=cmd_compose)
