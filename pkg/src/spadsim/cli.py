"""
Command line
------------
``spadsim <command>`` with the subcommands ``simulate``, ``dataset``, ``metrics``,
``recover`` and ``autoexpose``.

Exit codes: 0 success, 1 internal error, 2 bad input or usage, 3 bad
configuration.
"""

import argparse
import glob
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, resolve_run_config
from .constants import JOBS_ENV_VAR, TOOLKIT_VERSION
from .dataset import (
    build_paired_dataset,
    ingest_scene_dir,
    plan_sample_count,
    verify_manifest,
)
from .errors import InputError, SpadSimError
from .flux_recover import (
    BitStack,
    estimate_flux_from_bits,
    export_flux_png,
    export_flux_raster,
)
from .frames import (
    auto_exposure,
    frame_filename,
    intensity_to_flux,
    iter_burst,
    mean_bit_density,
    synthesize_count_frame,
)
from .io.io import read_rgb, save, write_png
from .metrics import evaluate_dirs
from .photon_model import expected_count
from .utils.logger_config import add_file_handler, set_log_level

logger = logging.getLogger(__name__)


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    run = parser.add_argument_group("run")
    run.add_argument("--config", type=Path, help="TOML configuration file")
    run.add_argument("--seed", type=int, help="master seed (default 0)")
    run.add_argument(
        "--jobs", type=int, help=f"worker threads (default ${JOBS_ENV_VAR} or 1)"
    )
    run.add_argument("--out", type=Path, help="output directory")
    run.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")
    run.add_argument("-q", "--quiet", action="store_true", help="only log warnings")

    sensor = parser.add_argument_group("sensor")
    sensor.add_argument(
        "--efficiency", type=float, dest="q", help="detection efficiency q"
    )
    sensor.add_argument("--tau-d", type=float, help="dead time in seconds")
    sensor.add_argument("--exposure", type=float, help="exposure time T in seconds")
    sensor.add_argument("--phi-max", type=float, help="flux at intensity 255")
    sensor.add_argument(
        "--linearize-srgb",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="decode sRGB before mapping to flux",
    )
    sensor.add_argument(
        "--mode", help="EXACT_RENEWAL (default) or GAUSSIAN_APPROX sampling"
    )
    sensor.add_argument(
        "--iteration-cap",
        type=int,
        help="maximum detections simulated per pixel in exact count sampling",
    )
    return parser


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of the ``spadsim`` command."""
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="spadsim",
        description="Single-photon camera simulation and dataset toolkit.",
    )
    parser.add_argument("--version", action="version", version=TOOLKIT_VERSION)
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser(
        "simulate", parents=[common], help="simulate binary frames of an image"
    )
    simulate.add_argument("image", type=Path)
    simulate.add_argument("--frames", type=int, default=1, help="burst length")
    simulate.add_argument(
        "--auto-expose",
        type=float,
        metavar="DENSITY",
        help="choose T for this mean bit density first",
    )
    simulate.add_argument(
        "--stack", action="store_true", help="also save the burst as stack.npz"
    )
    simulate.add_argument(
        "--counts",
        action="store_true",
        help="also save the detection counts of frame 0 as counts.npz",
    )
    simulate.set_defaults(handler=cmd_simulate)

    dataset = commands.add_parser(
        "dataset", parents=[common], help="build a paired training dataset"
    )
    dataset.add_argument("root", type=Path)
    dataset.add_argument("--variants", type=int, help="augmentations per image")
    dataset.add_argument("--layout", help="paired, combined or scenes")
    dataset.add_argument("--val-fraction", type=float)
    dataset.add_argument(
        "--permissive",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="skip undecodable images",
    )
    dataset.add_argument("--verify", action="store_true", help="verify after build")
    dataset.add_argument(
        "--dry-run", action="store_true", help="print the sample count only"
    )
    dataset.set_defaults(handler=cmd_dataset)

    metrics = commands.add_parser(
        "metrics", parents=[common], help="PSNR/SSIM of a test dir against refs"
    )
    metrics.add_argument("ref", type=Path)
    metrics.add_argument("test", type=Path)
    metrics.add_argument("--lpips-csv", type=Path, help="externally computed LPIPS")
    metrics.set_defaults(handler=cmd_metrics)

    recover = commands.add_parser(
        "recover", parents=[common], help="estimate flux from binary frames"
    )
    recover.add_argument(
        "inputs", nargs="+", help="frame PNGs, glob patterns or one stack .npz"
    )
    recover.add_argument(
        "--truth", type=float, metavar="PHI", help="true uniform flux to compare"
    )
    recover.set_defaults(handler=cmd_recover)

    autoexpose = commands.add_parser(
        "autoexpose", parents=[common], help="exposure time for a target density"
    )
    autoexpose.add_argument("image", type=Path)
    autoexpose.add_argument("--target", type=float, default=0.5)
    autoexpose.set_defaults(handler=cmd_autoexpose)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    def get(name):
        return getattr(args, name, None)

    return {
        "sensor": {
            "q": get("q"),
            "tau_d": get("tau_d"),
            "T": get("exposure"),
            "phi_max": get("phi_max"),
            "linearize_srgb": get("linearize_srgb"),
        },
        "sampler": {"mode": get("mode"), "iteration_cap": get("iteration_cap")},
        "dataset": {
            "variants": get("variants"),
            "layout": get("layout"),
            "val_fraction": get("val_fraction"),
            "permissive": get("permissive"),
        },
        "run": {
            "seed": get("seed"),
            "jobs": get("jobs"),
            "out": None if get("out") is None else str(get("out")),
        },
    }


def cmd_simulate(args: argparse.Namespace, config: RunConfig) -> int:
    """Write one binary frame, or a burst, of an image and print bit densities."""
    image = read_rgb(args.image)
    cfg = config.sensor
    flux = intensity_to_flux(image, cfg, source_id=str(args.image))
    print(f"Seed: {config.seed}")
    if args.auto_expose is not None:
        cfg = cfg.with_exposure(auto_exposure(flux, cfg, args.auto_expose))
        config.sensor = cfg
        print(f"Exposure: {cfg.T:.6e} s")
    config.write()

    frames = iter_burst(flux, cfg, config.seed, args.frames, config.mode, config.jobs)
    ones = np.zeros(image.shape, dtype=np.int64)
    for frame in frames:
        write_png(
            config.out / frame_filename(args.image.stem, frame.frame_index, cfg),
            frame.bits,
        )
        ones += frame.bits == 255
    if args.stack:
        BitStack(ones, args.frames).save(config.out / "stack.npz")
    if args.counts:
        counts = synthesize_count_frame(
            flux, cfg, config.seed, 0, config.mode, config.jobs, config.iteration_cap
        )
        np.savez_compressed(config.out / "counts.npz", counts=counts)
        mean = counts.mean(axis=(0, 1))
        print(f"Mean count (R, G, B): {mean[0]:.4f}, {mean[1]:.4f}, {mean[2]:.4f}")
        print(f"Expected mean count: {np.mean(expected_count(flux.data, cfg)):.4f}")

    density = ones.mean(axis=(0, 1)) / args.frames
    print(
        f"Bit density (R, G, B): {density[0]:.4f}, {density[1]:.4f}, {density[2]:.4f}"
    )
    print(f"Mean bit density: {density.mean():.4f}")
    print(f"Expected mean bit density: {mean_bit_density(flux, cfg):.4f}")
    return 0


def cmd_dataset(args: argparse.Namespace, config: RunConfig) -> int:
    """Build (or plan) a paired dataset and optionally verify it."""
    scenes = ingest_scene_dir(args.root, permissive=config.permissive)
    planned = plan_sample_count(scenes, config.variants, config.layout)
    print(f"Seed: {config.seed}")
    if args.dry_run:
        print(f"Planned samples: {planned}")
        return 0

    config.write()
    manifest = build_paired_dataset(
        scenes,
        config.sensor,
        ranges=config.ranges,
        per_image_variants=config.variants,
        seed=config.seed,
        layout=config.layout,
        out=config.out,
        mode=config.mode,
        jobs=config.jobs,
        val_fraction=config.val_fraction,
    )
    print(f"Wrote {len(manifest.rows)} samples to {config.out}")
    if args.verify:
        report = verify_manifest(manifest.path, jobs=config.jobs)
        print(report)
        if not report.ok:
            return 1
    return 0


def cmd_metrics(args: argparse.Namespace, config: RunConfig) -> int:
    """Score a test directory against references; write a CSV and print a table."""
    report = evaluate_dirs(args.ref, args.test, jobs=config.jobs)
    if args.lpips_csv is not None:
        report.merge_lpips(args.lpips_csv)
    config.write()
    path = report.to_csv(config.out / "metrics.csv")
    save(config.out / "metrics_summary.json", report.summary(), overwrite=True)
    print(report)
    print(f"Report written to {path}")
    return 0


def _expand_inputs(inputs: list[str]) -> list[Path]:
    paths = []
    for pattern in inputs:
        matches = sorted(glob.glob(pattern)) if glob.has_magic(pattern) else [pattern]
        if not matches:
            raise InputError(f"No file matches '{pattern}'.")
        paths.extend(Path(match) for match in matches)
    return paths


def cmd_recover(args: argparse.Namespace, config: RunConfig) -> int:
    """Estimate flux from frames or a stack and write it with its saturation mask."""
    paths = _expand_inputs(args.inputs)
    if len(paths) == 1 and paths[0].suffix == ".npz":
        stack = BitStack.load(paths[0])
    else:
        stack = BitStack.from_frames(read_rgb(path) for path in paths)
    flux, saturated = estimate_flux_from_bits(stack, config.sensor, return_mask=True)

    config.write()
    export_flux_raster(config.out / "flux.f32", flux, config.sensor)
    export_flux_png(config.out / "flux.png", flux, config.sensor)
    write_png(config.out / "saturation.png", np.where(saturated, 255, 0))
    print(f"Frames: {stack.n_frames}")
    print(f"Saturated pixel values: {int(saturated.sum())}")
    print(f"Mean flux: {flux.data.mean():.6e} photons/s")
    if args.truth is not None:
        if args.truth <= 0:
            raise InputError("--truth must be positive.")
        error = np.median(np.abs(flux.data - args.truth) / args.truth)
        print(f"Median relative error: {error:.4%}")
    return 0


def cmd_autoexpose(args: argparse.Namespace, config: RunConfig) -> int:
    """Print the exposure time reaching a target mean bit density."""
    flux = intensity_to_flux(read_rgb(args.image), config.sensor, str(args.image))
    exposure = auto_exposure(flux, config.sensor, args.target)
    print(f"Exposure: {exposure:.6e} s")
    density = mean_bit_density(flux, config.sensor.with_exposure(exposure))
    print(f"Mean bit density: {density:.6f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    """
    Run the ``spadsim`` command.

    Returns
    -------
    int
        Process exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)

    if args.quiet:
        set_log_level("WARNING")
    elif args.log_level is not None:
        try:
            set_log_level(args.log_level)
        except ValueError as error:
            parser.print_usage(sys.stderr)
            print(f"spadsim: error: {error}", file=sys.stderr)
            return 2

    handler = None
    try:
        config = resolve_run_config(args.config, _overrides(args))
        if args.command != "dataset" or not args.dry_run:
            config.out.mkdir(parents=True, exist_ok=True)
            handler = add_file_handler(config.out)
        return args.handler(args, config)
    except SpadSimError as error:
        print(f"spadsim: error: {error}", file=sys.stderr)
        return error.exit_code
    except Exception as error:
        logger.exception(f"Unexpected failure: {error}")
        return 1
    finally:
        if handler is not None:
            logging.getLogger("spadsim").removeHandler(handler)
            handler.close()


if __name__ == "__main__":
    sys.exit(main())
