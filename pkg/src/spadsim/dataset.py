"""
Dataset
-------
Scene ingestion and construction of paired (binary SPC frame, RGB) datasets for
image-to-image translation trainers, with a line-delimited manifest that allows
every sample to be regenerated and verified.

"""

import hashlib
import logging
import os
import shutil
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .augment import AugmentRanges, AugmentSpec, apply_affine, sample_augment_specs
from .constants import (
    DATASET_LAYOUTS,
    DEFAULT_LAYOUT,
    DEFAULT_VAL_FRACTION,
    IMAGE_EXTENSIONS,
    LLFF_POSES_FILE,
    MANIFEST_FILE,
    MANIFEST_VERSION,
    TOOLKIT_VERSION,
)
from .errors import ConfigError, InputError, SimulationError, SpadSimError
from .frames import intensity_to_flux, synthesize_binary_frame
from .io.io import (
    ManifestWriter,
    encode_png,
    read_records,
    read_rgb,
    relative_path,
    sha256_bytes,
    sha256_file,
)
from .sampler import SampleMode, derive_seed
from .sensor import SensorConfig
from .utils.decorators import timed

logger = logging.getLogger(__name__)

# Seed derivation purposes
_AUGMENT_SEEDS = 0
_FRAME_SEEDS = 1


@dataclass
class Scene:
    """One scene: an ordered list of images, optionally with LLFF poses."""

    name: str
    image_paths: list[Path]
    poses_path: Path | None = None


@dataclass
class SceneSet:
    """Scenes found under an input root."""

    scenes: list[Scene]

    @property
    def total_images(self) -> int:
        return sum(len(scene.image_paths) for scene in self.scenes)

    def summary(self) -> pd.DataFrame:
        """One row per scene with its image count and pose file."""
        return pd.DataFrame(
            [
                {
                    "scene": scene.name,
                    "images": len(scene.image_paths),
                    "poses": scene.poses_path is not None,
                }
                for scene in self.scenes
            ]
        )


def _list_images(directory: Path) -> list[Path]:
    return sorted(
        (
            path
            for path in directory.iterdir()
            if path.is_file() and path.suffix.lower() in IMAGE_EXTENSIONS
        ),
        key=lambda path: path.name,
    )


def _decodable(paths: list[Path], permissive: bool) -> list[Path]:
    kept = []
    for path in paths:
        try:
            read_rgb(path)
        except InputError:
            if not permissive:
                raise
            logger.warning(f"Skipping undecodable image {path}.")
            continue
        kept.append(path)
    return kept


def ingest_scene_dir(root, permissive: bool = False) -> SceneSet:
    """
    Discover scenes under ``root``.

    Recognized layouts, combined if both are present:

    - flat: ``<root>/*.{png,jpg}`` forms one scene named after ``root``;
    - LLFF-style: ``<root>/<scene>/images/*.{png,jpg}``, one scene per
      subdirectory. A ``<root>/images`` directory makes ``root`` itself an
      LLFF scene.

    Scenes and images are ordered lexicographically.

    Parameters
    ----------
    root : str or Path
        Input directory.
    permissive : bool
        Skip undecodable images with a warning instead of failing.

    Returns
    -------
    SceneSet
        The discovered scenes.

    Raises
    ------
    InputError
        If ``root`` is missing, an image cannot be decoded (unless permissive),
        or no image is found.
    """
    root = Path(root)
    if not root.is_dir():
        logger.error(f"Input directory {root} does not exist.")
        raise InputError(f"Input directory {root} does not exist.")

    candidates: list[Scene] = []
    flat = _list_images(root)
    if flat:
        candidates.append(Scene(root.name, flat))
    scene_dirs = [root] if (root / "images").is_dir() else []
    scene_dirs += sorted(
        (d for d in root.iterdir() if d.is_dir() and (d / "images").is_dir()),
        key=lambda d: d.name,
    )
    for scene_dir in scene_dirs:
        poses = scene_dir / LLFF_POSES_FILE
        candidates.append(
            Scene(
                scene_dir.name,
                _list_images(scene_dir / "images"),
                poses if poses.is_file() else None,
            )
        )

    scenes = []
    for scene in candidates:
        scene.image_paths = _decodable(scene.image_paths, permissive)
        if scene.image_paths:
            scenes.append(scene)

    names = [scene.name for scene in scenes]
    if len(set(names)) != len(names):
        logger.error(f"Scene names under {root} are not unique: {names}.")
        raise InputError(f"Scene names under {root} are not unique: {names}.")
    if not scenes:
        logger.error(f"No images found under {root}.")
        raise InputError(f"No images found under {root}.")

    scene_set = SceneSet(scenes)
    logger.info(
        f"Found {scene_set.total_images} images in {len(scenes)} scene(s) "
        f"under {root}."
    )
    return scene_set


def assign_split(sample_id: int, val_fraction: float = DEFAULT_VAL_FRACTION) -> str:
    """
    Deterministic train/val assignment from a hash of ``sample_id``.

    Returns
    -------
    str
        ``"val"`` for roughly ``val_fraction`` of the ids, ``"train"`` otherwise.
    """
    digest = hashlib.sha256(str(sample_id).encode("ascii")).digest()
    position = int.from_bytes(digest[:8], "big") / 2.0**64
    return "val" if position < val_fraction else "train"


@dataclass
class DatasetManifest:
    """Reproducibility record of a built dataset."""

    master_seed: int
    sensor: SensorConfig
    ranges: AugmentRanges
    layout: str
    mode: SampleMode
    variants: int
    val_fraction: float
    rows: list[dict] = field(default_factory=list)
    version: str = TOOLKIT_VERSION
    complete: bool = False
    path: Path | None = None

    @property
    def root(self) -> Path | None:
        """Dataset root (the directory holding the manifest)."""
        return None if self.path is None else self.path.parent

    def header(self) -> dict:
        return {
            "kind": "header",
            "format": MANIFEST_VERSION,
            "version": self.version,
            "master_seed": self.master_seed,
            "sensor": self.sensor.to_dict(),
            "config_hash": self.sensor.config_hash,
            "augment": self.ranges.to_dict(),
            "layout": self.layout,
            "mode": self.mode.name,
            "variants": self.variants,
            "val_fraction": self.val_fraction,
        }

    def footer(self) -> dict:
        return {"kind": "footer", "complete": True, "samples": len(self.rows)}

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        """
        Read a manifest file, complete or partial.

        Raises
        ------
        InputError
            If the file has no header record.
        """
        path = Path(path)
        records = read_records(path)
        if not records or records[0].get("kind") != "header":
            logger.error(f"{path} has no manifest header.")
            raise InputError(f"{path} has no manifest header.")
        header = records[0]
        manifest = cls(
            master_seed=header["master_seed"],
            sensor=SensorConfig.from_dict(header["sensor"]),
            ranges=AugmentRanges.from_dict(header["augment"]),
            layout=header["layout"],
            mode=SampleMode.from_name(header["mode"]),
            variants=header["variants"],
            val_fraction=header["val_fraction"],
            version=header["version"],
            path=path,
        )
        manifest.rows = [r for r in records if r.get("kind") == "sample"]
        manifest.complete = any(
            r.get("kind") == "footer" and r.get("complete") for r in records
        )
        return manifest

    def write(self, path) -> Path:
        """Write the manifest sorted by ``sample_id`` with a completion footer."""
        path = Path(path)
        temporary = path.with_name(path.name + ".tmp")
        with ManifestWriter(temporary) as writer:
            writer.write(self.header())
            for row in sorted(self.rows, key=lambda r: r["sample_id"]):
                writer.write(row)
            writer.write(self.footer())
        os.replace(temporary, path)
        self.path = path
        self.complete = True
        return path


@dataclass(frozen=True)
class _Task:
    sample_id: int
    scene: Scene
    source: Path
    spec: AugmentSpec
    frame_seed: int
    name: str
    split: str


def _sample_name(layout: str, sample_id: int, scene: str, source: Path) -> str:
    if layout == "scenes":
        return f"{scene}/images/{source.stem}.png"
    return f"{sample_id:06d}_{scene}_{source.stem}.png"


def _output_paths(layout: str, name: str) -> dict[str, str]:
    if layout == "combined":
        return {"AB": f"combined/{name}"}
    return {"A": f"A/{name}", "B": f"B/{name}"}


def render_sample(
    source_image: np.ndarray,
    spec: AugmentSpec,
    cfg: SensorConfig,
    frame_seed: int,
    mode: SampleMode,
    layout: str,
    source_id: str = "",
) -> dict[str, np.ndarray]:
    """
    Produce the output rasters of one sample.

    The augmentation runs on the clean RGB image and the binary frame is simulated
    from the augmented image, so both members of a pair share one spec.

    Returns
    -------
    dict[str, numpy.ndarray]
        ``{"A": frame, "B": target}``, or ``{"AB": side_by_side}`` for the
        combined layout (A left, B right).
    """
    target = apply_affine(source_image, spec)
    flux = intensity_to_flux(target, cfg, source_id=source_id)
    frame = synthesize_binary_frame(flux, cfg, frame_seed, 0, mode).bits
    if layout == "combined":
        return {"AB": np.concatenate([frame, target], axis=1)}
    return {"A": frame, "B": target}


def _check_layout(layout: str) -> None:
    if layout not in DATASET_LAYOUTS:
        message = f"Unknown layout '{layout}'. Expected one of {DATASET_LAYOUTS}."
        logger.error(message)
        raise ConfigError(message)


def plan_sample_count(scenes: SceneSet, per_image_variants: int, layout: str) -> int:
    """Number of samples ``build_paired_dataset`` would emit."""
    _check_layout(layout)
    variants = 1 if layout == "scenes" else per_image_variants
    return scenes.total_images * variants


def _check_unique_stems(scene: Scene) -> None:
    # Mirrored outputs are named <stem>.png, so a.png and a.jpg would collide.
    stems = [path.stem for path in scene.image_paths]
    duplicates = sorted({stem for stem in stems if stems.count(stem) > 1})
    if duplicates:
        message = (
            f"Scene '{scene.name}' has several images named {duplicates}; the "
            f"scenes layout needs unique file stems."
        )
        logger.error(message)
        raise InputError(message)


def _plan(
    scenes: SceneSet,
    ranges: AugmentRanges,
    variants: int,
    seed: int,
    layout: str,
    val_fraction: float,
) -> list[_Task]:
    tasks = []
    image_index = 0
    for scene in scenes.scenes:
        if layout == "scenes":
            _check_unique_stems(scene)
        for source in scene.image_paths:
            if layout == "scenes":
                specs = [AugmentSpec()]
            else:
                specs = sample_augment_specs(
                    derive_seed(seed, _AUGMENT_SEEDS, image_index), variants, ranges
                )
            for variant, spec in enumerate(specs):
                sample_id = image_index * variants + variant
                tasks.append(
                    _Task(
                        sample_id=sample_id,
                        scene=scene,
                        source=source,
                        spec=spec,
                        frame_seed=derive_seed(seed, _FRAME_SEEDS, sample_id),
                        name=_sample_name(layout, sample_id, scene.name, source),
                        split=assign_split(sample_id, val_fraction),
                    )
                )
            image_index += 1
    return tasks


def _run_task(
    task: _Task, cfg: SensorConfig, mode: SampleMode, layout: str, out: Path
) -> dict:
    try:
        image = read_rgb(task.source)
        rasters = render_sample(
            image, task.spec, cfg, task.frame_seed, mode, layout, str(task.source)
        )
    except SpadSimError as error:
        message = f"Sample {task.sample_id} ({task.source}) failed: {error}"
        logger.error(message)
        raise SimulationError(message, sample_id=task.sample_id) from error

    outputs = {}
    for role, relative in _output_paths(layout, task.name).items():
        data = encode_png(rasters[role])
        target = out / relative
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
        outputs[role] = {"path": relative, "sha256": sha256_bytes(data)}

    return {
        "kind": "sample",
        "sample_id": task.sample_id,
        "scene": task.scene.name,
        "source": relative_path(task.source, out),
        "augment": task.spec.to_dict(),
        "frame_seed": task.frame_seed,
        "frame_index": 0,
        "split": task.split,
        "name": task.name,
        "outputs": outputs,
    }


def _copy_poses(scenes: SceneSet, out: Path) -> None:
    for scene in scenes.scenes:
        if scene.poses_path is None:
            continue
        for side in ("A", "B"):
            destination = out / side / scene.name / LLFF_POSES_FILE
            destination.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(scene.poses_path, destination)


def _write_splits(rows: list[dict], out: Path) -> None:
    for split in ("train", "val"):
        names = [r["name"] for r in rows if r["split"] == split]
        with open(out / f"{split}.txt", "w", encoding="utf-8", newline="\n") as file:
            file.writelines(f"{name}\n" for name in names)


@timed
def build_paired_dataset(
    scenes: SceneSet,
    cfg: SensorConfig,
    ranges: AugmentRanges | None = None,
    per_image_variants: int = 1,
    seed: int = 0,
    layout: str = DEFAULT_LAYOUT,
    out=".",
    mode: SampleMode | str = SampleMode.EXACT_RENEWAL,
    jobs: int = 1,
    val_fraction: float = DEFAULT_VAL_FRACTION,
) -> DatasetManifest:
    """
    Build a paired dataset.

    For each source image and each sampled augmentation, ``B`` is the augmented
    RGB target and ``A`` a simulated binary frame of ``B``.

    Parameters
    ----------
    scenes : SceneSet
        Input images.
    cfg : SensorConfig
        Sensor used for every frame.
    ranges : AugmentRanges, optional
        Augmentation ranges; defaults to ``AugmentRanges()``.
    per_image_variants : int
        Augmented samples per source image. The ``scenes`` layout always uses one
        identity sample per image.
    seed : int
        Master seed; augmentation and frame seeds are derived from it per image
        and per sample.
    layout : str
        ``"paired"`` (``A/`` and ``B/`` twin directories), ``"combined"``
        (``combined/`` side-by-side images) or ``"scenes"`` (``A/<scene>/images``
        and ``B/<scene>/images`` mirrors with LLFF poses copied).
    out : str or Path
        Dataset root.
    mode : SampleMode or str
        Sampling law of the binary frames.
    jobs : int
        Worker threads. Output files and manifest do not depend on it.
    val_fraction : float
        Fraction of sample ids assigned to the validation split.

    Returns
    -------
    DatasetManifest
        The finalized manifest, also written to ``<out>/manifest.jsonl``.

    Raises
    ------
    InputError
        If the ``scenes`` layout would give two images of a scene the same
        output name.
    SimulationError
        If a sample fails; its ``sample_id`` is attached. Pending samples are
        cancelled and the manifest is left with a row for every sample written
        to disk, followed by a ``partial`` marker.
    OSError
        On write failures, after the ``partial`` marker is written.
    """
    _check_layout(layout)
    mode = SampleMode.from_name(mode)
    if isinstance(per_image_variants, bool) or not isinstance(per_image_variants, int):
        raise ConfigError("per_image_variants must be an integer.")
    if per_image_variants < 1:
        logger.error("per_image_variants must be at least 1.")
        raise ConfigError("per_image_variants must be at least 1.")
    if not 0.0 <= val_fraction <= 1.0:
        logger.error(f"val_fraction must be in [0, 1], got {val_fraction}.")
        raise ConfigError(f"val_fraction must be in [0, 1], got {val_fraction}.")
    ranges = AugmentRanges() if ranges is None else ranges
    variants = per_image_variants
    if layout == "scenes":
        ranges, variants = AugmentRanges.identity(), 1

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = DatasetManifest(
        master_seed=seed,
        sensor=cfg,
        ranges=ranges,
        layout=layout,
        mode=mode,
        variants=variants,
        val_fraction=val_fraction,
    )
    tasks = _plan(scenes, ranges, variants, seed, layout, val_fraction)
    logger.info(f"Building {len(tasks)} samples into {out} ({layout} layout).")

    manifest_path = out / MANIFEST_FILE
    recorded: set[int] = set()
    with ManifestWriter(manifest_path) as writer:

        def record(row: dict) -> None:
            writer.write(row)
            manifest.rows.append(row)
            recorded.add(row["sample_id"])

        writer.write(manifest.header())
        pool = ThreadPoolExecutor(max_workers=max(1, jobs))
        futures = [
            pool.submit(_run_task, task, cfg, mode, layout, out) for task in tasks
        ]
        try:
            for future in as_completed(futures):
                record(future.result())
        except (SpadSimError, OSError) as error:
            # Samples already running still write their files; record them.
            pool.shutdown(wait=True, cancel_futures=True)
            for future in futures:
                if future.cancelled() or future.exception() is not None:
                    continue
                if future.result()["sample_id"] not in recorded:
                    record(future.result())
            writer.write(
                {
                    "kind": "partial",
                    "error": str(error),
                    "completed": len(manifest.rows),
                    "sample_id": getattr(error, "sample_id", None),
                }
            )
            logger.error(f"Dataset build aborted after {len(manifest.rows)} samples.")
            raise
        finally:
            pool.shutdown()

    if layout == "scenes":
        _copy_poses(scenes, out)
    manifest.write(manifest_path)
    _write_splits(sorted(manifest.rows, key=lambda r: r["sample_id"]), out)
    logger.info(f"Wrote {len(manifest.rows)} samples and {manifest_path}.")
    return manifest


@dataclass
class VerifyReport:
    """Outcome of ``verify_manifest``."""

    rows: pd.DataFrame
    complete: bool

    @property
    def total(self) -> int:
        return len(self.rows)

    @property
    def passed(self) -> int:
        return int(self.rows["passed"].sum()) if self.total else 0

    @property
    def failed_ids(self) -> list[int]:
        return self.rows.loc[~self.rows["passed"], "sample_id"].tolist()

    @property
    def pass_rate(self) -> float:
        return self.passed / self.total if self.total else 0.0

    @property
    def ok(self) -> bool:
        return self.complete and self.total > 0 and self.passed == self.total

    def __str__(self):
        lines = [
            f"Verified {self.total} samples: {self.passed} passed "
            f"({100 * self.pass_rate:.1f}%).",
        ]
        if not self.complete:
            lines.append("Manifest is partial (no completion footer).")
        for _, row in self.rows[~self.rows["passed"]].iterrows():
            lines.append(f"  • sample {row['sample_id']}: {row['reason']}")
        return "\n".join(lines)


def _row_problems(row: dict, manifest: DatasetManifest, root: Path) -> list[str]:
    reasons = []
    outputs = row["outputs"]
    for role, entry in outputs.items():
        path = root / entry["path"]
        if not path.is_file():
            reasons.append(f"missing {entry['path']}")
        elif sha256_file(path) != entry["sha256"]:
            reasons.append(f"file hash mismatch for {entry['path']}")

    source = root / row["source"]
    try:
        rasters = render_sample(
            read_rgb(source),
            AugmentSpec.from_dict(row["augment"]),
            manifest.sensor,
            row["frame_seed"],
            manifest.mode,
            manifest.layout,
            str(source),
        )
    except SpadSimError as error:
        reasons.append(f"cannot regenerate: {error}")
    else:
        for role, raster in rasters.items():
            if role not in outputs:
                reasons.append(f"manifest lacks output {role}")
            elif sha256_bytes(encode_png(raster)) != outputs[role]["sha256"]:
                reasons.append(f"regenerated {role} differs from recorded hash")
        if "AB" in rasters:
            frame = rasters["AB"][:, : rasters["AB"].shape[1] // 2]
        else:
            frame = rasters["A"]
        if not np.all((frame == 0) | (frame == 255)):
            reasons.append("binary frame holds values other than 0 and 255")
    return reasons


def _verify_row(row: dict, manifest: DatasetManifest, root: Path) -> dict:
    try:
        reasons = _row_problems(row, manifest, root)
    except (KeyError, TypeError, AttributeError) as error:
        reasons = [f"malformed manifest row ({error!r})"]
    return {
        "sample_id": row.get("sample_id"),
        "passed": not reasons,
        "reason": "; ".join(reasons),
    }


@timed
def verify_manifest(manifest_path, jobs: int = 1) -> VerifyReport:
    """
    Regenerate every sample of a manifest and compare content hashes.

    A row passes when each output file exists, hashes to the recorded digest, and
    the regenerated rasters encode to the same digest. Missing files fail their
    row only.

    Parameters
    ----------
    manifest_path : str or Path
        Path of ``manifest.jsonl``.
    jobs : int
        Worker threads.

    Returns
    -------
    VerifyReport
        Pass/fail per row and aggregate counts.
    """
    manifest = DatasetManifest.load(manifest_path)
    root = manifest.root
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        checks = list(pool.map(lambda r: _verify_row(r, manifest, root), manifest.rows))
    frame = pd.DataFrame(checks, columns=["sample_id", "passed", "reason"])
    frame = frame.sort_values("sample_id", ignore_index=True)
    report = VerifyReport(rows=frame, complete=manifest.complete)
    logger.info(str(report))
    return report


def summarize_manifest(manifest: DatasetManifest) -> pd.DataFrame:
    """
    Tabulate manifest rows.

    Returns
    -------
    pd.DataFrame
        One row per sample with scene, source, split and augmentation parameters.
    """
    records = []
    for row in sorted(manifest.rows, key=lambda r: r["sample_id"]):
        record = {
            "sample_id": row["sample_id"],
            "scene": row["scene"],
            "source": row["source"],
            "split": row["split"],
            "frame_seed": row["frame_seed"],
        }
        record.update({f"aug_{k}": v for k, v in row["augment"].items()})
        records.append(record)
    return pd.DataFrame(records)
