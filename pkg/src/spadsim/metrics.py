"""
Metrics
-------
Full-reference image quality metrics (PSNR and SSIM) and batch evaluation of a
directory of rendered images against a directory of references.

SSIM is the single-scale index with an ``11 x 11`` Gaussian window
(``sigma = 1.5``), ``K1 = 0.01``, ``K2 = 0.03`` and dynamic range 255. It is
computed per channel over valid window positions only (no padding) and averaged
over channels.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import scipy as sp

from .constants import (
    DYNAMIC_RANGE,
    IMAGE_EXTENSIONS,
    SSIM_K1,
    SSIM_K2,
    SSIM_SIGMA,
    SSIM_WINDOW,
)
from .errors import InputError
from .io.io import read_rgb
from .utils.decorators import timed

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["image_id", "psnr_db", "ssim", "lpips"]


def _json_number(value: float) -> float | None:
    # JSON has no NaN or infinity.
    return value if math.isfinite(value) else None


def _fail(message: str):
    logger.error(message)
    raise InputError(message)


def _pair(ref, test) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        _fail(f"Image dimensions differ: {ref.shape} vs {test.shape}.")
    if ref.ndim == 2:
        ref, test = ref[:, :, np.newaxis], test[:, :, np.newaxis]
    if ref.ndim != 3:
        _fail(f"Expected H x W or H x W x C rasters, got shape {ref.shape}.")
    return ref, test


def psnr(ref, test) -> float:
    """
    Peak signal-to-noise ratio in decibels.

    ``10 log10(255**2 / MSE)`` with the squared error averaged over all pixels and
    channels in double precision.

    Returns
    -------
    float
        PSNR in dB, ``math.inf`` for identical images.

    Raises
    ------
    InputError
        If the rasters have different dimensions.
    """
    ref, test = _pair(ref, test)
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(DYNAMIC_RANGE**2 / mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 2-D Gaussian window of shape ``size x size``."""
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    profile = np.exp(-(offsets**2) / (2.0 * sigma**2))
    window = np.outer(profile, profile)
    return window / window.sum()


def _ssim_channel(x: np.ndarray, y: np.ndarray, window: np.ndarray) -> float:
    def local_mean(values):
        return sp.signal.correlate2d(values, window, mode="valid")

    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    mu_x = local_mean(x)
    mu_y = local_mean(y)
    sigma_xx = local_mean(x * x) - mu_x * mu_x
    sigma_yy = local_mean(y * y) - mu_y * mu_y
    sigma_xy = local_mean(x * y) - mu_x * mu_y
    numerator = (2.0 * mu_x * mu_y + c1) * (2.0 * sigma_xy + c2)
    denominator = (mu_x * mu_x + mu_y * mu_y + c1) * (sigma_xx + sigma_yy + c2)
    return float(np.mean(numerator / denominator))


def ssim(ref, test) -> float:
    """
    Structural similarity index.

    Returns
    -------
    float
        Mean SSIM over valid window positions and channels, in [-1, 1].

    Raises
    ------
    InputError
        If the dimensions differ or the smaller dimension is below the window size.
    """
    ref, test = _pair(ref, test)
    if min(ref.shape[:2]) < SSIM_WINDOW:
        _fail(
            f"Images of size {ref.shape[:2]} are smaller than the "
            f"{SSIM_WINDOW} x {SSIM_WINDOW} SSIM window."
        )
    window = gaussian_window()
    scores = [
        _ssim_channel(ref[:, :, c], test[:, :, c], window) for c in range(ref.shape[2])
    ]
    return float(np.mean(scores))


@dataclass
class MetricsReport:
    """
    Per-image PSNR/SSIM rows with their aggregates.

    Attributes
    ----------
    rows : pd.DataFrame
        Columns ``image_id``, ``psnr_db``, ``ssim``, ``lpips`` sorted by
        ``image_id``. Infinite PSNR marks identical pairs; NaN marks pairs that
        could not be evaluated.
    ref_dir, test_dir : str
        Directories that were compared.
    timestamp : pd.Timestamp
        Evaluation time (UTC).
    unmatched : list[str]
        Files present in only one directory.
    flagged : list[str]
        Image ids whose pair could not be read or compared.
    """

    rows: pd.DataFrame
    ref_dir: str = ""
    test_dir: str = ""
    timestamp: pd.Timestamp = field(
        default_factory=lambda: pd.Timestamp.now(tz="UTC")
    )
    unmatched: list[str] = field(default_factory=list)
    flagged: list[str] = field(default_factory=list)

    @property
    def config(self) -> dict:
        return {
            "window": SSIM_WINDOW,
            "sigma": SSIM_SIGMA,
            "k1": SSIM_K1,
            "k2": SSIM_K2,
            "dynamic_range": DYNAMIC_RANGE,
        }

    @property
    def n_pairs(self) -> int:
        return len(self.rows)

    @property
    def infinite_psnr(self) -> int:
        """Number of rows with infinite PSNR (identical pairs)."""
        return int(np.isposinf(self.rows["psnr_db"]).sum())

    @staticmethod
    def _finite_mean(values: pd.Series) -> float:
        finite = values[np.isfinite(values.astype(float))]
        return float(finite.mean()) if len(finite) else math.nan

    @property
    def mean_psnr(self) -> float:
        """Mean of the finite PSNR values."""
        return self._finite_mean(self.rows["psnr_db"])

    @property
    def mean_ssim(self) -> float:
        """Mean of the finite SSIM values."""
        return self._finite_mean(self.rows["ssim"])

    @property
    def mean_lpips(self) -> float:
        return self._finite_mean(self.rows["lpips"])

    def merge_lpips(self, path) -> None:
        """
        Fill the ``lpips`` column from a CSV with ``image_id`` and ``lpips``
        columns, computed elsewhere. Ids missing from the file stay empty.
        """
        try:
            external = pd.read_csv(path, dtype={"image_id": str})
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as error:
            _fail(f"Cannot read LPIPS values from {path}: {error}")
        if not {"image_id", "lpips"} <= set(external.columns):
            _fail(f"{path} must have 'image_id' and 'lpips' columns.")
        duplicated = external.loc[external["image_id"].duplicated(), "image_id"]
        if len(duplicated):
            _fail(f"{path} lists image ids more than once: {sorted(set(duplicated))}.")
        try:
            lpips = pd.to_numeric(external["lpips"])
        except (ValueError, TypeError) as error:
            _fail(f"{path} holds non-numeric LPIPS values: {error}")
        values = pd.Series(lpips.to_numpy(), index=external["image_id"])
        self.rows["lpips"] = self.rows["image_id"].map(values).astype(float)
        logger.info(f"Merged {int(self.rows['lpips'].notna().sum())} LPIPS values.")

    def to_csv(self, path) -> Path:
        """
        Write the rows as UTF-8 CSV with LF line endings.

        Infinite PSNR is written as ``inf``, missing values as ``n/a``.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.rows[REPORT_COLUMNS].to_csv(
            path, index=False, na_rep="n/a", encoding="utf-8", lineterminator="\n"
        )
        return path

    def summary(self) -> dict:
        return {
            "ref_dir": self.ref_dir,
            "test_dir": self.test_dir,
            "timestamp": self.timestamp.isoformat(),
            "pairs": self.n_pairs,
            "mean_psnr_db": _json_number(self.mean_psnr),
            "mean_ssim": _json_number(self.mean_ssim),
            "infinite_psnr": self.infinite_psnr,
            "flagged": list(self.flagged),
            "unmatched": list(self.unmatched),
            "ssim": self.config,
        }

    def __str__(self):
        table = self.rows[REPORT_COLUMNS].to_string(
            index=False, na_rep="n/a", float_format=lambda v: f"{v:.4f}"
        )
        lines = [
            f"Metrics for {self.test_dir} against {self.ref_dir} "
            f"({self.timestamp:%Y-%m-%d %H:%M:%S} UTC)",
            table,
            f"Mean PSNR: {self.mean_psnr:.4f} dB",
            f"Mean SSIM: {self.mean_ssim:.4f}",
        ]
        if self.infinite_psnr:
            lines.append(
                f"{self.infinite_psnr} identical pair(s) with infinite PSNR excluded "
                "from the mean."
            )
        for image_id in self.flagged:
            lines.append(f"  • {image_id}: could not be evaluated")
        if self.unmatched:
            lines.append(f"Unmatched files: {', '.join(self.unmatched)}")
        return "\n".join(lines)


def _images_by_stem(directory: Path) -> tuple[dict[str, Path], list[str]]:
    """Images keyed by file stem, and the names of files repeating a stem."""
    if not directory.is_dir():
        _fail(f"Directory {directory} does not exist.")
    images: dict[str, Path] = {}
    repeated = []
    for path in sorted(directory.iterdir()):
        if not path.is_file() or path.suffix.lower() not in IMAGE_EXTENSIONS:
            continue
        if path.stem in images:
            logger.warning(f"{path} repeats the stem of {images[path.stem].name}.")
            repeated.append(path.name)
        else:
            images[path.stem] = path
    return images, repeated


def _evaluate_pair(image_id: str, ref_path: Path, test_path: Path) -> dict:
    try:
        ref = read_rgb(ref_path)
        test = read_rgb(test_path)
        return {
            "image_id": image_id,
            "psnr_db": psnr(ref, test),
            "ssim": ssim(ref, test),
            "lpips": math.nan,
            "flagged": False,
        }
    except InputError:
        logger.warning(f"Pair '{image_id}' could not be evaluated.")
        return {
            "image_id": image_id,
            "psnr_db": math.nan,
            "ssim": math.nan,
            "lpips": math.nan,
            "flagged": True,
        }


@timed
def evaluate_dirs(ref_dir, test_dir, jobs: int = 1) -> MetricsReport:
    """
    Compare every test image with the reference image of the same file stem.

    Parameters
    ----------
    ref_dir : str or Path
        Reference images.
    test_dir : str or Path
        Images to score.
    jobs : int
        Worker threads; the report does not depend on it.

    Returns
    -------
    MetricsReport
        One row per matched pair. Unreadable or mismatched pairs get a NaN row and
        are listed in ``flagged``; files without a partner, and files repeating
        the stem of another file in their directory, are listed in ``unmatched``.

    Raises
    ------
    InputError
        If a directory is missing or no pair matches.
    """
    ref_dir, test_dir = Path(ref_dir), Path(test_dir)
    refs, repeated_refs = _images_by_stem(ref_dir)
    tests, repeated_tests = _images_by_stem(test_dir)
    matched = sorted(refs.keys() & tests.keys())
    unmatched = sorted(
        [refs[s].name for s in refs.keys() - tests.keys()]
        + [tests[s].name for s in tests.keys() - refs.keys()]
        + repeated_refs
        + repeated_tests
    )
    if unmatched:
        logger.warning(f"{len(unmatched)} file(s) have no partner and are skipped.")
    if not matched:
        _fail(f"No image in {test_dir} matches a reference in {ref_dir}.")

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(
            pool.map(lambda s: _evaluate_pair(s, refs[s], tests[s]), matched)
        )
    rows = pd.DataFrame(results).sort_values("image_id", ignore_index=True)
    report = MetricsReport(
        rows=rows[REPORT_COLUMNS].copy(),
        ref_dir=str(ref_dir),
        test_dir=str(test_dir),
        unmatched=unmatched,
        flagged=rows.loc[rows["flagged"], "image_id"].tolist(),
    )
    logger.info(
        f"Evaluated {report.n_pairs} pairs: mean PSNR {report.mean_psnr:.4f} dB, "
        f"mean SSIM {report.mean_ssim:.4f}."
    )
    return report


def compare_reports(reports: dict[str, MetricsReport]) -> pd.DataFrame:
    """
    Side-by-side aggregates of several approaches.

    Parameters
    ----------
    reports : dict[str, MetricsReport]
        Reports keyed by approach name.

    Returns
    -------
    pd.DataFrame
        Indexed by approach with columns ``psnr_db``, ``ssim``, ``lpips`` and
        ``pairs``.
    """
    return pd.DataFrame(
        {
            name: {
                "psnr_db": report.mean_psnr,
                "ssim": report.mean_ssim,
                "lpips": report.mean_lpips,
                "pairs": report.n_pairs,
            }
            for name, report in reports.items()
        }
    ).T
