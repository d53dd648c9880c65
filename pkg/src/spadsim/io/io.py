import hashlib
import io
import json
import logging
import os
import struct
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import InputError

# Configure logging
logger = logging.getLogger(__name__)

FLOAT_RASTER_MAGIC = b"SPADF32\n"


def save(filename, data, overwrite=False):
    """
    Save a dictionary as a JSON document.

    Parameters
    ----------
    filename : str or Path
        Destination path. A missing extension becomes ``.json``.
    data : dict
        JSON-serializable data.
    overwrite : bool, optional
        If True, overwrite the file if it already exists. Default is False.

    Returns
    -------
    Path or None
        The written path, or None if the file existed and was left untouched.
    """
    filename = Path(filename)
    if filename.suffix == "":
        filename = filename.with_suffix(".json")
    elif filename.suffix != ".json":
        message = f"Unsupported file extension: {filename.suffix}. Expected .json."
        logger.error(message)
        raise ValueError(message)

    # Check if the file already exists
    if filename.exists() and not overwrite:
        logger.warning(
            f"The file {filename} already exists. To overwrite the existing file"
            f" set the argument 'overwrite' to True."
        )
        return None

    filename.parent.mkdir(parents=True, exist_ok=True)
    with open(filename, "w", encoding="utf-8", newline="\n") as file:
        json.dump(data, file, indent=4, sort_keys=True)
        file.write("\n")
    logger.debug(f"Saved {filename}")
    return filename


def load(filename):
    """
    Load a JSON document.

    Parameters
    ----------
    filename : str or Path
        The file to read.

    Returns
    -------
    dict
        The decoded document.
    """
    with open(filename, encoding="utf-8") as file:
        data = json.load(file)
    logger.debug(f"Loaded {filename}")
    return data


def read_rgb(path) -> np.ndarray:
    """
    Decode an image file to an ``H x W x 3`` ``uint8`` array.

    Palette, grayscale and alpha images are converted to RGB.

    Raises
    ------
    InputError
        If the file is missing or cannot be decoded.
    """
    try:
        with Image.open(path) as image:
            image.load()
            return np.asarray(image.convert("RGB"), dtype=np.uint8).copy()
    except FileNotFoundError:
        logger.error(f"Image not found: {path}")
        raise InputError(f"Image not found: {path}") from None
    except (UnidentifiedImageError, OSError, SyntaxError) as error:
        logger.error(f"Cannot decode image {path}: {error}")
        raise InputError(f"Cannot decode image {path}: {error}") from error


def encode_png(array: np.ndarray) -> bytes:
    """
    Encode an ``H x W`` or ``H x W x 3`` ``uint8`` array as PNG bytes.

    The encoder settings are fixed so equal arrays give equal bytes.
    """
    array = np.ascontiguousarray(array, dtype=np.uint8)
    buffer = io.BytesIO()
    Image.fromarray(array).save(buffer, format="PNG", optimize=False, compress_level=6)
    return buffer.getvalue()


def write_png(path, array: np.ndarray) -> Path:
    """Write ``array`` as a PNG file and return its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_png(array))
    return path


def sha256_bytes(data: bytes) -> str:
    """SHA-256 hex digest of ``data``."""
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    """SHA-256 hex digest of a file's contents."""
    digest = hashlib.sha256()
    with open(path, "rb") as file:
        for chunk in iter(lambda: file.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_float_raster(path, data: np.ndarray, **metadata) -> Path:
    """
    Write a float raster losslessly.

    Layout: the magic ``SPADF32\\n``, a 4-byte little-endian header length, a UTF-8
    JSON header (``height``, ``width``, ``channels``, ``dtype`` plus ``metadata``),
    then the values as little-endian float32 in row-major ``H x W x C`` order.

    Returns
    -------
    Path
        The written path.
    """
    data = np.asarray(data, dtype="<f4")
    if data.ndim == 2:
        data = data[:, :, np.newaxis]
    header = {
        "height": data.shape[0],
        "width": data.shape[1],
        "channels": data.shape[2],
        "dtype": "<f4",
        **metadata,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as file:
        file.write(FLOAT_RASTER_MAGIC)
        file.write(struct.pack("<I", len(header_bytes)))
        file.write(header_bytes)
        file.write(data.tobytes(order="C"))
    return path


def read_float_raster(path) -> tuple[np.ndarray, dict]:
    """
    Read a raster written by ``write_float_raster``.

    Returns
    -------
    tuple[numpy.ndarray, dict]
        The ``H x W x C`` float32 values and the header.
    """
    with open(path, "rb") as file:
        if file.read(len(FLOAT_RASTER_MAGIC)) != FLOAT_RASTER_MAGIC:
            logger.error(f"{path} is not a float raster.")
            raise InputError(f"{path} is not a float raster.")
        (length,) = struct.unpack("<I", file.read(4))
        header = json.loads(file.read(length).decode("utf-8"))
        values = np.frombuffer(file.read(), dtype="<f4")
    shape = (header["height"], header["width"], header["channels"])
    return values.reshape(shape), header


class ManifestWriter:
    """
    Appender for line-delimited JSON records.

    Each record is written and flushed as one line so an interrupted run leaves a
    parseable file.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w", encoding="utf-8", newline="\n")

    def write(self, record: dict) -> None:
        self._file.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
        self._file.write("\n")
        self._file.flush()

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_records(path) -> list[dict]:
    """
    Read a line-delimited JSON file.

    Blank lines are skipped; a malformed final line (an interrupted write) is
    dropped with a warning.
    """
    records = []
    with open(path, encoding="utf-8") as file:
        lines = file.read().splitlines()
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError:
            if number == len(lines):
                logger.warning(f"Ignoring truncated last line of {path}.")
                continue
            logger.error(f"Malformed record on line {number} of {path}.")
            raise InputError(f"Malformed record on line {number} of {path}.") from None
    return records


def relative_path(path, root) -> str:
    """``path`` relative to ``root`` with forward slashes."""
    return Path(os.path.relpath(Path(path).resolve(), Path(root).resolve())).as_posix()
