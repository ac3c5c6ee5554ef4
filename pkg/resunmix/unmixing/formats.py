"""
On-disk formats.

- HSIB cubes: 20-byte little-endian header (magic "HSIB", version, L, rows, cols)
  followed by L * rows * cols float64 values, pixel-major.
- Matrices: headerless comma-separated text with 17 significant digits.
- Images: 8-bit binary PGM (P5).
- Manifests: one key=value pair per line.
"""

import csv
import hashlib
import logging
from pathlib import Path
import struct
from typing import Dict, Iterable, Mapping, Tuple, Union

import numpy as np

from .models import SolverReport, SpectralCube

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

CUBE_MAGIC = b"HSIB"
CUBE_VERSION = 1
_CUBE_HEADER = struct.Struct("<4sIIII")
_CUBE_DTYPE = np.dtype("<f8")

HISTORY_COLUMNS = ("iter", "primal", "dual", "mu", "objective")


def format_value(value: object) -> str:
    """Text form of a manifest or table value; floats use the shortest exact repr."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_cube(path: PathLike, cube: SpectralCube):
    """Write a cube in HSIB format."""
    L, N = cube.data.shape
    header = _CUBE_HEADER.pack(CUBE_MAGIC, CUBE_VERSION, L, cube.rows, cube.cols)
    payload = np.ascontiguousarray(cube.data.T, dtype=_CUBE_DTYPE).tobytes()
    Path(path).write_bytes(header + payload)


def read_cube(path: PathLike) -> SpectralCube:
    """
    Read an HSIB cube.

    Raises:
        ValueError: On a bad magic or version, a payload length that does not match
            the header, or non-finite values
    """
    raw = Path(path).read_bytes()
    if len(raw) < _CUBE_HEADER.size:
        raise ValueError(f"{path}: file too short for an HSIB header")
    magic, version, L, rows, cols = _CUBE_HEADER.unpack_from(raw)
    if magic != CUBE_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {CUBE_MAGIC!r}")
    if version != CUBE_VERSION:
        raise ValueError(f"{path}: unsupported HSIB version {version}")
    expected = L * rows * cols * _CUBE_DTYPE.itemsize
    payload = raw[_CUBE_HEADER.size :]
    if len(payload) != expected:
        raise ValueError(
            f"{path}: payload has {len(payload)} bytes, "
            f"header ({L}, {rows}, {cols}) needs {expected}"
        )
    values = np.frombuffer(payload, dtype=_CUBE_DTYPE).reshape(rows * cols, L)
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{path}: cube contains non-finite values")
    return SpectralCube(data=values.T.astype(np.float64), rows=rows, cols=cols)


def write_matrix_csv(path: PathLike, matrix: np.ndarray):
    """Write a matrix as headerless CSV, one matrix row per line, %.17g."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    np.savetxt(path, matrix, fmt="%.17g", delimiter=",")


def read_matrix_csv(path: PathLike) -> np.ndarray:
    """
    Read a headerless numeric CSV matrix.

    Raises:
        ValueError: If the file is empty, ragged, non-numeric or non-finite
    """
    try:
        matrix = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise ValueError(f"{path}: malformed CSV matrix ({e})")
    if matrix.size == 0:
        raise ValueError(f"{path}: CSV matrix is empty")
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{path}: CSV matrix contains non-finite values")
    return matrix


def to_gray(values: np.ndarray) -> Tuple[np.ndarray, float, float, bool]:
    """
    Min-max scale a map to 8 bits.

    Returns:
        (uint8 image, min, max, degenerate); a constant map is degenerate and
        becomes uniform mid-gray
    """
    values = np.asarray(values, dtype=np.float64)
    vmin, vmax = float(values.min()), float(values.max())
    if not vmax > vmin:
        return np.full(values.shape, 128, dtype=np.uint8), vmin, vmax, True
    scaled = np.rint(255.0 * (values - vmin) / (vmax - vmin))
    return scaled.astype(np.uint8), vmin, vmax, False


def write_pgm(path: PathLike, image: np.ndarray):
    """Write a 2-D uint8 image as binary PGM (P5)."""
    image = np.asarray(image)
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ValueError("PGM export needs a 2-D uint8 image")
    rows, cols = image.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(image).tobytes())


def read_pgm(path: PathLike) -> np.ndarray:
    """
    Read an 8-bit binary PGM (P5) written by write_pgm.

    Raises:
        ValueError: On a malformed header or payload
    """
    raw = Path(path).read_bytes()
    parts = raw.split(maxsplit=4)
    if len(parts) < 4 or parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    try:
        cols, rows, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    except ValueError:
        raise ValueError(f"{path}: malformed PGM header")
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM is supported (maxval {maxval})")
    header_len = len(b" ".join(parts[:4])) + 1
    pixels = raw[header_len:]
    if len(pixels) != rows * cols:
        raise ValueError(f"{path}: payload has {len(pixels)} bytes, expected {rows * cols}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(rows, cols).copy()


def write_manifest(path: PathLike, values: Mapping[str, object]):
    """Write key=value lines in insertion order."""
    lines = []
    for key, value in values.items():
        text = format_value(value)
        if "\n" in text or "=" in key:
            raise ValueError(f"manifest entry {key!r} cannot be written as key=value")
        lines.append(f"{key}={text}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: PathLike) -> Dict[str, str]:
    """
    Parse a key=value manifest; blank lines and '#' comments are skipped.

    Raises:
        ValueError: On a line without '='
    """
    values: Dict[str, str] = {}
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{number}: expected key=value")
        values[key.strip()] = value.strip()
    return values


def write_history_csv(path: PathLike, report: SolverReport):
    """Write the solver history with header iter,primal,dual,mu,objective."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(HISTORY_COLUMNS)
        for record in report.history:
            values = (record.primal, record.dual, record.mu, record.objective)
            writer.writerow([record.iteration] + [format_value(v) for v in values])


def write_rows_csv(path: PathLike, header: Iterable[str], rows: Iterable[Iterable[object]]):
    """Write a small table with a header row."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def hash_files(paths: Iterable[PathLike]) -> str:
    """SHA-256 over the concatenated contents of the given files."""
    digest = hashlib.sha256()
    for path in paths:
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 20), b""):
                digest.update(chunk)
    return digest.hexdigest()


def ensure_dir(path: PathLike) -> Path:
    """Create an output directory (and parents) if needed."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out
