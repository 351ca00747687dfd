"""PARAFREE-FIELD files, CSV tables and structured-text reports."""

import csv
import logging
import re
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np

from .grid_field import ScalarField, SpaceTimeGrid

logger = logging.getLogger(__name__)

MAGIC = "PARAFREE-FIELD v1"
_HEADER_FIELDS = ("n", "nx", "nt", "L", "t0", "t1")
_PAIR = re.compile(r"\s*([A-Za-z0-9]+)=([^;]*);")


def format_header(grid: SpaceTimeGrid) -> str:
    return f"{MAGIC}; {grid.header()};"


def parse_header(line: str) -> SpaceTimeGrid:
    """Rebuild the grid from a header line.

    Raises:
        ValueError: If the magic string or a header field is missing or malformed
    """
    if not line.startswith(MAGIC + ";"):
        raise ValueError(f"Not a PARAFREE-FIELD file (header starts with {line[:32]!r})")
    pairs = dict(_PAIR.findall(line[len(MAGIC) + 1:]))
    missing = [key for key in _HEADER_FIELDS if key not in pairs]
    if missing:
        raise ValueError(f"Field header is missing: {', '.join(missing)}")
    try:
        return SpaceTimeGrid(
            n=int(pairs["n"]),
            L=float(pairs["L"]),
            nx=int(pairs["nx"]),
            t_start=float(pairs["t0"]),
            t_end=float(pairs["t1"]),
            nt=int(pairs["nt"]),
        )
    except ValueError as e:
        raise ValueError(f"Malformed field header: {e}") from e


def write_field(path: Union[str, Path], field: ScalarField) -> Path:
    """Write header line + little-endian float64 values (t-major, row-major space)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    with open(path, "wb") as f:
        f.write((format_header(field.grid) + "\n").encode("ascii"))
        f.write(payload)
    logger.debug(f"Wrote {path} ({field.grid.header()})")
    return path


def read_field(path: Union[str, Path]) -> ScalarField:
    """Read a PARAFREE-FIELD file.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the header or payload size is invalid
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Field file not found: {path}")
    raw = path.read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise ValueError(f"{path}: missing header line")
    grid = parse_header(raw[:newline].decode("ascii", errors="replace"))
    payload = raw[newline + 1:]
    expected = 8 * int(np.prod(grid.shape))
    if len(payload) != expected:
        raise ValueError(f"{path}: payload has {len(payload)} bytes, header implies {expected}")
    values = np.frombuffer(payload, dtype="<f8").astype(float)
    return ScalarField(grid, values.reshape(grid.shape))


def write_mask(path: Union[str, Path], grid: SpaceTimeGrid, mask: np.ndarray) -> Path:
    """Masks use the field format with values 0.0 / 1.0."""
    return write_field(path, ScalarField(grid, np.asarray(mask, dtype=float)))


def read_mask(path: Union[str, Path]) -> np.ndarray:
    return read_field(path).values > 0.5


def write_csv(path: Union[str, Path], columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """CSV table; floats are written with repr so re-parsing is exact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


def read_csv(path: Union[str, Path]) -> list[dict[str, str]]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def export_field_csv(path: Union[str, Path], field: ScalarField) -> Path:
    """Plain-text export: one row per node (t, x1[, x2], u)."""
    grid = field.grid
    x, t = grid.coords()
    columns = ["t"] + [f"x{a + 1}" for a in range(grid.n)] + ["u"]
    flat_x = x.reshape(-1, grid.n)
    flat_t = t.ravel()
    flat_u = field.values.ravel()
    rows = ([float(flat_t[k])] + [float(v) for v in flat_x[k]] + [float(flat_u[k])] for k in range(flat_u.size))
    return write_csv(path, columns, rows)


def write_report(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text.rstrip("\n") + "\n")
    return path


def parse_report(text: str) -> dict[str, str]:
    """Parse `key: value` lines (repeated keys keep the last value)."""
    out: dict[str, str] = {}
    for line in text.splitlines():
        if ":" in line:
            key, _, value = line.partition(":")
            out[key.strip()] = value.strip()
    return out
