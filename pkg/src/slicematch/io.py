"""Reading and writing measures, matrices and images.

Point-cloud CSV: header ``x0,...,x{n-1}`` with an optional trailing ``w``
column, one atom per row.  Floats are written with ``repr`` (shortest
round-trip form) so a written file re-reads to identical arrays.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from PIL import Image

from .measure import DiscreteMeasure, MeasureError, from_image

IMAGE_SUFFIXES = {".pgm", ".png"}


class InputFormatError(ValueError):
    pass


def _fmt(v: float) -> str:
    return repr(float(v))


def read_measure_csv(path) -> DiscreteMeasure:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    has_w = header[-1] == "w"
    coords = header[:-1] if has_w else header
    if not coords or coords != [f"x{i}" for i in range(len(coords))]:
        raise InputFormatError(f"{path}: header must be x0,...,x{{n-1}}[,w], got {','.join(header)}")
    body = [r for r in rows[1:] if r and any(c.strip() for c in r)]
    if not body:
        raise InputFormatError(f"{path}: no data rows")
    try:
        data = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise InputFormatError(f"{path}: ragged rows")
    try:
        if has_w:
            return DiscreteMeasure(data[:, :-1], data[:, -1])
        return DiscreteMeasure(data)
    except MeasureError as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def write_measure_csv(path, nu: DiscreteMeasure, with_weights: bool = True) -> None:
    header = [f"x{i}" for i in range(nu.dim)] + (["w"] if with_weights else [])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for p, w in zip(nu.points, nu.weights):
            vals = list(p) + ([w] if with_weights else [])
            fh.write(",".join(_fmt(v) for v in vals) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    try:
        M = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from None
    return M


def write_matrix_csv(path, M: np.ndarray) -> None:
    with open(path, "w") as fh:
        for row in np.atleast_2d(M):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def format_matrix_csv(M: np.ndarray) -> str:
    return "".join(",".join(_fmt(v) for v in row) + "\n" for row in np.atleast_2d(M))


def read_image(path) -> np.ndarray:
    """8-bit grayscale PGM (P2/P5) or PNG as a float array of intensities."""
    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "P", "1", "I", "LA", "RGB", "RGBA"):
                raise InputFormatError(f"{path}: unsupported image mode {im.mode}")
            return np.asarray(im.convert("L"), dtype=float)
    except (OSError, SyntaxError) as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def write_image(path, mass: np.ndarray) -> None:
    """Scale a nonnegative grid so its maximum is 255 and save as 8-bit grayscale."""
    peak = mass.max()
    scaled = np.zeros_like(mass) if peak <= 0 else mass / peak * 255.0
    Image.fromarray(np.rint(scaled).astype(np.uint8), mode="L").save(path)


def is_image(path) -> bool:
    return Path(path).suffix.lower() in IMAGE_SUFFIXES


def load_measure(path) -> tuple[DiscreteMeasure, tuple[int, int] | None]:
    """Load a CSV point cloud or an image; images also return their grid shape."""
    if is_image(path):
        grid = read_image(path)
        try:
            return from_image(grid), grid.shape
        except MeasureError as exc:
            raise InputFormatError(f"{path}: {exc}") from None
    return read_measure_csv(path), None
