"""Greyscale image I/O and small synthetic test scenes.

Images travel as binary PGM (P5), maxval 255, the bit-exact interchange
format for every pipeline artifact.  In memory an image is a 2-D uint8
array indexed [row, column].
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "load_pgm",
    "save_pgm",
    "to_uint8",
    "bars_and_disk",
    "step_edge_row",
]


def load_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5) file into a uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    # header: magic, width, height, maxval, separated by whitespace and
    # optional '#' comment lines
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        fields.append(data[start:pos])
    if fields[0] != b"P5":
        raise ValueError(f"not a binary PGM file (magic {fields[0]!r})")
    width, height, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise ValueError(f"only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    if pixels.size != width * height:
        raise ValueError("truncated PGM pixel data")
    return pixels.reshape(height, width).copy()


def save_pgm(path, image: np.ndarray) -> None:
    """Write a uint8 array as binary PGM (P5), maxval 255."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {image.shape}")
    if image.dtype != np.uint8:
        if np.any((image < 0) | (image > 255)):
            raise ValueError("pixel values outside [0, 255]")
        image = image.astype(np.uint8)
    height, width = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def to_uint8(values: np.ndarray) -> np.ndarray:
    """Linear rescale of nonnegative data so the max maps to 255.

    Rounding is fixed to round-half-up so rescaled artifacts are
    platform-stable; an all-zero input stays all zero.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return np.zeros(values.shape, dtype=np.uint8)
    if np.any(values < 0):
        raise ValueError("rescale expects nonnegative data")
    peak = values.max()
    if peak == 0:
        return np.zeros(values.shape, dtype=np.uint8)
    scaled = values * (255.0 / peak)
    return np.floor(scaled + 0.5).astype(np.uint8)


def bars_and_disk(size: int = 64) -> np.ndarray:
    """Synthetic test scene: vertical bars of several widths plus a disk.

    Bright features on a dark ground, giving oriented edges at a few
    spatial frequencies and one curved contour.  Deterministic.
    """
    if size < 16:
        raise ValueError(f"scene needs size >= 16, got {size}")
    img = np.zeros((size, size), dtype=np.uint8)
    # three bar groups of increasing width in the left 60% of the frame
    x = 2
    for width, value in ((2, 255), (3, 200), (5, 230)):
        for _ in range(3):
            if x + width >= int(size * 0.6):
                break
            img[2 : size - 2, x : x + width] = value
            x += 2 * width
        x += 4
    # disk in the lower-right quadrant
    cy, cx = int(size * 0.68), int(size * 0.75)
    radius = max(4, size // 6)
    yy, xx = np.ogrid[:size, :size]
    disk = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
    img[disk] = 255
    return img


def step_edge_row(length: int, edge_at: int, bright: int = 255, dark: int = 0) -> np.ndarray:
    """One image row with brightness ``bright`` left of ``edge_at``.

    Columns < edge_at are bright, the rest dark; edge_at outside
    [0, length] simply yields a uniform row.
    """
    row = np.full(length, dark, dtype=np.uint8)
    row[: max(0, min(edge_at, length))] = bright
    return row
