"""File formats: whitespace-separated point clouds and binary P6 PPM images.

Both formats are deliberately minimal so round-trips are bit-exact: clouds
are written with 17 significant digits (lossless for float64) and images as
raw 8-bit P6 with a canonical header.
"""

from __future__ import annotations

import os

import numpy as np

from .ot1d import check_cloud


def load_point_cloud(path: str | os.PathLike) -> np.ndarray:
    """Parse a text point cloud: one point per line, coordinates split on
    whitespace, dimension inferred from the first data line.

    Blank lines are ignored; a row with the wrong arity is reported with its
    line number.
    """
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            try:
                vals = [float(tok) for tok in parts]
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ValueError(
                    f"{path}: line {lineno}: expected {width} coordinates, got {len(vals)}"
                )
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no points found")
    return check_cloud(np.asarray(rows, dtype=np.float64), str(path))


def save_point_cloud(path: str | os.PathLike, cloud: np.ndarray) -> None:
    """Write a cloud with full float64 precision (17 significant digits)."""
    cloud = check_cloud(cloud, "cloud")
    with open(path, "w", encoding="ascii") as fh:
        for row in cloud:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next header token, skipping whitespace and # comments."""
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ValueError("truncated header")
    return data[start:pos], pos


def load_image(path: str | os.PathLike) -> tuple[int, int, np.ndarray]:
    """Load a binary P6 PPM (maxval 255).

    Returns (width, height, cloud) where the cloud is (width*height, 3) in
    row-major pixel order with float values in [0, 255].
    """
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        magic, pos = _read_token(data, 0)
        if magic != b"P6":
            raise ValueError(f"not a binary PPM (magic {magic!r}, expected b'P6')")
        w_tok, pos = _read_token(data, pos)
        h_tok, pos = _read_token(data, pos)
        max_tok, pos = _read_token(data, pos)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    if width < 1 or height < 1:
        raise ValueError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # the single whitespace byte after maxval
    payload = data[pos : pos + 3 * width * height]
    if len(payload) != 3 * width * height:
        raise ValueError(
            f"{path}: truncated payload: expected {3 * width * height} bytes, got {len(payload)}"
        )
    cloud = np.frombuffer(payload, dtype=np.uint8).astype(np.float64).reshape(-1, 3)
    return width, height, cloud


def save_image(path: str | os.PathLike, width: int, height: int, cloud: np.ndarray) -> None:
    """Write a (width*height, 3) cloud of 0..255 values as binary P6."""
    cloud = np.asarray(cloud)
    if cloud.shape != (width * height, 3):
        raise ValueError(f"cloud shape {cloud.shape} does not match {width}x{height} image")
    if np.min(cloud) < 0 or np.max(cloud) > 255:
        raise ValueError("pixel values must lie in [0, 255]")
    payload = np.rint(cloud).astype(np.uint8).tobytes()
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(payload)
