"""Plain-text and PGM serialisation of scenes, rasters, measurements and fields.

Raster CSVs start with one line ``width,height,step`` giving the site
extent and cell size in metres, followed by one comma-separated line per
raster row (row 0 at y = 0).  Floats are written with 17 significant
digits so they read back bit-identical.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

import numpy as np

from .channel import Measurement
from .env import Box, SceneConfig, UrbanMap
from .grid import LogOddsField

__all__ = [
    "write_raster_csv",
    "read_raster_csv",
    "write_pgm",
    "read_pgm",
    "write_buildings",
    "read_buildings",
    "write_measurements",
    "read_measurements",
    "write_field_text",
]


def _fmt(v: float) -> str:
    return repr(float(v))


def write_raster_csv(path, values: np.ndarray, scene: SceneConfig) -> None:
    values = np.asarray(values)
    integral = np.issubdtype(values.dtype, np.integer) or values.dtype == bool
    with open(path, "w") as fh:
        fh.write(f"{_fmt(scene.width)},{_fmt(scene.length)},{_fmt(scene.grid_step)}\n")
        for row in values:
            if integral:
                fh.write(",".join(str(int(v)) for v in row))
            else:
                fh.write(",".join(format(float(v), ".17g") for v in row))
            fh.write("\n")


def read_raster_csv(path) -> tuple[np.ndarray, tuple[float, float, float]]:
    """Return (values, (width, length, step)).

    Integer-only rasters come back as uint8, anything else as float64.
    """
    with open(path) as fh:
        header = fh.readline().strip()
        try:
            width, length, step = (float(v) for v in header.split(","))
        except ValueError as exc:
            raise ValueError(f"{path}: bad raster header {header!r}") from exc
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if rows and all("." not in v and "e" not in v.lower() for r in rows for v in r):
        values = np.array(rows, dtype=np.int64).astype(np.uint8)
    else:
        values = np.array(rows, dtype=float)
    return values, (width, length, step)


def write_pgm(path, values: np.ndarray) -> None:
    """8-bit binary PGM; values in [0, 1] map to 0..255, north (max y) up."""
    img = np.rint(np.clip(np.asarray(values, dtype=float), 0, 1) * 255).astype(np.uint8)
    img = np.flipud(img)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a P5 file written by :func:`write_pgm` back into raster row order."""
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end].decode("ascii"))
        pos = end
    if tokens[0] != "P5" or tokens[3] != "255":
        raise ValueError(f"{path}: not an 8-bit P5 image")
    w, h = int(tokens[1]), int(tokens[2])
    img = np.frombuffer(data[pos + 1:pos + 1 + w * h], dtype=np.uint8).reshape(h, w)
    return np.flipud(img).copy()


def write_buildings(path, urban: UrbanMap) -> None:
    with open(path, "w") as fh:
        if urban.seed is not None:
            fh.write(f"# seed {urban.seed}\n")
        for b in urban.buildings:
            fh.write(" ".join(_fmt(v) for v in b) + "\n")


def read_buildings(path) -> UrbanMap:
    boxes, seed = [], None
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "seed":
                seed = int(parts[1])
            continue
        vals = line.split()
        if len(vals) != 5:
            raise ValueError(f"{path}:{n}: expected 5 values, got {len(vals)}")
        boxes.append(Box(*(float(v) for v in vals)))
    return UrbanMap(tuple(boxes), seed)


def write_measurements(path, measurements: Iterable[Measurement]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "x", "y", "z_dB"])
        for m in measurements:
            w.writerow([m.n, _fmt(m.x), _fmt(m.y), _fmt(m.z)])


def read_measurements(path) -> list[Measurement]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = {"n", "x", "y", "z_dB"} - set(reader.fieldnames)
        if missing:
            raise ValueError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        return [Measurement(int(r["n"]), float(r["x"]), float(r["y"]), float(r["z_dB"]))
                for r in reader]


def write_field_text(path, fld: LogOddsField) -> None:
    """Debug dump: one ``direction radius_index log_odds`` line per polar sample."""
    with open(path, "w") as fh:
        for j in range(fld.spec.direction_count):
            for i in range(int(fld.spec.sample_counts[j])):
                fh.write(f"{j} {i} {float(fld.log_odds[j, i])!r}\n")
