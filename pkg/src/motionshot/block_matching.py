"""Macroblock motion estimation: ARPS, exhaustive search, compensation, PSNR.

Vectors follow the convention that block ``(i, j)`` of the current frame,
whose top-left pixel is ``(row, col) = (i*B, j*B)``, best matches the
reference block whose top-left pixel is ``(row + y, col + x)``.

Ties between equal-SAD candidates resolve to the smallest ``|x|+|y|``,
then the smallest ``y``, then the smallest ``x``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import get_kernels
from ._pure import stage1_points
from .frame_io import DimensionMismatch, Frame, FrameTooSmall


@dataclass(frozen=True)
class BlockGridSpec:
    """Macroblock side and search window radius ``p`` (per axis)."""

    block_size: int = 16
    search_range: int = 7

    def __post_init__(self):
        if self.block_size < 4:
            raise ValueError(f"block_size must be >= 4, got {self.block_size}")
        if self.search_range < 1:
            raise ValueError(f"search_range must be >= 1, got {self.search_range}")

    def grid_shape(self, width: int, height: int) -> tuple[int, int]:
        """``(rows N, cols M)`` of full blocks; remainders are cropped."""
        return height // self.block_size, width // self.block_size

    def usable_size(self, width: int, height: int) -> tuple[int, int]:
        rows, cols = self.grid_shape(width, height)
        return cols * self.block_size, rows * self.block_size

    @property
    def window_points(self) -> int:
        return (2 * self.search_range + 1) ** 2


@dataclass(frozen=True)
class MotionVectorField:
    """Per-block motion vectors for one frame pair.

    ``vectors[i, j] = (x, y)``; ``cost`` holds the final SAD and
    ``search_points`` the number of candidates evaluated per block.
    ``origin`` is the ``(row, col)`` block offset for fields cut out of a
    larger grid with :meth:`subgrid`.
    """

    spec: BlockGridSpec
    width: int
    height: int
    vectors: np.ndarray = field(repr=False)
    cost: np.ndarray = field(repr=False)
    search_points: np.ndarray = field(repr=False)
    algorithm: str = "arps"
    origin: tuple[int, int] = (0, 0)

    @property
    def rows(self) -> int:
        return self.vectors.shape[0]

    @property
    def cols(self) -> int:
        return self.vectors.shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.vectors[..., 0]

    @property
    def y(self) -> np.ndarray:
        return self.vectors[..., 1]

    def subgrid(self, rows: slice = slice(None), cols: slice = slice(None)) -> "MotionVectorField":
        r0 = rows.indices(self.rows)[0]
        c0 = cols.indices(self.cols)[0]
        return MotionVectorField(
            spec=self.spec,
            width=self.width,
            height=self.height,
            vectors=self.vectors[rows, cols].copy(),
            cost=self.cost[rows, cols].copy(),
            search_points=self.search_points[rows, cols].copy(),
            algorithm=self.algorithm,
            origin=(self.origin[0] + r0, self.origin[1] + c0),
        )

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "block_size": self.spec.block_size,
            "search_range": self.spec.search_range,
            "width": self.width,
            "height": self.height,
            "grid_rows": self.rows,
            "grid_cols": self.cols,
            "blocks": list(iter_field_rows(self)),
        }

    @classmethod
    def from_vectors(cls, vectors, spec: BlockGridSpec | None = None, algorithm: str = "given"):
        """Wrap a bare ``(N, M, 2)`` vector grid, e.g. for descriptor tests."""
        spec = spec or BlockGridSpec()
        vec = np.asarray(vectors, dtype=np.int32)
        if vec.ndim != 3 or vec.shape[2] != 2:
            raise ValueError(f"vectors must have shape (N, M, 2), got {vec.shape}")
        n, m = vec.shape[:2]
        return cls(
            spec=spec,
            width=m * spec.block_size,
            height=n * spec.block_size,
            vectors=vec,
            cost=np.zeros((n, m), dtype=np.int64),
            search_points=np.ones((n, m), dtype=np.int32),
            algorithm=algorithm,
        )


@dataclass(frozen=True)
class SearchStats:
    avg_search_points: float
    total_sad: int

    def to_dict(self) -> dict:
        return {"avg_search_points": self.avg_search_points, "total_sad": self.total_sad}


def _plane(frame) -> np.ndarray:
    return frame.luma if isinstance(frame, Frame) else np.ascontiguousarray(frame, dtype=np.uint8)


def _check_pair(current, reference, spec: BlockGridSpec):
    cur, ref = _plane(current), _plane(reference)
    if cur.shape != ref.shape:
        raise DimensionMismatch(f"frame shapes differ: {cur.shape} vs {ref.shape}")
    rows, cols = spec.grid_shape(cur.shape[1], cur.shape[0])
    if rows < 1 or cols < 1:
        raise FrameTooSmall(f"{cur.shape[1]}x{cur.shape[0]} frame holds no {spec.block_size}px block")
    return np.ascontiguousarray(cur), np.ascontiguousarray(ref)


def _search(kernel_name, current, reference, spec, backend):
    spec = spec or BlockGridSpec()
    cur, ref = _check_pair(current, reference, spec)
    kern = getattr(get_kernels(backend), kernel_name)
    vec, cost, pts = kern(cur, ref, spec.block_size, spec.search_range)
    return MotionVectorField(
        spec=spec,
        width=cur.shape[1],
        height=cur.shape[0],
        vectors=np.asarray(vec),
        cost=np.asarray(cost),
        search_points=np.asarray(pts),
        algorithm="es" if kernel_name == "es_field" else "arps",
    )


def exhaustive_search(current, reference, spec: BlockGridSpec | None = None, *, backend=None):
    """Full-window search; the exact SAD minimiser over in-frame candidates."""
    return _search("es_field", current, reference, spec, backend)


def arps_search(current, reference, spec: BlockGridSpec | None = None, *, backend=None):
    """Adaptive rood pattern search.

    Blocks are visited in raster order. The left neighbour's vector is the
    prediction; the first stage probes the origin, a rood of arm length
    ``max(|px|, |py|)`` (2 when the prediction is zero or absent) around
    the origin, and the predicted point. A unit rood then walks downhill
    until its center is the best point. Candidates already scored for the
    block are not scored again.
    """
    return _search("arps_field", current, reference, spec, backend)


SEARCHES = {"arps": arps_search, "es": exhaustive_search}


def motion_compensate(reference, field: MotionVectorField) -> Frame:
    """Predict the current frame from ``reference`` blocks moved by ``field``.

    Pixels outside the block grid are copied from ``reference``.
    """
    ref = _plane(reference)
    if field.origin != (0, 0) or ref.shape != (field.height, field.width):
        raise DimensionMismatch(
            f"field covers {field.width}x{field.height}, reference is {ref.shape[1]}x{ref.shape[0]}"
        )
    b = field.spec.block_size
    out = ref.copy()
    for i in range(field.rows):
        for j in range(field.cols):
            x, y = (int(v) for v in field.vectors[i, j])
            r, c = i * b + y, j * b + x
            out[i * b:(i + 1) * b, j * b:(j + 1) * b] = ref[r:r + b, c:c + b]
    index = reference.index if isinstance(reference, Frame) else 0
    return Frame(index, out)


def psnr(a, b, block_size: int | None = None) -> float:
    """Peak signal-to-noise ratio in dB for 8-bit planes.

    With ``block_size`` the comparison is limited to the full-block area.
    Identical inputs give ``math.inf``.
    """
    pa, pb = _plane(a), _plane(b)
    if pa.shape != pb.shape:
        raise DimensionMismatch(f"frame shapes differ: {pa.shape} vs {pb.shape}")
    if block_size:
        h = pa.shape[0] // block_size * block_size
        w = pa.shape[1] // block_size * block_size
        pa, pb = pa[:h, :w], pb[:h, :w]
    diff = pa.astype(np.float64) - pb.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def search_stats(field: MotionVectorField) -> SearchStats:
    return SearchStats(
        avg_search_points=float(np.mean(field.search_points)),
        total_sad=int(np.sum(field.cost)),
    )


FIELD_CSV_COLUMNS = ("i", "j", "x", "y", "sad", "points")


def iter_field_rows(field: MotionVectorField):
    r0, c0 = field.origin
    for i in range(field.rows):
        for j in range(field.cols):
            yield {
                "i": r0 + i,
                "j": c0 + j,
                "x": int(field.vectors[i, j, 0]),
                "y": int(field.vectors[i, j, 1]),
                "sad": int(field.cost[i, j]),
                "points": int(field.search_points[i, j]),
            }


def write_field_csv(field: MotionVectorField, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=FIELD_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(iter_field_rows(field))


def read_field_csv(fh, spec: BlockGridSpec | None = None) -> MotionVectorField:
    rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError("empty motion field CSV")
    n = max(int(r["i"]) for r in rows) + 1
    m = max(int(r["j"]) for r in rows) + 1
    vec = np.zeros((n, m, 2), dtype=np.int32)
    cost = np.zeros((n, m), dtype=np.int64)
    pts = np.zeros((n, m), dtype=np.int32)
    for r in rows:
        i, j = int(r["i"]), int(r["j"])
        vec[i, j] = (int(r["x"]), int(r["y"]))
        cost[i, j] = int(r["sad"])
        pts[i, j] = int(r["points"])
    spec = spec or BlockGridSpec()
    return MotionVectorField(spec, m * spec.block_size, n * spec.block_size, vec, cost, pts, "csv")
