"""Motion-activity intensity descriptor.

The per-block magnitudes ``R = sqrt(x^2 + y^2)`` form the activity matrix.
Its population standard deviation over the block grid is the activity
intensity, quantised to five levels (very low .. very high).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .block_matching import SEARCHES, BlockGridSpec, MotionVectorField

# Upper bounds (exclusive) of levels 1-4; level 5 is open-ended.
INTENSITY_THRESHOLDS = (3.9, 10.7, 17.1, 32.0)

LEVEL_NAMES = {1: "very low", 2: "low", 3: "medium", 4: "high", 5: "very high"}


class EmptyField(ValueError):
    pass


class NegativeIntensity(ValueError):
    pass


@dataclass(frozen=True)
class ActivityDescriptor:
    magnitudes: np.ndarray = field(repr=False)
    average: float
    variance: float
    intensity: float
    level: int
    filtered: bool = False

    def to_dict(self) -> dict:
        return {
            "avg": self.average,
            "variance": self.variance,
            "intensity": self.intensity,
            "level": self.level,
            "filtered": self.filtered,
        }


def _grid(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    if m.size == 0:
        raise EmptyField("activity matrix is empty")
    return m


def activity_matrix(field: MotionVectorField | np.ndarray) -> np.ndarray:
    """Per-block vector magnitudes. Accepts a field or an ``(N, M, 2)`` array."""
    vec = field.vectors if isinstance(field, MotionVectorField) else np.asarray(field)
    if vec.size == 0:
        raise EmptyField("motion field has no blocks")
    v = vec.astype(np.float64)
    return np.hypot(v[..., 0], v[..., 1])


def activity_average(matrix) -> float:
    return float(np.mean(_grid(matrix)))


def low_activity_filter(matrix, average: float) -> np.ndarray:
    """Zero the entries strictly below ``average``; returns a new grid."""
    m = _grid(matrix)
    return np.where(m < average, 0.0, m)


def activity_intensity(matrix) -> tuple[float, float]:
    """Return ``(variance, intensity)``; population variance over the grid."""
    m = _grid(matrix)
    dev = m - m.mean()
    variance = float(np.mean(dev * dev))
    return variance, math.sqrt(variance)


def quantize_intensity(intensity: float, thresholds=INTENSITY_THRESHOLDS) -> int:
    """Map an intensity to level 1-5 using half-open bins ``[lo, hi)``."""
    if not intensity >= 0:
        raise NegativeIntensity(f"intensity must be >= 0, got {intensity}")
    return bisect_right(thresholds, intensity) + 1


def describe_field(
    field: MotionVectorField | np.ndarray, filter_low_activity: bool = False, thresholds=INTENSITY_THRESHOLDS
) -> ActivityDescriptor:
    mags = activity_matrix(field)
    if filter_low_activity:
        mags = low_activity_filter(mags, activity_average(mags))
    variance, intensity = activity_intensity(mags)
    return ActivityDescriptor(
        magnitudes=mags,
        average=activity_average(mags),
        variance=variance,
        intensity=intensity,
        level=quantize_intensity(intensity, thresholds),
        filtered=filter_low_activity,
    )


def describe_pair(
    current,
    reference,
    spec: BlockGridSpec | None = None,
    filter_low_activity: bool = False,
    *,
    algorithm: str = "arps",
    thresholds=INTENSITY_THRESHOLDS,
    backend=None,
) -> ActivityDescriptor:
    """Motion estimation followed by the descriptor for one frame pair."""
    field = SEARCHES[algorithm](current, reference, spec, backend=backend)
    return describe_field(field, filter_low_activity, thresholds)
