"""Shot boundaries from jumps in the motion-activity intensity.

Frames ``t`` and ``t + step`` form one analysed pair; pairs start every
``stride`` frames (``stride = step`` by default, i.e. disjoint pairs).
The absolute difference between consecutive pair intensities is compared
to a threshold, and each exceedance opens a new shot at the later pair's
start frame. The first frame of every shot is its key frame.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .block_matching import BlockGridSpec
from .frame_io import SourceDescriptor, read_frame
from .motion_activity import INTENSITY_THRESHOLDS, ActivityDescriptor, describe_pair


class TooFewFrames(ValueError):
    pass


class TooFewSamples(ValueError):
    pass


class EmptySignal(ValueError):
    pass


@dataclass(frozen=True)
class TimelineSample:
    t: int
    t_end: int
    descriptor: ActivityDescriptor

    @property
    def intensity(self) -> float:
        return self.descriptor.intensity

    @property
    def level(self) -> int:
        return self.descriptor.level


@dataclass(frozen=True)
class IntensityTimeline:
    step: int
    stride: int
    frame_count: int
    samples: tuple[TimelineSample, ...]

    @property
    def intensities(self) -> np.ndarray:
        return np.array([s.intensity for s in self.samples], dtype=np.float64)

    def to_rows(self):
        for s in self.samples:
            d = s.descriptor
            yield {
                "pair_start": s.t,
                "pair_end": s.t_end,
                "avg": d.average,
                "variance": d.variance,
                "intensity": d.intensity,
                "level": d.level,
            }


@dataclass(frozen=True)
class DiffSignal:
    t: np.ndarray
    d: np.ndarray

    def __len__(self):
        return len(self.t)

    def points(self):
        return [(int(a), float(b)) for a, b in zip(self.t, self.d)]


@dataclass(frozen=True)
class Shot:
    start: int
    end: int

    @property
    def key_frame(self) -> int:
        return self.start

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "key_frame": self.key_frame}


@dataclass(frozen=True)
class ShotList:
    boundaries: tuple[int, ...]
    shots: tuple[Shot, ...]
    threshold_used: float

    @property
    def key_frames(self) -> list[int]:
        return [s.key_frame for s in self.shots]

    def to_dict(self) -> dict:
        return {
            "boundaries": list(self.boundaries),
            "shots": [s.to_dict() for s in self.shots],
            "threshold_used": self.threshold_used,
        }


@dataclass(frozen=True)
class ThresholdPolicy:
    """Either a fixed threshold (``value``) or mean + ``alpha`` * stddev of the diffs."""

    value: float | None = None
    alpha: float | None = 3.0
    min_shot_gap: int = 8

    def __post_init__(self):
        if self.value is not None:
            if not self.value >= 0:
                raise ValueError(f"fixed threshold must be >= 0, got {self.value}")
            object.__setattr__(self, "alpha", None)
        elif self.alpha is None or not self.alpha > 0:
            raise ValueError(f"adaptive alpha must be > 0, got {self.alpha}")
        if self.min_shot_gap < 0:
            raise ValueError("min_shot_gap must be >= 0")

    @classmethod
    def fixed(cls, value: float, min_shot_gap: int = 8):
        return cls(value=value, alpha=None, min_shot_gap=min_shot_gap)

    @classmethod
    def adaptive(cls, alpha: float = 3.0, min_shot_gap: int = 8):
        return cls(value=None, alpha=alpha, min_shot_gap=min_shot_gap)

    @property
    def mode(self) -> str:
        return "fixed" if self.value is not None else "adaptive"

    def to_dict(self) -> dict:
        return {"mode": self.mode, "value": self.value, "alpha": self.alpha, "min_shot_gap": self.min_shot_gap}


def pair_starts(frame_count: int, step: int, stride: int | None = None) -> list[int]:
    stride = stride or step
    return list(range(0, max(frame_count - step, 0), stride))


def build_timeline(
    source: SourceDescriptor | list,
    spec: BlockGridSpec | None = None,
    step: int = 2,
    filter_low_activity: bool = False,
    *,
    stride: int | None = None,
    algorithm: str = "arps",
    thresholds=INTENSITY_THRESHOLDS,
    workers: int = 1,
    backend=None,
) -> IntensityTimeline:
    """Intensity of every ``(t, t + step)`` pair, frame ``t + step`` as current.

    ``source`` is an opened source or an in-memory list of frames.
    """
    if step < 1:
        raise ValueError("step must be >= 1")
    stride = stride or step
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if isinstance(source, SourceDescriptor):
        frame_count = source.frame_count

        def get(i):
            return read_frame(source, i)
    else:
        frames = list(source)
        frame_count = len(frames)
        get = frames.__getitem__
    if frame_count <= step:
        raise TooFewFrames(f"need more than {step} frames for step {step}, source has {frame_count}")

    starts = pair_starts(frame_count, step, stride)

    def work(t):
        desc = describe_pair(
            get(t + step), get(t), spec, filter_low_activity,
            algorithm=algorithm, thresholds=thresholds, backend=backend,
        )
        return TimelineSample(t, t + step, desc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = tuple(pool.map(work, starts))  # map preserves order
    else:
        samples = tuple(work(t) for t in starts)
    return IntensityTimeline(step=step, stride=stride, frame_count=frame_count, samples=samples)


def diff_signal(timeline: IntensityTimeline | list) -> DiffSignal:
    """``|σ_k - σ_{k-1}|`` stamped with sample ``k``'s start frame.

    Also accepts a list of ``(t, intensity)`` pairs.
    """
    if isinstance(timeline, IntensityTimeline):
        t = np.array([s.t for s in timeline.samples], dtype=np.int64)
        sigma = timeline.intensities
    else:
        pairs = list(timeline)
        t = np.array([p[0] for p in pairs], dtype=np.int64)
        sigma = np.array([p[1] for p in pairs], dtype=np.float64)
    if len(t) < 2:
        raise TooFewSamples(f"need at least 2 timeline samples, got {len(t)}")
    return DiffSignal(t=t[1:], d=np.abs(np.diff(sigma)))


def resolve_threshold(signal: DiffSignal, policy: ThresholdPolicy) -> float:
    if policy.value is not None:
        return float(policy.value)
    if len(signal) == 0:
        raise EmptySignal("adaptive threshold needs a non-empty diff signal")
    d = np.asarray(signal.d, dtype=np.float64)
    return float(d.mean() + policy.alpha * d.std())


def shots_from_boundaries(boundaries, frame_count: int) -> tuple[Shot, ...]:
    starts = [0] + [b for b in boundaries if 0 < b < frame_count]
    ends = [s - 1 for s in starts[1:]] + [frame_count - 1]
    return tuple(Shot(s, e) for s, e in zip(starts, ends))


def detect_shots(
    signal: DiffSignal, threshold: float, policy: ThresholdPolicy | None = None, frame_count: int = 0
) -> ShotList:
    """Threshold the diff signal; strict ``d > threshold``.

    A proposal within ``min_shot_gap`` frames of the last accepted
    boundary merges into it, keeping whichever has the larger diff (the
    earlier one on ties).
    """
    if not threshold >= 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    gap = (policy or ThresholdPolicy()).min_shot_gap
    accepted: list[list] = []
    for t, d in zip(signal.t, signal.d):
        t, d = int(t), float(d)
        if not d > threshold or not 0 < t < frame_count:
            continue
        if accepted and t - accepted[-1][0] < gap:
            if d > accepted[-1][1]:
                accepted[-1] = [t, d]
            continue
        accepted.append([t, d])
    boundaries = tuple(t for t, _ in accepted)
    return ShotList(boundaries, shots_from_boundaries(boundaries, frame_count), float(threshold))


def detect(timeline: IntensityTimeline, policy: ThresholdPolicy | None = None) -> tuple[ShotList, DiffSignal]:
    """Diff, resolve the threshold and detect in one call.

    A timeline with a single sample has no diffs and yields one shot.
    """
    policy = policy or ThresholdPolicy()
    if len(timeline.samples) < 2:
        signal = DiffSignal(np.zeros(0, dtype=np.int64), np.zeros(0))
    else:
        signal = diff_signal(timeline)
    if len(signal) == 0 and policy.value is None:
        threshold = math.inf
    else:
        threshold = resolve_threshold(signal, policy)
    return detect_shots(signal, threshold, policy, timeline.frame_count), signal


TIMELINE_CSV_COLUMNS = ("pair_start", "pair_end", "avg", "variance", "intensity", "level")


def write_timeline_csv(timeline: IntensityTimeline, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=TIMELINE_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(timeline.to_rows())


def write_signal_csv(signal: DiffSignal, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("t", "diff"))
    for t, d in signal.points():
        writer.writerow((t, repr(d)))


def write_boundaries(shots: ShotList, fh) -> None:
    for b in shots.boundaries:
        fh.write(f"{b}\n")
