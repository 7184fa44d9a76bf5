"""Precision / recall / false-positive scoring of detected shot boundaries."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

TRANSITION_KINDS = ("cut", "gradual")


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class GroundTruth:
    boundaries: tuple[int, ...]
    kinds: tuple[str | None, ...] = ()

    def __post_init__(self):
        b = self.boundaries
        if any(x < 0 for x in b) or any(b2 <= b1 for b1, b2 in zip(b, b[1:])):
            raise ValueError("ground-truth boundaries must be non-negative and strictly increasing")

    @classmethod
    def from_frames(cls, frames) -> "GroundTruth":
        return cls(tuple(sorted(set(int(f) for f in frames))))

    def __len__(self):
        return len(self.boundaries)


def parse_boundaries(text: str, source: str = "<string>") -> GroundTruth:
    """Parse ``frame_index[,kind]`` lines; ``#`` starts a comment."""
    entries: dict[int, str | None] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        idx_txt, _, kind = (part.strip() for part in line.partition(","))
        try:
            idx = int(idx_txt)
        except ValueError:
            raise ParseError(f"{source}:{lineno}: not a frame index: {idx_txt!r}") from None
        if idx < 0:
            raise ParseError(f"{source}:{lineno}: negative frame index {idx}")
        kind = kind.lower() or None
        if kind is not None and kind not in TRANSITION_KINDS:
            raise ParseError(f"{source}:{lineno}: unknown transition kind {kind!r}")
        entries.setdefault(idx, kind)
    ordered = sorted(entries)
    return GroundTruth(tuple(ordered), tuple(entries[i] for i in ordered))


def load_ground_truth(path) -> GroundTruth:
    path = Path(path)
    return parse_boundaries(path.read_text(), str(path))


def load_detected(path) -> list[int]:
    """Read detector output: a shot-list JSON document or a plain boundary list."""
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
            return sorted(set(int(b) for b in doc["boundaries"]))
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"{path}: not a shot-list JSON document: {exc}") from None
    return list(parse_boundaries(text, str(path)).boundaries)


def match_boundaries(detected, reference, tolerance: int = 4) -> list[tuple[int, int]]:
    """Greedy in-order one-to-one matching within ``±tolerance`` frames.

    On sorted points with a symmetric window this yields a maximum
    cardinality matching.
    """
    det = sorted(detected)
    ref = sorted(reference.boundaries if isinstance(reference, GroundTruth) else reference)
    matches = []
    i = j = 0
    while i < len(det) and j < len(ref):
        if abs(det[i] - ref[j]) <= tolerance:
            matches.append((det[i], ref[j]))
            i += 1
            j += 1
        elif det[i] < ref[j]:
            i += 1
        else:
            j += 1
    return matches


@dataclass(frozen=True)
class EvalReport:
    reported: int
    in_reference: int
    correct: int
    tolerance: int
    matches: tuple[tuple[int, int], ...] = field(default=(), repr=False)

    @property
    def false(self) -> int:
        return self.reported - self.correct

    @property
    def missed(self) -> int:
        return self.in_reference - self.correct

    @property
    def precision(self) -> float:
        return self.correct / self.reported if self.reported else 1.0

    @property
    def recall(self) -> float:
        return self.correct / self.in_reference if self.in_reference else 1.0

    @property
    def fp_rate(self) -> float:
        return self.false / self.reported if self.reported else 0.0

    def to_dict(self) -> dict:
        return {
            "reported": self.reported,
            "in_reference": self.in_reference,
            "correct": self.correct,
            "false": self.false,
            "missed": self.missed,
            "precision": self.precision,
            "recall": self.recall,
            "fp_rate": self.fp_rate,
            "tolerance": self.tolerance,
            "matches": [list(m) for m in self.matches],
        }


def score(detected, reference, tolerance: int = 4) -> EvalReport:
    if not isinstance(reference, GroundTruth):
        reference = GroundTruth.from_frames(reference)
    det = sorted(set(int(d) for d in detected))
    matches = match_boundaries(det, reference, tolerance)
    return EvalReport(
        reported=len(det),
        in_reference=len(reference),
        correct=len(matches),
        tolerance=tolerance,
        matches=tuple(matches),
    )


def percent(num: int, den: int, vacuous: float) -> str:
    """Percentage truncated (not rounded) to two decimals, e.g. 8/11 -> '72.72%'."""
    if den == 0:
        hundredths = int(round(vacuous * 10000))
    else:
        hundredths = num * 10000 // den
    return f"{hundredths // 100}.{hundredths % 100:02d}%"


def format_report(report: EvalReport, label: str = "video") -> str:
    """Aligned table with Precision / Recall / FP columns plus the raw counts."""
    cells = [
        ("Video", label),
        ("Precision", percent(report.correct, report.reported, 1.0)),
        ("Recall", percent(report.correct, report.in_reference, 1.0)),
        ("FP", percent(report.false, report.reported, 0.0)),
        ("Reported", str(report.reported)),
        ("Reference", str(report.in_reference)),
        ("Correct", str(report.correct)),
        ("False", str(report.false)),
        ("Missed", str(report.missed)),
    ]
    widths = [max(len(h), len(v)) for h, v in cells]
    head = "  ".join(h.ljust(w) for (h, _), w in zip(cells, widths))
    row = "  ".join(v.ljust(w) for (_, v), w in zip(cells, widths))
    return f"{head.rstrip()}\n{row.rstrip()}\n"
