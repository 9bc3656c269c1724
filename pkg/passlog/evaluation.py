"""Score detections against ground truth with the counts of the classic vehicle-counting table.

e = true pass-bys (events), d = detections, p = false positives, n = false negatives, and the efficacy
η = d - p. Each count is also given relative to e as 100·a/e, so 139 detections of 141 vehicles read 98.58 %.
"""

import bisect
from collections.abc import Sequence
from typing import NamedTuple, Self

from pydantic import BaseModel, Field, computed_field, model_validator

DEFAULT_TOLERANCE_S = 2.0


class MatchResult(NamedTuple):
    pairs: list[tuple[float, float]]  # (detection, truth)
    unmatched_detections: list[float]
    unmatched_truth: list[float]


def match(detections: Sequence[float], truth: Sequence[float], tolerance_s: float = DEFAULT_TOLERANCE_S) -> MatchResult:
    """Greedy one-to-one matching, closest pairs first, among pairs at most `tolerance_s` apart.

    Ties on |Δt| go to the later pair (larger time sum), which keeps the result identical when the two lists
    swap roles and when either list is permuted.
    """
    if tolerance_s <= 0:
        raise ValueError(f"Match tolerance must be positive, got {tolerance_s}")

    sorted_detections = sorted(detections)
    sorted_truth = sorted(truth)
    candidates = list[tuple[float, float, int, int]]()
    for i, detection in enumerate(sorted_detections):
        lo = bisect.bisect_left(sorted_truth, detection - tolerance_s)
        hi = bisect.bisect_right(sorted_truth, detection + tolerance_s)
        for j in range(lo, hi):
            truth_time = sorted_truth[j]
            candidates.append((abs(detection - truth_time), -(detection + truth_time), i, j))
    candidates.sort()

    used_detections = set[int]()
    used_truth = set[int]()
    pairs = list[tuple[float, float]]()
    for _, _, i, j in candidates:
        if i not in used_detections and j not in used_truth:
            used_detections.add(i)
            used_truth.add(j)
            pairs.append((sorted_detections[i], sorted_truth[j]))

    pairs.sort()
    return MatchResult(
        pairs=pairs,
        unmatched_detections=[d for i, d in enumerate(sorted_detections) if i not in used_detections],
        unmatched_truth=[t for j, t in enumerate(sorted_truth) if j not in used_truth],
    )


class EvalReport(BaseModel, frozen=True):
    events_e: int = Field(ge=0)
    detections_d: int = Field(ge=0)
    false_positives_p: int = Field(ge=0)
    false_negatives_n: int = Field(ge=0)
    match_tolerance_s: float = Field(gt=0)

    @computed_field
    @property
    def efficacy_eta(self) -> int:
        return self.detections_d - self.false_positives_p

    @computed_field
    @property
    def ratios(self) -> dict[str, float] | None:
        """Each count as a percentage of the true events; absent when there are none."""
        if not self.events_e:
            return None
        counts = {
            "e": self.events_e,
            "d": self.detections_d,
            "p": self.false_positives_p,
            "n": self.false_negatives_n,
            "eta": self.efficacy_eta,
        }
        return {key: 100 * count / self.events_e for key, count in counts.items()}

    @model_validator(mode="after")
    def _check_matching_identity(self) -> Self:
        if self.detections_d - self.false_positives_p != self.events_e - self.false_negatives_n:
            raise ValueError(
                f"Inconsistent counts: d - p = {self.detections_d - self.false_positives_p} but "
                f"e - n = {self.events_e - self.false_negatives_n}"
            )
        if self.efficacy_eta < 0:
            raise ValueError("More false positives than detections")
        return self

    @classmethod
    def from_counts(cls, e: int, d: int, p: int, n: int, tolerance_s: float = DEFAULT_TOLERANCE_S) -> "EvalReport":
        return cls(
            events_e=e, detections_d=d, false_positives_p=p, false_negatives_n=n, match_tolerance_s=tolerance_s
        )


def report(detections: Sequence[float], truth: Sequence[float], tolerance_s: float = DEFAULT_TOLERANCE_S) -> EvalReport:
    matched = match(detections, truth, tolerance_s)
    return EvalReport(
        events_e=len(truth),
        detections_d=len(detections),
        false_positives_p=len(matched.unmatched_detections),
        false_negatives_n=len(matched.unmatched_truth),
        match_tolerance_s=tolerance_s,
    )
