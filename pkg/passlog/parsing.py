"""Delimited text files: detections, ground truth, stage traces, and range / list arguments.

Every file has a header line, uses `,` as delimiter and `.` as decimal mark, and is written as UTF-8 with
LF line endings. Floats are written with `repr`, so reading back what was written is lossless.
"""

import csv
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from passlog.type_defs import DetectionEvent, FloatArray, GroundTruth, PassByEvent, TimeRange

DETECTIONS_HEADER = ("time_s", "w_level")
TRUTH_HEADER = ("t0_s", "v_mps", "d_m", "source_level")
TRACE_HEADER = ("time_s", "value")


class TableParseError(ValueError):
    def __init__(self, path: Path, line: int, reason: str) -> None:
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line


def _format(value: float) -> str:
    return repr(float(value))


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_format(value) for value in row] for row in rows)


def _read_rows(
    path: Path, allowed_headers: Sequence[Sequence[str]]
) -> Iterator[tuple[int, tuple[str, ...], list[float]]]:
    """Yield (line number, header, values) for each data row of `path`."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(cell.strip() for cell in next(reader))
        except StopIteration:
            raise TableParseError(path, 1, "missing header line") from None
        if header not in {tuple(h) for h in allowed_headers}:
            expected = " or ".join(",".join(h) for h in allowed_headers)
            raise TableParseError(path, 1, f"unexpected header {','.join(header)!r} (expected {expected})")

        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise TableParseError(path, line, f"expected {len(header)} column(s), got {len(row)}")
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise TableParseError(path, line, f"not a number ({exc})") from None
            if not all(np.isfinite(values)):
                raise TableParseError(path, line, "value is not finite")
            yield line, header, values


def write_detections(path: Path, events: Sequence[DetectionEvent]) -> None:
    _write_rows(path, DETECTIONS_HEADER, ((event.time_s, event.w_level) for event in events))


def read_detections(path: Path) -> list[float]:
    """Detection times (seconds) from a detections file."""
    return [values[0] for _, _, values in _read_rows(path, [DETECTIONS_HEADER])]


def write_ground_truth(path: Path, truth: GroundTruth) -> None:
    _write_rows(path, TRUTH_HEADER, ((e.t0_s, e.v_mps, e.d_m, e.source_level) for e in truth.events))


def read_ground_truth(path: Path) -> GroundTruth:
    """Read pass-bys from a full truth file, or from a single `t0_s` column (manual annotation)."""
    events = list[PassByEvent]()
    for line, header, values in _read_rows(path, [TRUTH_HEADER, TRUTH_HEADER[:1]]):
        try:
            events.append(PassByEvent(**dict(zip(header, values))))
        except ValidationError as exc:
            reason = "; ".join(f"{'.'.join(map(str, error['loc']))}: {error['msg']}" for error in exc.errors())
            raise TableParseError(path, line, reason) from None
    return GroundTruth(events=events)


def write_trace(path: Path, times: FloatArray, values: FloatArray) -> None:
    _write_rows(path, TRACE_HEADER, zip(times.tolist(), values.tolist()))


def parse_time_ranges(text: str) -> list[TimeRange]:
    """Parse `start:end[,start:end...]` (seconds) into a list of ranges."""
    ranges = list[TimeRange]()
    for chunk in text.split(","):
        if not chunk.strip():
            continue
        try:
            start, end = (float(part) for part in chunk.split(":"))
        except ValueError:
            raise ValueError(f"Invalid time range {chunk.strip()!r} (expected start:end in seconds)") from None
        ranges.append((start, end))
    return ranges


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"Invalid list of numbers {text!r} (expected comma-separated values)") from None
