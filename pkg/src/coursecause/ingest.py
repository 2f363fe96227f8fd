"""Transcript CSV parsing, student eligibility filters, and cohort splitting.

The accepted input is a UTF-8 CSV with header
``student_id,course_id,term,grade,credits`` (term as ``SEASON YYYY``), plus a
plain-text degree roster of one student id per line. Every dropped data row is
reported with its line number and a reason; nothing is dropped silently.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable

from .domain import (
    Grade,
    Season,
    StudentHistory,
    Term,
    TranscriptRecord,
    grade_points,
)

REQUIRED_COLUMNS = ("student_id", "course_id", "term", "grade", "credits")


class IngestError(Exception):
    """Fatal ingest problem: bad header, bad configuration, bad boundaries."""


@dataclass(frozen=True)
class IngestConfig:
    graduated_only: bool = True
    drop_summer: bool = True
    min_consecutive_terms: int = 2
    allowed_department_prefix: str | None = None
    excluded_courses: frozenset[str] = frozenset()
    cohort_boundaries: tuple[tuple[str, Term, Term], ...] = ()

    def __post_init__(self) -> None:
        if self.min_consecutive_terms < 1:
            raise IngestError("min_consecutive_terms must be >= 1")
        prev_end: Term | None = None
        for label, start, end in self.cohort_boundaries:
            if end < start:
                raise IngestError(f"cohort {label!r} ends before it starts")
            if prev_end is not None and not (prev_end < start):
                raise IngestError(
                    f"cohort boundaries overlap or are out of order at {label!r}"
                )
            prev_end = end


@dataclass
class Cohort:
    """A labelled term range and the student histories assigned to it."""

    label: str
    histories: tuple[StudentHistory, ...]

    @cached_property
    def by_student(self) -> dict[str, StudentHistory]:
        return {h.student_id: h for h in self.histories}

    @cached_property
    def course_ids(self) -> tuple[str, ...]:
        return tuple(
            sorted({t.course_id for h in self.histories for t in h.takings})
        )


def _decode(source: bytes | IO[bytes]) -> io.StringIO:
    data = source if isinstance(source, bytes) else source.read()
    return io.StringIO(data.decode("utf-8"))


def parse_transcripts(
    source: bytes | IO[bytes], config: IngestConfig
) -> tuple[list[TranscriptRecord], list[tuple[int, str]]]:
    """Parse transcript CSV bytes into records plus per-line rejects.

    Row-level rules applied here: field shape, term/grade/credits validity,
    the summer-term drop, the department prefix, the excluded-course list,
    and duplicate (student, course, term) detection (first occurrence wins).
    Accepted + rejected row counts always equal the number of data rows.
    """
    reader = csv.reader(_decode(source))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("missing header row") from None
    header = [h.strip() for h in header]
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise IngestError(f"missing column: {col!r}")
    for col in header:
        if col not in REQUIRED_COLUMNS:
            raise IngestError(f"unknown column: {col!r}")
    positions = {col: header.index(col) for col in REQUIRED_COLUMNS}

    records: list[TranscriptRecord] = []
    rejects: list[tuple[int, str]] = []
    seen: set[tuple[str, str, int]] = set()
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            rejects.append((line, "blank row"))
            continue
        if len(row) != len(header):
            rejects.append((line, f"expected {len(header)} fields, got {len(row)}"))
            continue
        student_id = row[positions["student_id"]].strip()
        course_id = row[positions["course_id"]].strip()
        if not student_id or not course_id:
            rejects.append((line, "empty student_id or course_id"))
            continue
        try:
            term = Term.parse(row[positions["term"]].strip())
        except ValueError as exc:
            rejects.append((line, str(exc)))
            continue
        if config.drop_summer and term.season is Season.SUMMER:
            rejects.append((line, "summer term"))
            continue
        letter = row[positions["grade"]].strip().upper()
        try:
            grade_points(letter)
        except ValueError:
            rejects.append((line, f"non-letter grade: {letter!r}"))
            continue
        try:
            credits = float(row[positions["credits"]].strip())
        except ValueError:
            rejects.append((line, f"bad credits: {row[positions['credits']]!r}"))
            continue
        if not credits >= 0:
            rejects.append((line, f"negative credits: {credits!r}"))
            continue
        if (
            config.allowed_department_prefix is not None
            and not course_id.startswith(config.allowed_department_prefix)
        ):
            rejects.append((line, "course outside department prefix"))
            continue
        if course_id in config.excluded_courses:
            rejects.append((line, "excluded course"))
            continue
        key = (student_id, course_id, term.ordinal)
        if key in seen:
            rejects.append((line, "duplicate (student, course, term) row"))
            continue
        seen.add(key)
        records.append(
            TranscriptRecord(student_id, course_id, term, Grade(letter), credits)
        )
    return records, rejects


def load_roster(source: bytes | IO[bytes]) -> frozenset[str]:
    """Read a degree roster: one student id per line, blank lines ignored."""
    text = _decode(source).getvalue()
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def _has_consecutive_run(terms: Iterable[Term], run_length: int) -> bool:
    """True when the summer-free academic indices contain a run of adjacent
    semesters at least ``run_length`` long."""
    indices = sorted(
        {t.academic_index for t in terms if t.season is not Season.SUMMER}
    )
    if not indices:
        return False
    best = current = 1
    for prev, cur in zip(indices, indices[1:]):
        current = current + 1 if cur == prev + 1 else 1
        best = max(best, current)
    return best >= run_length


def apply_student_filters(
    records: list[TranscriptRecord],
    degree_roster: frozenset[str],
    config: IngestConfig,
) -> list[StudentHistory]:
    """Group records per student and keep only eligible students.

    Eligibility: on the degree roster (when ``graduated_only``), and at least
    ``min_consecutive_terms`` adjacent fall/spring semesters each holding a
    valid course. Returned histories are sorted by student id.
    """
    if config.graduated_only and not degree_roster:
        raise IngestError("graduated_only requires a non-empty degree roster")
    grouped: dict[str, list[TranscriptRecord]] = {}
    for record in records:
        grouped.setdefault(record.student_id, []).append(record)

    histories: list[StudentHistory] = []
    for student_id in sorted(grouped):
        if config.graduated_only and student_id not in degree_roster:
            continue
        rows = grouped[student_id]
        if not _has_consecutive_run(
            (r.term for r in rows), config.min_consecutive_terms
        ):
            continue
        histories.append(StudentHistory.from_records(student_id, rows))
    return histories


def split_cohorts(
    histories: list[StudentHistory], config: IngestConfig
) -> list[Cohort]:
    """Assign each student to the cohort containing their first term.

    Takings outside the assigned range are dropped; students starting outside
    every range are excluded entirely.
    """
    if not config.cohort_boundaries:
        raise IngestError("no cohort boundaries configured")
    buckets: dict[str, list[StudentHistory]] = {
        label: [] for label, _, _ in config.cohort_boundaries
    }
    for history in histories:
        first = history.first_term
        if first is None:
            continue
        for label, start, end in config.cohort_boundaries:
            if start <= first <= end:
                kept = tuple(
                    t for t in history.takings if start <= t.term <= end
                )
                buckets[label].append(StudentHistory(history.student_id, kept))
                break
    return [
        Cohort(label, tuple(buckets[label]))
        for label, _, _ in config.cohort_boundaries
    ]
