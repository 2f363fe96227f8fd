"""Core vocabulary: academic terms, letter grades, transcript rows, student
histories, and the pre-treatment covariates derived from them.

Everything here is immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import enum
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property, total_ordering


class Season(enum.IntEnum):
    """Within-year term offset; the value is the position inside the year."""

    SPRING = 0
    SUMMER = 1
    FALL = 2


@total_ordering
@dataclass(frozen=True)
class Term:
    """A (year, season) pair with a total order given by its ordinal."""

    year: int
    season: Season

    @property
    def ordinal(self) -> int:
        return 3 * self.year + int(self.season)

    @property
    def academic_index(self) -> int:
        """Position in the summer-free SPRING/FALL sequence.

        Adjacent values are consecutive academic semesters. Undefined for
        summer terms.
        """
        if self.season is Season.SUMMER:
            raise ValueError("summer terms have no academic sequence position")
        return 2 * self.year + (1 if self.season is Season.FALL else 0)

    def __lt__(self, other: "Term") -> bool:
        return self.ordinal < other.ordinal

    def __str__(self) -> str:
        return f"{self.season.name} {self.year}"

    @classmethod
    def parse(cls, text: str) -> "Term":
        """Parse a ``SEASON YYYY`` token such as ``FALL 2011`` (any case)."""
        parts = text.split()
        if len(parts) != 2:
            raise ValueError(f"malformed term: {text!r}")
        season_token, year_token = parts
        try:
            season = Season[season_token.upper()]
        except KeyError:
            raise ValueError(f"unknown season: {season_token!r}") from None
        try:
            year = int(year_token)
        except ValueError:
            raise ValueError(f"bad year: {year_token!r}") from None
        return cls(year, season)


# Fixed 4.0 scale with thirds; order is strictly decreasing in points.
GRADE_SCALE: tuple[tuple[str, float], ...] = (
    ("A", 4.000),
    ("A-", 3.667),
    ("B+", 3.333),
    ("B", 3.000),
    ("B-", 2.667),
    ("C+", 2.333),
    ("C", 2.000),
    ("C-", 1.667),
    ("D+", 1.333),
    ("D", 1.000),
    ("F", 0.000),
)
GRADE_POINTS: dict[str, float] = dict(GRADE_SCALE)
GRADE_LETTERS: tuple[str, ...] = tuple(GRADE_POINTS)

# Point values ascending, for nearest-letter snapping.
_LATTICE = sorted(GRADE_POINTS.items(), key=lambda kv: kv[1])
_LATTICE_MIDPOINTS = [
    (lo[1] + hi[1]) / 2.0 for lo, hi in zip(_LATTICE, _LATTICE[1:])
]

C_POINTS = GRADE_POINTS["C"]


def grade_points(letter: str) -> float:
    """Map a letter grade to its grade points on the fixed 0-4 scale."""
    try:
        return GRADE_POINTS[letter]
    except KeyError:
        raise ValueError(f"unknown grade letter: {letter!r}") from None


def nearest_letter(points: float) -> str:
    """Letter whose point value is closest to ``points``; ties snap upward."""
    idx = bisect_right(_LATTICE_MIDPOINTS, points)
    return _LATTICE[idx][0]


@dataclass(frozen=True)
class Grade:
    """A letter grade and its point value (derived, never stored raw)."""

    letter: str
    points: float = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", grade_points(self.letter))

    @property
    def above_c(self) -> bool:
        return self.points > C_POINTS


@dataclass(frozen=True)
class TranscriptRecord:
    """One accepted transcript row: a graded course taking."""

    student_id: str
    course_id: str
    term: Term
    grade: Grade
    credits: float

    def __post_init__(self) -> None:
        if not self.credits >= 0:
            raise ValueError(f"negative credits: {self.credits!r}")


@dataclass(frozen=True)
class Taking:
    """One element of a student history (record minus the student id)."""

    course_id: str
    term: Term
    grade: Grade
    credits: float


@dataclass(frozen=True)
class StudentHistory:
    """Term-ordered course takings of one student.

    Takings are sorted by (term ordinal, course id); retakes in later terms
    are distinct entries, but duplicate (course, term) pairs are invalid.
    """

    student_id: str
    takings: tuple[Taking, ...]

    def __post_init__(self) -> None:
        ordered = tuple(
            sorted(self.takings, key=lambda t: (t.term.ordinal, t.course_id))
        )
        keys = [(t.course_id, t.term) for t in ordered]
        if len(set(keys)) != len(keys):
            raise ValueError(
                f"duplicate (course, term) taking for student {self.student_id!r}"
            )
        object.__setattr__(self, "takings", ordered)

    @classmethod
    def from_records(
        cls, student_id: str, records: list[TranscriptRecord]
    ) -> "StudentHistory":
        return cls(
            student_id,
            tuple(Taking(r.course_id, r.term, r.grade, r.credits) for r in records),
        )

    @property
    def first_term(self) -> Term | None:
        return self.takings[0].term if self.takings else None

    def takings_before(self, term: Term) -> tuple[Taking, ...]:
        return tuple(t for t in self.takings if t.term < term)

    @cached_property
    def by_course(self) -> dict[str, tuple[Taking, ...]]:
        """Course id -> attempts in term order."""
        index: dict[str, list[Taking]] = {}
        for t in self.takings:
            index.setdefault(t.course_id, []).append(t)
        return {c: tuple(ts) for c, ts in index.items()}

    def attempts_before(self, course_id: str, term: Term) -> tuple[Taking, ...]:
        return tuple(
            t for t in self.by_course.get(course_id, ()) if t.term < term
        )


@dataclass(frozen=True)
class CovariateVector:
    """Pre-treatment similarity features of a student at a reference term."""

    gpa: float
    total_credits: float
    prior_courses: frozenset[str]


def covariates_at(history: StudentHistory, reference_term: Term) -> CovariateVector:
    """Covariates over takings strictly before ``reference_term``.

    GPA is the credit-weighted mean of grade points; an empty (or zero-credit)
    prior record yields gpa 0 and credits 0.
    """
    prior = history.takings_before(reference_term)
    total_credits = sum(t.credits for t in prior)
    if total_credits > 0:
        gpa = sum(t.grade.points * t.credits for t in prior) / total_credits
    else:
        gpa = 0.0
    return CovariateVector(
        gpa=gpa,
        total_credits=total_credits,
        prior_courses=frozenset(t.course_id for t in prior),
    )


class NotEstimable(Exception):
    """A pipeline stage cannot produce an estimate for this course pair."""

    def __init__(self, reason: str, stage: str = "unknown"):
        super().__init__(f"[{stage}] {reason}")
        self.reason = reason
        self.stage = stage
