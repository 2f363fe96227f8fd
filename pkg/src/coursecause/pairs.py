"""Enumeration of analyzable (target course Y, prior course X) pairs.

A target course qualifies when enough students took it, enough of them
struggled (scored below a C), and at least one taker has a prior history. A
prior course qualifies for a given target when enough of the target's takers
took it strictly earlier.
"""

from __future__ import annotations

from dataclasses import dataclass

from .domain import C_POINTS, Grade, Taking, Term
from .ingest import Cohort


@dataclass(frozen=True)
class PairCriteria:
    min_y_support: int = 100
    min_x_support: int = 100
    min_below_c_fraction: float = 0.10
    y_not_in_first_term: bool = True

    def __post_init__(self) -> None:
        if self.min_y_support < 1 or self.min_x_support < 1:
            raise ValueError("support thresholds must be positive")
        if not 0.0 < self.min_below_c_fraction < 1.0:
            raise ValueError("min_below_c_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class YTaker:
    """A student's first attempt of the target course."""

    student_id: str
    y_term: Term
    y_grade: Grade


@dataclass(frozen=True)
class CoursePair:
    y_course: str
    x_course: str
    cohort_label: str
    y_takers: tuple[YTaker, ...]


def first_attempts(cohort: Cohort, course_id: str) -> list[YTaker]:
    """First attempt of ``course_id`` per student, sorted by student id."""
    takers = []
    for history in cohort.histories:
        attempts = history.by_course.get(course_id)
        if attempts:
            first: Taking = attempts[0]
            takers.append(YTaker(history.student_id, first.term, first.grade))
    takers.sort(key=lambda t: t.student_id)
    return takers


def _y_failures(cohort: Cohort, course_id: str, criteria: PairCriteria) -> list[str]:
    takers = first_attempts(cohort, course_id)
    failures = []
    if len(takers) < criteria.min_y_support:
        failures.append(
            f"support {len(takers)} below minimum {criteria.min_y_support}"
        )
    if takers:
        below_c = sum(1 for t in takers if t.y_grade.points < C_POINTS)
        fraction = below_c / len(takers)
        if fraction < criteria.min_below_c_fraction:
            failures.append(
                f"below-C fraction {fraction:.3f} below minimum "
                f"{criteria.min_below_c_fraction:.3f}"
            )
        if criteria.y_not_in_first_term:
            by_student = cohort.by_student
            if not any(
                by_student[t.student_id].first_term < t.y_term for t in takers
            ):
                failures.append("no taker took the course after their first term")
    return failures


def enumerate_valid_y(cohort: Cohort, criteria: PairCriteria) -> list[str]:
    """Course ids that qualify as analysis targets, in lexicographic order."""
    return [
        course
        for course in cohort.course_ids
        if not _y_failures(cohort, course, criteria)
    ]


def explain_invalid_y(
    cohort: Cohort, course_id: str, criteria: PairCriteria
) -> list[str]:
    """Human-readable reasons a course fails the target criteria (empty if
    it passes)."""
    if course_id not in cohort.course_ids:
        return [f"course {course_id!r} does not appear in cohort"]
    return _y_failures(cohort, course_id, criteria)


def build_course_pair(cohort: Cohort, y_course: str, x_course: str) -> CoursePair:
    """Assemble the pair population (first-attempt Y takers) without applying
    any support thresholds."""
    if y_course == x_course:
        raise ValueError("target and prior course must differ")
    takers = tuple(first_attempts(cohort, y_course))
    return CoursePair(y_course, x_course, cohort.label, takers)


def _x_support(cohort: Cohort, takers: list[YTaker], x_course: str) -> int:
    by_student = cohort.by_student
    count = 0
    for taker in takers:
        attempts = by_student[taker.student_id].by_course.get(x_course, ())
        if attempts and attempts[0].term < taker.y_term:
            count += 1
    return count


def enumerate_valid_x(
    cohort: Cohort, y_course: str, criteria: PairCriteria
) -> list[CoursePair]:
    """All prior-course pairs for a target, in lexicographic x order.

    A prior course qualifies when at least ``min_x_support`` of the target's
    takers attempted it strictly before their own first attempt of the
    target. A student taking the prior course twice still counts once.
    """
    takers = first_attempts(cohort, y_course)
    pairs = []
    for x_course in cohort.course_ids:
        if x_course == y_course:
            continue
        if _x_support(cohort, takers, x_course) >= criteria.min_x_support:
            pairs.append(
                CoursePair(y_course, x_course, cohort.label, tuple(takers))
            )
    return pairs
