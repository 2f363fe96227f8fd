"""Treatment/control grouping and greedy 1:1 matched sampling.

For a course pair (Y, X) the treatment arm holds students who passed X above
a C strictly before their first attempt of Y; the control arm holds students
who reached Y without that (never took X before, or took it and scored a C or
below). Students are paired across arms by a composite distance over GPA,
accumulated credits, and prior-course overlap, accepting the globally closest
pairs first until a cutoff distance or the smaller arm is exhausted.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from .domain import C_POINTS, CovariateVector, NotEstimable, covariates_at
from .ingest import Cohort
from .pairs import CoursePair

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


_SQRT3 = math.sqrt(3.0)


class Arm(enum.Enum):
    TREATMENT = "treatment"
    CONTROL = "control"


@dataclass(frozen=True)
class GroupedStudent:
    """A Y-taker assigned to one arm, with everything matching needs.

    ``outcome`` is the first-attempt grade in Y (points). ``covariates`` are
    taken at the Y term. ``prior_to_x_courses`` is the course set entering the
    overlap term of the distance: for treatment students the courses strictly
    before their qualifying X attempt, for control students the courses
    strictly before their Y term (the closest defined analogue).
    """

    student_id: str
    outcome: float
    covariates: CovariateVector
    prior_to_x_courses: frozenset[str]
    arm: Arm


@dataclass(frozen=True)
class MatchedPair:
    treatment: GroupedStudent
    control: GroupedStudent
    distance: float


@dataclass(frozen=True)
class MatchedSample:
    pairs: tuple[MatchedPair, ...]
    cutoff: float
    unmatched_treatment_count: int
    unmatched_control_count: int


def jaccard_sim(a: frozenset[str] | set[str], b: frozenset[str] | set[str]) -> float:
    """|A∩B| / |A∪B|, with two empty sets counting as identical (1.0)."""
    union = len(a | b)
    if union == 0:
        return 1.0
    return len(a & b) / union


@dataclass(frozen=True)
class ScalingContext:
    """Min/max of the raw |GPA| and |credits| gaps over the cross-arm
    candidate pairs of one course pair.

    Scaling each gap into [0, 1] against these bounds keeps the three
    distance components commensurate, so cutoffs are unit-free. Gaps outside
    the observed range clip into [0, 1]; a degenerate component (all
    candidates share one value) scales to 0.
    """

    gpa_min: float
    gpa_max: float
    credits_min: float
    credits_max: float

    @classmethod
    def from_groups(
        cls, treatment: list[GroupedStudent], control: list[GroupedStudent]
    ) -> "ScalingContext":
        if not treatment or not control:
            raise ValueError("both arms must be non-empty to build a scale")
        g_t = np.array([s.covariates.gpa for s in treatment])
        g_c = np.array([s.covariates.gpa for s in control])
        c_t = np.array([s.covariates.total_credits for s in treatment])
        c_c = np.array([s.covariates.total_credits for s in control])
        g_gap = np.abs(g_t[:, None] - g_c[None, :])
        c_gap = np.abs(c_t[:, None] - c_c[None, :])
        return cls(
            float(g_gap.min()), float(g_gap.max()),
            float(c_gap.min()), float(c_gap.max()),
        )

    @staticmethod
    def _scale(raw: float, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        return min(1.0, max(0.0, (raw - lo) / (hi - lo)))

    def scale_gpa_gap(self, raw: float) -> float:
        return self._scale(raw, self.gpa_min, self.gpa_max)

    def scale_credits_gap(self, raw: float) -> float:
        return self._scale(raw, self.credits_min, self.credits_max)


def pair_distance(
    a: GroupedStudent, b: GroupedStudent, scale: ScalingContext
) -> float:
    """Composite distance in [0, 1] between two students.

    Combines the scaled GPA gap, the scaled credits gap, and one minus the
    prior-course Jaccard similarity as a Euclidean norm, divided by sqrt(3)
    so that three maximal components give exactly 1. Symmetric in (a, b).
    """
    g = scale.scale_gpa_gap(abs(a.covariates.gpa - b.covariates.gpa))
    c = scale.scale_credits_gap(
        abs(a.covariates.total_credits - b.covariates.total_credits)
    )
    j = 1.0 - jaccard_sim(a.prior_to_x_courses, b.prior_to_x_courses)
    return math.sqrt(g * g + c * c + j * j) / _SQRT3


def build_groups(
    cohort: Cohort, pair: CoursePair
) -> tuple[list[GroupedStudent], list[GroupedStudent]]:
    """Split the pair's Y takers into treatment and control arms.

    Takers with no prior history at their Y term are dropped (there is
    nothing to match on), as are takers whose only X attempt shares the Y
    term. A taker is treated when any X attempt strictly before the Y term
    scored above a C; having attempted X before but never above a C keeps
    them in control.
    """
    treatment: list[GroupedStudent] = []
    control: list[GroupedStudent] = []
    by_student = cohort.by_student
    for taker in pair.y_takers:
        history = by_student[taker.student_id]
        covariates = covariates_at(history, taker.y_term)
        if not covariates.prior_courses:
            continue
        x_attempts = history.attempts_before(pair.x_course, taker.y_term)
        passing = [t for t in x_attempts if t.grade.points > C_POINTS]
        if passing:
            arm = Arm.TREATMENT
            x_term = passing[0].term
            prior_to_x = frozenset(
                t.course_id for t in history.takings_before(x_term)
            )
        elif x_attempts:
            arm = Arm.CONTROL
            prior_to_x = covariates.prior_courses
        else:
            took_in_y_term = any(
                t.term == taker.y_term
                for t in history.by_course.get(pair.x_course, ())
            )
            if took_in_y_term:
                continue
            arm = Arm.CONTROL
            prior_to_x = covariates.prior_courses
        student = GroupedStudent(
            student_id=taker.student_id,
            outcome=taker.y_grade.points,
            covariates=covariates,
            prior_to_x_courses=prior_to_x,
            arm=arm,
        )
        (treatment if arm is Arm.TREATMENT else control).append(student)
    if not treatment:
        raise NotEstimable("treatment arm is empty", stage="grouping")
    if not control:
        raise NotEstimable("control arm is empty", stage="grouping")
    return treatment, control


@dataclass(frozen=True)
class MatchCandidates:
    """All cross-arm pairs of one course pair, pre-sorted for matching.

    Arms are sorted by student id and candidates by (distance, treatment id,
    control id), which makes every downstream match independent of input
    order. Building this once lets several cutoffs reuse one distance
    computation.
    """

    treatment: tuple[GroupedStudent, ...]
    control: tuple[GroupedStudent, ...]
    distances: np.ndarray  # sorted ascending
    treatment_idx: np.ndarray
    control_idx: np.ndarray


def build_candidates(
    treatment: list[GroupedStudent], control: list[GroupedStudent]
) -> MatchCandidates:
    t_sorted = tuple(sorted(treatment, key=lambda s: s.student_id))
    c_sorted = tuple(sorted(control, key=lambda s: s.student_id))
    scale = ScalingContext.from_groups(list(t_sorted), list(c_sorted))

    g_t = np.array([s.covariates.gpa for s in t_sorted])
    g_c = np.array([s.covariates.gpa for s in c_sorted])
    cr_t = np.array([s.covariates.total_credits for s in t_sorted])
    cr_c = np.array([s.covariates.total_credits for s in c_sorted])

    def scaled(gaps: np.ndarray, lo: float, hi: float) -> np.ndarray:
        if hi <= lo:
            return np.zeros_like(gaps)
        return np.clip((gaps - lo) / (hi - lo), 0.0, 1.0)

    g = scaled(np.abs(g_t[:, None] - g_c[None, :]), scale.gpa_min, scale.gpa_max)
    c = scaled(
        np.abs(cr_t[:, None] - cr_c[None, :]), scale.credits_min, scale.credits_max
    )

    vocabulary = sorted(
        set().union(*(s.prior_to_x_courses for s in t_sorted + c_sorted))
    )
    slot = {course: i for i, course in enumerate(vocabulary)}
    t_sets = np.zeros((len(t_sorted), len(vocabulary)), dtype=np.float64)
    c_sets = np.zeros((len(c_sorted), len(vocabulary)), dtype=np.float64)
    for i, s in enumerate(t_sorted):
        for course in s.prior_to_x_courses:
            t_sets[i, slot[course]] = 1.0
    for i, s in enumerate(c_sorted):
        for course in s.prior_to_x_courses:
            c_sets[i, slot[course]] = 1.0
    intersection = t_sets @ c_sets.T
    union = t_sets.sum(axis=1)[:, None] + c_sets.sum(axis=1)[None, :] - intersection
    jac = np.divide(
        intersection, union, out=np.ones_like(intersection), where=union > 0
    )
    j = 1.0 - jac

    dist = np.sqrt(g * g + c * c + j * j) / _SQRT3
    n_t, n_c = dist.shape
    rows, cols = np.divmod(np.arange(dist.size), n_c)
    flat = dist.ravel()
    order = np.lexsort((cols, rows, flat))
    return MatchCandidates(
        treatment=t_sorted,
        control=c_sorted,
        distances=flat[order],
        treatment_idx=rows[order].astype(np.int64),
        control_idx=cols[order].astype(np.int64),
    )


@njit(cache=True)
def _greedy_scan(distances, t_idx, c_idx, n_t, n_c, cutoff):  # pragma: no cover
    matched_t = np.zeros(n_t, dtype=np.bool_)
    matched_c = np.zeros(n_c, dtype=np.bool_)
    limit = min(n_t, n_c)
    accepted = np.empty(limit, dtype=np.int64)
    k = 0
    for i in range(distances.shape[0]):
        if distances[i] > cutoff:
            break
        t = t_idx[i]
        c = c_idx[i]
        if matched_t[t] or matched_c[c]:
            continue
        matched_t[t] = True
        matched_c[c] = True
        accepted[k] = i
        k += 1
        if k == limit:
            break
    return accepted[:k]


def match_candidates(candidates: MatchCandidates, cutoff: float) -> MatchedSample:
    """Greedy best-first acceptance over pre-sorted candidates."""
    if not 0.0 < cutoff <= 1.0:
        raise ValueError(f"cutoff must lie in (0, 1], got {cutoff!r}")
    accepted = _greedy_scan(
        candidates.distances,
        candidates.treatment_idx,
        candidates.control_idx,
        len(candidates.treatment),
        len(candidates.control),
        cutoff,
    )
    if accepted.size == 0:
        raise NotEstimable(
            f"no cross-arm pair within cutoff {cutoff:g}", stage="matching"
        )
    pairs = tuple(
        MatchedPair(
            treatment=candidates.treatment[candidates.treatment_idx[i]],
            control=candidates.control[candidates.control_idx[i]],
            distance=float(candidates.distances[i]),
        )
        for i in accepted
    )
    return MatchedSample(
        pairs=pairs,
        cutoff=cutoff,
        unmatched_treatment_count=len(candidates.treatment) - len(pairs),
        unmatched_control_count=len(candidates.control) - len(pairs),
    )


def greedy_match(
    treatment: list[GroupedStudent],
    control: list[GroupedStudent],
    cutoff: float,
) -> MatchedSample:
    """1:1 matching without replacement under a distance cutoff.

    Candidates are taken globally in ascending distance order (ties broken by
    student ids), so the result is deterministic and order-independent;
    matching stops once the next candidate exceeds the cutoff or the smaller
    arm is used up.
    """
    if not treatment or not control:
        raise NotEstimable("cannot match with an empty arm", stage="matching")
    return match_candidates(build_candidates(treatment, control), cutoff)


def matched_sample_csv(sample: MatchedSample) -> str:
    """Audit dump of a matched sample: one row per accepted pair."""
    out = io.StringIO()
    out.write("treatment_id,control_id,distance\n")
    for pair in sample.pairs:
        out.write(
            f"{pair.treatment.student_id},{pair.control.student_id},"
            f"{pair.distance:.6f}\n"
        )
    return out.getvalue()
