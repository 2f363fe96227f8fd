"""Synthetic transcript generator with known planted causal effects.

The generator writes the exact CSV and roster formats the ingest module
reads. Grades follow a latent-ability model: each student has an ability,
each course a difficulty, and the raw grade is 3.0 + ability - difficulty
(+ planted effect deltas + noise), clipped to [0, 4] and snapped to the
nearest letter on the grade lattice (ties snap up). A planted delta for
(x, y) is added to a student's y grade only when that student took x in a
strictly earlier term and scored above a C, which is exactly the treatment
rule the pipeline estimates.

Because ability feeds both x passing and the y grade, the naive group
difference is biased upward; recovering the planted delta requires the
matching to actually work.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .domain import GRADE_POINTS, Season, Term, nearest_letter

_C_POINTS = GRADE_POINTS["C"]


class SynthesisError(Exception):
    """Generation could not populate both arms for a planted pair."""


@dataclass(frozen=True)
class PlantedEffect:
    x_course: str
    y_course: str
    delta: float

    def __post_init__(self) -> None:
        if self.x_course == self.y_course:
            raise ValueError("planted effect needs two distinct courses")
        if not math.isfinite(self.delta):
            raise ValueError("planted delta must be finite")


@dataclass(frozen=True)
class SynthConfig:
    n_students: int = 1000
    n_courses: int = 20
    terms_per_student: tuple[int, int] = (3, 5)
    planted_effects: tuple[PlantedEffect, ...] = ()
    ability_spread: float = 0.5
    difficulty_spread: float = 0.2
    noise_sd: float = 0.3
    seed: int = 0
    courses_per_term: int = 4
    take_y_fraction: float = 0.8
    xy_order_fraction: float = 0.6
    progression_jitter: float = 2.0

    def __post_init__(self) -> None:
        if self.n_students < 1:
            raise ValueError("need at least one student")
        lo, hi = self.terms_per_student
        if lo < 1 or hi < lo:
            raise ValueError(f"bad terms_per_student range: {lo}..{hi}")
        for spread in (self.ability_spread, self.difficulty_spread, self.noise_sd):
            if spread < 0:
                raise ValueError("spreads must be non-negative")
        for fraction in (self.take_y_fraction, self.xy_order_fraction):
            if not 0.0 <= fraction <= 1.0:
                raise ValueError("fractions must lie in [0, 1]")
        if self.progression_jitter < 0:
            raise ValueError("progression_jitter must be non-negative")
        planted_ids = {e.x_course for e in self.planted_effects} | {
            e.y_course for e in self.planted_effects
        }
        if self.n_courses < len(planted_ids) + self.courses_per_term:
            raise ValueError(
                "n_courses must leave room for filler courses beyond the "
                "planted ones"
            )


@dataclass(frozen=True)
class SynthResult:
    transcript_csv: bytes
    roster: bytes
    planted: tuple[PlantedEffect, ...]
    n_students: int


def _catalog(config: SynthConfig) -> tuple[list[str], list[str]]:
    """Course catalog: planted ids first (order of appearance), then fillers."""
    planted: list[str] = []
    for effect in config.planted_effects:
        for course in (effect.x_course, effect.y_course):
            if course not in planted:
                planted.append(course)
    fillers = []
    i = 1
    while len(planted) + len(fillers) < config.n_courses:
        name = f"C{i:03d}"
        if name not in planted:
            fillers.append(name)
        i += 1
    return planted + fillers, fillers


def _calendar(length: int) -> list[Term]:
    terms = []
    year = 2011
    while len(terms) < length:
        terms.append(Term(year, Season.SPRING))
        terms.append(Term(year, Season.FALL))
        year += 1
    return terms[:length]


def _schedule_student(
    rng: np.random.Generator, config: SynthConfig, fillers: list[str]
) -> tuple[int, list[set[str]]]:
    """Pick the student's term window and which course lands in which term.

    Filler courses follow a personal progression: the catalog order plus a
    per-student jitter. Students at the same stage therefore share most of
    their course history, the way sequenced curricula behave, which gives
    the prior-course overlap real signal.
    """
    lo, hi = config.terms_per_student
    n_terms = int(rng.integers(lo, hi + 1))
    start = int(rng.integers(0, 3))
    jitter = rng.normal(0.0, config.progression_jitter, len(fillers))
    progression = [fillers[i] for i in np.argsort(np.arange(len(fillers)) + jitter, kind="stable")]
    slots: list[set[str]] = [set() for _ in range(n_terms)]
    placed: set[str] = set()

    def place(course: str, slot: int) -> None:
        if course not in placed:
            slots[slot].add(course)
            placed.add(course)

    for effect in config.planted_effects:
        takes_y = n_terms >= 2 and rng.random() < config.take_y_fraction
        if takes_y:
            y_slot = int(rng.integers(1, n_terms))
            if rng.random() < config.xy_order_fraction:
                x_slot = int(rng.integers(0, y_slot))
            elif rng.random() < 0.5:
                # Same term as y or later: never counts as a prior course.
                x_slot = int(rng.integers(y_slot, n_terms))
            else:
                x_slot = -1
            place(effect.y_course, y_slot)
            if x_slot >= 0:
                place(effect.x_course, x_slot)
        elif rng.random() < 0.5:
            place(effect.x_course, int(rng.integers(0, n_terms)))

    taken = set(placed)
    for slot in range(n_terms):
        need = config.courses_per_term - len(slots[slot])
        if need <= 0:
            continue
        picks = [c for c in progression if c not in taken][:need]
        if len(picks) < need:
            # Catalog exhausted: retake earlier fillers, never twice per term.
            picks += [
                c for c in progression
                if c not in slots[slot] and c not in picks
            ][: need - len(picks)]
        for course in picks:
            slots[slot].add(course)
            taken.add(course)
    return start, slots


def _generate_once(rng: np.random.Generator, config: SynthConfig):
    catalog, fillers = _catalog(config)
    calendar = _calendar(3 + config.terms_per_student[1])
    difficulty = {
        course: d
        for course, d in zip(
            catalog, rng.normal(0.0, config.difficulty_spread, len(catalog))
        )
    }
    width = len(str(config.n_students))
    rows: list[tuple[str, int, str, str, str, float]] = []
    takings: dict[str, list[tuple[str, int, float]]] = {}

    for s in range(config.n_students):
        student_id = f"S{s + 1:0{width}d}"
        ability = float(rng.normal(0.0, config.ability_spread))
        start, slots = _schedule_student(rng, config, fillers)
        history: list[tuple[str, int, float]] = []  # (course, ordinal, points)
        for slot, courses in enumerate(slots):
            term = calendar[start + slot]
            for course in sorted(courses):
                credits = float(rng.integers(3, 5))
                noise = float(rng.normal(0.0, config.noise_sd))
                raw = 3.0 + ability - difficulty[course] + noise
                for effect in config.planted_effects:
                    if effect.y_course == course and _passed_before(
                        history, effect.x_course, term.ordinal
                    ):
                        raw += effect.delta
                letter = nearest_letter(min(4.0, max(0.0, raw)))
                history.append((course, term.ordinal, GRADE_POINTS[letter]))
                rows.append(
                    (student_id, term.ordinal, str(term), course, letter, credits)
                )
        takings[student_id] = history
    return rows, takings


def _passed_before(
    history: list[tuple[str, int, float]], course: str, ordinal: int
) -> bool:
    return any(
        c == course and o < ordinal and p > _C_POINTS for c, o, p in history
    )


def _arms_populated(
    takings: dict[str, list[tuple[str, int, float]]], effect: PlantedEffect
) -> bool:
    treated = controls = 0
    for history in takings.values():
        y_attempts = [o for c, o, _ in history if c == effect.y_course]
        if not y_attempts:
            continue
        y_ord = min(y_attempts)
        if not any(o < y_ord for _, o, _ in history):
            continue  # no prior history, dropped downstream
        x_before = [
            p for c, o, p in history if c == effect.x_course and o < y_ord
        ]
        if any(p > _C_POINTS for p in x_before):
            treated += 1
        elif x_before:
            controls += 1
        elif any(
            c == effect.x_course and o == y_ord for c, o, _ in history
        ):
            continue  # x only in the same term, belongs to neither arm
        else:
            controls += 1
    return treated > 0 and controls > 0


def generate(config: SynthConfig) -> SynthResult:
    """Generate a transcript CSV, a full roster, and the planted truth.

    Deterministic in the seed. If a draw leaves a planted pair with an empty
    treatment or control arm, generation retries with a derived seed, up to
    10 attempts.
    """
    for attempt in range(10):
        rng = np.random.default_rng([config.seed, attempt])
        rows, takings = _generate_once(rng, config)
        if all(_arms_populated(takings, e) for e in config.planted_effects):
            break
    else:
        raise SynthesisError(
            "could not populate both arms for every planted effect in 10 tries"
        )

    rows.sort(key=lambda r: (r[0], r[1], r[3]))
    out = io.StringIO()
    out.write("student_id,course_id,term,grade,credits\n")
    for student_id, _, term_text, course, letter, credits in rows:
        out.write(f"{student_id},{course},{term_text},{letter},{credits:g}\n")
    roster = "".join(
        f"{sid}\n" for sid in sorted(takings)
    )
    return SynthResult(
        transcript_csv=out.getvalue().encode("utf-8"),
        roster=roster.encode("utf-8"),
        planted=config.planted_effects,
        n_students=config.n_students,
    )


def ground_truth_json(result: SynthResult) -> bytes:
    payload = {
        "planted_effects": [
            {"x_course": e.x_course, "y_course": e.y_course, "delta": e.delta}
            for e in result.planted
        ]
    }
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")
