"""Shared builders: hand-made histories and parsed synthetic cohorts."""

from __future__ import annotations

import pytest

# One line per acceptance criterion, echoed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from coursecause.domain import Grade, Season, StudentHistory, Taking, Term
from coursecause.ingest import (
    Cohort,
    IngestConfig,
    apply_student_filters,
    load_roster,
    parse_transcripts,
    split_cohorts,
)
from coursecause.synthgen import SynthConfig, generate

FALL11 = Term(2011, Season.FALL)
SPRING12 = Term(2012, Season.SPRING)
FALL12 = Term(2012, Season.FALL)
SPRING13 = Term(2013, Season.SPRING)

WIDE_OPEN = IngestConfig(
    cohort_boundaries=(
        ("all", Term(1900, Season.SPRING), Term(2999, Season.FALL)),
    )
)


def taking(course: str, term: Term, letter: str, credits: float = 4.0) -> Taking:
    return Taking(course, term, Grade(letter), credits)


def history(student_id: str, *takings: Taking) -> StudentHistory:
    return StudentHistory(student_id, tuple(takings))


def cohort_of(*histories: StudentHistory, label: str = "test") -> Cohort:
    return Cohort(label, tuple(histories))


def cohort_from_synth(config: SynthConfig) -> Cohort:
    """Run generated bytes through the real ingest chain, single cohort."""
    result = generate(config)
    records, rejects = parse_transcripts(result.transcript_csv, WIDE_OPEN)
    assert not rejects
    histories = apply_student_filters(
        records, load_roster(result.roster), WIDE_OPEN
    )
    return split_cohorts(histories, WIDE_OPEN)[0]


@pytest.fixture(scope="session")
def small_planted_cohort() -> Cohort:
    """A quick cohort with one planted effect, reused by slow-ish tests."""
    from coursecause.synthgen import PlantedEffect

    return cohort_from_synth(
        SynthConfig(
            n_students=250,
            n_courses=10,
            planted_effects=(PlantedEffect("X1", "Y1", 0.4),),
            ability_spread=0.8,
            difficulty_spread=0.4,
            noise_sd=0.3,
            seed=11,
        )
    )
