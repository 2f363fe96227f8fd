"""Tiny helper shared by the demo scripts."""

from coursecause import (
    IngestConfig,
    Season,
    SynthConfig,
    Term,
    apply_student_filters,
    generate,
    load_roster,
    parse_transcripts,
    split_cohorts,
)

EVERYTHING = IngestConfig(
    cohort_boundaries=(
        ("all", Term(1900, Season.SPRING), Term(2999, Season.FALL)),
    )
)


def single_cohort(config: SynthConfig):
    result = generate(config)
    records, _ = parse_transcripts(result.transcript_csv, EVERYTHING)
    histories = apply_student_filters(
        records, load_roster(result.roster), EVERYTHING
    )
    return split_cohorts(histories, EVERYTHING)[0]
