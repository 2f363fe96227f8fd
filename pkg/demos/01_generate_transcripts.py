"""Generate a synthetic transcript dataset and walk it through ingest.

The generator plants a known causal effect: passing X1 above a C before
taking Y1 lifts the Y1 grade by +0.4 points. Latent student ability feeds
both X1 passing and every grade, so the data is genuinely confounded.
"""

from coursecause import (
    IngestConfig,
    PlantedEffect,
    Season,
    SynthConfig,
    Term,
    apply_student_filters,
    generate,
    load_roster,
    parse_transcripts,
    split_cohorts,
)

config = SynthConfig(
    n_students=400,
    n_courses=12,
    planted_effects=(PlantedEffect("X1", "Y1", 0.4),),
    ability_spread=0.6,
    noise_sd=0.3,
    seed=7,
)
result = generate(config)

print("== raw transcript CSV (first 8 lines) ==")
for line in result.transcript_csv.decode().splitlines()[:8]:
    print("  ", line)
print(f"  ... {len(result.transcript_csv.splitlines()) - 1} rows total")

ingest_config = IngestConfig(
    cohort_boundaries=(
        ("all", Term(1900, Season.SPRING), Term(2999, Season.FALL)),
    )
)
records, rejects = parse_transcripts(result.transcript_csv, ingest_config)
print("\n== ingest ==")
print(f"  accepted rows : {len(records)}")
print(f"  rejected rows : {len(rejects)} (generator output is always clean)")

histories = apply_student_filters(
    records, load_roster(result.roster), ingest_config
)
print(f"  students kept : {len(histories)} of {config.n_students}")

(cohort,) = split_cohorts(histories, ingest_config)
print(f"  cohort '{cohort.label}' spans {len(cohort.course_ids)} courses:")
print("   ", ", ".join(cohort.course_ids))

some = cohort.histories[0]
print(f"\n== one student ({some.student_id}) ==")
for t in some.takings:
    print(f"   {t.term}: {t.course_id:5s} {t.grade.letter:2s} ({t.credits:g} cr)")
