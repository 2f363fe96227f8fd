"""Treatment/control grouping and greedy 1:1 matching for one course pair.

Shows the covariate imbalance the raw arms carry and how much of it the
matched sample removes. The distance blends scaled GPA and credit gaps with
prior-course overlap, so a matched pair is a pair of academically similar
students that differ (mostly) in having passed the prior course.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from _shared import single_cohort

from coursecause import (
    PlantedEffect,
    SynthConfig,
    build_course_pair,
    build_groups,
    greedy_match,
)

cohort = single_cohort(
    SynthConfig(
        n_students=600,
        n_courses=12,
        planted_effects=(PlantedEffect("X1", "Y1", 0.4),),
        ability_spread=0.8,
        noise_sd=0.3,
        seed=3,
    )
)

pair = build_course_pair(cohort, "Y1", "X1")
treatment, control = build_groups(cohort, pair)

def describe(name, students):
    gpa = np.mean([s.covariates.gpa for s in students])
    credits = np.mean([s.covariates.total_credits for s in students])
    outcome = np.mean([s.outcome for s in students])
    print(f"  {name:9s} n={len(students):3d}  gpa={gpa:.2f}  "
          f"credits={credits:5.1f}  mean Y1 grade={outcome:.2f}")
    return gpa, outcome

print("== raw arms (before matching) ==")
t_gpa, t_out = describe("treatment", treatment)
c_gpa, c_out = describe("control", control)
print(f"  naive outcome gap: {t_out - c_out:+.3f}"
      f"  (true planted effect is +0.400; the excess is ability bias)")
print(f"  GPA imbalance    : {t_gpa - c_gpa:+.3f}")

sample = greedy_match(treatment, control, cutoff=0.5)
print("\n== matched sample (cutoff 0.5) ==")
print(f"  pairs accepted    : {len(sample.pairs)}")
print(f"  unmatched treated : {sample.unmatched_treatment_count}")
print(f"  unmatched control : {sample.unmatched_control_count}")

gpa_gap = np.mean([p.treatment.covariates.gpa - p.control.covariates.gpa
                   for p in sample.pairs])
out_gap = np.mean([p.treatment.outcome - p.control.outcome
                   for p in sample.pairs])
print(f"  within-pair GPA gap     : {gpa_gap:+.3f} (imbalance mostly gone)")
print(f"  within-pair outcome gap : {out_gap:+.3f} (close to the planted +0.4)")

print("\n== the three closest and the three widest accepted pairs ==")
for p in list(sample.pairs)[:3] + list(sample.pairs)[-3:]:
    print(f"   {p.treatment.student_id} ~ {p.control.student_id}"
          f"  distance={p.distance:.3f}")
