"""How stable are the top-ranked prior courses as the matching cutoff moves?

The sweep re-runs the whole analysis at several cutoffs and scores the
agreement of each target's top-3 prior courses between every cutoff pair.
Mid-range cutoffs tend to agree with each other; very strict cutoffs keep
so few pairs that the rankings drift.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))
from _shared import single_cohort

from coursecause import PairCriteria, PlantedEffect, SweepConfig, SynthConfig, sweep_cohort

cohort = single_cohort(
    SynthConfig(
        n_students=700,
        n_courses=12,
        planted_effects=(PlantedEffect("X1", "Y1", 0.4),),
        ability_spread=0.8,
        difficulty_spread=0.5,
        noise_sd=0.3,
        seed=2,
    )
)

config = SweepConfig(
    cutoffs=(0.1, 0.3, 0.5, 0.9),
    top_k=3,
    k_folds=5,
    seed=0,
    criteria=PairCriteria(
        min_y_support=80, min_x_support=80, min_below_c_fraction=0.05
    ),
)
result = sweep_cohort(cohort, config)

print("== top-3 agreement between cutoffs ==")
print(result.matrix.to_tsv())

targets = sorted(result.rankings[config.cutoffs[0]])
print(f"targets analyzed: {', '.join(targets)}")
for cutoff in (0.3, 0.9):
    print(f"\n== top prior courses at cutoff {cutoff} ==")
    for y_course, ranking in sorted(result.rankings[cutoff].items()):
        top = ", ".join(f"{x} ({ate:+.2f})" for x, ate in ranking[:3])
        print(f"  {y_course}: {top}")
