"""Cutoff sensitivity: rank prior courses at several matching cutoffs and
measure how much the top-ranked sets agree.

Groups, distances, and candidate orderings depend only on the course pair,
not the cutoff, so one sweep computes them once per pair and re-matches at
each cutoff. The fold seed is shared across cutoffs so ranking differences
reflect the cutoff alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import NotEstimable
from .estimator import cross_validated_ate, design_from_sample
from .ingest import Cohort
from .matching import build_candidates, build_groups, match_candidates
from .pairs import CoursePair, PairCriteria, enumerate_valid_x, enumerate_valid_y

DEFAULT_CUTOFFS = (0.1, 0.3, 0.4, 0.5, 0.6, 0.9)


@dataclass(frozen=True)
class SweepConfig:
    cutoffs: tuple[float, ...] = DEFAULT_CUTOFFS
    top_k: int = 3
    k_folds: int = 5
    seed: int = 0
    criteria: PairCriteria = field(default_factory=PairCriteria)
    min_course_count: int = 2

    def __post_init__(self) -> None:
        if len(self.cutoffs) < 1:
            raise ValueError("need at least one cutoff")
        for cutoff in self.cutoffs:
            if not 0.0 < cutoff <= 1.0:
                raise ValueError(f"cutoff {cutoff!r} outside (0, 1]")
        if any(b <= a for a, b in zip(self.cutoffs, self.cutoffs[1:])):
            raise ValueError("cutoffs must be strictly increasing")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")


# x course ranked with its regression estimate, best first.
Ranking = list[tuple[str, float]]


def _rank_pairs_at_cutoffs(
    cohort: Cohort,
    pairs: list[CoursePair],
    cutoffs: tuple[float, ...],
    config: SweepConfig,
) -> dict[float, Ranking]:
    """Regression estimate per (pair, cutoff); pairs that cannot be grouped,
    matched, or estimated at a cutoff are skipped at that cutoff."""
    scored: dict[float, list[tuple[str, float]]] = {d: [] for d in cutoffs}
    for pair in pairs:
        try:
            treatment, control = build_groups(cohort, pair)
            candidates = build_candidates(treatment, control)
        except NotEstimable:
            continue
        for cutoff in cutoffs:
            try:
                sample = match_candidates(candidates, cutoff)
                design = design_from_sample(
                    sample,
                    min_course_count=config.min_course_count,
                    exclude_courses=frozenset((pair.x_course, pair.y_course)),
                )
                cv = cross_validated_ate(design, config.k_folds, config.seed)
            except NotEstimable:
                continue
            scored[cutoff].append((pair.x_course, cv.ate_reg_mean))
    return {
        d: sorted(ranking, key=lambda xr: (-xr[1], xr[0]))
        for d, ranking in scored.items()
    }


def top_k_causal(
    cohort: Cohort, y_course: str, cutoff: float, config: SweepConfig
) -> list[str]:
    """The up-to-top_k prior courses for a target, ranked by the regression
    estimate (descending; ties broken lexicographically)."""
    pairs = enumerate_valid_x(cohort, y_course, config.criteria)
    ranking = _rank_pairs_at_cutoffs(cohort, pairs, (cutoff,), config)[cutoff]
    return [x for x, _ in ranking[: config.top_k]]


@dataclass(frozen=True)
class SimilarityMatrix:
    cutoffs: tuple[float, ...]
    values: np.ndarray

    def to_tsv(self) -> str:
        lines = ["\t" + "\t".join(f"{d:g}" for d in self.cutoffs)]
        for i, d in enumerate(self.cutoffs):
            cells = [
                "*" if i == j else f"{self.values[i, j]:.3f}"
                for j in range(len(self.cutoffs))
            ]
            lines.append(f"{d:g}\t" + "\t".join(cells))
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "cutoffs": list(self.cutoffs),
            "values": [[float(v) for v in row] for row in self.values],
        }


@dataclass(frozen=True)
class SweepResult:
    matrix: SimilarityMatrix
    # cutoff -> y course -> ranked (x course, regression estimate)
    rankings: dict[float, dict[str, Ranking]]


def _overlap_score(a: list[str], b: list[str], top_k: int) -> float:
    """Fraction of top-k agreement between two rankings of one target.

    Two empty rankings agree perfectly; otherwise the intersection is scaled
    by the larger list length capped at top_k, so a target with fewer than
    top_k estimable priors can still agree fully with itself.
    """
    if not a and not b:
        return 1.0
    denominator = min(top_k, max(len(a), len(b)))
    return len(set(a) & set(b)) / denominator


def sweep_cohort(cohort: Cohort, config: SweepConfig) -> SweepResult:
    """Rank every valid pair at every cutoff and build the agreement matrix."""
    ys = enumerate_valid_y(cohort, config.criteria)
    if not ys:
        raise NotEstimable("no valid target course in cohort", stage="sweep")
    rankings: dict[float, dict[str, Ranking]] = {d: {} for d in config.cutoffs}
    for y_course in ys:
        pairs = enumerate_valid_x(cohort, y_course, config.criteria)
        per_cutoff = _rank_pairs_at_cutoffs(cohort, pairs, config.cutoffs, config)
        for cutoff, ranking in per_cutoff.items():
            rankings[cutoff][y_course] = ranking

    k = len(config.cutoffs)
    values = np.ones((k, k))
    tops = {
        d: {
            y: [x for x, _ in rankings[d][y][: config.top_k]]
            for y in ys
        }
        for d in config.cutoffs
    }
    for i, d in enumerate(config.cutoffs):
        for j, d2 in enumerate(config.cutoffs):
            if j < i:
                continue
            score = float(
                np.mean(
                    [_overlap_score(tops[d][y], tops[d2][y], config.top_k) for y in ys]
                )
            )
            values[i, j] = values[j, i] = score
    return SweepResult(
        matrix=SimilarityMatrix(cutoffs=config.cutoffs, values=values),
        rankings=rankings,
    )


def similarity(cohort: Cohort, config: SweepConfig) -> SimilarityMatrix:
    """Agreement of top-ranked prior courses between every pair of cutoffs."""
    if len(config.cutoffs) < 2:
        raise ValueError("similarity needs at least two cutoffs")
    return sweep_cohort(cohort, config).matrix
