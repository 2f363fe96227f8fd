"""Causal effect estimation for course sequences.

Given transcript records, estimate how much taking (and passing) a prior
course changes the grade a student later earns in a target course. The
estimate is doubly robust: matched treatment/control sampling on student
covariates, cross-checked by the treatment coefficient of a cross-validated
outcome regression, with a cutoff sensitivity sweep and a synthetic-data
generator for end-to-end verification.
"""

from .domain import (
    CovariateVector,
    Grade,
    NotEstimable,
    Season,
    StudentHistory,
    Term,
    TranscriptRecord,
    covariates_at,
    grade_points,
)
from .estimator import (
    REPORT_TSV_HEADER,
    AteReport,
    CrossValResult,
    OlsFit,
    RegressionDesign,
    analyze_pair,
    ate_means,
    cross_validated_ate,
    design_from_sample,
    fit_ols,
    report_json_dict,
    report_tsv_row,
    welch_t_test,
)
from .evaluation import PrereqCatalog, PrereqOverlap, prereq_overlap
from .ingest import (
    Cohort,
    IngestConfig,
    IngestError,
    apply_student_filters,
    load_roster,
    parse_transcripts,
    split_cohorts,
)
from .matching import (
    Arm,
    GroupedStudent,
    MatchedPair,
    MatchedSample,
    ScalingContext,
    build_groups,
    greedy_match,
    jaccard_sim,
    matched_sample_csv,
    pair_distance,
)
from .pairs import (
    CoursePair,
    PairCriteria,
    build_course_pair,
    enumerate_valid_x,
    enumerate_valid_y,
)
from .sensitivity import (
    SimilarityMatrix,
    SweepConfig,
    similarity,
    sweep_cohort,
    top_k_causal,
)
from .synthgen import PlantedEffect, SynthConfig, SynthesisError, generate

__version__ = "0.1.0"

__all__ = [
    "REPORT_TSV_HEADER",
    "Arm",
    "AteReport",
    "Cohort",
    "CoursePair",
    "CovariateVector",
    "CrossValResult",
    "Grade",
    "GroupedStudent",
    "IngestConfig",
    "IngestError",
    "MatchedPair",
    "MatchedSample",
    "NotEstimable",
    "OlsFit",
    "PairCriteria",
    "PlantedEffect",
    "PrereqCatalog",
    "PrereqOverlap",
    "RegressionDesign",
    "ScalingContext",
    "Season",
    "SimilarityMatrix",
    "StudentHistory",
    "SweepConfig",
    "SynthConfig",
    "SynthesisError",
    "Term",
    "TranscriptRecord",
    "analyze_pair",
    "apply_student_filters",
    "ate_means",
    "build_course_pair",
    "build_groups",
    "covariates_at",
    "cross_validated_ate",
    "design_from_sample",
    "enumerate_valid_x",
    "enumerate_valid_y",
    "fit_ols",
    "generate",
    "grade_points",
    "greedy_match",
    "jaccard_sim",
    "load_roster",
    "matched_sample_csv",
    "pair_distance",
    "parse_transcripts",
    "prereq_overlap",
    "report_json_dict",
    "report_tsv_row",
    "similarity",
    "split_cohorts",
    "sweep_cohort",
    "top_k_causal",
    "welch_t_test",
]
