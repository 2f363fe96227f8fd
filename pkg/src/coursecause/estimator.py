"""Effect estimation on a matched sample, two ways.

The mean-difference estimate compares matched treatment and control outcomes
directly (with a Welch test for the significance mark). The regression
estimate refits the outcome on an intercept, the treatment indicator, GPA,
credits, and prior-course indicators, and reads the treatment coefficient;
it is cross-validated k-fold with per-fold RMSE. Agreement between the two
estimates is the point of running both.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.special import stdtr

from .domain import NotEstimable
from .ingest import Cohort
from .matching import MatchedSample, build_candidates, build_groups, match_candidates
from .pairs import CoursePair

RIDGE_LAMBDA = 1e-8


@dataclass(frozen=True)
class RegressionDesign:
    """Outcome vector and design matrix for the matched-sample regression.

    Rows are the matched treatment students followed by their matched
    controls (2 x pairs). Columns are fixed: intercept, treatment indicator,
    gpa, credits, then one indicator per vocabulary course in lexicographic
    order.
    """

    y: np.ndarray
    X: np.ndarray
    columns: tuple[str, ...]

    TREATMENT_COLUMN = 1

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]


def design_from_sample(
    sample: MatchedSample,
    min_course_count: int = 2,
    exclude_courses: frozenset[str] = frozenset(),
) -> RegressionDesign:
    """Build the regression design from a matched sample.

    The indicator vocabulary keeps courses appearing in at least
    ``min_course_count`` matched students' prior histories, drops courses
    shared by every student (they would alias the intercept), and drops
    ``exclude_courses`` (the analyzed prior course already enters as the
    treatment indicator).
    """
    students = [p.treatment for p in sample.pairs] + [
        p.control for p in sample.pairs
    ]
    n = len(students)
    counts = Counter(
        course for s in students for course in s.covariates.prior_courses
    )
    vocabulary = tuple(
        sorted(
            course
            for course, count in counts.items()
            if min_course_count <= count < n and course not in exclude_courses
        )
    )
    slot = {course: i for i, course in enumerate(vocabulary)}
    X = np.zeros((n, 4 + len(vocabulary)))
    y = np.empty(n)
    half = len(sample.pairs)
    for i, s in enumerate(students):
        y[i] = s.outcome
        X[i, 0] = 1.0
        X[i, 1] = 1.0 if i < half else 0.0
        X[i, 2] = s.covariates.gpa
        X[i, 3] = s.covariates.total_credits
        for course in s.covariates.prior_courses:
            j = slot.get(course)
            if j is not None:
                X[i, 4 + j] = 1.0
    columns = ("intercept", "treatment", "gpa", "credits") + vocabulary
    return RegressionDesign(y=y, X=X, columns=columns)


@dataclass(frozen=True)
class OlsFit:
    beta: np.ndarray
    regularized: bool

    def predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.beta


def _ols(X: np.ndarray, y: np.ndarray) -> OlsFit:
    n, p = X.shape
    if n < 2:
        raise NotEstimable("need at least 2 rows to fit", stage="estimation")
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    tol = max(n, p) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    if p > n or diag.size < p or diag.min() <= tol:
        # Rank-deficient design: tiny ridge on the non-intercept columns.
        penalty = np.ones(p) * RIDGE_LAMBDA
        penalty[0] = 0.0
        beta = np.linalg.solve(X.T @ X + np.diag(penalty), X.T @ y)
        return OlsFit(beta=beta, regularized=True)
    beta = np.linalg.solve(r, q.T @ y)
    return OlsFit(beta=beta, regularized=False)


def fit_ols(design: RegressionDesign) -> OlsFit:
    """Least-squares fit via QR, with a ridge fallback when rank-deficient."""
    return _ols(design.X, design.y)


def welch_t_test(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Two-sided unequal-variance t test; returns (statistic, p value).

    Degenerate samples (both arms constant) give p = 1 for equal means and
    p = 0 otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise NotEstimable("need two observations per arm", stage="estimation")
    mean_gap = float(a.mean() - b.mean())
    va, vb = float(a.var(ddof=1)), float(b.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        if mean_gap == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean_gap), 0.0
    sa, sb = va / a.size, vb / b.size
    se2 = sa + sb
    t = mean_gap / math.sqrt(se2)
    df = se2 * se2 / (sa * sa / (a.size - 1) + sb * sb / (b.size - 1))
    p = 2.0 * float(stdtr(df, -abs(t)))
    return t, p


def ate_means(sample: MatchedSample) -> tuple[float, float]:
    """Difference of mean outcomes across the matched arms, with its
    two-sided Welch p value."""
    if len(sample.pairs) < 2:
        raise NotEstimable("fewer than 2 matched pairs", stage="estimation")
    treated = np.array([p.treatment.outcome for p in sample.pairs])
    controls = np.array([p.control.outcome for p in sample.pairs])
    ate = float(treated.mean() - controls.mean())
    _, p_value = welch_t_test(treated, controls)
    return ate, p_value


@dataclass(frozen=True)
class CrossValResult:
    ate_reg_mean: float
    ate_reg_std: float
    rmse_mean: float
    per_fold: tuple[tuple[float, float], ...]  # (treatment beta, rmse)


def cross_validated_ate(
    design: RegressionDesign, k: int, seed: int
) -> CrossValResult:
    """k-fold cross-validation of the regression estimate.

    Rows are shuffled by a seeded generator and dealt into folds separately
    per arm, so every fold holds both arms; each fold is predicted by a model
    fit on the others. Reported: mean/std of the treatment coefficient and
    mean held-out RMSE. Same seed, same result, bit for bit.
    """
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    n = design.n_rows
    if n < 2 * k:
        raise NotEstimable(
            f"{n} rows cannot support {k} folds", stage="cross_validation"
        )
    rng = np.random.default_rng(seed)
    t_col = design.X[:, RegressionDesign.TREATMENT_COLUMN]
    folds: list[list[int]] = [[] for _ in range(k)]
    for rows in (np.flatnonzero(t_col == 1.0), np.flatnonzero(t_col == 0.0)):
        for i, row in enumerate(rng.permutation(rows)):
            folds[i % k].append(int(row))
    for fold in folds:
        arms = {t_col[i] for i in fold}
        if arms != {0.0, 1.0}:
            raise NotEstimable(
                "a fold lost an arm during stratification",
                stage="cross_validation",
            )

    betas = np.empty(k)
    rmses = np.empty(k)
    mask = np.ones(n, dtype=bool)
    for f, fold in enumerate(folds):
        idx = np.array(fold)
        mask[:] = True
        mask[idx] = False
        fit = _ols(design.X[mask], design.y[mask])
        predictions = fit.predict(design.X[idx])
        betas[f] = fit.beta[RegressionDesign.TREATMENT_COLUMN]
        rmses[f] = math.sqrt(float(np.mean((predictions - design.y[idx]) ** 2)))
    return CrossValResult(
        ate_reg_mean=float(betas.mean()),
        ate_reg_std=float(betas.std()),
        rmse_mean=float(rmses.mean()),
        per_fold=tuple((float(b), float(r)) for b, r in zip(betas, rmses)),
    )


@dataclass(frozen=True)
class AteReport:
    """Full estimate for one (target, prior) course pair."""

    y_course: str
    x_course: str
    cohort_label: str
    ate_means: float
    p_value: float
    significant_at_01: bool
    ate_reg_mean: float
    ate_reg_std: float
    rmse_mean: float
    folds: int
    n_pairs: int


def analyze_pair(
    cohort: Cohort,
    pair: CoursePair,
    cutoff: float,
    k: int = 5,
    seed: int = 0,
    min_course_count: int = 2,
) -> AteReport:
    """Group, match, and estimate one course pair end to end."""
    treatment, control = build_groups(cohort, pair)
    sample = match_candidates(build_candidates(treatment, control), cutoff)
    ate, p_value = ate_means(sample)
    design = design_from_sample(
        sample,
        min_course_count=min_course_count,
        exclude_courses=frozenset((pair.x_course, pair.y_course)),
    )
    cv = cross_validated_ate(design, k, seed)
    return AteReport(
        y_course=pair.y_course,
        x_course=pair.x_course,
        cohort_label=pair.cohort_label,
        ate_means=ate,
        p_value=p_value,
        significant_at_01=p_value < 0.01,
        ate_reg_mean=cv.ate_reg_mean,
        ate_reg_std=cv.ate_reg_std,
        rmse_mean=cv.rmse_mean,
        folds=k,
        n_pairs=len(sample.pairs),
    )


REPORT_TSV_HEADER = (
    "y_course\tx_course\tcohort\tate_means\tsignificant\t"
    "ate_reg_mean\tate_reg_std\trmse_mean\tn_pairs"
)


def report_tsv_row(report: AteReport) -> str:
    mark = "*" if report.significant_at_01 else ""
    return (
        f"{report.y_course}\t{report.x_course}\t{report.cohort_label}\t"
        f"{report.ate_means:.4f}\t{mark}\t{report.ate_reg_mean:.4f}\t"
        f"{report.ate_reg_std:.4f}\t{report.rmse_mean:.4f}\t{report.n_pairs}"
    )


def report_json_dict(report: AteReport) -> dict:
    return {
        "y_course": report.y_course,
        "x_course": report.x_course,
        "cohort": report.cohort_label,
        "ate_means": report.ate_means,
        "p_value": report.p_value,
        "significant": report.significant_at_01,
        "ate_reg_mean": report.ate_reg_mean,
        "ate_reg_std": report.ate_reg_std,
        "rmse_mean": report.rmse_mean,
        "folds": report.folds,
        "n_pairs": report.n_pairs,
    }


