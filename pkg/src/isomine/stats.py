"""Epidemiological layer: interrater agreement, bivariate logistic odds
ratios with Wald CIs and Bonferroni tiers, Welch age comparisons, per-1000
rates, and yearly trend series."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats as spstats

from .corpus import (Corpus, DecedentRecord, Homeless, MaritalStatus,
                     PhysicalHealthProblem, RaceEthnicity, RelationshipStatus,
                     Sex, SexualOrientation, Transgender)
from .taxonomy import TopicId

_SEPARATION_BOUND = 30.0
WALD_Z = 1.96


# ---------------------------------------------------------------------------
# interrater agreement
# ---------------------------------------------------------------------------

@dataclass
class AgreementResult:
    n_items: int
    percent_agreement: float
    kappa: float | None  # None encodes NA (zero-variance marginals)
    p_value: float | None


def cohen_kappa(labels_a: Sequence[int], labels_b: Sequence[int]) -> AgreementResult:
    """Two-rater binary kappa with a large-sample normal test of kappa=0.

    kappa is NA exactly when the chance agreement p_e is 1 (both raters
    constant and identical), e.g. dual all-positive coding.
    """
    a = np.asarray(labels_a, dtype=np.int64)
    b = np.asarray(labels_b, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError("label sequences differ in length")
    n = len(a)
    if n < 1:
        raise ValueError("need at least one item")
    p_o = float(np.mean(a == b))
    pa1 = float(np.mean(a))
    pb1 = float(np.mean(b))
    p_e = pa1 * pb1 + (1.0 - pa1) * (1.0 - pb1)
    if abs(1.0 - p_e) < 1e-12:
        return AgreementResult(n_items=n, percent_agreement=p_o, kappa=None, p_value=None)
    kappa = (p_o - p_e) / (1.0 - p_e)
    # Fleiss-Cohen-Everitt null variance for the kappa=0 test
    marg_a = (1.0 - pa1, pa1)
    marg_b = (1.0 - pb1, pb1)
    cross = sum(marg_a[i] * marg_b[i] * (marg_a[i] + marg_b[i]) for i in (0, 1))
    se0_sq = p_e + p_e * p_e - cross
    if se0_sq <= 0.0:
        p_value = 1.0 if abs(kappa) < 1e-12 else 0.0
    else:
        se0 = math.sqrt(se0_sq) / ((1.0 - p_e) * math.sqrt(n))
        z = kappa / se0
        p_value = math.erfc(abs(z) / math.sqrt(2.0))
    return AgreementResult(n_items=n, percent_agreement=p_o, kappa=kappa, p_value=p_value)


# ---------------------------------------------------------------------------
# bivariate logistic regression (one predictor at a time)
# ---------------------------------------------------------------------------

class SignificanceTier(Enum):
    NOT_SIGNIFICANT = "NOT_SIGNIFICANT"
    BONFERRONI = "BONFERRONI"
    STRONG = "STRONG"


def bonferroni(alpha: float = 0.05, m: int = 30) -> float:
    if m < 1:
        raise ValueError("m must be >= 1")
    return alpha / m


def significance_tier(p_value: float | None, threshold: float) -> SignificanceTier:
    """p < 1e-4 -> STRONG, else p < threshold -> BONFERRONI, else not."""
    if p_value is None or math.isnan(p_value):
        return SignificanceTier.NOT_SIGNIFICANT
    if p_value < 1e-4:
        return SignificanceTier.STRONG
    if p_value < threshold:
        return SignificanceTier.BONFERRONI
    return SignificanceTier.NOT_SIGNIFICANT


@dataclass
class OddsResult:
    topic: TopicId | None
    predictor: str
    level: str
    reference: str
    odds_ratio: float
    ci_low: float
    ci_high: float
    p_value: float
    tier: SignificanceTier
    n_used: int
    separation_flag: bool = False


@dataclass
class Predictor:
    """A Table-3-style predictor: categorical with a declared reference
    (Unknown-ish categories excluded per analysis) or continuous."""

    name: str
    extract: Callable[[DecedentRecord], object]
    reference: str | None = None
    levels: tuple[str, ...] = ()
    excluded: frozenset = frozenset()
    continuous: bool = False


def standard_predictors() -> list[Predictor]:
    def enum_getter(field):
        return lambda rec: getattr(rec, field).value

    return [
        Predictor("sex", enum_getter("sex"), reference=Sex.FEMALE.value,
                  levels=(Sex.MALE.value,), excluded=frozenset({Sex.UNKNOWN.value})),
        Predictor("race_ethnicity", enum_getter("race_ethnicity"),
                  reference=RaceEthnicity.WHITE.value,
                  levels=(
                      RaceEthnicity.AMERICAN_INDIAN_ALASKA_NATIVE.value,
                      RaceEthnicity.ASIAN_PACIFIC_ISLANDER.value,
                      RaceEthnicity.BLACK_AFRICAN_AMERICAN.value,
                      RaceEthnicity.HISPANIC.value,
                      RaceEthnicity.OTHER_UNSPECIFIED.value,
                      RaceEthnicity.TWO_OR_MORE.value,
                  ),
                  excluded=frozenset({RaceEthnicity.UNKNOWN.value})),
        Predictor("sexual_orientation", enum_getter("sexual_orientation"),
                  reference=SexualOrientation.HETEROSEXUAL.value,
                  levels=(
                      SexualOrientation.BISEXUAL.value,
                      SexualOrientation.GAY.value,
                      SexualOrientation.LESBIAN.value,
                      SexualOrientation.UNSPECIFIED_MINORITY.value,
                  ),
                  excluded=frozenset({SexualOrientation.NOT_REPORTED.value})),
        Predictor("transgender", enum_getter("transgender"),
                  reference=Transgender.NO_OR_UNKNOWN.value,
                  levels=(Transgender.YES.value,)),
        Predictor("marital_status", enum_getter("marital_status"),
                  reference=MaritalStatus.MARRIED.value,
                  levels=(
                      MaritalStatus.DIVORCED.value,
                      MaritalStatus.MARRIED_SEPARATED.value,
                      MaritalStatus.NEVER_MARRIED.value,
                      MaritalStatus.SINGLE.value,
                      MaritalStatus.WIDOWED.value,
                  ),
                  excluded=frozenset({MaritalStatus.UNKNOWN.value})),
        Predictor("relationship_status", enum_getter("relationship_status"),
                  reference=RelationshipStatus.IN_RELATIONSHIP.value,
                  levels=(RelationshipStatus.NOT_IN_RELATIONSHIP.value,),
                  excluded=frozenset({RelationshipStatus.UNKNOWN.value})),
        Predictor("homeless", enum_getter("homeless"),
                  reference=Homeless.NO.value, levels=(Homeless.YES.value,),
                  excluded=frozenset({Homeless.UNKNOWN.value})),
        Predictor("physical_health_problem", enum_getter("physical_health_problem"),
                  reference=PhysicalHealthProblem.NO_OR_UNKNOWN.value,
                  levels=(PhysicalHealthProblem.YES.value,)),
        Predictor("num_substances", lambda rec: rec.num_substances,
                  continuous=True, reference="per_unit"),
    ]


def irls_logit(X: np.ndarray, y: np.ndarray, max_iter: int = 50, tol: float = 1e-8):
    """Newton/IRLS for logistic regression.

    Returns (beta, se, converged, separation). Standard errors come from
    the inverse observed information at the final iterate. Separation is
    declared when any coefficient exceeds 30 in absolute value.
    """
    n, d = X.shape
    beta = np.zeros(d)
    separation = False
    converged = False
    H = np.eye(d)
    for _ in range(max_iter):
        eta = X @ beta
        mu = 1.0 / (1.0 + np.exp(-eta))
        grad = X.T @ (y - mu)
        if np.linalg.norm(grad) < tol:
            converged = True
            break
        w = np.clip(mu * (1.0 - mu), 1e-10, None)
        H = (X.T * w) @ X
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        beta = beta + step
        if np.any(np.abs(beta) > _SEPARATION_BOUND):
            separation = True
            break
    eta = X @ beta
    mu = 1.0 / (1.0 + np.exp(-eta))
    w = np.clip(mu * (1.0 - mu), 1e-10, None)
    H = (X.T * w) @ X
    try:
        cov = np.linalg.inv(H)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        se = np.full(d, np.nan)
    return beta, se, converged, separation


def _wald_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def _safe_exp(x: float) -> float:
    # diverged coefficients (separation) can push exponents past float range
    if x > 709.0:
        return math.inf
    if x < -745.0:
        return 0.0
    return math.exp(x)


def bivariate_logit(
    outcome: Sequence[bool],
    predictor: Predictor,
    corpus: Corpus,
    topic: TopicId | None = None,
    bonferroni_threshold: float = 0.05 / 30,
) -> list[OddsResult]:
    """One logistic regression of the outcome on a single predictor.

    Categorical predictors yield one OddsResult per non-reference level;
    continuous predictors a single per-unit OddsResult. Records with
    excluded/missing predictor values are dropped for this analysis only.
    Zero-event levels are reported as OR 0 with CI (0, 0) and a separation
    flag rather than crashing the fit.
    """
    y_all = np.asarray(outcome, dtype=bool)
    if len(y_all) != len(corpus):
        raise ValueError("outcome must align with the corpus")
    if not (y_all.any() and (~y_all).any()):
        raise ValueError("outcome must contain both values")

    values = [predictor.extract(rec) for rec in corpus]

    if predictor.continuous:
        keep = [i for i, v in enumerate(values) if v is not None]
        X = np.column_stack([
            np.ones(len(keep)),
            np.array([float(values[i]) for i in keep]),
        ])
        y = y_all[keep].astype(np.float64)
        beta, se, _, separation = irls_logit(X, y)
        z = beta[1] / se[1] if se[1] > 0 else math.nan
        p = _wald_p(z) if not math.isnan(z) else math.nan
        return [OddsResult(
            topic=topic, predictor=predictor.name, level="per_unit",
            reference=predictor.reference or "per_unit",
            odds_ratio=_safe_exp(beta[1]),
            ci_low=_safe_exp(beta[1] - WALD_Z * se[1]),
            ci_high=_safe_exp(beta[1] + WALD_Z * se[1]),
            p_value=p,
            tier=(SignificanceTier.NOT_SIGNIFICANT if separation
                  else significance_tier(p, bonferroni_threshold)),
            n_used=len(keep), separation_flag=separation,
        )]

    keep = [
        i for i, v in enumerate(values)
        if v is not None and v not in predictor.excluded
    ]
    levels = [lvl for lvl in predictor.levels
              if any(values[i] == lvl for i in keep)]
    results: list[OddsResult] = []

    # split off levels whose outcome column is constant: their MLE diverges
    # and, because a single-categorical logit factorizes into per-level
    # 2x2 tables, dropping them leaves the remaining estimates unchanged
    zero_event: dict[str, tuple[int, int]] = {}
    fit_levels: list[str] = []
    for lvl in levels:
        pos = sum(1 for i in keep if values[i] == lvl and y_all[i])
        tot = sum(1 for i in keep if values[i] == lvl)
        if pos == 0 or pos == tot:
            zero_event[lvl] = (pos, tot)
        else:
            fit_levels.append(lvl)

    n_used = len(keep)
    for lvl, (pos, tot) in zero_event.items():
        if pos == 0:
            or_, lo, hi = 0.0, 0.0, 0.0
        else:
            or_, lo, hi = math.inf, math.inf, math.inf
        results.append(OddsResult(
            topic=topic, predictor=predictor.name, level=lvl,
            reference=predictor.reference, odds_ratio=or_, ci_low=lo, ci_high=hi,
            p_value=math.nan, tier=SignificanceTier.NOT_SIGNIFICANT,
            n_used=n_used, separation_flag=True,
        ))

    if fit_levels:
        rows = [i for i in keep
                if values[i] == predictor.reference or values[i] in fit_levels]
        X = np.ones((len(rows), 1 + len(fit_levels)))
        for j, lvl in enumerate(fit_levels):
            X[:, 1 + j] = [1.0 if values[i] == lvl else 0.0 for i in rows]
        y = y_all[rows].astype(np.float64)
        ref_pos = sum(1 for i in rows if values[i] == predictor.reference and y_all[i])
        ref_tot = sum(1 for i in rows if values[i] == predictor.reference)
        ref_degenerate = ref_pos == 0 or ref_pos == ref_tot
        beta, se, _, separation = irls_logit(X, y)
        for j, lvl in enumerate(fit_levels):
            coef = beta[1 + j]
            coef_se = se[1 + j]
            diverged = separation or ref_degenerate or abs(coef) > _SEPARATION_BOUND
            z = coef / coef_se if coef_se > 0 else math.nan
            p = _wald_p(z) if not math.isnan(z) else math.nan
            results.append(OddsResult(
                topic=topic, predictor=predictor.name, level=lvl,
                reference=predictor.reference,
                odds_ratio=_safe_exp(coef),
                ci_low=_safe_exp(coef - WALD_Z * coef_se),
                ci_high=_safe_exp(coef + WALD_Z * coef_se),
                p_value=p,
                tier=(SignificanceTier.NOT_SIGNIFICANT if diverged
                      else significance_tier(p, bonferroni_threshold)),
                n_used=n_used,
                separation_flag=diverged,
            ))

    order = {lvl: i for i, lvl in enumerate(predictor.levels)}
    results.sort(key=lambda r: order.get(r.level, len(order)))
    return results


# ---------------------------------------------------------------------------
# age comparison (Welch)
# ---------------------------------------------------------------------------

@dataclass
class AgeDifferenceResult:
    difference: float  # mean(flagged) - mean(unflagged)
    ci_low: float
    ci_high: float
    p_value: float | None
    n_flagged: int
    n_unflagged: int
    zero_variance: bool = False


def age_difference(outcome: Sequence[bool], ages: Sequence[float | None]) -> AgeDifferenceResult:
    """Welch two-sample comparison of ages between flagged and unflagged
    decedents; records missing age are excluded."""
    flags = np.asarray(outcome, dtype=bool)
    if len(flags) != len(ages):
        raise ValueError("outcome and ages length mismatch")
    grp1 = np.array([a for a, f in zip(ages, flags) if f and a is not None], dtype=float)
    grp0 = np.array([a for a, f in zip(ages, flags) if not f and a is not None], dtype=float)
    if len(grp1) < 2 or len(grp0) < 2:
        raise ValueError("each group needs at least 2 aged records")
    diff = float(grp1.mean() - grp0.mean())
    v1, v0 = grp1.var(ddof=1), grp0.var(ddof=1)
    n1, n0 = len(grp1), len(grp0)
    se_sq = v1 / n1 + v0 / n0
    if se_sq <= 0.0:
        return AgeDifferenceResult(
            difference=diff, ci_low=diff, ci_high=diff, p_value=None,
            n_flagged=n1, n_unflagged=n0, zero_variance=True,
        )
    se = math.sqrt(se_sq)
    df = se_sq**2 / ((v1 / n1) ** 2 / (n1 - 1) + (v0 / n0) ** 2 / (n0 - 1))
    t = diff / se
    p = 2.0 * float(spstats.t.sf(abs(t), df))
    crit = float(spstats.t.ppf(0.975, df))
    return AgeDifferenceResult(
        difference=diff, ci_low=diff - crit * se, ci_high=diff + crit * se,
        p_value=p, n_flagged=n1, n_unflagged=n0,
    )


# ---------------------------------------------------------------------------
# rates and trends
# ---------------------------------------------------------------------------

def rate_per_1000(count: int, total: int) -> float:
    """1000 * count / total, reported to 3 decimals."""
    if total <= 0:
        raise ValueError("total must be positive")
    if not 0 <= count <= total:
        raise ValueError("need 0 <= count <= total")
    return round(1000.0 * count / total, 3)


@dataclass
class RateSeries:
    topic: TopicId | None
    by_year: dict[int, float]  # unrounded rates per 1000
    overall: float             # unrounded


def yearly_trend(outcome: Sequence[bool], corpus: Corpus,
                 topic: TopicId | None = None) -> RateSeries:
    """Per-year flagged rate per 1000 decedents over the corpus years."""
    flags = np.asarray(outcome, dtype=bool)
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    if len(flags) != len(corpus):
        raise ValueError("outcome must align with the corpus")
    totals: dict[int, int] = {}
    hits: dict[int, int] = {}
    for rec, f in zip(corpus, flags):
        totals[rec.incident_year] = totals.get(rec.incident_year, 0) + 1
        if f:
            hits[rec.incident_year] = hits.get(rec.incident_year, 0) + 1
    years = sorted(totals)
    for gap in range(years[0], years[-1] + 1):
        if gap not in totals:
            warnings.warn(f"year {gap} has zero decedents; omitted from the trend",
                          RuntimeWarning)
    by_year = {y: 1000.0 * hits.get(y, 0) / totals[y] for y in years}
    overall = 1000.0 * sum(hits.values()) / len(corpus)
    return RateSeries(topic=topic, by_year=by_year, overall=overall)
