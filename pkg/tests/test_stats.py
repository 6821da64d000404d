import math

import numpy as np
import pytest
from scipy import stats as spstats

from conftest import make_corpus, make_record
from isomine.corpus import Sex
from isomine.stats import (AgreementResult, Predictor, SignificanceTier,
                           age_difference, bivariate_logit, bonferroni,
                           cohen_kappa, irls_logit, rate_per_1000,
                           significance_tier, standard_predictors,
                           yearly_trend)
from isomine.taxonomy import TopicId

# ---------------------------------------------------------------------------
# Cohen's kappa
# ---------------------------------------------------------------------------

def seq_from_table(a, b, c, d):
    """Label pairs from a 2x2 agreement table (a=yes/yes ... d=no/no)."""
    ra = [1] * a + [1] * b + [0] * c + [0] * d
    rb = [1] * a + [0] * b + [1] * c + [0] * d
    return ra, rb


def test_kappa_perfect_agreement():
    ra = [1, 0, 1, 0, 1]
    result = cohen_kappa(ra, ra)
    assert result.percent_agreement == 1.0
    assert result.kappa == pytest.approx(1.0)


def test_kappa_na_for_dual_all_positive():
    result = cohen_kappa([1] * 50, [1] * 50)
    assert result.percent_agreement == 1.0
    assert result.kappa is None
    assert result.p_value is None


def test_kappa_2x2_table_direct_formula():
    ra, rb = seq_from_table(20, 5, 5, 20)
    result = cohen_kappa(ra, rb)
    assert result.percent_agreement == pytest.approx(0.8)
    assert result.kappa == pytest.approx(0.6, abs=1e-12)


def test_kappa_zero_when_agreement_equals_chance():
    ra, rb = seq_from_table(1, 1, 1, 1)
    result = cohen_kappa(ra, rb)
    assert result.kappa == pytest.approx(0.0, abs=1e-12)


def brute_force_kappa(a_labels, b_labels):
    n = len(a_labels)
    p_o = sum(1 for x, y in zip(a_labels, b_labels) if x == y) / n
    pa1 = sum(a_labels) / n
    pb1 = sum(b_labels) / n
    p_e = pa1 * pb1 + (1 - pa1) * (1 - pb1)
    if p_e == 1.0:
        return p_o, None
    return p_o, (p_o - p_e) / (1 - p_e)


def test_kappa_matches_brute_force_on_random_pairs():
    rng = np.random.default_rng(77)
    for _ in range(300):
        a = rng.integers(0, 2, 50).tolist()
        b = rng.integers(0, 2, 50).tolist()
        p_o, kappa = brute_force_kappa(a, b)
        result = cohen_kappa(a, b)
        assert result.percent_agreement == pytest.approx(p_o, abs=1e-12)
        if kappa is None:
            assert result.kappa is None
        else:
            assert result.kappa == pytest.approx(kappa, abs=1e-12)


def test_kappa_length_mismatch_errors():
    with pytest.raises(ValueError, match="length"):
        cohen_kappa([1, 0], [1])


# ---------------------------------------------------------------------------
# IRLS odds ratios
# ---------------------------------------------------------------------------

def table_design(a, b, c, d):
    """exposed: a cases / b noncases; unexposed: c cases / d noncases."""
    X = np.ones((a + b + c + d, 2))
    X[a + b:, 1] = 0.0
    y = np.concatenate([np.ones(a), np.zeros(b), np.ones(c), np.zeros(d)])
    return X, y


def test_irls_matches_closed_form_cross_product():
    X, y = table_design(30, 70, 10, 90)
    beta, se, converged, separation = irls_logit(X, y)
    assert converged and not separation
    assert math.exp(beta[1]) == pytest.approx((30 * 90) / (70 * 10), rel=1e-8)
    woolf = math.sqrt(1 / 30 + 1 / 70 + 1 / 10 + 1 / 90)
    assert se[1] == pytest.approx(woolf, rel=1e-8)
    lo = math.exp(beta[1] - 1.96 * se[1])
    hi = math.exp(beta[1] + 1.96 * se[1])
    assert lo == pytest.approx(1.77, abs=0.01)
    assert hi == pytest.approx(8.42, abs=0.01)


def test_irls_random_tables_match_woolf():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        a, b, c, d = (int(rng.integers(5, 501)) for _ in range(4))
        X, y = table_design(a, b, c, d)
        beta, se, _, _ = irls_logit(X, y)
        assert math.exp(beta[1]) == pytest.approx(a * d / (b * c), rel=1e-6)
        assert se[1] == pytest.approx(math.sqrt(1/a + 1/b + 1/c + 1/d), rel=1e-6)


def sexed_corpus(male_cases, male_non, female_cases, female_non):
    records = []
    outcome = []
    for sex, n_case, n_non in ((Sex.MALE, male_cases, male_non),
                               (Sex.FEMALE, female_cases, female_non)):
        for _ in range(n_case):
            records.append(make_record(sex=sex))
            outcome.append(True)
        for _ in range(n_non):
            records.append(make_record(sex=sex))
            outcome.append(False)
    return make_corpus(records), outcome


def sex_predictor(reference=Sex.FEMALE.value, level=Sex.MALE.value):
    return Predictor("sex", lambda r: r.sex.value, reference=reference,
                     levels=(level,), excluded=frozenset({Sex.UNKNOWN.value}))


def test_bivariate_logit_sex_predictor():
    corpus, outcome = sexed_corpus(30, 70, 10, 90)
    results = bivariate_logit(outcome, sex_predictor(), corpus,
                              topic=TopicId.BREAK_UP)
    assert len(results) == 1
    r = results[0]
    assert r.odds_ratio == pytest.approx(3.857, abs=0.001)
    assert r.ci_low == pytest.approx(1.77, abs=0.01)
    assert r.ci_high == pytest.approx(8.42, abs=0.01)
    assert r.ci_low <= r.odds_ratio <= r.ci_high
    assert not r.separation_flag


def test_bivariate_logit_reciprocal_under_reference_swap():
    corpus, outcome = sexed_corpus(25, 75, 12, 88)
    forward = bivariate_logit(outcome, sex_predictor(), corpus)[0]
    backward = bivariate_logit(
        outcome, sex_predictor(reference=Sex.MALE.value, level=Sex.FEMALE.value),
        corpus)[0]
    assert forward.odds_ratio * backward.odds_ratio == pytest.approx(1.0, abs=1e-9)


def test_bivariate_logit_zero_event_level():
    corpus, outcome = sexed_corpus(0, 50, 20, 80)  # no male cases
    r = bivariate_logit(outcome, sex_predictor(), corpus)[0]
    assert r.odds_ratio == 0.0
    assert (r.ci_low, r.ci_high) == (0.0, 0.0)
    assert r.separation_flag
    assert r.tier is SignificanceTier.NOT_SIGNIFICANT


def test_bivariate_logit_excludes_unknown():
    corpus, outcome = sexed_corpus(20, 60, 10, 70)
    extra = [make_record(sex=Sex.UNKNOWN) for _ in range(15)]
    big = make_corpus(list(corpus.records) + extra)
    results = bivariate_logit(outcome + [True] * 15, sex_predictor(), big)
    assert results[0].n_used == 160


def test_bivariate_logit_wald_coverage():
    # predictor independent of the outcome: nominal 95% CIs should cover
    # OR=1 in >= 93 of 100 seeded replications
    rng = np.random.default_rng(31)
    covered = 0
    for _ in range(100):
        n = 400
        exposed = rng.random(n) < 0.5
        case = rng.random(n) < 0.25
        X = np.column_stack([np.ones(n), exposed.astype(float)])
        beta, se, _, sep = irls_logit(X, case.astype(float))
        if sep:
            continue
        lo = math.exp(beta[1] - 1.96 * se[1])
        hi = math.exp(beta[1] + 1.96 * se[1])
        if lo <= 1.0 <= hi:
            covered += 1
    assert covered >= 93


def test_continuous_predictor_per_unit_or():
    records, outcome = [], []
    rng = np.random.default_rng(8)
    for _ in range(400):
        subs = int(rng.integers(0, 6))
        p = 1 / (1 + math.exp(-(-2.0 + 0.5 * subs)))
        records.append(make_record(num_substances=subs))
        outcome.append(bool(rng.random() < p))
    corpus = make_corpus(records)
    pred = [p for p in standard_predictors() if p.name == "num_substances"][0]
    results = bivariate_logit(outcome, pred, corpus)
    assert len(results) == 1
    assert results[0].level == "per_unit"
    assert math.log(results[0].odds_ratio) == pytest.approx(0.5, abs=0.2)


def test_standard_predictors_reference_levels():
    refs = {p.name: p.reference for p in standard_predictors()}
    assert refs["sex"] == "FEMALE"
    assert refs["race_ethnicity"] == "WHITE"
    assert refs["sexual_orientation"] == "HETEROSEXUAL"
    assert refs["marital_status"] == "MARRIED"
    assert refs["relationship_status"] == "IN_RELATIONSHIP"


# ---------------------------------------------------------------------------
# bonferroni
# ---------------------------------------------------------------------------

def test_bonferroni_thresholds():
    assert bonferroni(0.05, 30) == pytest.approx(0.0016667, abs=1e-7)
    assert bonferroni(0.05, 1) == 0.05


def test_significance_tiering():
    threshold = bonferroni(0.05, 30)
    assert significance_tier(0.001, threshold) is SignificanceTier.BONFERRONI
    assert significance_tier(0.00005, threshold) is SignificanceTier.STRONG
    assert significance_tier(0.01, threshold) is SignificanceTier.NOT_SIGNIFICANT


def test_tiering_monotone_in_p():
    threshold = bonferroni(0.05, 30)
    rank = {SignificanceTier.NOT_SIGNIFICANT: 0, SignificanceTier.BONFERRONI: 1,
            SignificanceTier.STRONG: 2}
    ps = np.linspace(1e-6, 0.2, 100)
    tiers = [rank[significance_tier(p, threshold)] for p in ps]
    assert all(a >= b for a, b in zip(tiers, tiers[1:]))


# ---------------------------------------------------------------------------
# age difference (Welch)
# ---------------------------------------------------------------------------

def test_age_identical_multisets():
    ages = [30, 40, 50, 60] * 2
    flags = [True] * 4 + [False] * 4
    result = age_difference(flags, ages)
    assert result.difference == pytest.approx(0.0)
    assert result.p_value == pytest.approx(1.0)


def test_age_zero_variance_groups():
    flags = [True] * 4 + [False] * 4
    ages = [30, 30, 30, 30, 40, 40, 40, 40]
    result = age_difference(flags, ages)
    assert result.difference == pytest.approx(-10.0)
    assert result.zero_variance
    assert result.ci_low == result.ci_high == pytest.approx(-10.0)


def test_age_shift_recovered_with_oracle_pvalue():
    rng = np.random.default_rng(99)
    flagged = rng.normal(30.0, 10.0, 500)
    unflagged = rng.normal(45.0, 10.0, 500)
    ages = np.concatenate([flagged, unflagged]).tolist()
    flags = [True] * 500 + [False] * 500
    result = age_difference(flags, ages)
    assert result.difference == pytest.approx(-15.0, abs=1.5)
    assert result.p_value < 1e-10
    # oracle: independent Welch t computation
    t, p = spstats.ttest_ind(flagged, unflagged, equal_var=False)
    assert result.p_value == pytest.approx(float(p), rel=1e-9)
    assert result.ci_low < result.difference < result.ci_high


def test_age_missing_excluded_and_small_group_errors():
    flags = [True, True, False, False, False]
    ages = [30, None, 40, 42, None]
    with pytest.raises(ValueError, match="at least 2"):
        age_difference(flags, ages)


# ---------------------------------------------------------------------------
# rates and trends
# ---------------------------------------------------------------------------

def test_rate_per_1000_reported_values():
    assert rate_per_1000(1198, 306817) == pytest.approx(3.905, abs=1e-9)
    assert rate_per_1000(1231, 306817) == pytest.approx(4.012, abs=1e-9)
    assert rate_per_1000(0, 100) == 0.0


def test_rate_per_1000_validation():
    with pytest.raises(ValueError):
        rate_per_1000(5, 0)
    with pytest.raises(ValueError):
        rate_per_1000(10, 5)


def test_yearly_trend_direct_ratio():
    records = [make_record(incident_year=2005) for _ in range(10)]
    flags = [True] + [False] * 9
    series = yearly_trend(flags, make_corpus(records))
    assert series.by_year == {2005: pytest.approx(100.0)}
    assert series.overall == pytest.approx(100.0)


def test_yearly_trend_weighted_mean_recovers_overall():
    rng = np.random.default_rng(13)
    records, flags = [], []
    for _ in range(500):
        records.append(make_record(incident_year=int(rng.integers(2002, 2021))))
        flags.append(bool(rng.random() < 0.1))
    corpus = make_corpus(records)
    series = yearly_trend(flags, corpus)
    totals = {}
    hits = {}
    for rec, f in zip(corpus, flags):
        totals[rec.incident_year] = totals.get(rec.incident_year, 0) + 1
        hits[rec.incident_year] = hits.get(rec.incident_year, 0) + int(f)
    weighted = 1000.0 * sum(hits.values()) / sum(totals.values())
    assert series.overall == pytest.approx(weighted, abs=1e-9)


def test_yearly_trend_uniform_prevalence_within_binomial_band():
    rng = np.random.default_rng(21)
    p = 0.08
    records, flags = [], []
    for year in range(2002, 2012):
        for _ in range(400):
            records.append(make_record(incident_year=year))
            flags.append(bool(rng.random() < p))
    series = yearly_trend(flags, make_corpus(records))
    lo = spstats.binom.ppf(0.0005, 400, p) / 400 * 1000
    hi = spstats.binom.ppf(0.9995, 400, p) / 400 * 1000
    for year, rate in series.by_year.items():
        assert lo <= rate <= hi, year


def test_yearly_trend_gap_year_warns():
    records = [make_record(incident_year=2002) for _ in range(3)]
    records += [make_record(incident_year=2004) for _ in range(3)]
    with pytest.warns(RuntimeWarning, match="2003"):
        yearly_trend([False] * 6, make_corpus(records))
