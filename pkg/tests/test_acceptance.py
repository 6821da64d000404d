"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to stream them)."""

import csv
import hashlib
import json
import math
import random
import shutil
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from isomine.classifiers import MultinomialNaiveBayes, logistic_loss_gradient
from isomine.corpus import SyntheticConfig, generate_synthetic, percent_of
from isomine.evaluation import bootstrap_ci, evaluate
from isomine.pipeline import Run, RunConfig
from isomine.stats import bonferroni, cohen_kappa, irls_logit, rate_per_1000
from isomine.taxonomy import ALL_TOPICS, TopicId
from isomine.text import TokenizedDoc, tokenize
from isomine.topics import TopicHyperParams, default_grid, grid_search_topics
from isomine.training import HyperGrid
from isomine import _phrases

TOL = 1e-12  # guard for decimal-vs-binary rounding at stated tolerances


@contextmanager
def criterion(name):
    try:
        yield
    except Exception:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


# ---------------------------------------------------------------------------
# 1. rate arithmetic
# ---------------------------------------------------------------------------

def test_rate_arithmetic():
    with criterion("rate arithmetic"):
        assert abs(rate_per_1000(1198, 306817) - 3.905) <= 0.001 + TOL
        assert abs(rate_per_1000(12311, 306817) - 40.126) <= 0.001 + TOL
        assert abs(rate_per_1000(1231, 306817) - 4.012) <= 0.001 + TOL
        fraction = round(9468 / 29977, 3)
        assert abs(fraction - 0.316) <= 0.001 + TOL


# ---------------------------------------------------------------------------
# 2. table-1 arithmetic
# ---------------------------------------------------------------------------

def test_table1_arithmetic():
    with criterion("table 1 arithmetic"):
        assert percent_of(239616, 306817, decimals=1) == 78.1
        assert percent_of(1198, 306817, decimals=2) == 0.39


# ---------------------------------------------------------------------------
# 3. OR oracle equivalence
# ---------------------------------------------------------------------------

def test_or_oracle_equivalence():
    with criterion("OR oracle equivalence"):
        start = time.time()
        rng = np.random.default_rng(20240817)
        for _ in range(200):
            a, b, c, d = (int(rng.integers(5, 501)) for _ in range(4))
            X = np.ones((a + b + c + d, 2))
            X[a + b:, 1] = 0.0
            y = np.concatenate([np.ones(a), np.zeros(b), np.ones(c), np.zeros(d)])
            beta, se, _, _ = irls_logit(X, y)
            closed_or = a * d / (b * c)
            woolf = math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
            assert abs(math.exp(beta[1]) - closed_or) <= 1e-6 * closed_or
            assert abs(se[1] - woolf) <= 1e-6 * woolf
        assert abs(bonferroni(0.05, 30) - 0.0016667) < 1e-7
        assert time.time() - start < 10.0


# ---------------------------------------------------------------------------
# 4. kappa vs brute force
# ---------------------------------------------------------------------------

def brute_force_kappa(a, b):
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    pa1 = sum(a) / n
    pb1 = sum(b) / n
    p_e = pa1 * pb1 + (1 - pa1) * (1 - pb1)
    if p_e == 1.0:
        return p_o, None
    return p_o, (p_o - p_e) / (1 - p_e)


def test_kappa_oracle():
    with criterion("kappa oracle"):
        start = time.time()
        rng = np.random.default_rng(4242)
        for _ in range(1000):
            a = rng.integers(0, 2, 50).tolist()
            b = rng.integers(0, 2, 50).tolist()
            p_o, expected = brute_force_kappa(a, b)
            result = cohen_kappa(a, b)
            assert abs(result.percent_agreement - p_o) <= 1e-12
            if expected is None:
                assert result.kappa is None
            else:
                assert abs(result.kappa - expected) <= 1e-12
        degenerate = cohen_kappa([1] * 50, [1] * 50)
        assert degenerate.kappa is None and degenerate.percent_agreement == 1.0
        assert time.time() - start < 5.0


# ---------------------------------------------------------------------------
# 5. classifier numerics
# ---------------------------------------------------------------------------

def brute_force_metrics(preds, labels):
    tp = sum(1 for p, y in zip(preds, labels) if p == 1 and y == 1)
    fp = sum(1 for p, y in zip(preds, labels) if p == 1 and y == 0)
    fn = sum(1 for p, y in zip(preds, labels) if p == 0 and y == 1)
    tn = sum(1 for p, y in zip(preds, labels) if p == 0 and y == 0)

    def prf(tp_, fp_, fn_):
        prec = tp_ / (tp_ + fp_) if tp_ + fp_ else 0.0
        rec = tp_ / (tp_ + fn_) if tp_ + fn_ else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        return prec, rec, f1

    pp, rp, f1p = prf(tp, fp, fn)
    pn, rn, f1n = prf(tn, fn, fp)
    return {"accuracy": (tp + tn) / len(labels), "precision_pos": pp,
            "recall_pos": rp, "f1_pos": f1p, "macro_precision": (pp + pn) / 2,
            "macro_recall": (rp + rn) / 2, "macro_f1": (f1p + f1n) / 2}


def test_classifier_numerics():
    with criterion("classifier numerics"):
        start = time.time()
        # (a) analytic gradient vs central finite differences on 10x8
        rng = np.random.default_rng(77)
        h = 1e-5
        for _ in range(20):
            X = rng.standard_normal((10, 8))
            y = rng.integers(0, 2, 10)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            w = rng.standard_normal(8)
            b = float(rng.standard_normal())
            C = float(rng.uniform(0.05, 5.0))
            _, gw, gb = logistic_loss_gradient(w, b, X, y, C)
            for j in range(8):
                e = np.zeros(8)
                e[j] = h
                lp = logistic_loss_gradient(w + e, b, X, y, C)[0]
                lm = logistic_loss_gradient(w - e, b, X, y, C)[0]
                fd = (lp - lm) / (2 * h)
                assert abs(fd - gw[j]) / max(abs(fd), 1e-12) < 1e-4
            fd_b = (logistic_loss_gradient(w, b + h, X, y, C)[0]
                    - logistic_loss_gradient(w, b - h, X, y, C)[0]) / (2 * h)
            assert abs(fd_b - gb) / max(abs(fd_b), 1e-12) < 1e-4
        # (b) NB toy likelihood (2+1)/(4+5) = 1/3 exact
        X_toy = np.array([[0, 0, 1, 1, 0], [1, 0, 1, 0, 0], [0, 1, 0, 0, 1]])
        nb = MultinomialNaiveBayes(alpha=1.0).fit(X_toy, np.array([1, 1, 0]))
        assert abs(math.exp(nb.feature_log_prob_[1, 2]) - 1 / 3) <= 1e-12
        # (c) evaluate vs brute-force confusion arithmetic, 1000 random vectors
        for _ in range(1000):
            n = int(rng.integers(1, 60))
            preds = rng.integers(0, 2, n)
            labels = rng.integers(0, 2, n)
            ours = evaluate(preds, labels).as_dict()
            expected = brute_force_metrics(preds.tolist(), labels.tolist())
            for name, value in expected.items():
                assert abs(ours[name] - value) <= 1e-12, name
        assert time.time() - start < 30.0


# ---------------------------------------------------------------------------
# 6. bootstrap contracts
# ---------------------------------------------------------------------------

def oracle_bootstrap(preds, labels, iterations, fraction, seed):
    """Independent reimplementation: stdlib RNG, hand-rolled percentiles."""
    rnd = random.Random(seed)
    n = len(labels)
    take = math.ceil(fraction * n)
    accs, mf1s = [], []
    for _ in range(iterations):
        idx = rnd.sample(range(n), take)
        m = brute_force_metrics([preds[i] for i in idx], [labels[i] for i in idx])
        accs.append(m["accuracy"])
        mf1s.append(m["macro_f1"])

    def pct(values, q):
        values = sorted(values)
        pos = (len(values) - 1) * q / 100.0
        lo = math.floor(pos)
        hi = math.ceil(pos)
        return values[lo] + (values[hi] - values[lo]) * (pos - lo)

    return ((pct(accs, 2.5), pct(accs, 97.5)), (pct(mf1s, 2.5), pct(mf1s, 97.5)))


def test_bootstrap_contracts():
    with criterion("bootstrap"):
        start = time.time()
        y = np.array([1, 0, 1, 0, 1, 1, 0, 1, 0, 1] * 3)
        all_correct = bootstrap_ci(y, y, iterations=300, seed=0)
        assert all(ci == (1.0, 1.0) for ci in all_correct.ci.values())

        rng = np.random.default_rng(3)
        labels = rng.integers(0, 2, 40)
        preds = rng.integers(0, 2, 40)
        collapsed = bootstrap_ci(preds, labels, iterations=100, fraction=1.0, seed=1)
        point = evaluate(preds, labels)
        for name, (lo, hi) in collapsed.ci.items():
            assert abs(lo - getattr(point, name)) <= 1e-12
            assert abs(hi - getattr(point, name)) <= 1e-12

        n = 200
        labels = np.ones(n, dtype=int)
        labels[: n // 2] = 0
        preds = labels.copy()
        flip = rng.permutation(n)[: n // 5]
        preds[flip] = 1 - preds[flip]
        ours = bootstrap_ci(preds, labels, iterations=1000, fraction=0.8, seed=7)
        (acc_lo, acc_hi), (mf1_lo, mf1_hi) = oracle_bootstrap(
            preds.tolist(), labels.tolist(), 1000, 0.8, seed=123)
        assert abs(ours.ci["accuracy"][0] - acc_lo) <= 0.02
        assert abs(ours.ci["accuracy"][1] - acc_hi) <= 0.02
        assert abs(ours.ci["macro_f1"][0] - mf1_lo) <= 0.02
        assert abs(ours.ci["macro_f1"][1] - mf1_hi) <= 0.02
        assert time.time() - start < 30.0


# ---------------------------------------------------------------------------
# 7. end-to-end synthetic pipeline
# ---------------------------------------------------------------------------

def acceptance_run_config(out: str) -> RunConfig:
    return RunConfig(
        output_dir=out,
        synthetic=SyntheticConfig(n_records=20000, seed=42, topic_prevalence={
            TopicId.BREAK_UP: 0.040,
            TopicId.DIVORCE: 0.050,
            TopicId.EVICTION_MOVE: 0.030,
            TopicId.CHILD_CUSTODY_LOSS: 0.004,
            TopicId.CHRONIC_SOCIAL_ISOLATION: 0.004,
            TopicId.PET_LOSS: 0.004,
        }),
        topic_grid=[
            TopicHyperParams(n_components=10, n_clusters=20, min_cluster_size=5),
            TopicHyperParams(n_components=15, n_clusters=24, min_cluster_size=5),
        ],
        classifier_grid=HyperGrid(rf_n_estimators=(100,), rf_max_depth=(None,),
                                  rf_min_samples_split=(2,)),
    )


def tree_digests(root):
    out = {}
    for p in sorted(Path(root).rglob("*")):
        if p.is_file() and p.name not in ("manifest.json", "config.json"):
            out[str(p.relative_to(root))] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


def test_end_to_end_synthetic_pipeline(tmp_path):
    with criterion("end-to-end synthetic pipeline"):
        dirs = [str(tmp_path / "run_a"), str(tmp_path / "run_b")]
        runs = []
        for out in dirs:
            start = time.time()
            run = Run(acceptance_run_config(out))
            run.execute()
            elapsed = time.time() - start
            assert elapsed < 300.0, f"run took {elapsed:.0f}s"
            runs.append(run)

        assert tree_digests(dirs[0]) == tree_digests(dirs[1])

        corpus = runs[0].load_corpus()
        with (runs[0].report_dir / "supp_table2_predictions.csv").open() as fh:
            recovered = {row["topic"]: float(row["rate_per_1000"])
                         for row in csv.DictReader(fh)}
        for topic in ALL_TOPICS:
            planted = sum(1 for r in corpus if r.ground_truth[topic])
            planted_rate = 1000.0 * planted / len(corpus)
            rel = abs(recovered[topic.name] - planted_rate) / planted_rate
            assert rel <= 0.15, (topic.name, recovered[topic.name], planted_rate)

        meta = json.loads((runs[0].dir / "training_meta.json").read_text())
        for topic, kinds in meta["test_macro_f1"].items():
            best = max(kinds["NAIVE_BAYES"], kinds["LOGISTIC_REGRESSION"])
            assert best >= 0.9, (topic, kinds)


# ---------------------------------------------------------------------------
# 8. topic discovery sanity
# ---------------------------------------------------------------------------

def test_topic_discovery_sanity():
    with criterion("topic discovery sanity"):
        start = time.time()
        cfg = SyntheticConfig(n_records=4000, seed=7, summary_presence_rate=0.6,
                              topic_prevalence={t: 0.06 for t in ALL_TOPICS})
        corpus = generate_synthetic(cfg)
        docs = []
        for rec in corpus:
            for name in ("le_summary", "cme_summary"):
                text = getattr(rec.narratives, name)
                if text:
                    docs.append(TokenizedDoc(doc_id=f"{rec.id}:{name}",
                                             tokens=tokenize(text)))
        grid = default_grid(seed=101)
        best, leaderboard = grid_search_topics(docs, grid)
        assert len(leaderboard) == len(grid) == 54

        planted = {}
        for topic in ALL_TOPICS:
            unis = set()
            for phrase in _phrases.TOPIC_PHRASES[topic]["summary_phrases"]:
                unis.update(t for t in tokenize(phrase) if " " not in t)
            planted[topic] = unis
        hits = 0
        for topic in ALL_TOPICS:
            hits += any(
                len({term for term, _ in ts.top_terms[:10]} & planted[topic]) >= 2
                for ts in best.topics if ts.label != -1)
        assert hits >= 5, f"only {hits} of 6 themes recovered"
        assert time.time() - start < 120.0


# ---------------------------------------------------------------------------
# 9. synthetic association recovery
# ---------------------------------------------------------------------------

def test_synthetic_association_recovery():
    with criterion("synthetic association recovery"):
        start = time.time()
        threshold = bonferroni(0.05, 30)
        hits = 0
        for i in range(100):
            cfg = SyntheticConfig(
                n_records=3500, seed=9000 + i,
                topic_prevalence={TopicId.CHRONIC_SOCIAL_ISOLATION: 0.08},
                association_multipliers={
                    TopicId.CHRONIC_SOCIAL_ISOLATION: {"sex": {"MALE": 3.5}}},
                summary_presence_rate=0.0, narrative_presence_rate=0.15,
            )
            corpus = generate_synthetic(cfg)
            y = np.array([r.ground_truth[TopicId.CHRONIC_SOCIAL_ISOLATION]
                          for r in corpus], dtype=float)
            male = np.array([r.sex.value == "MALE" for r in corpus], dtype=float)
            keep = np.array([r.sex.value != "UNKNOWN" for r in corpus])
            X = np.column_stack([np.ones(int(keep.sum())), male[keep]])
            beta, se, _, _ = irls_logit(X, y[keep])
            p = math.erfc(abs(beta[1] / se[1]) / math.sqrt(2.0))
            if beta[1] > 0 and p < threshold:
                hits += 1
        assert hits >= 95, f"significant in only {hits}/100 replications"
        assert time.time() - start < 120.0
