import math

import numpy as np
import pytest

from isomine.text import TokenizedDoc, tokenize
from isomine.topics import (LeaderboardRow, ThemeDiscovery, TopicHyperParams,
                            ctfidf_top_terms, default_grid, grid_search_topics,
                            umass_coherence)


def docs_from(texts):
    return [TokenizedDoc(doc_id=str(i), tokens=tokenize(t)) for i, t in enumerate(texts)]


# ---------------------------------------------------------------------------
# c-TF-IDF
# ---------------------------------------------------------------------------

def test_term_exclusive_to_one_topic():
    docs = docs_from(["custody court custody", "eviction notice", "eviction letter"])
    assignments = [0, 1, 1]
    terms = ctfidf_top_terms(docs, assignments)
    topic0 = dict(terms[0])
    topic1 = dict(terms[1])
    assert topic0["custody"] > 0.0
    assert "custody" not in topic1


def test_single_topic_ranking_equals_frequency_ranking():
    docs = docs_from([
        "divorce divorce custody",
        "divorce eviction eviction custody",
        "custody divorce divorce",
    ])
    assignments = [0, 0, 0]
    terms = ctfidf_top_terms(docs, assignments, top_n=1000)
    ranked = [t for t, _ in terms[0]]
    # oracle: direct frequency count with the same lexicographic tie-break
    freq = {}
    for d in docs:
        for tok in d.tokens:
            freq[tok] = freq.get(tok, 0) + 1
    expected = [t for t, _ in sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))]
    assert ranked == expected


def test_weight_formula_direct_evaluation():
    docs = docs_from(["custody custody", "eviction"])
    assignments = [0, 1]
    terms = ctfidf_top_terms(docs, assignments)
    # A = (3 tokens in topic 0 + 1 in topic 1) / 2 topics = 2 tokens
    # topic 0 has tokens [custody, custody, "custody custody"]
    a = (3 + 1) / 2
    expected_custody = 2 * math.log(1 + a / 2)
    assert dict(terms[0])["custody"] == pytest.approx(expected_custody, abs=1e-12)


def test_top_n_larger_than_vocabulary_returns_all():
    docs = docs_from(["custody court", "eviction"])
    terms = ctfidf_top_terms(docs, [0, 0], top_n=10_000)
    # whole vocabulary: custody, court, "custody court", eviction
    assert len(terms[0]) == 4


def test_weights_non_negative_and_duplication_invariant():
    texts = ["custody court lost", "eviction notice move", "divorce spouse papers"]
    docs = docs_from(texts)
    assignments = [0, 1, 2]
    base = ctfidf_top_terms(docs, assignments, top_n=100)
    doubled = ctfidf_top_terms(docs + docs_from(texts), assignments + [0, 1, 2], top_n=100)
    for lbl in base:
        assert all(w >= 0.0 for _, w in base[lbl])
        assert [t for t, _ in base[lbl]] == [t for t, _ in doubled[lbl]]


# ---------------------------------------------------------------------------
# UMass coherence
# ---------------------------------------------------------------------------

def test_pair_cooccurring_in_all_docs():
    docs = docs_from(["custody court"] * 4)
    result = umass_coherence({0: ["custody", "court"]}, docs)
    assert result.score == pytest.approx(math.log(5 / 4), abs=1e-12)
    assert result.score > 0.0


def test_pair_never_cooccurring():
    # w_j = "custody" appears in 3 docs; w_i = "eviction" never with it
    docs = docs_from(["custody", "custody", "custody", "eviction"])
    result = umass_coherence({0: ["custody", "eviction"]}, docs)
    assert result.score == pytest.approx(math.log(1 / 3), abs=1e-12)


def test_coherence_deterministic():
    docs = docs_from(["custody court", "custody court hearing", "eviction"])
    terms = {0: ["custody", "court"], 1: ["eviction", "custody"]}
    r1 = umass_coherence(terms, docs)
    r2 = umass_coherence(terms, docs)
    assert r1.score == r2.score


def test_cooccurring_topic_beats_disjoint_topic():
    docs = docs_from(
        ["custody court ruling"] * 5 + ["eviction notice", "divorce papers"] * 3
    )
    together = umass_coherence({0: ["custody", "court", "ruling"]}, docs)
    disjoint = umass_coherence({0: ["eviction", "papers", "custody"]}, docs)
    assert together.score > disjoint.score


def test_skipped_pairs_counted_and_all_skipped_errors():
    docs = docs_from(["custody court"])
    result = umass_coherence({0: ["custody", "court", "unseen"]}, docs)
    # pairs with D(w_j)=0 would need unseen as w_j; unseen is last so never w_j
    assert result.skipped_pairs == 0
    with pytest.raises(ValueError, match="skipped"):
        umass_coherence({0: ["ghost", "phantom"]}, docs)


def test_fewer_than_two_terms_errors():
    docs = docs_from(["custody court"])
    with pytest.raises(ValueError, match="fewer than 2"):
        umass_coherence({0: ["custody"]}, docs)


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------

def theme_corpus(seed=0, n_per_theme=30, n_noise=40):
    rng = np.random.default_rng(seed)
    themes = {
        "custody": "lost custody children court hearing",
        "eviction": "eviction notice apartment landlord move",
        "divorce": "divorce spouse separation filing papers",
    }
    texts = []
    for words in themes.values():
        pool = words.split()
        for _ in range(n_per_theme):
            k = 3 + int(rng.integers(0, 3))
            texts.append(" ".join(rng.choice(pool, size=k, replace=False)))
    noise_pool = "report scene officers residence family evening statement".split()
    for _ in range(n_noise):
        texts.append(" ".join(rng.choice(noise_pool, size=3, replace=False)))
    return docs_from(texts)


def test_grid_of_one_returns_that_model():
    docs = theme_corpus()
    grid = [TopicHyperParams(n_components=3, n_clusters=4, min_cluster_size=2, seed=0)]
    best, leaderboard = grid_search_topics(docs, grid)
    assert len(leaderboard) == 1
    assert best.hyperparams == grid[0]


def test_leaderboard_matches_independent_recomputation():
    docs = theme_corpus()
    grid = [
        TopicHyperParams(n_components=2, n_clusters=3, min_cluster_size=2, seed=1),
        TopicHyperParams(n_components=3, n_clusters=4, min_cluster_size=2, seed=1),
        TopicHyperParams(n_components=3, n_clusters=5, min_cluster_size=3, seed=1),
    ]
    best, leaderboard = grid_search_topics(docs, grid)
    assert len(leaderboard) == len(grid)
    # oracle: recompute each combination independently
    recomputed = []
    for hp in grid:
        model = ThemeDiscovery(**{
            "n_components": hp.n_components, "n_clusters": hp.n_clusters,
            "min_cluster_size": hp.min_cluster_size, "seed": hp.seed,
        }).fit(docs)
        recomputed.append(model.coherence_)
    for row, expected in zip(leaderboard, recomputed):
        assert row.coherence == pytest.approx(expected, abs=1e-12)
    best_expected = max(
        range(len(grid)),
        key=lambda i: (recomputed[i], -leaderboard[i].n_topics, -i),
    )
    assert best.hyperparams == grid[best_expected]


def test_default_grid_has_54_combinations():
    assert len(default_grid()) == 54


def test_topic_sizes_sum_to_n_docs():
    docs = theme_corpus()
    model = ThemeDiscovery(n_components=3, n_clusters=4, min_cluster_size=5, seed=0).fit(docs)
    assert sum(t.size for t in model.result_.topics) == len(docs)
    for t in model.result_.topics:
        if t.label != -1:
            assert t.size >= 5


def test_empty_grid_errors():
    with pytest.raises(ValueError, match="empty"):
        grid_search_topics(theme_corpus(), [])


def test_grid_error_names_combination():
    docs = theme_corpus()
    bad = TopicHyperParams(n_components=3, n_clusters=50_000, min_cluster_size=1, seed=0)
    with pytest.raises(ValueError, match="n_clusters"):
        grid_search_topics(docs, [bad])
