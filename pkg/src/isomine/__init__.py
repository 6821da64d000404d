"""Two-stage mining of social-isolation themes in death-investigation
narratives: theme discovery over circumstance summaries, regex lexicon
matching over full narratives, human/simulated annotation, supervised
refinement, and epidemiological rollups.
"""

__version__ = "0.1.0"

from .taxonomy import ALL_TOPICS, TopicId
from .corpus import (Corpus, DecedentRecord, NarrativeBundle, SyntheticConfig,
                     demographic_summary, generate_synthetic, load_corpus,
                     save_corpus)
from .lexicon import (Lexicon, MatchSet, compile_lexicon, default_lexicon,
                      match_corpus, match_rate_table, sample_for_annotation)
from .text import TfidfFeaturizer, TokenizedDoc, tokenize
from .decomposition import TruncatedSVD
from .cluster import KMeans
from .topics import (ThemeDiscovery, TopicHyperParams, default_grid,
                     grid_search_topics)
from .classifiers import (LogisticClassifier, ModelKind, MultinomialNaiveBayes,
                          RandomForest)
from .evaluation import (Metrics, bootstrap_ci, evaluate, select_best,
                         split_stratified)
from .stats import (OddsResult, Predictor, RateSeries, SignificanceTier,
                    age_difference, bivariate_logit, bonferroni, cohen_kappa,
                    rate_per_1000, standard_predictors, yearly_trend)
from .training import (HyperGrid, TrainedTopicModel, predict_matched,
                       train_topic)
from .pipeline import Run, RunConfig, SeedSet

__all__ = [
    "ALL_TOPICS", "TopicId", "Corpus", "DecedentRecord", "NarrativeBundle",
    "SyntheticConfig", "demographic_summary", "generate_synthetic",
    "load_corpus", "save_corpus", "Lexicon", "MatchSet", "compile_lexicon",
    "default_lexicon", "match_corpus", "match_rate_table",
    "sample_for_annotation", "TfidfFeaturizer", "TokenizedDoc", "tokenize",
    "TruncatedSVD", "KMeans", "ThemeDiscovery", "TopicHyperParams",
    "default_grid", "grid_search_topics", "LogisticClassifier", "ModelKind",
    "MultinomialNaiveBayes", "RandomForest", "Metrics", "bootstrap_ci",
    "evaluate", "select_best", "split_stratified", "OddsResult", "Predictor",
    "RateSeries", "SignificanceTier", "age_difference", "bivariate_logit",
    "bonferroni", "cohen_kappa", "rate_per_1000", "standard_predictors",
    "yearly_trend", "HyperGrid", "TrainedTopicModel", "predict_matched",
    "train_topic", "Run", "RunConfig", "SeedSet",
]
