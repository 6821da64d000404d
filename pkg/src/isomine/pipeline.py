"""Run orchestration: configuration, resumable stage manifest, simulated
annotation for synthetic corpora, and the report bundle.

Every byte any stage writes is a pure function of the run config, so two
runs with identical configs produce identical artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import shutil
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .corpus import (Corpus, SyntheticConfig, demographic_summary,
                     generate_synthetic, load_corpus, save_corpus)
from .lexicon import (AnnotationBatch, AnnotationItem, Lexicon, MatchSet,
                      compile_lexicon, default_lexicon, export_matches_csv,
                      match_corpus, match_rate_table, sample_for_annotation)
from .stats import (RateSeries, age_difference, bivariate_logit, bonferroni,
                    cohen_kappa, rate_per_1000, standard_predictors,
                    yearly_trend)
from .taxonomy import ALL_TOPICS, TopicId
from .text import TokenizedDoc, tokenize
from .topics import TopicHyperParams, default_grid, grid_search_topics
from .training import (ADJUDICATOR_ID, AnnotationLabel, HyperGrid, LabeledText,
                       TopicTrainingResult, TrainedTopicModel, append_labels_csv,
                       consensus_labels, labeled_texts, load_models_json,
                       predict_matched, read_labels_csv, save_models_json,
                       train_topic)

logger = logging.getLogger(__name__)

AUTO_TIMESTAMP = "1970-01-01T00:00:00Z"
AUTO_ANNOTATORS = ("A1", "A2")

STAGES = ("corpus", "topics", "match", "sample", "labels", "train",
          "predict", "analyze", "report")


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


class AwaitingLabels(RuntimeError):
    """The run paused at the labels stage until labels are imported."""


@dataclass
class SeedSet:
    corpus: int = 42
    topics: int = 101
    sampling: int = 202
    split: int = 303
    models: int = 404
    bootstrap: int = 505
    annotators: int = 606

    def to_dict(self) -> dict:
        return self.__dict__.copy()

    @classmethod
    def from_dict(cls, obj: Mapping) -> "SeedSet":
        return cls(**{k: int(v) for k, v in obj.items()})


@dataclass
class RunConfig:
    output_dir: str
    corpus_path: str | None = None
    synthetic: SyntheticConfig | None = None
    lexicon_path: str | None = None
    topic_grid: list[TopicHyperParams] = field(default_factory=default_grid)
    topic_min_df: int = 2
    classifier_grid: HyperGrid = field(default_factory=HyperGrid)
    annotation_sample_size: int = 100
    agreement_prefix_size: int = 50
    bootstrap_iterations: int = 1000
    bootstrap_fraction: float = 0.8
    bootstrap_test_only: bool = False
    seeds: SeedSet = field(default_factory=SeedSet)
    bonferroni_m: int = 30
    include_pet_loss_in_stats: bool = False
    auto_label_from_ground_truth: bool | None = None  # default: synthetic only
    annotator_flip_rate: float = 0.0
    year_window: tuple[int, int] = (2002, 2020)

    def __post_init__(self):
        if (self.corpus_path is None) == (self.synthetic is None):
            raise ValueError("config needs exactly one of corpus_path or synthetic")
        if self.annotation_sample_size <= 0:
            raise ValueError("annotation_sample_size must be positive")
        if not 0.0 <= self.annotator_flip_rate <= 1.0:
            raise ValueError("annotator_flip_rate outside [0, 1]")

    @property
    def auto_label(self) -> bool:
        if self.auto_label_from_ground_truth is None:
            return self.synthetic is not None
        return self.auto_label_from_ground_truth

    def to_dict(self) -> dict:
        return {
            "output_dir": self.output_dir,
            "corpus_path": self.corpus_path,
            "synthetic": None if self.synthetic is None else self.synthetic.to_dict(),
            "lexicon_path": self.lexicon_path,
            "topic_grid": [
                {"n_components": hp.n_components, "n_clusters": hp.n_clusters,
                 "min_cluster_size": hp.min_cluster_size, "seed": hp.seed}
                for hp in self.topic_grid
            ],
            "topic_min_df": self.topic_min_df,
            "classifier_grid": self.classifier_grid.to_dict(),
            "annotation_sample_size": self.annotation_sample_size,
            "agreement_prefix_size": self.agreement_prefix_size,
            "bootstrap": {"iterations": self.bootstrap_iterations,
                          "fraction": self.bootstrap_fraction,
                          "test_only": self.bootstrap_test_only},
            "seeds": self.seeds.to_dict(),
            "bonferroni_m": self.bonferroni_m,
            "include_pet_loss_in_stats": self.include_pet_loss_in_stats,
            "auto_label_from_ground_truth": self.auto_label_from_ground_truth,
            "annotator_flip_rate": self.annotator_flip_rate,
            "year_window": list(self.year_window),
        }

    @classmethod
    def from_dict(cls, obj: Mapping, seed_set: str = "default") -> "RunConfig":
        obj = dict(obj)
        seeds = SeedSet()
        if "seed_sets" in obj:
            sets = obj.pop("seed_sets")
            if seed_set not in sets:
                raise ValueError(f"seed set {seed_set!r} not in config "
                                 f"(available: {sorted(sets)})")
            seeds = SeedSet.from_dict(sets[seed_set])
        elif "seeds" in obj:
            seeds = SeedSet.from_dict(obj.pop("seeds"))
        bootstrap = obj.pop("bootstrap", {})
        grid = obj.pop("topic_grid", None)
        topic_grid = (default_grid() if grid is None else [
            TopicHyperParams(**hp) for hp in grid
        ])
        synthetic = obj.pop("synthetic", None)
        return cls(
            output_dir=obj.get("output_dir", "run"),
            corpus_path=obj.get("corpus_path"),
            synthetic=None if synthetic is None else SyntheticConfig.from_dict(synthetic),
            lexicon_path=obj.get("lexicon_path"),
            topic_grid=topic_grid,
            topic_min_df=int(obj.get("topic_min_df", 2)),
            classifier_grid=HyperGrid.from_dict(obj.get("classifier_grid", {})),
            annotation_sample_size=int(obj.get("annotation_sample_size", 100)),
            agreement_prefix_size=int(obj.get("agreement_prefix_size", 50)),
            bootstrap_iterations=int(bootstrap.get("iterations", 1000)),
            bootstrap_fraction=float(bootstrap.get("fraction", 0.8)),
            bootstrap_test_only=bool(bootstrap.get("test_only", False)),
            seeds=seeds,
            bonferroni_m=int(obj.get("bonferroni_m", 30)),
            include_pet_loss_in_stats=bool(obj.get("include_pet_loss_in_stats", False)),
            auto_label_from_ground_truth=obj.get("auto_label_from_ground_truth"),
            annotator_flip_rate=float(obj.get("annotator_flip_rate", 0.0)),
            year_window=tuple(obj.get("year_window", (2002, 2020))),
        )


def _digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _digest_file(path: Path) -> str:
    return _digest_bytes(path.read_bytes())


def config_digest(config: RunConfig) -> str:
    """Content hash of the config, ignoring where the run is written."""
    basis = config.to_dict()
    basis.pop("output_dir", None)
    return _digest_bytes(json.dumps(basis, sort_keys=True).encode("utf-8"))


class Run:
    """A run directory plus its manifest; stages execute in order and are
    skipped on resume when already completed with matching input digests."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.dir = Path(config.output_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.report_dir = self.dir / "report"
        self.manifest_path = self.dir / "manifest.json"
        self.run_id = config_digest(config)[:16]
        if self.manifest_path.exists():
            self.manifest = json.loads(self.manifest_path.read_text())
            if self.manifest["digests"]["config"] != config_digest(config):
                raise StageError("corpus", "config changed since this run directory "
                                 "was created; use a fresh output dir")
        else:
            self.manifest = {
                "run_id": self.run_id,
                "tool_version": __version__,
                "digests": {"config": config_digest(config)},
                "stages": {name: {"completed": False} for name in STAGES},
            }
            (self.dir / "config.json").write_text(
                json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
            self._save_manifest()

    # -- manifest helpers ---------------------------------------------------

    def _save_manifest(self):
        self.manifest_path.write_text(
            json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")

    def stage_done(self, name: str) -> bool:
        return self.manifest["stages"][name]["completed"]

    def _mark(self, name: str, **extra):
        entry = {"completed": True}
        entry.update(extra)
        self.manifest["stages"][name] = entry
        self._save_manifest()

    def _require(self, *names: str):
        for name in names:
            if not self.stage_done(name):
                raise StageError(name, "required upstream stage not completed")

    def _check_digest(self, key: str, path: Path):
        digest = _digest_file(path)
        stored = self.manifest["digests"].get(key)
        if stored is None:
            self.manifest["digests"][key] = digest
            self._save_manifest()
        elif stored != digest:
            raise StageError("corpus", f"{key} digest changed on resume "
                             f"({stored[:12]}.. -> {digest[:12]}..)")

    # -- artifact paths -----------------------------------------------------

    @property
    def corpus_file(self) -> Path:
        return self.dir / "corpus.jsonl"

    @property
    def lexicon_file(self) -> Path:
        return self.dir / "lexicon.json"

    @property
    def labels_file(self) -> Path:
        return self.dir / "labels.csv"

    # -- cached loads -------------------------------------------------------

    def load_corpus(self) -> Corpus:
        if not hasattr(self, "_corpus"):
            self._corpus = load_corpus(self.corpus_file, self.config.year_window)
        return self._corpus

    def load_lexicon(self) -> Lexicon:
        if not hasattr(self, "_lexicon"):
            self._lexicon = compile_lexicon(self.lexicon_file)
        return self._lexicon

    def load_matchset(self) -> MatchSet:
        if not hasattr(self, "_matchset"):
            self._matchset = match_corpus(self.load_corpus(), self.load_lexicon())
        return self._matchset

    def load_batches(self) -> dict[TopicId, AnnotationBatch]:
        payload = json.loads((self.dir / "annotation_batches.json").read_text())
        out = {}
        for name, obj in payload.items():
            topic = TopicId.from_name(name)
            items = [AnnotationItem(decedent_id=i["decedent_id"], text=i["text"],
                                    spans=[tuple(s) for s in i["spans"]])
                     for i in obj["items"]]
            out[topic] = AnnotationBatch(topic=topic, items=items,
                                         sample_seed=obj["sample_seed"],
                                         size=obj["size"])
        return out

    # -- stages -------------------------------------------------------------

    def stage_corpus(self):
        if self.stage_done("corpus"):
            self._check_digest("corpus_file", self.corpus_file)
            return
        cfg = self.config
        try:
            if cfg.synthetic is not None:
                # the named seed set governs every stage's randomness
                gen_cfg = SyntheticConfig.from_dict(cfg.synthetic.to_dict())
                gen_cfg.seed = cfg.seeds.corpus
                corpus = generate_synthetic(gen_cfg)
                save_corpus(corpus, self.corpus_file)
            else:
                corpus = load_corpus(cfg.corpus_path, cfg.year_window)
                save_corpus(corpus, self.corpus_file)
            if cfg.lexicon_path is not None:
                shutil.copyfile(cfg.lexicon_path, self.lexicon_file)
            else:
                lx = default_lexicon()
                self.lexicon_file.write_text(json.dumps({
                    "name": lx.name, "version": lx.version,
                    "patterns": {t.name: p for t, p in lx.patterns.items()},
                }, indent=2) + "\n")
            compile_lexicon(self.lexicon_file)  # fail fast on bad lexicons
            meta = {
                "n_records": len(corpus),
                "n_with_narrative": corpus.n_with_narrative,
                "n_with_summary": corpus.n_with_summary,
                "rejected_out_of_window": corpus.rejected_out_of_window,
            }
            (self.dir / "corpus_meta.json").write_text(
                json.dumps(meta, indent=2, sort_keys=True) + "\n")
        except Exception as exc:
            raise StageError("corpus", str(exc)) from exc
        self.manifest["digests"]["corpus_file"] = _digest_file(self.corpus_file)
        self.manifest["digests"]["lexicon_file"] = _digest_file(self.lexicon_file)
        self._mark("corpus", **meta)

    def summary_docs(self) -> list[TokenizedDoc]:
        docs = []
        for rec in self.load_corpus():
            for name in ("le_summary", "cme_summary"):
                textval = getattr(rec.narratives, name)
                if textval:
                    docs.append(TokenizedDoc(doc_id=f"{rec.id}:{name}",
                                             tokens=tokenize(textval)))
        return docs

    def stage_topics(self):
        self._require("corpus")
        if self.stage_done("topics"):
            return
        docs = self.summary_docs()
        leaderboard_path = self.dir / "topic_leaderboard.csv"
        report_path = self.dir / "topic_report.json"
        if len(docs) < 10:
            # not enough summaries to model; downstream stages do not consume
            # topic output, so record the skip and move on
            leaderboard_path.write_text(
                "n_components,n_clusters,min_cluster_size,seed,coherence,n_topics\n")
            report_path.write_text("[]\n")
            self._mark("topics", skipped="insufficient summaries", n_docs=len(docs))
            return
        grid = [TopicHyperParams(n_components=hp.n_components,
                                 n_clusters=hp.n_clusters,
                                 min_cluster_size=hp.min_cluster_size,
                                 seed=self.config.seeds.topics)
                for hp in self.config.topic_grid]
        try:
            best, leaderboard = grid_search_topics(docs, grid,
                                                   min_df=self.config.topic_min_df)
        except Exception as exc:
            raise StageError("topics", str(exc)) from exc
        with leaderboard_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n_components", "n_clusters", "min_cluster_size",
                             "seed", "coherence", "n_topics"])
            for row in leaderboard:
                hp = row.hyperparams
                writer.writerow([hp.n_components, hp.n_clusters,
                                 hp.min_cluster_size, hp.seed,
                                 f"{row.coherence:.6f}", row.n_topics])
        report = [
            {"label": t.label, "size": t.size,
             "top_terms": [[term, round(w, 6)] for term, w in t.top_terms]}
            for t in best.topics
        ]
        report_path.write_text(json.dumps(report, indent=2) + "\n")
        best_hp = best.hyperparams
        self._mark("topics", coherence=best.coherence, n_topics=best.n_topics,
                   n_docs=len(docs),
                   best={"n_components": best_hp.n_components,
                         "n_clusters": best_hp.n_clusters,
                         "min_cluster_size": best_hp.min_cluster_size,
                         "seed": best_hp.seed})

    def stage_match(self):
        self._require("corpus")
        if self.stage_done("match"):
            return
        try:
            ms = self.load_matchset()
            export_matches_csv(ms, self.dir / "matches.csv")
            rows = match_rate_table(ms)
            summary = {
                "total_decedents": ms.total_decedents,
                "decedents_with_any_match": ms.decedents_with_any_match,
                "narrative_fields_with_any_match": ms.narrative_fields_with_any_match,
                "per_topic": {
                    r.topic.name: {"count": r.count, "percent": r.percent}
                    for r in rows
                },
            }
            (self.dir / "match_summary.json").write_text(
                json.dumps(summary, indent=2, sort_keys=True) + "\n")
        except Exception as exc:
            raise StageError("match", str(exc)) from exc
        self._mark("match", decedents_with_any_match=ms.decedents_with_any_match)

    def stage_sample(self):
        self._require("corpus", "match")
        if self.stage_done("sample"):
            return
        try:
            corpus = self.load_corpus()
            ms = self.load_matchset()
            payload = {}
            sizes = {}
            for i, topic in enumerate(t for t in ALL_TOPICS
                                      if t in self.load_lexicon().patterns):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    batch = sample_for_annotation(
                        ms, corpus, topic, self.config.annotation_sample_size,
                        seed=self.config.seeds.sampling + i)
                payload[topic.name] = {
                    "sample_seed": batch.sample_seed, "size": batch.size,
                    "items": [
                        {"decedent_id": it.decedent_id, "text": it.text,
                         "spans": [list(s) for s in it.spans]}
                        for it in batch.items
                    ],
                }
                sizes[topic.name] = batch.size
            (self.dir / "annotation_batches.json").write_text(
                json.dumps(payload, indent=2) + "\n")
        except Exception as exc:
            raise StageError("sample", str(exc)) from exc
        self._mark("sample", sizes=sizes)

    def stage_labels(self):
        self._require("sample")
        if self.stage_done("labels"):
            return
        if self.config.auto_label:
            try:
                labels = self._simulate_annotation()
                if self.labels_file.exists():
                    self.labels_file.unlink()
                append_labels_csv(self.labels_file, labels)
            except Exception as exc:
                raise StageError("labels", str(exc)) from exc
            self._mark("labels", mode="simulated", n_labels=len(labels))
            return
        if self.labels_file.exists():
            n = len(read_labels_csv(self.labels_file))
            self._mark("labels", mode="imported", n_labels=n)
            return
        raise AwaitingLabels(
            "no labels present: serve the annotation UI (serve-annotate) or "
            "import a labels CSV (import-labels), then resume the run"
        )

    def _simulate_annotation(self) -> list[AnnotationLabel]:
        corpus = self.load_corpus()
        batches = self.load_batches()
        prefix = self.config.agreement_prefix_size
        flip = self.config.annotator_flip_rate
        labels: list[AnnotationLabel] = []
        for t_idx, topic in enumerate(sorted(batches, key=lambda t: t.value)):
            rng = np.random.default_rng(self.config.seeds.annotators + t_idx)
            for pos, item in enumerate(batches[topic].items):
                rec = corpus.get(item.decedent_id)
                if rec.ground_truth is None:
                    raise ValueError(
                        "auto labeling requires ground truth (synthetic corpora)")
                truth = bool(rec.ground_truth.get(topic, False))
                coders = AUTO_ANNOTATORS if pos < prefix else AUTO_ANNOTATORS[:1]
                coded = []
                for coder in coders:
                    value = truth if rng.random() >= flip else not truth
                    coded.append(value)
                    labels.append(AnnotationLabel(
                        decedent_id=item.decedent_id, topic=topic,
                        annotator_id=coder, relevant=value,
                        timestamp=AUTO_TIMESTAMP))
                if len(set(coded)) > 1:
                    labels.append(AnnotationLabel(
                        decedent_id=item.decedent_id, topic=topic,
                        annotator_id=ADJUDICATOR_ID, relevant=truth,
                        timestamp=AUTO_TIMESTAMP))
        return labels

    def stage_train(self):
        self._require("corpus", "sample", "labels")
        if self.stage_done("train"):
            return
        try:
            corpus = self.load_corpus()
            labels = read_labels_csv(self.labels_file)
            consensus = consensus_labels(labels)
            results: dict[TopicId, TopicTrainingResult] = {}
            skipped: dict[str, str] = {}
            for topic in (t for t in ALL_TOPICS
                          if any(k[1] is t for k in consensus)):
                examples = labeled_texts(corpus, topic, consensus)
                try:
                    results[topic] = train_topic(
                        topic, examples, self.config.classifier_grid,
                        seed=self.config.seeds.split,
                        bootstrap_iterations=self.config.bootstrap_iterations,
                        bootstrap_fraction=self.config.bootstrap_fraction,
                        bootstrap_test_only=self.config.bootstrap_test_only,
                        bootstrap_seed=self.config.seeds.bootstrap,
                    )
                except ValueError as exc:
                    skipped[topic.name] = str(exc)
            if not results:
                raise ValueError(f"no trainable topic: {skipped}")
            save_models_json(results, self.dir / "models.json")
            self._write_metrics_csv(results, self.dir / "supp_table1_metrics.csv")
            meta = {
                "winners": {t.name: r.winner.kind.value for t, r in results.items()},
                "winner_hyperparams": {
                    t.name: r.winner.hyperparams for t, r in results.items()},
                "n_examples": {t.name: r.n_examples for t, r in results.items()},
                "test_macro_f1": {
                    t.name: {kr.kind.value: round(kr.test_metrics.macro_f1, 6)
                             for kr in r.per_kind}
                    for t, r in results.items()},
                "skipped": skipped,
            }
            (self.dir / "training_meta.json").write_text(
                json.dumps(meta, indent=2, sort_keys=True) + "\n")
        except StageError:
            raise
        except Exception as exc:
            raise StageError("train", str(exc)) from exc
        self._mark("train", topics=sorted(r.name for r in results))

    @staticmethod
    def _write_metrics_csv(results: Mapping[TopicId, TopicTrainingResult],
                           path: Path):
        metric_names = ("accuracy", "precision_pos", "recall_pos", "f1_pos",
                        "macro_precision", "macro_recall", "macro_f1")
        header = ["topic", "model"]
        for name in metric_names:
            header += [name, f"{name}_lo", f"{name}_hi"]
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for topic in ALL_TOPICS:
                if topic not in results:
                    continue
                for kr in results[topic].per_kind:
                    row = [topic.name, kr.kind.value]
                    m = kr.report_metrics
                    for name in metric_names:
                        row.append(f"{getattr(m, name):.6f}")
                        ci = m.ci.get(name)
                        row += (["", ""] if ci is None
                                else [f"{ci[0]:.6f}", f"{ci[1]:.6f}"])
                    writer.writerow(row)

    def stage_predict(self):
        self._require("match", "train")
        if self.stage_done("predict"):
            return
        try:
            corpus = self.load_corpus()
            ms = self.load_matchset()
            models = load_models_json(self.dir / "models.json")
            summary = {}
            with (self.dir / "predictions.csv").open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["decedent_id", "topic", "prediction"])
                for topic in ALL_TOPICS:
                    if topic not in models:
                        continue
                    result = predict_matched(models[topic], ms, corpus, topic)
                    positives = set(result.positive_ids)
                    for did in result.matched_ids:
                        writer.writerow([did, topic.name,
                                         1 if did in positives else 0])
                    summary[topic.name] = {
                        "regex_matches": result.n_matched,
                        "refined_predictions": result.n_positive,
                        "fraction_positive": (round(result.fraction_positive, 6)
                                              if result.n_matched else 0.0),
                    }
            (self.dir / "predictions_summary.json").write_text(
                json.dumps(summary, indent=2, sort_keys=True) + "\n")
        except Exception as exc:
            raise StageError("predict", str(exc)) from exc
        self._mark("predict")

    # -- analyze ------------------------------------------------------------

    def _positive_flags(self) -> dict[TopicId, np.ndarray]:
        corpus = self.load_corpus()
        index = {rec.id: i for i, rec in enumerate(corpus)}
        flags: dict[TopicId, np.ndarray] = {}
        with (self.dir / "predictions.csv").open() as fh:
            for row in csv.DictReader(fh):
                topic = TopicId.from_name(row["topic"])
                if topic not in flags:
                    flags[topic] = np.zeros(len(corpus), dtype=bool)
                if row["prediction"] == "1":
                    flags[topic][index[row["decedent_id"]]] = True
        return flags

    def stats_topics(self, available: Sequence[TopicId]) -> list[TopicId]:
        out = [t for t in ALL_TOPICS if t in available]
        if not self.config.include_pet_loss_in_stats:
            out = [t for t in out if t is not TopicId.PET_LOSS]
        return out

    def stage_analyze(self):
        self._require("predict", "labels")
        if self.stage_done("analyze"):
            return
        try:
            corpus = self.load_corpus()
            flags = self._positive_flags()
            self._write_agreement_csv()
            threshold = bonferroni(0.05, self.config.bonferroni_m)
            topics = self.stats_topics(list(flags))

            with (self.dir / "table3_odds.csv").open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["topic", "predictor", "level", "reference",
                                 "odds_ratio", "ci_low", "ci_high", "p_value",
                                 "tier", "n_used", "separation_flag"])
                for topic in topics:
                    outcome = flags[topic]
                    if not outcome.any() or outcome.all():
                        continue
                    for predictor in standard_predictors():
                        for r in bivariate_logit(outcome, predictor, corpus,
                                                 topic=topic,
                                                 bonferroni_threshold=threshold):
                            writer.writerow([
                                topic.name, r.predictor, r.level, r.reference,
                                _fmt(r.odds_ratio), _fmt(r.ci_low),
                                _fmt(r.ci_high), _fmt(r.p_value),
                                r.tier.value, r.n_used,
                                1 if r.separation_flag else 0,
                            ])

            with (self.dir / "age_differences.csv").open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["topic", "difference", "ci_low", "ci_high",
                                 "p_value", "n_flagged", "n_unflagged",
                                 "zero_variance"])
                ages = [rec.age for rec in corpus]
                for topic in topics:
                    outcome = flags[topic]
                    if not outcome.any() or outcome.all():
                        continue
                    r = age_difference(outcome, ages)
                    writer.writerow([
                        topic.name, _fmt(r.difference), _fmt(r.ci_low),
                        _fmt(r.ci_high), _fmt(r.p_value), r.n_flagged,
                        r.n_unflagged, 1 if r.zero_variance else 0,
                    ])

            with (self.dir / "fig1_trends.csv").open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["year", "topic", "rate_per_1000"])
                for topic in topics:
                    series = yearly_trend(flags[topic], corpus, topic=topic)
                    for year in sorted(series.by_year):
                        writer.writerow([year, topic.name,
                                         f"{series.by_year[year]:.3f}"])
        except Exception as exc:
            raise StageError("analyze", str(exc)) from exc
        self._mark("analyze", topics=[t.name for t in topics])

    def _topic_agreement(self, labels: list[AnnotationLabel],
                         batches: Mapping[TopicId, AnnotationBatch],
                         topic: TopicId):
        order = [it.decedent_id for it in batches[topic].items]
        prefix = order[: self.config.agreement_prefix_size]
        per_annotator: dict[str, dict[str, bool]] = {}
        for lab in labels:
            if lab.topic is topic and lab.annotator_id != ADJUDICATOR_ID:
                per_annotator.setdefault(lab.annotator_id, {})[lab.decedent_id] = lab.relevant
        coders = sorted(a for a, seen in per_annotator.items()
                        if any(d in seen for d in prefix))
        if len(coders) < 2:
            return None
        a, b = coders[:2]
        common = [d for d in prefix
                  if d in per_annotator[a] and d in per_annotator[b]]
        if not common:
            return None
        return cohen_kappa([int(per_annotator[a][d]) for d in common],
                           [int(per_annotator[b][d]) for d in common])

    def _write_agreement_csv(self):
        labels = read_labels_csv(self.labels_file)
        batches = self.load_batches()
        with (self.dir / "agreement.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["topic", "n_items", "percent_agreement", "kappa",
                             "p_value"])
            for topic in ALL_TOPICS:
                if topic not in batches:
                    continue
                result = self._topic_agreement(labels, batches, topic)
                if result is None:
                    writer.writerow([topic.name, 0, "", "NA", "NA"])
                    continue
                writer.writerow([
                    topic.name, result.n_items,
                    f"{result.percent_agreement:.4f}",
                    "NA" if result.kappa is None else f"{result.kappa:.4f}",
                    "NA" if result.p_value is None else _fmt(result.p_value),
                ])

    # -- report -------------------------------------------------------------

    def stage_report(self):
        self._require("corpus", "match", "train", "predict", "analyze")
        # report is a pure function of the artifacts; always rebuildable
        try:
            self.report_dir.mkdir(exist_ok=True)
            self._report_table1()
            self._report_table2()
            shutil.copyfile(self.dir / "supp_table1_metrics.csv",
                            self.report_dir / "supp_table1_metrics.csv")
            self._report_supp_table2()
            shutil.copyfile(self.dir / "table3_odds.csv",
                            self.report_dir / "table3_odds.csv")
            shutil.copyfile(self.dir / "fig1_trends.csv",
                            self.report_dir / "fig1_trends.csv")
            self._report_summary()
        except Exception as exc:
            raise StageError("report", str(exc)) from exc
        self._mark("report")

    def _report_table1(self):
        summary = demographic_summary(self.load_corpus())
        with (self.report_dir / "table1_demographics.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variable", "category", "count", "percent", "mean",
                             "sd", "median", "min", "max", "n_missing"])
            for s in summary.categorical:
                writer.writerow([s.variable, s.category, s.count,
                                 f"{s.percent:.1f}", "", "", "", "", "", ""])
            for s in summary.continuous:
                writer.writerow([s.variable, "", "", "", f"{s.mean:.2f}",
                                 f"{s.sd:.2f}", _fmt(s.median), _fmt(s.minimum),
                                 _fmt(s.maximum), s.n_missing])

    def _report_table2(self):
        match_summary = json.loads((self.dir / "match_summary.json").read_text())
        labels = read_labels_csv(self.labels_file)
        consensus = consensus_labels(labels)
        agreement_rows = {}
        with (self.dir / "agreement.csv").open() as fh:
            for row in csv.DictReader(fh):
                agreement_rows[row["topic"]] = row
        with (self.report_dir / "table2_matches.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["topic", "match_count", "percent_of_total",
                             "sample_size", "sample_percent_relevant",
                             "agreement_n", "percent_agreement", "kappa",
                             "kappa_p_value"])
            for topic in ALL_TOPICS:
                per = match_summary["per_topic"].get(topic.name)
                if per is None:
                    continue
                sample = [v for (did, t), v in consensus.items() if t is topic]
                pct_rel = (f"{100.0 * sum(sample) / len(sample):.1f}"
                           if sample else "")
                agr = agreement_rows.get(topic.name, {})
                writer.writerow([
                    topic.name, per["count"], f"{per['percent']:.2f}",
                    len(sample), pct_rel, agr.get("n_items", ""),
                    agr.get("percent_agreement", ""), agr.get("kappa", ""),
                    agr.get("p_value", ""),
                ])
            writer.writerow(["ANY_TOPIC_DECEDENTS",
                             match_summary["decedents_with_any_match"],
                             f"{100.0 * match_summary['decedents_with_any_match'] / match_summary['total_decedents']:.2f}",
                             "", "", "", "", "", ""])
            writer.writerow(["ANY_TOPIC_NARRATIVE_FIELDS",
                             match_summary["narrative_fields_with_any_match"],
                             "", "", "", "", "", "", ""])

    def _report_supp_table2(self):
        match_summary = json.loads((self.dir / "match_summary.json").read_text())
        pred_summary = json.loads(
            (self.dir / "predictions_summary.json").read_text())
        total = match_summary["total_decedents"]
        with (self.report_dir / "supp_table2_predictions.csv").open(
                "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["topic", "regex_matches", "refined_predictions",
                             "fraction_positive", "rate_per_1000"])
            for topic in ALL_TOPICS:
                per = pred_summary.get(topic.name)
                if per is None:
                    continue
                regex_n = per["regex_matches"]
                refined = per["refined_predictions"]
                fraction = refined / regex_n if regex_n else 0.0
                writer.writerow([
                    topic.name, regex_n, refined, f"{fraction:.3f}",
                    f"{rate_per_1000(refined, total):.3f}",
                ])

    def _report_summary(self):
        manifest = self.manifest
        match_summary = json.loads((self.dir / "match_summary.json").read_text())
        training_meta = json.loads((self.dir / "training_meta.json").read_text())
        lines = [
            f"run {manifest['run_id']} (tool {manifest['tool_version']})",
            f"corpus: {manifest['stages']['corpus'].get('n_records')} records, "
            f"{manifest['stages']['corpus'].get('n_with_narrative')} with narratives",
            f"decedents with any lexicon match: "
            f"{match_summary['decedents_with_any_match']}",
            "match counts: " + ", ".join(
                f"{t}={v['count']} ({v['percent']}%)"
                for t, v in sorted(match_summary["per_topic"].items())),
            "winning models: " + ", ".join(
                f"{t}={k}" for t, k in sorted(training_meta["winners"].items())),
            "reports: table1_demographics.csv table2_matches.csv "
            "supp_table1_metrics.csv supp_table2_predictions.csv "
            "table3_odds.csv fig1_trends.csv",
        ]
        (self.report_dir / "summary.txt").write_text("\n".join(lines) + "\n")

    # -- driver -------------------------------------------------------------

    def execute(self, through: str = "report") -> dict:
        """Run stages in order up to and including ``through``."""
        if through not in STAGES:
            raise ValueError(f"unknown stage {through!r}")
        last = STAGES.index(through)
        steps = [self.stage_corpus, self.stage_topics, self.stage_match,
                 self.stage_sample, self.stage_labels, self.stage_train,
                 self.stage_predict, self.stage_analyze, self.stage_report]
        for stage, step in zip(STAGES[: last + 1], steps[: last + 1]):
            logger.info("stage %s", stage)
            step()
        return self.manifest


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        if math.isnan(value):
            return "NA"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6g}"
    return str(value)


def load_config_file(path: str | Path, seed_set: str = "default") -> RunConfig:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return RunConfig.from_dict(obj, seed_set=seed_set)
