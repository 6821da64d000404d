"""Decedent record model, JSONL corpus IO, demographic summaries, and the
deterministic synthetic corpus generator with planted ground truth.

The real death-investigation data this pipeline targets is access
restricted, so the generator is the test bed: it plants topic phrases into
narratives/summaries, plants regex-matchable decoys with false ground
truth, and tilts demographic draws so downstream odds ratios have a known
sign.
"""

from __future__ import annotations

import bisect
import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import _phrases
from .taxonomy import ALL_TOPICS, TopicId

logger = logging.getLogger(__name__)

DEFAULT_YEAR_WINDOW = (2002, 2020)
AGE_BOUNDS = (0, 130)
_AGE_CLIP = (10, 106)


class Sex(Enum):
    FEMALE = "FEMALE"
    MALE = "MALE"
    UNKNOWN = "UNKNOWN"


class RaceEthnicity(Enum):
    AMERICAN_INDIAN_ALASKA_NATIVE = "AMERICAN_INDIAN_ALASKA_NATIVE"
    ASIAN_PACIFIC_ISLANDER = "ASIAN_PACIFIC_ISLANDER"
    BLACK_AFRICAN_AMERICAN = "BLACK_AFRICAN_AMERICAN"
    HISPANIC = "HISPANIC"
    OTHER_UNSPECIFIED = "OTHER_UNSPECIFIED"
    TWO_OR_MORE = "TWO_OR_MORE"
    WHITE = "WHITE"
    UNKNOWN = "UNKNOWN"


class SexualOrientation(Enum):
    BISEXUAL = "BISEXUAL"
    GAY = "GAY"
    HETEROSEXUAL = "HETEROSEXUAL"
    LESBIAN = "LESBIAN"
    UNSPECIFIED_MINORITY = "UNSPECIFIED_MINORITY"
    NOT_REPORTED = "NOT_REPORTED"


class Transgender(Enum):
    YES = "YES"
    NO_OR_UNKNOWN = "NO_OR_UNKNOWN"


class MaritalStatus(Enum):
    DIVORCED = "DIVORCED"
    MARRIED = "MARRIED"
    MARRIED_SEPARATED = "MARRIED_SEPARATED"
    NEVER_MARRIED = "NEVER_MARRIED"
    SINGLE = "SINGLE"
    WIDOWED = "WIDOWED"
    UNKNOWN = "UNKNOWN"


class RelationshipStatus(Enum):
    IN_RELATIONSHIP = "IN_RELATIONSHIP"
    NOT_IN_RELATIONSHIP = "NOT_IN_RELATIONSHIP"
    UNKNOWN = "UNKNOWN"


class Homeless(Enum):
    YES = "YES"
    NO = "NO"
    UNKNOWN = "UNKNOWN"


class PhysicalHealthProblem(Enum):
    YES = "YES"
    NO_OR_UNKNOWN = "NO_OR_UNKNOWN"


DEMOGRAPHIC_FIELDS: dict[str, type[Enum]] = {
    "sex": Sex,
    "race_ethnicity": RaceEthnicity,
    "sexual_orientation": SexualOrientation,
    "transgender": Transgender,
    "marital_status": MaritalStatus,
    "relationship_status": RelationshipStatus,
    "homeless": Homeless,
    "physical_health_problem": PhysicalHealthProblem,
}


@dataclass(frozen=True)
class NarrativeBundle:
    le_narrative: str | None = None
    cme_narrative: str | None = None
    le_summary: str | None = None
    cme_summary: str | None = None

    @property
    def has_narrative(self) -> bool:
        return bool(self.le_narrative) or bool(self.cme_narrative)

    @property
    def has_summary(self) -> bool:
        return bool(self.le_summary) or bool(self.cme_summary)

    def full_text(self) -> str:
        """LE + CME narrative text joined for classifier featurization."""
        return " ".join(t for t in (self.le_narrative, self.cme_narrative) if t)


@dataclass(frozen=True)
class DecedentRecord:
    id: str
    incident_year: int
    sex: Sex
    race_ethnicity: RaceEthnicity
    sexual_orientation: SexualOrientation
    transgender: Transgender
    marital_status: MaritalStatus
    relationship_status: RelationshipStatus
    homeless: Homeless
    physical_health_problem: PhysicalHealthProblem
    narratives: NarrativeBundle
    age: int | None = None
    num_substances: int | None = None
    ground_truth: dict[TopicId, bool] | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("record id must be non-empty")
        if self.age is not None and not AGE_BOUNDS[0] <= self.age <= AGE_BOUNDS[1]:
            raise ValueError(f"age {self.age} outside {AGE_BOUNDS}")
        if self.num_substances is not None and self.num_substances < 0:
            raise ValueError("num_substances must be non-negative")


class CorpusFormatError(ValueError):
    """Raised on malformed corpus files; the message names the line."""


@dataclass
class Corpus:
    """Ordered, immutable-by-convention collection of decedent records."""

    records: list[DecedentRecord]
    rejected_out_of_window: int = 0

    def __post_init__(self):
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise CorpusFormatError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
        self._by_id = {rec.id: rec for rec in self.records}

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DecedentRecord]:
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    def get(self, record_id: str) -> DecedentRecord:
        return self._by_id[record_id]

    @property
    def n_with_narrative(self) -> int:
        return sum(1 for r in self.records if r.narratives.has_narrative)

    @property
    def n_with_summary(self) -> int:
        return sum(1 for r in self.records if r.narratives.has_summary)


_SCHEMA_FIELDS = (
    "id", "incident_year", "sex", "age", "race_ethnicity", "sexual_orientation",
    "transgender", "marital_status", "relationship_status", "homeless",
    "physical_health_problem", "num_substances", "le_narrative", "cme_narrative",
    "le_summary", "cme_summary", "ground_truth",
)


def record_to_dict(rec: DecedentRecord) -> dict:
    out: dict = {"id": rec.id, "incident_year": rec.incident_year, "sex": rec.sex.value}
    if rec.age is not None:
        out["age"] = rec.age
    out["race_ethnicity"] = rec.race_ethnicity.value
    out["sexual_orientation"] = rec.sexual_orientation.value
    out["transgender"] = rec.transgender.value
    out["marital_status"] = rec.marital_status.value
    out["relationship_status"] = rec.relationship_status.value
    out["homeless"] = rec.homeless.value
    out["physical_health_problem"] = rec.physical_health_problem.value
    if rec.num_substances is not None:
        out["num_substances"] = rec.num_substances
    nb = rec.narratives
    for name in ("le_narrative", "cme_narrative", "le_summary", "cme_summary"):
        value = getattr(nb, name)
        if value is not None:
            out[name] = value
    if rec.ground_truth is not None:
        out["ground_truth"] = {t.name: bool(v) for t, v in rec.ground_truth.items()}
    return out


def record_from_dict(obj: Mapping) -> DecedentRecord:
    unknown = set(obj) - set(_SCHEMA_FIELDS)
    if unknown:
        raise ValueError(f"unknown fields {sorted(unknown)}")
    for required in ("id", "incident_year", "sex"):
        if required not in obj:
            raise ValueError(f"missing required field {required!r}")
    enums = {}
    for fname, etype in DEMOGRAPHIC_FIELDS.items():
        raw = obj.get(fname)
        if raw is None:
            raise ValueError(f"missing required field {fname!r}")
        try:
            enums[fname] = etype(raw)
        except ValueError:
            raise ValueError(f"invalid {fname} value {raw!r}") from None
    ground_truth = None
    if "ground_truth" in obj:
        ground_truth = {
            TopicId.from_name(k): bool(v) for k, v in obj["ground_truth"].items()
        }
    return DecedentRecord(
        id=str(obj["id"]),
        incident_year=int(obj["incident_year"]),
        age=None if obj.get("age") is None else int(obj["age"]),
        num_substances=(
            None if obj.get("num_substances") is None else int(obj["num_substances"])
        ),
        narratives=NarrativeBundle(
            le_narrative=obj.get("le_narrative"),
            cme_narrative=obj.get("cme_narrative"),
            le_summary=obj.get("le_summary"),
            cme_summary=obj.get("cme_summary"),
        ),
        ground_truth=ground_truth,
        **enums,
    )


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in corpus:
            fh.write(json.dumps(record_to_dict(rec), ensure_ascii=False))
            fh.write("\n")


def load_corpus(path: str | Path, window: tuple[int, int] = DEFAULT_YEAR_WINDOW) -> Corpus:
    """Read a JSONL corpus; rejects out-of-window years with a warning count,
    fails hard on malformed lines and duplicate ids."""
    path = Path(path)
    records: list[DecedentRecord] = []
    seen: set[str] = set()
    rejected = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: invalid JSON ({exc})") from None
            try:
                rec = record_from_dict(obj)
            except ValueError as exc:
                raise CorpusFormatError(f"line {lineno}: {exc}") from None
            if rec.id in seen:
                raise CorpusFormatError(f"line {lineno}: duplicate record id {rec.id!r}")
            if not window[0] <= rec.incident_year <= window[1]:
                rejected += 1
                continue
            seen.add(rec.id)
            records.append(rec)
    corpus = Corpus(records=records, rejected_out_of_window=rejected)
    logger.info(
        "loaded %d records from %s (%d with narratives, %d rejected outside %s)",
        len(corpus), path, corpus.n_with_narrative, rejected, window,
    )
    return corpus


# ---------------------------------------------------------------------------
# synthetic generation
# ---------------------------------------------------------------------------

_DEFAULT_PREVALENCE = {
    TopicId.CHRONIC_SOCIAL_ISOLATION: 0.004,
    TopicId.DIVORCE: 0.050,
    TopicId.EVICTION_MOVE: 0.030,
    TopicId.BREAK_UP: 0.040,
    TopicId.CHILD_CUSTODY_LOSS: 0.004,
    TopicId.PET_LOSS: 0.004,
}

_DEFAULT_MARGINALS: dict[str, dict[str, float]] = {
    "sex": {"FEMALE": 0.219, "MALE": 0.7809, "UNKNOWN": 0.0001},
    "race_ethnicity": {
        "AMERICAN_INDIAN_ALASKA_NATIVE": 0.013,
        "ASIAN_PACIFIC_ISLANDER": 0.023,
        "BLACK_AFRICAN_AMERICAN": 0.065,
        "HISPANIC": 0.063,
        "OTHER_UNSPECIFIED": 0.003,
        "TWO_OR_MORE": 0.011,
        "WHITE": 0.821,
        "UNKNOWN": 0.001,
    },
    "sexual_orientation": {
        "BISEXUAL": 0.001,
        "GAY": 0.003,
        "HETEROSEXUAL": 0.100,
        "LESBIAN": 0.002,
        "UNSPECIFIED_MINORITY": 0.001,
        "NOT_REPORTED": 0.893,
    },
    "transgender": {"YES": 0.002, "NO_OR_UNKNOWN": 0.998},
    "marital_status": {
        "DIVORCED": 0.212,
        "MARRIED": 0.325,
        "MARRIED_SEPARATED": 0.025,
        "NEVER_MARRIED": 0.356,
        "SINGLE": 0.013,
        "WIDOWED": 0.058,
        "UNKNOWN": 0.011,
    },
    "relationship_status": {
        "IN_RELATIONSHIP": 0.269,
        "NOT_IN_RELATIONSHIP": 0.059,
        "UNKNOWN": 0.672,
    },
    "homeless": {"YES": 0.011, "NO": 0.937, "UNKNOWN": 0.052},
    "physical_health_problem": {"YES": 0.191, "NO_OR_UNKNOWN": 0.809},
}

_DEFAULT_ASSOCIATIONS: dict[TopicId, dict[str, dict[str, float]]] = {
    TopicId.CHRONIC_SOCIAL_ISOLATION: {
        "sex": {"MALE": 1.8},
        "sexual_orientation": {"GAY": 3.5},
        "marital_status": {"DIVORCED": 2.5, "NEVER_MARRIED": 2.0},
    },
    TopicId.DIVORCE: {
        "marital_status": {"MARRIED_SEPARATED": 5.0},
        "sex": {"MALE": 1.3},
    },
    TopicId.EVICTION_MOVE: {
        "homeless": {"YES": 2.0},
        "race_ethnicity": {"HISPANIC": 1.2},
    },
    TopicId.BREAK_UP: {
        "relationship_status": {"NOT_IN_RELATIONSHIP": 4.0},
        "sexual_orientation": {"LESBIAN": 3.0, "GAY": 1.9},
    },
    TopicId.CHILD_CUSTODY_LOSS: {
        "sex": {"FEMALE": 1.8},
        "race_ethnicity": {"AMERICAN_INDIAN_ALASKA_NATIVE": 3.0},
    },
    TopicId.PET_LOSS: {},
}

_DEFAULT_AGE_SHIFT = {
    TopicId.CHRONIC_SOCIAL_ISOLATION: -1.3,
    TopicId.DIVORCE: -1.4,
    TopicId.EVICTION_MOVE: -1.0,
    TopicId.BREAK_UP: -15.1,
    TopicId.CHILD_CUSTODY_LOSS: -9.3,
    TopicId.PET_LOSS: 0.0,
}


def _check_marginal(name: str, dist: Mapping[str, float], members: Iterable[str]):
    members = set(members)
    if set(dist) - members:
        raise ValueError(f"{name}: unknown categories {sorted(set(dist) - members)}")
    for cat, p in dist.items():
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name}.{cat}: probability {p} outside [0, 1]")
    total = sum(dist.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"{name}: marginal sums to {total}, expected 1 +- 1e-9")


@dataclass
class SyntheticConfig:
    n_records: int = 1000
    topic_prevalence: dict[TopicId, float] = field(
        default_factory=lambda: dict(_DEFAULT_PREVALENCE))
    decoy_prevalence: dict[TopicId, float] | None = None  # default: half of prevalence
    summary_presence_rate: float = 0.10
    narrative_presence_rate: float = 0.55
    year_range: tuple[int, int] = DEFAULT_YEAR_WINDOW
    demographic_marginals: dict[str, dict[str, float]] = field(
        default_factory=lambda: {k: dict(v) for k, v in _DEFAULT_MARGINALS.items()})
    association_multipliers: dict[TopicId, dict[str, dict[str, float]]] = field(
        default_factory=lambda: {
            t: {f: dict(cats) for f, cats in assoc.items()}
            for t, assoc in _DEFAULT_ASSOCIATIONS.items()
        })
    age_shift: dict[TopicId, float] = field(
        default_factory=lambda: dict(_DEFAULT_AGE_SHIFT))
    age_mean: float = 46.3
    age_sd: float = 18.4
    num_substances_missing_rate: float = 0.567
    seed: int = 0

    def __post_init__(self):
        if self.n_records <= 0:
            raise ValueError("n_records must be positive")
        for t, p in self.topic_prevalence.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"prevalence for {t.name} outside [0, 1]")
        if self.decoy_prevalence is None:
            self.decoy_prevalence = {
                t: 0.5 * self.topic_prevalence.get(t, 0.0) for t in ALL_TOPICS
            }
        for rate_name in ("summary_presence_rate", "narrative_presence_rate",
                          "num_substances_missing_rate"):
            rate = getattr(self, rate_name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{rate_name} outside [0, 1]")
        if self.year_range[0] > self.year_range[1]:
            raise ValueError("year_range must be (low, high)")
        for fname, etype in DEMOGRAPHIC_FIELDS.items():
            dist = self.demographic_marginals.get(fname)
            if dist is None:
                raise ValueError(f"missing demographic marginal for {fname}")
            _check_marginal(fname, dist, (m.value for m in etype))

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "topic_prevalence": {t.name: p for t, p in self.topic_prevalence.items()},
            "decoy_prevalence": {t.name: p for t, p in self.decoy_prevalence.items()},
            "summary_presence_rate": self.summary_presence_rate,
            "narrative_presence_rate": self.narrative_presence_rate,
            "year_range": list(self.year_range),
            "demographic_marginals": self.demographic_marginals,
            "association_multipliers": {
                t.name: assoc for t, assoc in self.association_multipliers.items()
            },
            "age_shift": {t.name: v for t, v in self.age_shift.items()},
            "age_mean": self.age_mean,
            "age_sd": self.age_sd,
            "num_substances_missing_rate": self.num_substances_missing_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "SyntheticConfig":
        kwargs: dict = {}
        for key in ("n_records", "summary_presence_rate", "narrative_presence_rate",
                    "age_mean", "age_sd", "num_substances_missing_rate", "seed"):
            if key in obj:
                kwargs[key] = obj[key]
        if "year_range" in obj:
            kwargs["year_range"] = tuple(obj["year_range"])
        if "topic_prevalence" in obj:
            kwargs["topic_prevalence"] = {
                TopicId.from_name(k): float(v) for k, v in obj["topic_prevalence"].items()
            }
        if "decoy_prevalence" in obj:
            kwargs["decoy_prevalence"] = {
                TopicId.from_name(k): float(v) for k, v in obj["decoy_prevalence"].items()
            }
        if "demographic_marginals" in obj:
            base = {k: dict(v) for k, v in _DEFAULT_MARGINALS.items()}
            for fname, dist in obj["demographic_marginals"].items():
                base[fname] = dict(dist)
            kwargs["demographic_marginals"] = base
        if "association_multipliers" in obj:
            kwargs["association_multipliers"] = {
                TopicId.from_name(t): {f: dict(cats) for f, cats in assoc.items()}
                for t, assoc in obj["association_multipliers"].items()
            }
        if "age_shift" in obj:
            shift = dict(_DEFAULT_AGE_SHIFT)
            for t, v in obj["age_shift"].items():
                shift[TopicId.from_name(t)] = float(v)
            kwargs["age_shift"] = shift
        return cls(**kwargs)


class _CategorySampler:
    """Cumulative-probability category draw with per-record tilting."""

    def __init__(self, dist: Mapping[str, float]):
        self.categories = list(dist.keys())
        self.probs = [dist[c] for c in self.categories]
        self.cum = np.cumsum(self.probs).tolist()

    def draw(self, u: float, multipliers: Mapping[str, float] | None = None) -> str:
        if not multipliers:
            idx = bisect.bisect_left(self.cum, u * self.cum[-1])
            return self.categories[min(idx, len(self.categories) - 1)]
        tilted = [
            p * multipliers.get(c, 1.0) for c, p in zip(self.categories, self.probs)
        ]
        cum = 0.0
        target = u * sum(tilted)
        for cat, p in zip(self.categories, tilted):
            cum += p
            if target <= cum:
                return cat
        return self.categories[-1]


def generate_synthetic(
    config: SyntheticConfig,
    phrase_banks: Mapping[TopicId, Mapping[str, list[str]]] | None = None,
) -> Corpus:
    """Deterministically generate a corpus with planted topic ground truth.

    Every record whose ground truth is true for a topic carries at least
    one phrase from that topic's positive bank in a narrative field, plus a
    theme phrase in each present summary. Decoy sentences (matchable,
    ground-truth false) appear at ``decoy_prevalence``.
    """
    banks = phrase_banks or _phrases.TOPIC_PHRASES
    for topic in ALL_TOPICS:
        if config.topic_prevalence.get(topic, 0.0) > 0.0:
            bank = banks.get(topic, {})
            if not bank.get("narrative_positive") or not bank.get("summary_phrases"):
                raise ValueError(f"empty phrase bank for enabled topic {topic.name}")

    rng = np.random.default_rng(config.seed)
    samplers = {
        fname: _CategorySampler(config.demographic_marginals[fname])
        for fname in DEMOGRAPHIC_FIELDS
    }
    y0, y1 = config.year_range
    filler = _phrases.FILLER_NARRATIVE
    filler_summary = _phrases.FILLER_SUMMARY
    kin = _phrases.KIN

    records: list[DecedentRecord] = []
    for i in range(config.n_records):
        year = int(rng.integers(y0, y1 + 1))
        truth = {
            t: bool(rng.random() < config.topic_prevalence.get(t, 0.0))
            for t in ALL_TOPICS
        }
        decoy_draw = {
            t: bool(rng.random() < config.decoy_prevalence.get(t, 0.0))
            for t in ALL_TOPICS
        }
        decoys = {t: (decoy_draw[t] and not truth[t]) for t in ALL_TOPICS}
        any_truth = any(truth.values())
        true_topics = [t for t in ALL_TOPICS if truth[t]]

        demo: dict[str, str] = {}
        for fname, sampler in samplers.items():
            mult: dict[str, float] = {}
            for t in true_topics:
                for cat, m in config.association_multipliers.get(t, {}).get(fname, {}).items():
                    mult[cat] = mult.get(cat, 1.0) * m
            demo[fname] = sampler.draw(float(rng.random()), mult or None)

        shift = sum(config.age_shift.get(t, 0.0) for t in true_topics)
        age = int(round(min(max(rng.normal(config.age_mean + shift, config.age_sd),
                                _AGE_CLIP[0]), _AGE_CLIP[1])))
        if rng.random() < config.num_substances_missing_rate:
            num_substances = None
        else:
            num_substances = 1 + int(rng.poisson(2.61))

        has_le = rng.random() < config.narrative_presence_rate
        has_cme = rng.random() < config.narrative_presence_rate
        has_le_sum = rng.random() < config.summary_presence_rate
        has_cme_sum = rng.random() < config.summary_presence_rate
        if any_truth and not (has_le or has_cme):
            has_le = True

        sentences: dict[str, list[str]] = {}
        for fname, present in (("le", has_le), ("cme", has_cme)):
            if not present:
                continue
            k = 2 + int(rng.integers(0, 3))
            idx = rng.choice(len(filler), size=min(k, len(filler)), replace=False)
            sentences[fname] = [filler[j] for j in idx]
        present_fields = list(sentences.keys())

        def _inject(topic: TopicId, bank_name: str):
            target = present_fields[int(rng.integers(len(present_fields)))]
            bank = banks[topic][bank_name]
            template = bank[int(rng.integers(len(bank)))]
            who = kin[int(rng.integers(len(kin)))]
            sentence = template.format(kin=who, kin_lower=who[0].lower() + who[1:])
            pos = int(rng.integers(len(sentences[target]) + 1))
            sentences[target].insert(pos, sentence)

        for t in ALL_TOPICS:
            if truth[t]:
                _inject(t, "narrative_positive")
        for t in ALL_TOPICS:
            if decoys[t] and present_fields:
                _inject(t, "narrative_decoy")

        def _summary() -> str:
            if true_topics:
                parts = []
                for t in true_topics:
                    bank = banks[t]["summary_phrases"]
                    parts.append(bank[int(rng.integers(len(bank)))])
                return "; ".join(parts)
            return filler_summary[int(rng.integers(len(filler_summary)))]

        narratives = NarrativeBundle(
            le_narrative=" ".join(sentences["le"]) if has_le else None,
            cme_narrative=" ".join(sentences["cme"]) if has_cme else None,
            le_summary=_summary() if has_le_sum else None,
            cme_summary=_summary() if has_cme_sum else None,
        )
        records.append(DecedentRecord(
            id=f"D{i:07d}",
            incident_year=year,
            sex=Sex(demo["sex"]),
            race_ethnicity=RaceEthnicity(demo["race_ethnicity"]),
            sexual_orientation=SexualOrientation(demo["sexual_orientation"]),
            transgender=Transgender(demo["transgender"]),
            marital_status=MaritalStatus(demo["marital_status"]),
            relationship_status=RelationshipStatus(demo["relationship_status"]),
            homeless=Homeless(demo["homeless"]),
            physical_health_problem=PhysicalHealthProblem(demo["physical_health_problem"]),
            narratives=narratives,
            age=age,
            num_substances=num_substances,
            ground_truth=truth,
        ))
    return Corpus(records=records)


# ---------------------------------------------------------------------------
# demographic summary
# ---------------------------------------------------------------------------

def percent_of(count: int, total: int, decimals: int = 1) -> float:
    """100 * count / total rounded to the requested number of decimals."""
    if total <= 0:
        raise ValueError("total must be positive")
    return round(100.0 * count / total, decimals)


@dataclass
class CategoricalStat:
    variable: str
    category: str
    count: int
    percent: float


@dataclass
class ContinuousStat:
    variable: str
    mean: float
    sd: float
    median: float
    minimum: float
    maximum: float
    n_missing: int


@dataclass
class DemographicSummary:
    total: int
    categorical: list[CategoricalStat]
    continuous: list[ContinuousStat]


def _continuous_stat(name: str, values: list[float], n_missing: int) -> ContinuousStat:
    arr = np.asarray(values, dtype=np.float64)
    return ContinuousStat(
        variable=name,
        mean=float(arr.mean()),
        sd=float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
        median=float(np.median(arr)),
        minimum=float(arr.min()),
        maximum=float(arr.max()),
        n_missing=n_missing,
    )


def demographic_summary(corpus: Corpus) -> DemographicSummary:
    """Table-style rollup: frequency (percent of all decedents) for every
    category of every demographic enum, mean/SD/median/min/max for age and
    substance counts, with missing counted separately."""
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    total = len(corpus)
    categorical: list[CategoricalStat] = []
    for fname, etype in DEMOGRAPHIC_FIELDS.items():
        counts = {member: 0 for member in etype}
        for rec in corpus:
            counts[getattr(rec, fname)] += 1
        for member in etype:
            categorical.append(CategoricalStat(
                variable=fname,
                category=member.value,
                count=counts[member],
                percent=percent_of(counts[member], total),
            ))
    continuous: list[ContinuousStat] = []
    ages = [r.age for r in corpus if r.age is not None]
    if ages:
        continuous.append(_continuous_stat("age", ages, total - len(ages)))
    subs = [r.num_substances for r in corpus if r.num_substances is not None]
    if subs:
        continuous.append(_continuous_stat("num_substances", subs, total - len(subs)))
    return DemographicSummary(total=total, categorical=categorical, continuous=continuous)
