"""Per-topic regex lexicons: compilation, corpus scanning with span capture,
match-rate tabulation, and deterministic annotation sampling.

Only the full-length LE/CME narratives are scanned; summaries feed the
topic model instead. Spans are recorded as UTF-8 byte offsets (half-open)
alongside code-point offsets for display layers.
"""

from __future__ import annotations

import csv
import json
import re
import warnings
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .corpus import Corpus, DecedentRecord
from .taxonomy import ALL_TOPICS, TopicId

MATCH_CSV_HEADER = [
    "decedent_id", "topic", "field", "pattern_index",
    "span_start", "span_end", "matched_text",
]


class NarrativeField(Enum):
    LE_NARRATIVE = "LE_NARRATIVE"
    CME_NARRATIVE = "CME_NARRATIVE"


_FIELD_ATTR = {
    NarrativeField.LE_NARRATIVE: "le_narrative",
    NarrativeField.CME_NARRATIVE: "cme_narrative",
}


class LexiconError(ValueError):
    pass


@dataclass
class Lexicon:
    name: str
    version: str
    patterns: dict[TopicId, list[str]]
    compiled: dict[TopicId, list[re.Pattern]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.patterns:
            raise LexiconError("lexicon defines no topics")
        compiled: dict[TopicId, list[re.Pattern]] = {}
        for topic, pats in self.patterns.items():
            if not pats:
                raise LexiconError(f"topic {topic.name} has an empty pattern list")
            compiled[topic] = []
            for idx, pat in enumerate(pats):
                try:
                    compiled[topic].append(re.compile(pat, re.IGNORECASE))
                except re.error as exc:
                    raise LexiconError(
                        f"topic {topic.name} pattern {idx} ({pat!r}) does not compile: {exc}"
                    ) from None
        self.compiled = compiled

    @property
    def topics(self) -> list[TopicId]:
        return [t for t in ALL_TOPICS if t in self.patterns]


def compile_lexicon(source: str | Path | Mapping) -> Lexicon:
    """Build a Lexicon from a JSON file (or an already-parsed mapping)."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    else:
        obj = dict(source)
    raw = obj.get("patterns")
    if raw is None:
        # tolerate bare {TOPIC: [patterns]} mappings
        raw = {k: v for k, v in obj.items() if k not in ("name", "version")}
    patterns = {TopicId.from_name(k): list(v) for k, v in raw.items()}
    return Lexicon(
        name=str(obj.get("name", "unnamed")),
        version=str(obj.get("version", "0")),
        patterns=patterns,
    )


def default_lexicon() -> Lexicon:
    """The starter lexicon shipped with the package (replaceable data)."""
    text = resources.files("isomine").joinpath("data/lexicon_v1.json").read_text("utf-8")
    return compile_lexicon(json.loads(text))


@dataclass(frozen=True)
class MatchRecord:
    decedent_id: str
    topic: TopicId
    field: NarrativeField
    pattern_index: int
    span: tuple[int, int]       # UTF-8 byte offsets, half-open
    char_span: tuple[int, int]  # code-point offsets into the field text
    matched_text: str


@dataclass
class MatchSet:
    records: list[MatchRecord]
    flags: dict[TopicId, frozenset[str]]
    total_decedents: int
    decedents_with_any_match: int
    narrative_fields_with_any_match: int

    def flagged_ids(self, topic: TopicId) -> list[str]:
        return sorted(self.flags.get(topic, frozenset()))

    def count(self, topic: TopicId) -> int:
        return len(self.flags.get(topic, frozenset()))

    def records_for(self, decedent_id: str, topic: TopicId) -> list[MatchRecord]:
        if not hasattr(self, "_index"):
            index: dict[tuple[str, TopicId], list[MatchRecord]] = {}
            for r in self.records:
                index.setdefault((r.decedent_id, r.topic), []).append(r)
            self._index = index
        return self._index.get((decedent_id, topic), [])


def _byte_span(text: str, start: int, end: int, is_ascii: bool) -> tuple[int, int]:
    if is_ascii:
        return start, end
    prefix = len(text[:start].encode("utf-8"))
    return prefix, prefix + len(text[start:end].encode("utf-8"))


def match_corpus(corpus: Corpus | Iterable[DecedentRecord], lexicon: Lexicon) -> MatchSet:
    """Scan every LE/CME narrative with every pattern of every topic.

    A decedent is flagged for a topic iff any of its patterns hits either
    narrative. All raw matches are kept (overlaps included); record order
    is (decedent_id, field, span_start, topic, pattern_index).
    """
    records: list[MatchRecord] = []
    flags: dict[TopicId, set[str]] = {t: set() for t in lexicon.topics}
    fields_with_match = 0
    decedents_with_match: set[str] = set()
    total = 0
    for rec in corpus:
        total += 1
        for nfield in NarrativeField:
            text = getattr(rec.narratives, _FIELD_ATTR[nfield])
            if not text:
                continue
            is_ascii = text.isascii()
            field_hit = False
            for topic in lexicon.topics:
                for pidx, pattern in enumerate(lexicon.compiled[topic]):
                    for m in pattern.finditer(text):
                        field_hit = True
                        flags[topic].add(rec.id)
                        decedents_with_match.add(rec.id)
                        records.append(MatchRecord(
                            decedent_id=rec.id,
                            topic=topic,
                            field=nfield,
                            pattern_index=pidx,
                            span=_byte_span(text, m.start(), m.end(), is_ascii),
                            char_span=(m.start(), m.end()),
                            matched_text=m.group(0),
                        ))
            if field_hit:
                fields_with_match += 1
    records.sort(key=lambda r: (
        r.decedent_id, r.field.value, r.span[0], r.topic.value, r.pattern_index,
    ))
    return MatchSet(
        records=records,
        flags={t: frozenset(ids) for t, ids in flags.items()},
        total_decedents=total,
        decedents_with_any_match=len(decedents_with_match),
        narrative_fields_with_any_match=fields_with_match,
    )


@dataclass
class MatchRateRow:
    topic: TopicId
    count: int
    percent: float


def match_rate_table(matchset: MatchSet, total_decedents: int | None = None) -> list[MatchRateRow]:
    """Per-topic flagged count and percent of all decedents (2 decimals)."""
    total = matchset.total_decedents if total_decedents is None else total_decedents
    if total <= 0:
        raise ValueError("total_decedents must be positive")
    rows = []
    for topic in ALL_TOPICS:
        if topic not in matchset.flags:
            continue
        count = matchset.count(topic)
        if count > total:
            raise ValueError(f"count {count} for {topic.name} exceeds total {total}")
        rows.append(MatchRateRow(topic=topic, count=count,
                                 percent=round(100.0 * count / total, 2)))
    return rows


@dataclass
class AnnotationItem:
    decedent_id: str
    text: str
    spans: list[tuple[int, int]]  # code-point offsets into ``text``


@dataclass
class AnnotationBatch:
    topic: TopicId
    items: list[AnnotationItem]
    sample_seed: int
    size: int


def build_annotation_item(rec: DecedentRecord, topic: TopicId,
                          matchset: MatchSet) -> AnnotationItem:
    """Join the present narratives into one display text and shift the CME
    match spans past the LE part, keeping offsets faithful to the text."""
    le = rec.narratives.le_narrative or ""
    cme = rec.narratives.cme_narrative or ""
    if le and cme:
        text = le + "\n\n" + cme
        cme_offset = len(le) + 2
    elif le:
        text, cme_offset = le, 0
    else:
        text, cme_offset = cme, 0
    spans: list[tuple[int, int]] = []
    for m in matchset.records_for(rec.id, topic):
        start, end = m.char_span
        if m.field is NarrativeField.CME_NARRATIVE:
            start, end = start + cme_offset, end + cme_offset
        spans.append((start, end))
    spans = sorted(set(spans))
    return AnnotationItem(decedent_id=rec.id, text=text, spans=spans)


def sample_for_annotation(matchset: MatchSet, corpus: Corpus, topic: TopicId,
                          n: int, seed: int = 0) -> AnnotationBatch:
    """Uniform, seed-deterministic sample (without replacement) of flagged
    decedents; falls back to all of them with a warning when fewer than n."""
    if n <= 0:
        raise ValueError("sample size must be positive")
    flagged = matchset.flagged_ids(topic)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(flagged))
    if len(flagged) < n:
        warnings.warn(
            f"{topic.name}: only {len(flagged)} flagged decedents for a "
            f"sample of {n}; returning all", RuntimeWarning,
        )
        chosen = [flagged[i] for i in order]
    else:
        chosen = [flagged[i] for i in order[:n]]
    items = [build_annotation_item(corpus.get(did), topic, matchset) for did in chosen]
    return AnnotationBatch(topic=topic, items=items, sample_seed=seed, size=len(items))


def export_matches_csv(matchset: MatchSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MATCH_CSV_HEADER)
        for r in matchset.records:
            writer.writerow([
                r.decedent_id, r.topic.name, r.field.value, r.pattern_index,
                r.span[0], r.span[1], r.matched_text,
            ])
