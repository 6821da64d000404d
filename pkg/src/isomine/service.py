"""Annotation HTTP service: queue items with highlight spans, append-only
label capture, and live interrater agreement.

The single-page annotation UI is served as static files when a directory
is supplied; the API itself is framework-agnostic JSON.
"""

from __future__ import annotations

import threading
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .lexicon import AnnotationBatch
from .pipeline import Run
from .stats import cohen_kappa
from .taxonomy import TopicId
from .training import (ADJUDICATOR_ID, AnnotationLabel, append_labels_csv,
                       read_labels_csv)


class LabelIn(BaseModel):
    decedent_id: str
    topic: str
    annotator_id: str
    relevant: bool


class LabelStore:
    """Append-only CSV store with serialized writes."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._labels: list[AnnotationLabel] = []
        if self.path.exists():
            self._labels = read_labels_csv(self.path)

    def all(self) -> list[AnnotationLabel]:
        with self._lock:
            return list(self._labels)

    def has(self, annotator_id: str, decedent_id: str, topic: TopicId) -> bool:
        with self._lock:
            return any(
                lab.annotator_id == annotator_id
                and lab.decedent_id == decedent_id and lab.topic is topic
                for lab in self._labels
            )

    def append(self, label: AnnotationLabel) -> None:
        with self._lock:
            append_labels_csv(self.path, [label])
            self._labels.append(label)


def create_app(run: Run, overwrite: bool = False,
               static_dir: str | Path | None = None) -> FastAPI:
    batches: dict[TopicId, AnnotationBatch] = run.load_batches()
    store = LabelStore(run.labels_file)
    prefix_size = run.config.agreement_prefix_size
    app = FastAPI(title="isomine annotation service")

    def topic_or_404(name: str) -> TopicId:
        try:
            topic = TopicId.from_name(name)
        except ValueError:
            raise HTTPException(status_code=404, detail=f"unknown topic {name!r}")
        if topic not in batches:
            raise HTTPException(status_code=404,
                                detail=f"no annotation batch for {name}")
        return topic

    @app.get("/topics")
    def topics():
        labels = store.all()
        out = []
        for topic, batch in batches.items():
            labeled_by: dict[str, int] = {}
            item_ids = {it.decedent_id for it in batch.items}
            for lab in labels:
                if lab.topic is topic and lab.decedent_id in item_ids \
                        and lab.annotator_id != ADJUDICATOR_ID:
                    labeled_by[lab.annotator_id] = labeled_by.get(lab.annotator_id, 0) + 1
            labeled_items = len({
                lab.decedent_id for lab in labels
                if lab.topic is topic and lab.decedent_id in item_ids
            })
            out.append({
                "topic": topic.name,
                "size": batch.size,
                "labeled_items": labeled_items,
                "labeled_by": dict(sorted(labeled_by.items())),
            })
        return {"topics": out}

    @app.get("/queue/{topic_name}")
    def queue(topic_name: str, annotator: str = Query(..., min_length=1)):
        topic = topic_or_404(topic_name)
        batch = batches[topic]
        seen = {
            lab.decedent_id for lab in store.all()
            if lab.topic is topic and lab.annotator_id == annotator
        }
        for pos, item in enumerate(batch.items):
            if item.decedent_id in seen:
                continue
            return {
                "decedent_id": item.decedent_id,
                "topic": topic.name,
                "text": item.text,
                "spans": [list(s) for s in item.spans],
                "position": pos,
                "total": batch.size,
            }
        return {"done": True, "topic": topic.name, "total": batch.size}

    @app.post("/label", status_code=201)
    def post_label(label: LabelIn, allow_overwrite: bool = Query(False)):
        topic = topic_or_404(label.topic)
        batch = batches[topic]
        if label.decedent_id not in {it.decedent_id for it in batch.items}:
            raise HTTPException(
                status_code=404,
                detail=f"decedent {label.decedent_id!r} is not in the "
                       f"{topic.name} annotation batch")
        if (not (overwrite or allow_overwrite)
                and store.has(label.annotator_id, label.decedent_id, topic)):
            raise HTTPException(
                status_code=409,
                detail="label already exists; repeat with allow_overwrite=true")
        store.append(AnnotationLabel(
            decedent_id=label.decedent_id,
            topic=topic,
            annotator_id=label.annotator_id,
            relevant=label.relevant,
            timestamp=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        ))
        return {"status": "created"}

    @app.get("/agreement/{topic_name}")
    def agreement(topic_name: str):
        topic = topic_or_404(topic_name)
        order = [it.decedent_id for it in batches[topic].items][:prefix_size]
        per_annotator: dict[str, dict[str, bool]] = {}
        for lab in store.all():
            if lab.topic is topic and lab.annotator_id != ADJUDICATOR_ID:
                per_annotator.setdefault(lab.annotator_id, {})[lab.decedent_id] = lab.relevant
        coders = sorted(a for a, seen in per_annotator.items()
                        if any(d in seen for d in order))
        if len(coders) < 2:
            return {"status": "insufficient annotators", "topic": topic.name,
                    "n": 0, "percent": None, "kappa": None}
        a, b = coders[:2]
        common = [d for d in order
                  if d in per_annotator[a] and d in per_annotator[b]]
        if not common:
            return {"status": "insufficient annotators", "topic": topic.name,
                    "n": 0, "percent": None, "kappa": None}
        result = cohen_kappa([int(per_annotator[a][d]) for d in common],
                             [int(per_annotator[b][d]) for d in common])
        return {
            "status": "ok", "topic": topic.name, "n": result.n_items,
            "percent": result.percent_agreement,
            "kappa": result.kappa,  # null encodes the NA case
            "p_value": result.p_value,
            "annotators": [a, b],
        }

    @app.get("/export/labels", response_class=PlainTextResponse)
    def export_labels():
        if not store.path.exists():
            return "decedent_id,topic,annotator_id,relevant,timestamp\r\n"
        return store.path.read_text(encoding="utf-8")

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")
    return app
