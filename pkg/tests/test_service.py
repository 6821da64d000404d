import csv
import io

import pytest
from fastapi.testclient import TestClient

from isomine.corpus import SyntheticConfig
from isomine.pipeline import Run, RunConfig
from isomine.service import create_app
from isomine.stats import cohen_kappa
from isomine.taxonomy import TopicId
from isomine.topics import TopicHyperParams
from isomine.training import HyperGrid


@pytest.fixture()
def service(tmp_path):
    config = RunConfig(
        output_dir=str(tmp_path / "run"),
        synthetic=SyntheticConfig(n_records=700, seed=11,
                                  summary_presence_rate=0.2),
        topic_grid=[TopicHyperParams(n_components=2, n_clusters=6,
                                     min_cluster_size=3)],
        classifier_grid=HyperGrid(rf_n_estimators=(10,), rf_max_depth=(None,),
                                  rf_min_samples_split=(2,)),
        annotation_sample_size=12,
        agreement_prefix_size=10,
        auto_label_from_ground_truth=False,  # service captures the labels
    )
    run = Run(config)
    run.execute(through="sample")
    app = create_app(run)
    return TestClient(app), run


def queue_next(client, topic, annotator):
    response = client.get(f"/queue/{topic}", params={"annotator": annotator})
    assert response.status_code == 200
    return response.json()


def post_label(client, item, annotator, relevant, **params):
    return client.post("/label", params=params, json={
        "decedent_id": item["decedent_id"], "topic": item["topic"],
        "annotator_id": annotator, "relevant": relevant,
    })


def test_topics_listing(service):
    client, run = service
    payload = client.get("/topics").json()["topics"]
    assert {t["topic"] for t in payload} == {t.name for t in TopicId}
    assert all(t["labeled_items"] == 0 for t in payload)


def test_label_then_queue_advances(service):
    client, _ = service
    first = queue_next(client, "BREAK_UP", "ann1")
    assert first["position"] == 0 and first["total"] == 12
    assert isinstance(first["spans"], list) and first["spans"]
    start, end = first["spans"][0]
    assert "break" in first["text"][start:end].lower()
    assert post_label(client, first, "ann1", True).status_code == 201
    second = queue_next(client, "BREAK_UP", "ann1")
    assert second["decedent_id"] != first["decedent_id"]
    # another annotator still sees the first item
    other = queue_next(client, "BREAK_UP", "ann2")
    assert other["decedent_id"] == first["decedent_id"]


def test_duplicate_label_conflicts_unless_overwrite(service):
    client, _ = service
    item = queue_next(client, "DIVORCE", "ann1")
    assert post_label(client, item, "ann1", True).status_code == 201
    assert post_label(client, item, "ann1", False).status_code == 409
    response = post_label(client, item, "ann1", False, allow_overwrite=True)
    assert response.status_code == 201


def test_unknown_topic_and_decedent_404(service):
    client, _ = service
    assert client.get("/queue/NOT_A_TOPIC", params={"annotator": "x"}).status_code == 404
    response = client.post("/label", json={
        "decedent_id": "GHOST", "topic": "BREAK_UP",
        "annotator_id": "x", "relevant": True})
    assert response.status_code == 404


def test_agreement_insufficient_then_na_for_all_positive(service):
    client, run = service
    assert client.get("/agreement/BREAK_UP").json()["status"] == \
        "insufficient annotators"
    # two annotators dual-code the whole prefix all-positive
    for annotator in ("ann1", "ann2"):
        while True:
            item = queue_next(client, "BREAK_UP", annotator)
            if item.get("done") or item["position"] >= 10:
                break
            assert post_label(client, item, annotator, True).status_code == 201
    payload = client.get("/agreement/BREAK_UP").json()
    assert payload["status"] == "ok"
    assert payload["n"] == 10
    assert payload["percent"] == 1.0
    assert payload["kappa"] is None  # the NA case


def test_export_matches_offline_kappa(service):
    client, run = service
    truth = {r.id: r.ground_truth for r in run.load_corpus()}
    for annotator in ("ann1", "ann2"):
        while True:
            item = queue_next(client, "EVICTION_MOVE", annotator)
            if item.get("done") or item["position"] >= 10:
                break
            label = bool(truth[item["decedent_id"]][TopicId.EVICTION_MOVE])
            if annotator == "ann2" and item["position"] == 3:
                label = not label  # planted disagreement
            assert post_label(client, item, annotator, label).status_code == 201
    exported = client.get("/export/labels").text
    rows = [r for r in csv.DictReader(io.StringIO(exported))
            if r["topic"] == "EVICTION_MOVE"]
    by_annotator = {}
    for r in rows:
        by_annotator.setdefault(r["annotator_id"], {})[r["decedent_id"]] = int(r["relevant"])
    batch = run.load_batches()[TopicId.EVICTION_MOVE]
    order = [it.decedent_id for it in batch.items][:10]
    common = [d for d in order
              if d in by_annotator["ann1"] and d in by_annotator["ann2"]]
    offline = cohen_kappa([by_annotator["ann1"][d] for d in common],
                          [by_annotator["ann2"][d] for d in common])
    payload = client.get("/agreement/EVICTION_MOVE").json()
    assert payload["n"] == offline.n_items
    assert payload["percent"] == offline.percent_agreement
    if offline.kappa is None:
        assert payload["kappa"] is None
    else:
        assert payload["kappa"] == pytest.approx(offline.kappa, abs=1e-12)
