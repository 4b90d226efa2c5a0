import time

from fastapi.testclient import TestClient

from synth import make_corpus

from logtemplar.corpus import OracleAnnotator
from logtemplar.gateway import FaultProfile, MockGateway
from logtemplar.selection import RunConfig, build_context, run_annotation_loop
from logtemplar.service import AnnotationService


def _make_service(tmp_path, token=None):
    corpus = make_corpus(tmp_path, 20, 2, seed=11)
    config = RunConfig(budget=8, init_budget=2, second_budget=2, seed=11)
    ctx = build_context(config)
    gateway = MockGateway(dict(corpus.ground_truth), corpus.catalog, ctx, FaultProfile(seed=11))
    service = AnnotationService(corpus, gateway, config, ctx=ctx, token=token)
    return service, corpus, config


def _wait_for_pending(client, headers=None, timeout=10.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        state = client.get("/api/state", headers=headers or {}).json()
        if state["complete"] or state["error"]:
            return state, []
        items = client.get("/api/pending", headers=headers or {}).json()["items"]
        if items:
            return state, items
        time.sleep(0.05)
    raise AssertionError("timed out waiting for pending items")


def _complete_run(client, corpus, headers=None):
    """Submit ground truth for every pending item until the run finishes."""
    rounds_driven = 0
    while rounds_driven < 50:
        state, items = _wait_for_pending(client, headers)
        if state["complete"]:
            return rounds_driven
        for item in items:
            if item["submitted"]:
                continue
            truth = corpus.ground_truth[item["log_id"]].render()
            resp = client.post(
                "/api/annotations",
                json={"log_id": item["log_id"], "template": truth},
                headers=headers or {},
            )
            assert resp.status_code == 200, resp.text
        resp = client.post("/api/rounds/advance", headers=headers or {})
        assert resp.status_code == 200, resp.text
        rounds_driven += 1
        time.sleep(0.05)
    raise AssertionError("run never completed")


def test_interactive_round_walkthrough(tmp_path):
    service, corpus, config = _make_service(tmp_path)
    service.start()
    client = TestClient(service.app)
    try:
        state, items = _wait_for_pending(client)
        assert len(items) == 2  # init budget
        assert state["pending_count"] == 2
        log_id = items[0]["log_id"]
        truth = corpus.ground_truth[log_id].render()

        # Advancing with outstanding items is refused.
        resp = client.post("/api/rounds/advance")
        assert resp.status_code == 423
        assert set(resp.json()["outstanding"]) == {i["log_id"] for i in items}

        # Unknown placeholder type and wrong word counts are rejected.
        resp = client.post("/api/annotations", json={"log_id": log_id, "template": "[BOGUS]"})
        assert resp.status_code == 400
        resp = client.post("/api/annotations", json={"log_id": log_id, "template": "<a>"})
        assert resp.status_code == 400
        resp = client.post("/api/annotations", json={"log_id": 424242, "template": truth})
        assert resp.status_code == 404

        resp = client.post("/api/annotations", json={"log_id": log_id, "template": truth})
        assert resp.status_code == 200
        assert resp.json()["remaining"] == 1
        assert client.get("/api/state").json()["pending_count"] == 1

        # Exactly-once submission.
        resp = client.post("/api/annotations", json={"log_id": log_id, "template": truth})
        assert resp.status_code == 409

        for item in items[1:]:
            truth_i = corpus.ground_truth[item["log_id"]].render()
            assert client.post(
                "/api/annotations", json={"log_id": item["log_id"], "template": truth_i}
            ).status_code == 200
        assert client.post("/api/rounds/advance").status_code == 200

        # Next round appears with LLM guesses pre-filled (zero-fault mock
        # guesses are exactly the ground truth).
        state, items = _wait_for_pending(client)
        assert items, "second round never arrived"
        assert items[0]["round"] == 1
        for item in items:
            assert item["guess"] == corpus.ground_truth[item["log_id"]].render()
    finally:
        service.stop()


def test_full_interactive_run_matches_oracle_state(tmp_path):
    service, corpus, config = _make_service(tmp_path)
    service.start()
    client = TestClient(service.app)
    try:
        _complete_run(client, corpus)
        state = client.get("/api/state").json()
        assert state["complete"] and not state["error"]
        metrics = client.get("/api/metrics").json()
        assert metrics["mla"] == 1.0

        # Reference: the oracle annotator driving the identical run.
        ref_corpus = make_corpus(tmp_path, 20, 2, seed=11)
        ctx = build_context(config)
        gateway = MockGateway(
            dict(ref_corpus.ground_truth), ref_corpus.catalog, ctx, FaultProfile(seed=11)
        )
        ref = run_annotation_loop(ref_corpus, OracleAnnotator(ref_corpus), gateway, config, ctx=ctx)

        got_rounds = state["rounds"]
        want_rounds = [r.to_dict() for r in ref.state.rounds]
        assert [r["selected"] for r in got_rounds] == [r["selected"] for r in want_rounds]
        assert [r["budget"] for r in got_rounds] == [r["budget"] for r in want_rounds]
        assert [r["covered_words"] for r in got_rounds] == [
            r["covered_words"] for r in want_rounds
        ]
        assert service.result is not None
        got_labeled = [(i, t.render()) for i, t in service.result.state.labeled]
        want_labeled = [(i, t.render()) for i, t in ref.state.labeled]
        assert got_labeled == want_labeled

        preds = client.get("/api/predictions").json()["predictions"]
        want_templates = {
            i: (t.render() if t else None) for i, t in ref.final_templates.items()
        }
        assert {p["id"]: p["template"] for p in preds} == want_templates
    finally:
        service.stop()


def test_bearer_token_enforced(tmp_path):
    service, corpus, config = _make_service(tmp_path, token="hunter2")
    service.start()
    client = TestClient(service.app)
    try:
        assert client.get("/api/state").status_code == 401
        headers = {"Authorization": "Bearer hunter2"}
        assert client.get("/api/state", headers=headers).status_code == 200
    finally:
        service.stop()


def test_root_serves_fallback_page(tmp_path):
    service, _, _ = _make_service(tmp_path)
    client = TestClient(service.app)
    resp = client.get("/")
    assert resp.status_code == 200
    assert "annotation service" in resp.text
    service.stop()
