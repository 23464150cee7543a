import io
import json

import pytest
from fastapi.testclient import TestClient

from facetkit.errors import (
    AlreadyQualifiedError,
    DuplicateJudgmentError,
    NotQualifiedError,
    UnknownGoldSetError,
    UnknownTaskError,
)
from facetkit.service import (
    AnnotationService,
    Criterion,
    FacetPair,
    GoldTask,
    QualificationStatus,
    create_app,
    load_gold_tasks,
    load_pairs,
)

PAIRS = [
    FacetPair(f"query {i}", (f"gt {i} a", f"gt {i} b"), (f"gen {i} a", f"gen {i} b"))
    for i in range(4)
]

GOLD = [
    GoldTask("g1", "gold query 1", ("good a", "good b"), ("bad", "bad"), "left"),
    GoldTask("g2", "gold query 2", ("dup", "dup"), ("fine a", "fine b"), "right"),
    GoldTask("g3", "gold query 3", ("x1", "x2"), ("y", "y y"), "left"),
    GoldTask("g4", "gold query 4", ("z", "z"), ("w1", "w2"), "right"),
    GoldTask("g5", "gold query 5", ("k1", "k2"), ("m", "m"), "left"),
]

ALL_CORRECT = {"g1": "left", "g2": "right", "g3": "left", "g4": "right", "g5": "left"}


def _service(tmp_path=None, **kwargs):
    log_path = tmp_path / "judgments.log" if tmp_path is not None else None
    return AnnotationService(PAIRS, GOLD, seed=7, log_path=log_path, **kwargs)


def _qualify(service, annotator_id):
    return service.run_qualification(annotator_id, ALL_CORRECT)


class TestQualification:
    def test_perfect_score_qualifies(self):
        service = _service()
        annotator = _qualify(service, "ann1")
        assert annotator.status is QualificationStatus.QUALIFIED
        assert annotator.score == 1.0

    def test_low_score_rejected(self):
        service = _service()
        annotator = service.run_qualification("ann1", {"g1": "left", "g2": "left"})
        assert annotator.status is QualificationStatus.REJECTED
        assert annotator.score == pytest.approx(0.2)

    def test_threshold_is_inclusive(self):
        service = _service()
        answers = dict(ALL_CORRECT)
        answers["g5"] = "right"  # 4/5 = exactly the 0.8 default
        annotator = service.run_qualification("ann1", answers)
        assert annotator.status is QualificationStatus.QUALIFIED

    def test_requalification_blocked(self):
        service = _service()
        _qualify(service, "ann1")
        with pytest.raises(AlreadyQualifiedError):
            _qualify(service, "ann1")

    def test_rejected_may_retry(self):
        service = _service()
        service.run_qualification("ann1", {})
        annotator = _qualify(service, "ann1")
        assert annotator.status is QualificationStatus.QUALIFIED

    def test_no_gold_set_configured(self):
        service = AnnotationService(PAIRS, (), seed=1)
        with pytest.raises(UnknownGoldSetError):
            service.run_qualification("ann1", {})

    def test_gold_payloads_hide_correct_side(self):
        service = _service()
        for payload in service.gold_payloads():
            assert "correct" not in payload


class TestTaskDispatch:
    def test_unqualified_blocked(self):
        service = _service()
        with pytest.raises(NotQualifiedError):
            service.next_task("stranger", Criterion.COHERENCY)

    def test_sticky_assignment(self):
        service = _service()
        _qualify(service, "ann1")
        first = service.next_task("ann1", Criterion.COHERENCY)
        again = service.next_task("ann1", Criterion.COHERENCY)
        assert first is not None
        assert first.task_id == again.task_id

    def test_exhaustion_returns_none(self):
        service = _service(judgments_per_task=1)
        _qualify(service, "ann1")
        seen = []
        while (task := service.next_task("ann1", Criterion.QUALITY)) is not None:
            service.submit_judgment(task.task_id, "ann1", Criterion.QUALITY, "left")
            seen.append(task.task_id)
        assert len(seen) == len(PAIRS)

    def test_pair_completion_prioritized(self):
        service = _service()
        _qualify(service, "ann1")
        _qualify(service, "ann2")
        first = service.next_task("ann1", Criterion.COHERENCY)
        service.submit_judgment(first.task_id, "ann1", Criterion.COHERENCY, "left")
        second = service.next_task("ann1", Criterion.COHERENCY)
        assert second.task_id != first.task_id
        # a second annotator is steered to the half-judged task first
        other = service.next_task("ann2", Criterion.COHERENCY)
        assert other.task_id == first.task_id

    def test_criteria_streams_independent(self):
        service = _service()
        _qualify(service, "ann1")
        coherency_task = service.next_task("ann1", Criterion.COHERENCY)
        quality_task = service.next_task("ann1", Criterion.QUALITY)
        assert coherency_task.criterion is Criterion.COHERENCY
        assert quality_task.criterion is Criterion.QUALITY
        assert coherency_task.task_id != quality_task.task_id

    def test_side_assignment_reproducible(self):
        a = AnnotationService(PAIRS, GOLD, seed=7)
        b = AnnotationService(PAIRS, GOLD, seed=7)
        assert [t.left for t in a.tasks.values()] == [t.left for t in b.tasks.values()]
        c = AnnotationService(PAIRS, GOLD, seed=8)
        assert [t.left for t in a.tasks.values()] != [t.left for t in c.tasks.values()]

    def test_both_sides_occur(self):
        service = AnnotationService(
            [FacetPair(f"q{i}", ("gt",), ("gen",)) for i in range(32)], GOLD, seed=3
        )
        sides = {t.left_is_ground_truth for t in service.tasks.values()}
        assert sides == {True, False}


class TestJudgments:
    def test_duplicate_rejected_log_unchanged(self, tmp_path):
        service = _service(tmp_path)
        _qualify(service, "ann1")
        task = service.next_task("ann1", Criterion.COHERENCY)
        service.submit_judgment(task.task_id, "ann1", Criterion.COHERENCY, "left")
        log_size = (tmp_path / "judgments.log").stat().st_size
        with pytest.raises(DuplicateJudgmentError):
            service.submit_judgment(task.task_id, "ann1", Criterion.COHERENCY, "right")
        assert (tmp_path / "judgments.log").stat().st_size == log_size

    def test_unknown_task(self):
        service = _service()
        _qualify(service, "ann1")
        with pytest.raises(UnknownTaskError):
            service.submit_judgment("task-quality-9999", "ann1", Criterion.QUALITY, "left")

    def test_criterion_mismatch(self):
        service = _service()
        _qualify(service, "ann1")
        task = service.next_task("ann1", Criterion.COHERENCY)
        with pytest.raises(UnknownTaskError):
            service.submit_judgment(task.task_id, "ann1", Criterion.QUALITY, "left")

    def test_bad_choice(self):
        service = _service()
        _qualify(service, "ann1")
        task = service.next_task("ann1", Criterion.COHERENCY)
        with pytest.raises(ValueError):
            service.submit_judgment(task.task_id, "ann1", Criterion.COHERENCY, "A")

    def test_two_annotators_complete_a_task(self):
        service = _service()
        _qualify(service, "ann1")
        _qualify(service, "ann2")
        task = service.next_task("ann1", Criterion.COHERENCY)
        service.submit_judgment(task.task_id, "ann1", Criterion.COHERENCY, "left")
        service.submit_judgment(task.task_id, "ann2", Criterion.COHERENCY, "left")
        export = service.export(Criterion.COHERENCY)
        assert any(entry["task_id"] == task.task_id for entry in export["complete"])


class TestExport:
    def test_resolution_both_left_on_generated_side(self):
        service = _service()
        _qualify(service, "ann1")
        _qualify(service, "ann2")
        task = next(
            t for t in service.tasks.values()
            if t.criterion is Criterion.COHERENCY and not t.left_is_ground_truth
        )
        for annotator in ("ann1", "ann2"):
            service.submit_judgment(task.task_id, annotator, Criterion.COHERENCY, "left")
        export = service.export(Criterion.COHERENCY)
        entry = next(e for e in export["complete"] if e["task_id"] == task.task_id)
        assert [j["choice"] for j in entry["judgments"]] == ["B", "B"]

    def test_empty_export_lists_incomplete(self):
        service = _service()
        export = service.export(Criterion.QUALITY)
        assert export["complete"] == []
        assert len(export["incomplete"]) == len(PAIRS)

    def test_export_deterministic(self):
        service = _service()
        _qualify(service, "ann1")
        _qualify(service, "ann2")
        task = service.next_task("ann1", Criterion.QUALITY)
        service.submit_judgment(task.task_id, "ann1", Criterion.QUALITY, "left")
        service.submit_judgment(task.task_id, "ann2", Criterion.QUALITY, "right")
        first = json.dumps(service.export(Criterion.QUALITY), sort_keys=True)
        second = json.dumps(service.export(Criterion.QUALITY), sort_keys=True)
        assert first == second


class TestReplay:
    def test_log_replay_reconstructs_state(self, tmp_path):
        service = _service(tmp_path)
        _qualify(service, "ann1")
        _qualify(service, "ann2")
        for _ in range(3):
            task = service.next_task("ann1", Criterion.COHERENCY)
            service.submit_judgment(task.task_id, "ann1", Criterion.COHERENCY, "left")
        task = service.next_task("ann2", Criterion.COHERENCY)
        service.submit_judgment(task.task_id, "ann2", Criterion.COHERENCY, "right")

        resurrected = _service(tmp_path)
        assert resurrected.progress() == service.progress()
        assert resurrected.export(Criterion.COHERENCY) == service.export(Criterion.COHERENCY)
        next_before = service.next_task("ann1", Criterion.COHERENCY)
        next_after = resurrected.next_task("ann1", Criterion.COHERENCY)
        assert (next_before and next_before.task_id) == (next_after and next_after.task_id)

    def test_corrupt_duplicate_in_log_rejected(self):
        service = AnnotationService(PAIRS, GOLD, seed=7)
        task_id = next(iter(service.tasks))
        criterion = service.tasks[task_id].criterion.value
        event = {
            "event": "judgment",
            "task_id": task_id,
            "annotator_id": "ann1",
            "criterion": criterion,
            "choice": "left",
            "received_at": 0.0,
        }
        log = io.StringIO(json.dumps(event) + "\n" + json.dumps(event) + "\n")
        with pytest.raises(DuplicateJudgmentError):
            service.replay(log)


class TestHttpApi:
    @pytest.fixture()
    def client(self, tmp_path):
        service = _service(tmp_path)
        return TestClient(create_app(service)), service

    def test_full_protocol_over_http(self, client):
        http, service = client
        response = http.post("/annotators/ann1/qualification", json={"answers": ALL_CORRECT})
        assert response.status_code == 200
        assert response.json()["status"] == "qualified"

        response = http.get("/tasks/next", params={"annotator": "ann1", "criterion": "coherency"})
        assert response.status_code == 200
        task = response.json()
        assert set(task) == {"task_id", "query", "criterion", "left", "right", "display_seed"}

        response = http.post(
            "/judgments",
            json={
                "task_id": task["task_id"],
                "annotator_id": "ann1",
                "criterion": "coherency",
                "choice": "left",
            },
        )
        assert response.status_code == 200

        response = http.get("/progress")
        assert response.json()["judgments"] == 1

    def test_open_task_payloads_never_reveal_source(self, client):
        http, _ = client
        http.post("/annotators/ann1/qualification", json={"answers": ALL_CORRECT})
        response = http.get("/tasks/next", params={"annotator": "ann1", "criterion": "quality"})
        body = response.text.lower()
        for marker in ("ground", "truth", "generated", "source", "bart"):
            assert marker not in body

    def test_duplicate_judgment_conflict_status(self, client):
        http, _ = client
        http.post("/annotators/ann1/qualification", json={"answers": ALL_CORRECT})
        task = http.get(
            "/tasks/next", params={"annotator": "ann1", "criterion": "quality"}
        ).json()
        body = {
            "task_id": task["task_id"],
            "annotator_id": "ann1",
            "criterion": "quality",
            "choice": "right",
        }
        assert http.post("/judgments", json=body).status_code == 200
        assert http.post("/judgments", json=body).status_code == 409

    def test_unqualified_gets_403(self, client):
        http, _ = client
        response = http.get(
            "/tasks/next", params={"annotator": "nobody", "criterion": "quality"}
        )
        assert response.status_code == 403

    def test_exhausted_queue_gives_204(self, client):
        http, service = client
        http.post("/annotators/ann1/qualification", json={"answers": ALL_CORRECT})
        while True:
            response = http.get(
                "/tasks/next", params={"annotator": "ann1", "criterion": "quality"}
            )
            if response.status_code == 204:
                break
            task = response.json()
            http.post(
                "/judgments",
                json={
                    "task_id": task["task_id"],
                    "annotator_id": "ann1",
                    "criterion": "quality",
                    "choice": "left",
                },
            )

    def test_qualification_tasks_exposed(self, client):
        http, _ = client
        response = http.get("/qualification/tasks")
        tasks = response.json()["tasks"]
        assert len(tasks) == len(GOLD)
        assert all("correct" not in t for t in tasks)

    def test_export_endpoint(self, client):
        http, _ = client
        response = http.get("/export", params={"criterion": "coherency"})
        assert response.status_code == 200
        assert response.json()["criterion"] == "coherency"


class TestLoaders:
    def test_load_pairs(self):
        stream = io.StringIO(
            json.dumps({"query": "q", "ground_truth": ["a"], "generated": ["b"]}) + "\n"
        )
        pairs = load_pairs(stream)
        assert pairs == [FacetPair("q", ("a",), ("b",))]

    def test_load_gold(self):
        stream = io.StringIO(
            json.dumps(
                {"gold_id": "g", "query": "q", "left": ["a"], "right": ["b"], "correct": "left"}
            )
            + "\n"
        )
        gold = load_gold_tasks(stream)
        assert gold[0].correct == "left"

    def test_load_gold_bad_side(self):
        stream = io.StringIO(
            json.dumps(
                {"gold_id": "g", "query": "q", "left": ["a"], "right": ["b"], "correct": "A"}
            )
            + "\n"
        )
        with pytest.raises(ValueError):
            load_gold_tasks(stream)
