"""Blind pairwise annotation service.

Protocol: annotators qualify against a gold set, then receive open tasks
for one criterion at a time. Each task shows two facet sets whose
left/right placement was fixed at task creation by the service seed; no
payload ever says which side is the reference. Judgments go to an
append-only line log; replaying the log rebuilds the exact service state.

State mutations are serialized through one lock, so judgment uniqueness and
log append order hold under concurrent requests.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Mapping

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .errors import (
    AlreadyQualifiedError,
    DuplicateJudgmentError,
    NotQualifiedError,
    UnknownGoldSetError,
    UnknownTaskError,
)

DEFAULT_JUDGMENTS_PER_TASK = 2
DEFAULT_QUALIFICATION_THRESHOLD = 0.8

CHOICE_LEFT = "left"
CHOICE_RIGHT = "right"


class Criterion(str, Enum):
    COHERENCY = "coherency"
    QUALITY = "quality"


class QualificationStatus(str, Enum):
    UNQUALIFIED = "unqualified"
    QUALIFIED = "qualified"
    REJECTED = "rejected"


@dataclass(frozen=True)
class FacetPair:
    """One comparison unit: the reference set and a generated set."""

    query: str
    ground_truth: tuple[str, ...]
    generated: tuple[str, ...]


@dataclass(frozen=True)
class GoldTask:
    gold_id: str
    query: str
    left: tuple[str, ...]
    right: tuple[str, ...]
    correct: str  # "left" | "right"


@dataclass(frozen=True)
class Task:
    task_id: str
    index: int
    query: str
    criterion: Criterion
    left: tuple[str, ...]
    right: tuple[str, ...]
    left_is_ground_truth: bool  # never serialized for open tasks
    display_seed: int

    def payload(self) -> dict:
        """Client-facing view; contains no source identity."""
        return {
            "task_id": self.task_id,
            "query": self.query,
            "criterion": self.criterion.value,
            "left": list(self.left),
            "right": list(self.right),
            "display_seed": self.display_seed,
        }


@dataclass(frozen=True)
class Judgment:
    task_id: str
    annotator_id: str
    criterion: Criterion
    choice: str  # "left" | "right"
    received_at: float


@dataclass
class Annotator:
    annotator_id: str
    status: QualificationStatus = QualificationStatus.UNQUALIFIED
    score: float | None = None


def _seed_bit(seed: int, *parts: str) -> bool:
    digest = hashlib.blake2b(
        ":".join([str(seed), *parts]).encode("utf-8"), digest_size=8
    ).digest()
    return bool(digest[0] & 1)


def _seed_int(seed: int, *parts: str) -> int:
    # 32 bits: display seeds travel through JSON to JS clients losslessly
    digest = hashlib.blake2b(
        ":".join(["display", str(seed), *parts]).encode("utf-8"), digest_size=4
    ).digest()
    return int.from_bytes(digest, "big")


class AnnotationService:
    """In-memory protocol state with an append-only event log."""

    def __init__(
        self,
        pairs: Iterable[FacetPair],
        gold_tasks: Iterable[GoldTask] = (),
        seed: int = 0,
        judgments_per_task: int = DEFAULT_JUDGMENTS_PER_TASK,
        qualification_threshold: float = DEFAULT_QUALIFICATION_THRESHOLD,
        log_path: str | Path | None = None,
        criteria: tuple[Criterion, ...] = (Criterion.COHERENCY, Criterion.QUALITY),
    ):
        self.seed = seed
        self.judgments_per_task = judgments_per_task
        self.qualification_threshold = qualification_threshold
        self.gold_tasks = {g.gold_id: g for g in gold_tasks}
        self._lock = threading.Lock()
        self._log_path = Path(log_path) if log_path is not None else None

        self.tasks: dict[str, Task] = {}
        pair_list = list(pairs)
        index = 0
        for criterion in criteria:
            for pair in pair_list:
                gt_left = _seed_bit(seed, criterion.value, str(index))
                left, right = (
                    (pair.ground_truth, pair.generated)
                    if gt_left
                    else (pair.generated, pair.ground_truth)
                )
                task = Task(
                    task_id=f"task-{criterion.value}-{index:04d}",
                    index=index,
                    query=pair.query,
                    criterion=criterion,
                    left=left,
                    right=right,
                    left_is_ground_truth=gt_left,
                    display_seed=_seed_int(seed, criterion.value, str(index)),
                )
                self.tasks[task.task_id] = task
                index += 1

        self.annotators: dict[str, Annotator] = {}
        self._judgments: list[Judgment] = []
        self._judged: set[tuple[str, str, str]] = set()  # (task, annotator, criterion)

        if self._log_path is not None and self._log_path.exists():
            with self._log_path.open("r", encoding="utf-8") as log:
                self.replay(log)

    # -- event log ---------------------------------------------------------

    def _append_log(self, event: dict) -> None:
        if self._log_path is None:
            return
        with self._log_path.open("a", encoding="utf-8") as log:
            log.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
            log.flush()

    def replay(self, stream: IO[str]) -> None:
        """Apply logged events in order, re-validating each one."""
        for line in stream:
            if not line.strip():
                continue
            event = json.loads(line)
            kind = event["event"]
            if kind == "qualification":
                annotator = Annotator(
                    annotator_id=event["annotator_id"],
                    status=QualificationStatus(event["status"]),
                    score=event["score"],
                )
                self.annotators[annotator.annotator_id] = annotator
            elif kind == "judgment":
                self._apply_judgment(
                    Judgment(
                        task_id=event["task_id"],
                        annotator_id=event["annotator_id"],
                        criterion=Criterion(event["criterion"]),
                        choice=event["choice"],
                        received_at=event["received_at"],
                    )
                )
            else:
                raise ValueError(f"unknown log event {kind!r}")

    # -- qualification -----------------------------------------------------

    def run_qualification(
        self, annotator_id: str, answers: Mapping[str, str]
    ) -> Annotator:
        """Score answers against the gold set and gate the annotator.

        A rejected annotator may retry; a qualified one may not resubmit.
        Unanswered or unknown gold ids count as mismatches.
        """
        if not self.gold_tasks:
            raise UnknownGoldSetError("no qualification gold set is configured")
        with self._lock:
            existing = self.annotators.get(annotator_id)
            if existing is not None and existing.status is QualificationStatus.QUALIFIED:
                raise AlreadyQualifiedError(f"{annotator_id} is already qualified")
            matches = sum(
                1
                for gold_id, gold in self.gold_tasks.items()
                if answers.get(gold_id) == gold.correct
            )
            score = matches / len(self.gold_tasks)
            status = (
                QualificationStatus.QUALIFIED
                if score >= self.qualification_threshold
                else QualificationStatus.REJECTED
            )
            annotator = Annotator(annotator_id=annotator_id, status=status, score=score)
            self.annotators[annotator_id] = annotator
            self._append_log(
                {
                    "event": "qualification",
                    "annotator_id": annotator_id,
                    "score": score,
                    "status": status.value,
                    "answers": dict(answers),
                }
            )
            return annotator

    def _require_qualified(self, annotator_id: str) -> None:
        annotator = self.annotators.get(annotator_id)
        if annotator is None or annotator.status is not QualificationStatus.QUALIFIED:
            raise NotQualifiedError(f"{annotator_id} is not qualified")

    # -- task dispatch -----------------------------------------------------

    def _judgment_count(self, task_id: str) -> int:
        return sum(1 for j in self._judgments if j.task_id == task_id)

    def next_task(self, annotator_id: str, criterion: Criterion) -> Task | None:
        """First eligible open task; pair-completion takes priority.

        Purely a function of service state, so the same annotator asking
        again before judging receives the same task.
        """
        with self._lock:
            self._require_qualified(annotator_id)
            counts = {task_id: 0 for task_id in self.tasks}
            for judgment in self._judgments:
                counts[judgment.task_id] += 1
            eligible = [
                task
                for task in self.tasks.values()
                if task.criterion is criterion
                and counts[task.task_id] < self.judgments_per_task
                and (task.task_id, annotator_id, criterion.value) not in self._judged
            ]
            if not eligible:
                return None
            eligible.sort(key=lambda t: (-counts[t.task_id], t.index))
            return eligible[0]

    def submit_judgment(
        self, task_id: str, annotator_id: str, criterion: Criterion, choice: str
    ) -> Judgment:
        if choice not in (CHOICE_LEFT, CHOICE_RIGHT):
            raise ValueError(f"choice must be 'left' or 'right', got {choice!r}")
        with self._lock:
            self._require_qualified(annotator_id)
            task = self.tasks.get(task_id)
            if task is None:
                raise UnknownTaskError(f"unknown task {task_id!r}")
            if task.criterion is not criterion:
                raise UnknownTaskError(
                    f"task {task_id!r} is a {task.criterion.value} task, not {criterion.value}"
                )
            judgment = Judgment(
                task_id=task_id,
                annotator_id=annotator_id,
                criterion=criterion,
                choice=choice,
                received_at=time.time(),
            )
            self._apply_judgment(judgment)
            self._append_log(
                {
                    "event": "judgment",
                    "task_id": task_id,
                    "annotator_id": annotator_id,
                    "criterion": criterion.value,
                    "choice": choice,
                    "received_at": judgment.received_at,
                }
            )
            return judgment

    def _apply_judgment(self, judgment: Judgment) -> None:
        key = (judgment.task_id, judgment.annotator_id, judgment.criterion.value)
        if judgment.task_id not in self.tasks:
            raise UnknownTaskError(f"unknown task {judgment.task_id!r}")
        if key in self._judged:
            raise DuplicateJudgmentError(
                f"{judgment.annotator_id} already judged {judgment.task_id}"
            )
        self._judged.add(key)
        self._judgments.append(judgment)

    # -- export ------------------------------------------------------------

    def export(self, criterion: Criterion) -> dict:
        """Resolved comparisons for complete tasks, in task creation order.

        Left/right choices resolve to A (ground truth) / B (generated) via
        the stored side assignment. Deterministic: exporting twice without
        new judgments yields byte-identical JSON.
        """
        with self._lock:
            by_task: dict[str, list[Judgment]] = {}
            for judgment in self._judgments:
                by_task.setdefault(judgment.task_id, []).append(judgment)
            complete = []
            incomplete = []
            for task in sorted(self.tasks.values(), key=lambda t: t.index):
                if task.criterion is not criterion:
                    continue
                judgments = by_task.get(task.task_id, [])
                if len(judgments) != self.judgments_per_task:
                    incomplete.append(task.task_id)
                    continue
                resolved = []
                for judgment in judgments:
                    chose_left = judgment.choice == CHOICE_LEFT
                    is_ground_truth = chose_left == task.left_is_ground_truth
                    resolved.append(
                        {
                            "annotator_id": judgment.annotator_id,
                            "choice": "A" if is_ground_truth else "B",
                        }
                    )
                complete.append(
                    {
                        "task_id": task.task_id,
                        "query": task.query,
                        "judgments": resolved,
                    }
                )
            return {
                "criterion": criterion.value,
                "complete": complete,
                "incomplete": incomplete,
            }

    def progress(self) -> dict:
        with self._lock:
            counts: dict[str, int] = {}
            for judgment in self._judgments:
                counts[judgment.task_id] = counts.get(judgment.task_id, 0) + 1
            complete = sum(
                1 for c in counts.values() if c >= self.judgments_per_task
            )
            per_annotator: dict[str, int] = {}
            for judgment in self._judgments:
                per_annotator[judgment.annotator_id] = (
                    per_annotator.get(judgment.annotator_id, 0) + 1
                )
            return {
                "tasks": len(self.tasks),
                "complete": complete,
                "incomplete": len(self.tasks) - complete,
                "judgments": len(self._judgments),
                "per_annotator": dict(sorted(per_annotator.items())),
            }

    def gold_payloads(self) -> list[dict]:
        """Gold tasks as shown to annotators: the correct side is withheld."""
        return [
            {
                "gold_id": gold.gold_id,
                "query": gold.query,
                "left": list(gold.left),
                "right": list(gold.right),
            }
            for gold in self.gold_tasks.values()
        ]


# --------------------------------------------------------------------------
# Input file loaders
# --------------------------------------------------------------------------


def load_pairs(stream: IO[str]) -> list[FacetPair]:
    pairs = []
    for line in stream:
        if not line.strip():
            continue
        payload = json.loads(line)
        if payload.get("record_type") == "run_config":
            continue
        pairs.append(
            FacetPair(
                query=payload["query"],
                ground_truth=tuple(payload["ground_truth"]),
                generated=tuple(payload["generated"]),
            )
        )
    return pairs


def load_gold_tasks(stream: IO[str]) -> list[GoldTask]:
    tasks = []
    for line in stream:
        if not line.strip():
            continue
        payload = json.loads(line)
        if payload["correct"] not in (CHOICE_LEFT, CHOICE_RIGHT):
            raise ValueError(f"gold task {payload.get('gold_id')}: bad correct side")
        tasks.append(
            GoldTask(
                gold_id=payload["gold_id"],
                query=payload["query"],
                left=tuple(payload["left"]),
                right=tuple(payload["right"]),
                correct=payload["correct"],
            )
        )
    return tasks


# --------------------------------------------------------------------------
# HTTP layer
# --------------------------------------------------------------------------


class QualificationBody(BaseModel):
    answers: dict[str, str]


class JudgmentBody(BaseModel):
    task_id: str
    annotator_id: str
    criterion: Criterion
    choice: str


def create_app(service: AnnotationService):
    """FastAPI app exposing the annotation protocol over HTTP."""
    app = FastAPI(title="facetkit annotation service")
    # the annotation UI is served from its own origin during local studies
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def _http(exc: Exception) -> HTTPException:
        status = {
            NotQualifiedError: 403,
            AlreadyQualifiedError: 409,
            DuplicateJudgmentError: 409,
            UnknownTaskError: 404,
            UnknownGoldSetError: 503,
            ValueError: 400,
        }.get(type(exc), 400)
        return HTTPException(status_code=status, detail=str(exc))

    @app.post("/annotators/{annotator_id}/qualification")
    def qualification(annotator_id: str, body: QualificationBody):
        try:
            annotator = service.run_qualification(annotator_id, body.answers)
        except Exception as exc:  # mapped to protocol status codes
            raise _http(exc) from exc
        return {
            "annotator_id": annotator.annotator_id,
            "status": annotator.status.value,
            "score": annotator.score,
        }

    @app.get("/qualification/tasks")
    def qualification_tasks():
        return {"tasks": service.gold_payloads()}

    @app.get("/tasks/next")
    def tasks_next(annotator: str, criterion: Criterion):
        try:
            task = service.next_task(annotator, criterion)
        except Exception as exc:
            raise _http(exc) from exc
        if task is None:
            return Response(status_code=204)
        return task.payload()

    @app.post("/judgments")
    def judgments(body: JudgmentBody):
        try:
            judgment = service.submit_judgment(
                body.task_id, body.annotator_id, body.criterion, body.choice
            )
        except Exception as exc:
            raise _http(exc) from exc
        return {
            "status": "accepted",
            "task_id": judgment.task_id,
            "annotator_id": judgment.annotator_id,
            "criterion": judgment.criterion.value,
        }

    @app.get("/export")
    def export(criterion: Criterion):
        return service.export(criterion)

    @app.get("/progress")
    def progress():
        return service.progress()

    return app
