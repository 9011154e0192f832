"""Session-oriented HTTP API for interactive counterfactual elicitation.

A session wraps one pool state: the factual dataset, a target unit, a fitted
model, and an acquisition criterion.  A human oracle asks for the next query,
answers it, and watches the estimated Type S error rate move.  Sessions live
in memory; an optional append-only journal per session allows deterministic
replay after a crash.

Within a session, mutations are serialized: a concurrent conflicting request
receives 409.  Reads never block; they see the last published snapshot.
"""

from __future__ import annotations

import json
import math
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from .active_learning import Candidate, Criterion, KnnConfig, PoolState, apply_answer, initial_state, select_query
from .basis import BasisConfig
from .blr import BLRConfig
from .data import Dataset, Source
from .gp import FitError, HyperPrior
from .outcome import BLROutcomeModel, GPOutcomeModel, LogisticOutcomeModel
from .reliability import DecisionOrientation, mmd


class DatasetPayload(BaseModel):
    units: list[list[float]]
    actions: list[int]
    outcomes: list[float]


class SessionConfigPayload(BaseModel):
    model: str = "logistic"  # logistic | gp | blr
    orientation: str = "higher"  # higher | lower
    criterion: str = "dm_aware"
    query_kind: str = "counterfactual"  # counterfactual | comparative
    target: list[float]
    seed: int = 0
    knn_k: int | None = None
    mmd_lengthscale: float = 0.8
    # model family knobs
    basis_centers: list[float] | None = None
    basis_lengthscale: float = 1.0
    prior_variance: float = 6.25
    noise_scale: float = 0.1
    prior_shape: float = 1.5
    prior_rate: float = 3.0
    gp_restarts: int = 5
    noise_variance_elicited: float | None = None
    blr_alpha: float = 1.0
    blr_noise_variance: float = 0.25
    journal_dir: str | None = None


class CreateSessionPayload(BaseModel):
    dataset: DatasetPayload
    config: SessionConfigPayload


class AnswerPayload(BaseModel):
    answer: float = Field(description="real for point queries, 0/1 for comparisons")


STATUS_READY = "ready"
STATUS_AWAITING = "awaiting_answer"
STATUS_CLOSED = "closed"


def _validate_dataset(payload: DatasetPayload, binary: bool) -> Dataset:
    units = payload.units
    if not units:
        raise HTTPException(400, "dataset has no rows")
    dim = len(units[0])
    for i, row in enumerate(units, start=1):
        if len(row) != dim:
            raise HTTPException(400, f"row {i}: expected {dim} covariates, got {len(row)}")
        if any(not math.isfinite(v) for v in row):
            raise HTTPException(400, f"row {i}: covariates must be finite")
    if not (len(payload.actions) == len(payload.outcomes) == len(units)):
        raise HTTPException(400, "units, actions and outcomes must have equal length")
    for i, a in enumerate(payload.actions, start=1):
        if a not in (0, 1):
            raise HTTPException(400, f"row {i}: action must be 0 or 1, got {a}")
    for i, y in enumerate(payload.outcomes, start=1):
        if not math.isfinite(y):
            raise HTTPException(400, f"row {i}: outcome must be finite")
        if binary and y not in (0.0, 1.0):
            raise HTTPException(400, f"row {i}: binary sessions need outcomes in {{0, 1}}")
    return Dataset(
        np.asarray(units, float),
        payload.actions,
        payload.outcomes,
        np.full(len(units), Source.FACTUAL),
    )


def _build_model(data: Dataset, cfg: SessionConfigPayload):
    if cfg.model == "logistic":
        centers = cfg.basis_centers if cfg.basis_centers is not None else [-3.0, 0.0, 3.0]
        basis = BasisConfig(np.asarray(centers, float)[:, None], cfg.basis_lengthscale, includes_interaction=True)
        if data.dim != 1:
            raise HTTPException(400, "logistic sessions support 1-D covariates")
        return LogisticOutcomeModel.fit(
            data, basis, prior_variance=cfg.prior_variance, noise_scale=cfg.noise_scale, seed=cfg.seed
        )
    if cfg.model == "gp":
        return GPOutcomeModel.fit(
            data,
            HyperPrior(cfg.prior_shape, cfg.prior_rate),
            seed=cfg.seed,
            n_restarts=cfg.gp_restarts,
            fixed_noise_elicited=cfg.noise_variance_elicited,
        )
    if cfg.model == "blr":
        centers = cfg.basis_centers if cfg.basis_centers is not None else [-3.0, 0.0, 3.0]
        basis = BasisConfig(np.asarray(centers, float)[:, None], cfg.basis_lengthscale, includes_interaction=True)
        return BLROutcomeModel.fit(data, basis, BLRConfig(cfg.blr_alpha, cfg.blr_noise_variance))
    raise HTTPException(400, f"unknown model family {cfg.model!r}")


def _imbalance(state: PoolState, lengthscale: float) -> float:
    data = state.factual
    if len(state.elicited):
        data = data.concat(state.elicited)
    treated = data.units[data.actions == 1]
    control = data.units[data.actions == 0]
    if treated.shape[0] == 0 or control.shape[0] == 0:
        return float("nan")
    return mmd(treated, control, lengthscale).mmd


@dataclass
class Session:
    id: str
    state: PoolState
    config: SessionConfigPayload
    status: str = STATUS_READY
    pending: Candidate | None = None
    pending_card: dict | None = None
    history: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    snapshot: dict = field(default_factory=dict)
    journal_path: Path | None = None

    def metrics(self) -> dict:
        est = self.state.model.type_s_at(self.state.target, self.state.orientation)
        return {
            "gamma_hat": est.gamma_hat,
            "recommended_action": est.recommended_action,
            "mmd": _imbalance(self.state, self.config.mmd_lengthscale),
        }

    def publish(self) -> None:
        m = self.trajectory[-1]
        self.snapshot = {
            "id": self.id,
            "status": self.status,
            "target": list(self.state.target),
            "orientation": self.state.orientation.value,
            "criterion": self.config.criterion,
            "query_kind": self.config.query_kind,
            "gamma_hat": m["gamma_hat"],
            "mmd": m["mmd"],
            "recommended_action": m["recommended_action"],
            "pool_size": len(self.state.pool),
            "answered": self.state.n_answered,
            "pending_query": self.pending_card,
            "trajectory": {
                "gamma_hat": [t["gamma_hat"] for t in self.trajectory],
                "mmd": [t["mmd"] for t in self.trajectory],
                "decision": [t["recommended_action"] for t in self.trajectory],
            },
        }

    def journal(self, event: dict) -> None:
        if self.journal_path is not None:
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._create_lock = threading.Lock()

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return session

    def create(self, payload: CreateSessionPayload, session_id: str | None = None) -> Session:
        cfg = payload.config
        if cfg.orientation not in ("higher", "lower"):
            raise HTTPException(400, "orientation must be 'higher' or 'lower'")
        if cfg.query_kind not in ("counterfactual", "comparative"):
            raise HTTPException(400, "query_kind must be 'counterfactual' or 'comparative'")
        if cfg.query_kind == "comparative" and cfg.model != "logistic":
            raise HTTPException(400, "comparative sessions require the logistic model")
        try:
            Criterion(cfg.criterion)
        except ValueError:
            raise HTTPException(400, f"unknown criterion {cfg.criterion!r}") from None
        data = _validate_dataset(payload.dataset, binary=cfg.model == "logistic")
        target = np.asarray(cfg.target, float)
        if target.size != data.dim:
            raise HTTPException(400, f"target has dimension {target.size}, dataset has {data.dim}")
        try:
            model = _build_model(data, cfg)
        except FitError as exc:
            raise HTTPException(400, f"model fit failed: {exc}") from exc
        orientation = (
            DecisionOrientation.HIGHER_IS_BETTER
            if cfg.orientation == "higher"
            else DecisionOrientation.LOWER_IS_BETTER
        )
        state = initial_state(
            data, target, model, orientation, query_kind=cfg.query_kind, base_seed=cfg.seed
        )
        session = Session(id=session_id or uuid.uuid4().hex, state=state, config=cfg)
        if cfg.journal_dir:
            journal_dir = Path(cfg.journal_dir)
            journal_dir.mkdir(parents=True, exist_ok=True)
            session.journal_path = journal_dir / f"{session.id}.jsonl"
            session.journal(
                {
                    "event": "create",
                    "id": session.id,
                    "dataset": payload.dataset.model_dump(),
                    "config": cfg.model_dump(),
                }
            )
        session.trajectory.append(session.metrics())
        session.publish()
        with self._create_lock:
            self._sessions[session.id] = session
        return session


def _query_card(session: Session, candidate: Candidate) -> dict:
    state = session.state
    x = state.unit(candidate.unit_index)
    card = {
        "unit_index": candidate.unit_index,
        "covariates": list(map(float, x)),
        "step": state.n_answered + 1,
    }
    if candidate.is_comparative:
        card["kind"] = "comparison"
        card["action"] = None
        card["context"] = {"p_comparison": state.model.comparison_probability(x)}
    else:
        card["kind"] = "point"
        card["action"] = candidate.action
        if state.model.kind == "binary":
            card["context"] = {"p_outcome": state.model.answer_probability(x, candidate.action)}
        else:
            pred = state.model.answer_predictive(x, candidate.action)
            card["context"] = {"mean": pred.mean, "variance": pred.variance}
    return card


def _mutation_lock(session: Session):
    if not session.lock.acquire(blocking=False):
        raise HTTPException(409, "session is busy with another request")
    return session.lock


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="dmaware elicitation service")
    sessions = store or SessionStore()
    app.state.sessions = sessions

    @app.post("/sessions", status_code=201)
    def create_session(payload: CreateSessionPayload):
        session = sessions.create(payload)
        return {
            "id": session.id,
            "status": session.status,
            "gamma_hat": session.snapshot["gamma_hat"],
            "mmd": session.snapshot["mmd"],
            "recommended_action": session.snapshot["recommended_action"],
            "pool_size": session.snapshot["pool_size"],
        }

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        return sessions.get(session_id).snapshot

    @app.get("/sessions/{session_id}/next-query")
    def next_query(session_id: str):
        session = sessions.get(session_id)
        lock = _mutation_lock(session)
        try:
            if session.status == STATUS_CLOSED:
                raise HTTPException(409, "session is closed")
            if session.status == STATUS_AWAITING:
                return session.pending_card  # idempotent while unanswered
            if not session.state.pool:
                raise HTTPException(409, "pool exhausted")
            knn = KnnConfig(session.config.knn_k) if session.config.knn_k else None
            chosen = select_query(
                session.state,
                Criterion(session.config.criterion),
                knn=knn,
                seed=session.config.seed + session.state.n_answered,
            )
            session.pending = chosen.selected
            session.pending_card = _query_card(session, chosen.selected)
            session.status = STATUS_AWAITING
            session.journal({"event": "query", "card": session.pending_card})
            session.publish()
            return session.pending_card
        finally:
            lock.release()

    @app.post("/sessions/{session_id}/answers")
    def submit_answer(session_id: str, payload: AnswerPayload):
        session = sessions.get(session_id)
        lock = _mutation_lock(session)
        try:
            if session.status == STATUS_CLOSED:
                raise HTTPException(409, "session is closed")
            if session.status != STATUS_AWAITING or session.pending is None:
                raise HTTPException(409, "no pending query to answer")
            answer = payload.answer
            if not math.isfinite(answer):
                raise HTTPException(422, "answer must be finite")
            query = session.pending
            if query.is_comparative or session.state.model.kind == "binary":
                if answer not in (0.0, 1.0):
                    kind = "comparison" if query.is_comparative else "binary point"
                    raise HTTPException(422, f"{kind} queries take answers in {{0, 1}}")
                answer = int(answer)
            try:
                session.state = apply_answer(session.state, query, answer)
            except FitError as exc:
                raise HTTPException(500, f"refit failed: {exc}") from exc
            card = session.pending_card
            session.pending = None
            session.pending_card = None
            session.status = STATUS_READY
            metrics = session.metrics()
            session.trajectory.append(metrics)
            session.history.append(
                {
                    "step": len(session.history) + 1,
                    "query": card,
                    "answer": answer,
                    "gamma_hat": metrics["gamma_hat"],
                    "mmd": metrics["mmd"],
                    "decision": metrics["recommended_action"],
                    "timestamp": time.time(),
                }
            )
            session.journal({"event": "answer", "answer": answer})
            session.publish()
            return {
                "status": session.status,
                "gamma_hat": metrics["gamma_hat"],
                "mmd": metrics["mmd"],
                "recommended_action": metrics["recommended_action"],
                "history_length": len(session.history),
                "pool_size": len(session.state.pool),
            }
        finally:
            lock.release()

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str):
        return sessions.get(session_id).history

    @app.delete("/sessions/{session_id}", status_code=204)
    def close_session(session_id: str):
        session = sessions.get(session_id)
        lock = _mutation_lock(session)
        try:
            session.status = STATUS_CLOSED
            session.pending = None
            session.pending_card = None
            session.journal({"event": "close"})
            session.publish()
        finally:
            lock.release()
        return Response(status_code=204)

    return app


def replay_journal(path, store: SessionStore) -> Session:
    """Rebuild a session by replaying its append-only journal.

    Queries are recomputed deterministically; the journal's recorded cards
    are checked against the recomputed ones to detect divergence.
    """
    lines = [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line]
    if not lines or lines[0].get("event") != "create":
        raise ValueError("journal must start with a create event")
    create = lines[0]
    payload = CreateSessionPayload(
        dataset=DatasetPayload(**create["dataset"]),
        config=SessionConfigPayload(**{**create["config"], "journal_dir": None}),
    )
    session = store.create(payload, session_id=create["id"])
    expected_card = None
    for event in lines[1:]:
        if event["event"] == "query":
            knn = KnnConfig(session.config.knn_k) if session.config.knn_k else None
            chosen = select_query(
                session.state,
                Criterion(session.config.criterion),
                knn=knn,
                seed=session.config.seed + session.state.n_answered,
            )
            session.pending = chosen.selected
            session.pending_card = _query_card(session, chosen.selected)
            session.status = STATUS_AWAITING
            expected_card = event["card"]
            if expected_card["unit_index"] != session.pending_card["unit_index"]:
                raise ValueError("journal replay diverged from recorded query")
        elif event["event"] == "answer":
            metrics_query = session.pending
            answer = event["answer"]
            session.state = apply_answer(session.state, metrics_query, answer)
            card = session.pending_card
            session.pending = None
            session.pending_card = None
            session.status = STATUS_READY
            metrics = session.metrics()
            session.trajectory.append(metrics)
            session.history.append(
                {
                    "step": len(session.history) + 1,
                    "query": card,
                    "answer": answer,
                    "gamma_hat": metrics["gamma_hat"],
                    "mmd": metrics["mmd"],
                    "decision": metrics["recommended_action"],
                    "timestamp": time.time(),
                }
            )
        elif event["event"] == "close":
            session.status = STATUS_CLOSED
    session.publish()
    return session
