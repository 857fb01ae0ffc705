"""HTTP game server: live reference games against the model agents plus
stateless inference for programmatic clients.

Sessions are isolated and mutated under a per-session lock; model artifacts
are shared read-only. A human listener's client never receives the target
index before submitting a choice. All colors travel as hex strings.
"""

from __future__ import annotations

import difflib
import hashlib
import logging
import threading
import uuid
from dataclasses import dataclass, field as dc_field
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import __version__, corpus as corpus_mod, lexicon as lexicon_mod
from .agents import build_agent
from .color import Condition, DEFAULT_CONDITION_THRESHOLD
from .corpus import CostTable, Vocabulary, cost_from_frequency, load_vocab
from .gdprag import derive_context_seed
from .lexicon import LexiconParams, params_fingerprint
from .manifest import sha256_file
from .validation import DataError, parse_color

logger = logging.getLogger(__name__)

MAX_GD_STEPS = 10_000


# ---------------------------------------------------------------------------
# Artifacts and state
# ---------------------------------------------------------------------------


@dataclass
class ServerArtifacts:
    vocab: Vocabulary
    costs: CostTable
    lexicon: LexiconParams
    sl_lexicon: LexiconParams | None = None
    threshold: float = DEFAULT_CONDITION_THRESHOLD
    seed: int = 0
    vocab_file_hash: str = ""
    lexicon_file_hash: str = ""
    sl_file_hash: str | None = None

    @classmethod
    def load(cls, vocab_path, params_path, sl_params_path=None,
             threshold: float = DEFAULT_CONDITION_THRESHOLD, seed: int = 0) -> "ServerArtifacts":
        vocab = load_vocab(vocab_path)
        params = lexicon_mod.load_params(params_path)
        sl = lexicon_mod.load_params(sl_params_path) if sl_params_path else None
        return cls(
            vocab=vocab,
            costs=cost_from_frequency(vocab),
            lexicon=params,
            sl_lexicon=sl,
            threshold=threshold,
            seed=seed,
            vocab_file_hash=sha256_file(vocab_path),
            lexicon_file_hash=sha256_file(params_path),
            sl_file_hash=sha256_file(sl_params_path) if sl_params_path else None,
        )

    def available_models(self) -> list[str]:
        models = ["base", "am", "gd"]
        if self.sl_lexicon is not None:
            models.append("sl")
        return models


@dataclass
class GameRound:
    round_id: str
    session_id: str
    colors_rgb: tuple
    colors_luv: tuple
    condition: Condition
    target_index: int
    agent_utterance_id: int | None = None
    played: bool = False


@dataclass
class Session:
    session_id: str
    role: Literal["speaker", "listener"]
    model: str
    overrides: dict
    rng: np.random.Generator
    seed: int
    rounds: dict[str, GameRound] = dc_field(default_factory=dict)
    history: list[dict] = dc_field(default_factory=list)
    correct: int = 0
    total: int = 0
    lock: threading.Lock = dc_field(default_factory=threading.Lock)


# ---------------------------------------------------------------------------
# Wire models (the published schemas, exported via /openapi.json)
# ---------------------------------------------------------------------------


class OverridesModel(BaseModel):
    alpha: float | None = Field(default=None, ge=0.0)
    steps: int | None = Field(default=None, ge=1, le=MAX_GD_STEPS)
    lr: float | None = Field(default=None, gt=0.0)
    objective: Literal["le", "rd"] | None = None


class SessionRequest(BaseModel):
    role: Literal["speaker", "listener"]
    model: str
    overrides: OverridesModel | None = None
    seed: int | None = None


class SessionResponse(BaseModel):
    session_id: str
    vocab: list[str]


class SessionStateResponse(BaseModel):
    session_id: str
    role: str
    model: str
    score: dict[str, int]
    history: list[dict]


class RoundNewRequest(BaseModel):
    session_id: str
    condition: Literal["far", "split", "close"] | None = None


class RoundNewResponse(BaseModel):
    round_id: str
    colors: list[str]
    condition: str
    target_index: int | None = None


class RoundStateResponse(BaseModel):
    round_id: str
    colors: list[str]
    condition: str
    played: bool
    agent_utterance: str | None = None
    target_index: int | None = None


class SpeakRequest(BaseModel):
    session_id: str
    round_id: str
    utterance: str


class SpeakResponse(BaseModel):
    agent_guess: int
    correct: bool
    distribution: list[float]
    target_index: int


class ListenRequest(BaseModel):
    session_id: str
    round_id: str
    choice: int = Field(ge=0, le=2)


class ListenResponse(BaseModel):
    agent_utterance: str
    correct: bool
    target_index: int
    distribution: list[float]


class InferRequest(BaseModel):
    colors: list
    target: int | None = Field(default=None, ge=0, le=2)
    utterance: str | None = None
    model: str
    overrides: OverridesModel | None = None
    seed: int | None = None


class InferResponse(BaseModel):
    mode: Literal["speaker", "listener"]
    distribution: list[float]
    support: list[str] | list[int]
    diagnostics: dict


class HealthResponse(BaseModel):
    status: str
    version: str
    build_hash: str
    artifacts: dict
    vocab_size: int | None = None


# ---------------------------------------------------------------------------
# App factory
# ---------------------------------------------------------------------------


def create_app(artifacts: ServerArtifacts | None, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="pragmachine", version=__version__)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])

    sessions: dict[str, Session] = {}
    round_owner: dict[str, str] = {}
    registry_lock = threading.Lock()

    def require_artifacts() -> ServerArtifacts:
        if artifacts is None:
            raise HTTPException(status_code=503, detail="model artifacts not loaded")
        return artifacts

    def build_hash() -> str:
        hasher = hashlib.sha256()
        hasher.update(__version__.encode())
        if artifacts is not None:
            hasher.update(params_fingerprint(artifacts.lexicon).encode())
            hasher.update(artifacts.vocab.content_hash().encode())
        return hasher.hexdigest()[:16]

    def make_agent(model: str, overrides: dict, base_seed: int):
        art = require_artifacts()
        if model not in art.available_models():
            raise HTTPException(status_code=400, detail=f"unknown model {model!r}; "
                                f"available: {', '.join(art.available_models())}")
        over = dict(overrides)
        if model == "gd":
            over.setdefault("seed", base_seed)
        else:
            for key in ("steps", "lr", "objective"):
                over.pop(key, None)
        if model == "base":
            over.pop("alpha", None)  # base agents carry no rationality knob
        agent = build_agent(model, over)
        params = art.sl_lexicon if model == "sl" else art.lexicon
        agent.fit(vocab=art.vocab, costs=art.costs, lexicon_params=params)
        return agent

    def get_session(session_id: str) -> Session:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    def get_round(session: Session, round_id: str) -> GameRound:
        rnd = session.rounds.get(round_id)
        if rnd is None:
            raise HTTPException(status_code=404, detail=f"unknown round {round_id!r}")
        return rnd

    def clean_overrides(model: OverridesModel | None) -> dict:
        if model is None:
            return {}
        return {k: v for k, v in model.model_dump().items() if v is not None}

    # -- session ------------------------------------------------------------

    @app.post("/api/session", response_model=SessionResponse)
    def create_session(req: SessionRequest) -> SessionResponse:
        art = require_artifacts()
        if req.model not in art.available_models():
            raise HTTPException(status_code=400, detail=f"unknown model {req.model!r}; "
                                f"available: {', '.join(art.available_models())}")
        session_id = uuid.uuid4().hex
        seed = req.seed if req.seed is not None else art.seed
        session = Session(
            session_id=session_id,
            role=req.role,
            model=req.model,
            overrides=clean_overrides(req.overrides),
            rng=np.random.default_rng(seed if req.seed is not None else None),
            seed=seed,
        )
        with registry_lock:
            sessions[session_id] = session
        return SessionResponse(session_id=session_id, vocab=art.vocab.texts)

    @app.get("/api/session/{session_id}", response_model=SessionStateResponse)
    def session_state(session_id: str) -> SessionStateResponse:
        session = get_session(session_id)
        with session.lock:
            return SessionStateResponse(
                session_id=session.session_id,
                role=session.role,
                model=session.model,
                score={"correct": session.correct, "total": session.total},
                history=list(session.history),
            )

    # -- rounds ---------------------------------------------------------------

    @app.post("/api/round/new", response_model=RoundNewResponse,
              response_model_exclude_none=True)
    def round_new(req: RoundNewRequest) -> RoundNewResponse:
        art = require_artifacts()
        session = get_session(req.session_id)
        with session.lock:
            if req.condition is None:
                condition = (Condition.FAR, Condition.SPLIT, Condition.CLOSE)[
                    int(session.rng.integers(0, 3))]
            else:
                condition = Condition(req.condition)
            try:
                rgbs, luvs, target_index = corpus_mod._sample_context(
                    session.rng, condition, art.threshold, 10_000)
            except DataError as exc:
                raise HTTPException(status_code=500, detail=str(exc)) from exc
            round_id = uuid.uuid4().hex
            rnd = GameRound(
                round_id=round_id,
                session_id=session.session_id,
                colors_rgb=rgbs,
                colors_luv=luvs,
                condition=condition,
                target_index=target_index,
            )
            if session.role == "listener":
                agent = make_agent(session.model, session.overrides, session.seed)
                dist = agent.speaker_proba(luvs, target_index)
                rnd.agent_utterance_id = int(np.argmax(dist))
            session.rounds[round_id] = rnd
            with registry_lock:
                round_owner[round_id] = session.session_id
            return RoundNewResponse(
                round_id=round_id,
                colors=[c.to_hex() for c in rgbs],
                condition=condition.value,
                target_index=target_index if session.role == "speaker" else None,
            )

    @app.get("/api/round/{round_id}", response_model=RoundStateResponse,
             response_model_exclude_none=True)
    def round_state(round_id: str) -> RoundStateResponse:
        art = require_artifacts()
        with registry_lock:
            owner = round_owner.get(round_id)
        if owner is None:
            raise HTTPException(status_code=404, detail=f"unknown round {round_id!r}")
        session = get_session(owner)
        with session.lock:
            rnd = get_round(session, round_id)
            reveal_target = session.role == "speaker" or rnd.played
            agent_text = None
            if rnd.agent_utterance_id is not None:
                agent_text = art.vocab.entries[rnd.agent_utterance_id].text
            return RoundStateResponse(
                round_id=rnd.round_id,
                colors=[c.to_hex() for c in rnd.colors_rgb],
                condition=rnd.condition.value,
                played=rnd.played,
                agent_utterance=agent_text,
                target_index=rnd.target_index if reveal_target else None,
            )

    @app.post("/api/round/speak", response_model=SpeakResponse)
    def round_speak(req: SpeakRequest) -> SpeakResponse:
        art = require_artifacts()
        session = get_session(req.session_id)
        with session.lock:
            if session.role != "speaker":
                raise HTTPException(status_code=400, detail="session role is not speaker")
            rnd = get_round(session, req.round_id)
            if rnd.played:
                raise HTTPException(status_code=409, detail="round already played")
            uid = art.vocab.id_of(req.utterance)
            if uid is None:
                suggestions = difflib.get_close_matches(
                    corpus_mod.normalize_utterance(req.utterance, art.vocab.variant_map),
                    art.vocab.texts, n=3, cutoff=0.4)
                raise HTTPException(status_code=400, detail={
                    "message": f"utterance {req.utterance!r} is not in the vocabulary",
                    "suggestions": suggestions,
                })
            agent = make_agent(session.model, session.overrides, session.seed)
            dist = agent.listener_proba(rnd.colors_luv, uid)
            guess = int(np.argmax(dist))
            correct = guess == rnd.target_index
            rnd.played = True
            session.total += 1
            session.correct += int(correct)
            session.history.append({
                "round_id": rnd.round_id,
                "condition": rnd.condition.value,
                "target_index": rnd.target_index,
                "utterance": art.vocab.entries[uid].text,
                "agent_guess": guess,
                "correct": correct,
            })
            return SpeakResponse(
                agent_guess=guess,
                correct=correct,
                distribution=[float(x) for x in dist],
                target_index=rnd.target_index,
            )

    @app.post("/api/round/listen", response_model=ListenResponse)
    def round_listen(req: ListenRequest) -> ListenResponse:
        art = require_artifacts()
        session = get_session(req.session_id)
        with session.lock:
            if session.role != "listener":
                raise HTTPException(status_code=400, detail="session role is not listener")
            rnd = get_round(session, req.round_id)
            if rnd.played:
                raise HTTPException(status_code=409, detail="round already played")
            if rnd.agent_utterance_id is None:
                raise HTTPException(status_code=500, detail="round has no agent utterance")
            agent = make_agent(session.model, session.overrides, session.seed)
            dist = agent.speaker_proba(rnd.colors_luv, rnd.target_index)
            correct = req.choice == rnd.target_index
            rnd.played = True
            session.total += 1
            session.correct += int(correct)
            session.history.append({
                "round_id": rnd.round_id,
                "condition": rnd.condition.value,
                "target_index": rnd.target_index,
                "agent_utterance": art.vocab.entries[rnd.agent_utterance_id].text,
                "choice": req.choice,
                "correct": correct,
            })
            return ListenResponse(
                agent_utterance=art.vocab.entries[rnd.agent_utterance_id].text,
                correct=correct,
                target_index=rnd.target_index,
                distribution=[float(x) for x in dist],
            )

    # -- stateless inference --------------------------------------------------

    @app.post("/api/infer", response_model=InferResponse)
    def infer(req: InferRequest) -> InferResponse:
        art = require_artifacts()
        if (req.target is None) == (req.utterance is None):
            raise HTTPException(
                status_code=400, detail="provide exactly one of target or utterance")
        if len(req.colors) != 3:
            raise HTTPException(status_code=400, detail="colors must contain exactly 3 entries")
        try:
            luvs = tuple(parse_color(c)[0] for c in req.colors)
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        seed = req.seed if req.seed is not None else art.seed
        agent = make_agent(req.model, clean_overrides(req.overrides), seed)
        diagnostics: dict = {"model": req.model}
        if req.model == "gd":
            res = agent.optimize(luvs)
            speaker, listener = res.speaker, res.listener
            diagnostics["trace"] = [t.to_dict() for t in res.trace]
            diagnostics["initial_objective"] = res.initial_report.to_dict()
            diagnostics["context_seed"] = derive_context_seed(agent.seed, luvs)
        else:
            speaker, listener = agent.matrices(luvs)
        if req.utterance is not None:
            uid = art.vocab.id_of(req.utterance)
            if uid is None:
                raise HTTPException(
                    status_code=400, detail=f"utterance {req.utterance!r} is not in the vocabulary")
            return InferResponse(
                mode="listener",
                distribution=[float(x) for x in listener[uid]],
                support=[0, 1, 2],
                diagnostics=diagnostics,
            )
        return InferResponse(
            mode="speaker",
            distribution=[float(x) for x in speaker[req.target]],
            support=art.vocab.texts,
            diagnostics=diagnostics,
        )

    # -- health ---------------------------------------------------------------

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        if artifacts is None:
            return HealthResponse(status="no artifacts", version=__version__,
                                  build_hash=build_hash(), artifacts={})
        return HealthResponse(
            status="ok",
            version=__version__,
            build_hash=build_hash(),
            artifacts={
                "vocab": artifacts.vocab_file_hash or artifacts.vocab.content_hash(),
                "lexicon": artifacts.lexicon_file_hash or params_fingerprint(artifacts.lexicon),
                "sl_lexicon": artifacts.sl_file_hash,
                "models": artifacts.available_models(),
            },
            vocab_size=len(artifacts.vocab),
        )

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app
