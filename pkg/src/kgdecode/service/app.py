"""FastAPI service wrapping one engine.

The service holds the loaded index so clients pay the build cost once.
Besides whole-question decoding it exposes the step-wise session API:
external generation stacks advance token by token and read packed
allowed-token bitsets, which is the integration surface for non-Python
clients. A knowledge-base swap is atomic; sessions opened before a swap
keep their original bundle.
"""

from __future__ import annotations

import base64
import os
import uuid

from fastapi import FastAPI, HTTPException

from ..beam import DecodeError, decode
from ..engine import Engine
from ..evaluation import make_scorer, DatasetItem
from ..executor import answer
from ..grammar import GrammarError, advance, initial_state
from ..index_io import load_bundle
from ..mask import MaskError, MaskMode, allowed_tokens
from ..session import Session, SessionError
from . import schemas as s


def _http_error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def _parse_mode(text: str) -> MaskMode:
    try:
        return MaskMode.parse(text)
    except MaskError as exc:
        raise _http_error(422, "bad_mode", str(exc))


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="kgdecode", version="0.1.0")
    sessions: dict[str, Session] = {}

    @app.get("/health", response_model=s.HealthResponse)
    def health():
        b = engine.bundle
        return s.HealthResponse(
            status="ok",
            entities=len(b.graph.entities),
            relations=len(b.graph.relations),
            triples=len(b.graph.triples),
            vocab_size=len(b.vocab),
        )

    @app.get("/vocabulary", response_model=s.VocabularyResponse)
    def vocabulary():
        return s.VocabularyResponse(tokens=list(engine.bundle.vocab.tokens))

    @app.post("/decode", response_model=s.DecodeResponse)
    def decode_endpoint(req: s.DecodeRequest):
        bundle = engine.bundle
        mode = _parse_mode(req.mode)
        items = [
            DatasetItem(q, (req.gold or {}).get(q, ""), frozenset()) for q in req.questions
        ]
        gold_items = [it for it in items if it.gold_query]
        try:
            scorer = make_scorer(req.scorer, gold_items, req.seed, bundle.vocab)
        except Exception as exc:
            raise _http_error(422, "bad_scorer", str(exc))

        results = []
        for q in req.questions:
            try:
                res = decode(q, scorer, bundle, mode, req.beam_size, req.max_len)
            except DecodeError as exc:
                results.append(
                    s.QuestionResult(
                        question=q, ranked=[], answer=None, steps=0,
                        dead_hypotheses=0, error=str(exc),
                    )
                )
                continue
            picked = answer(res, bundle)
            answer_model = None
            if picked is not None:
                result_set, rank = picked
                answer_model = s.AnswerModel(
                    kind=result_set.kind,
                    value=sorted(result_set.answer_set()),
                    rank=rank,
                )
            results.append(
                s.QuestionResult(
                    question=q,
                    ranked=[s.RankedQuery(query=t, logp=lp) for t, lp in res.ranked],
                    answer=answer_model,
                    steps=res.diagnostics.steps,
                    dead_hypotheses=res.diagnostics.dead_hypotheses,
                )
            )
        return s.DecodeResponse(results=results)

    @app.post("/swap", response_model=s.SwapResponse)
    def swap(req: s.SwapRequest):
        try:
            bundle = load_bundle(req.index_path, vocab=engine.bundle.vocab)
            engine.swap(bundle)
        except Exception as exc:
            raise _http_error(422, "swap_failed", str(exc))
        return s.SwapResponse(
            entities=len(bundle.graph.entities),
            relations=len(bundle.graph.relations),
            triples=len(bundle.graph.triples),
        )

    @app.post("/sessions", response_model=s.SessionCreateResponse)
    def open_session():
        sid = uuid.uuid4().hex
        sessions[sid] = Session(engine.bundle)
        return s.SessionCreateResponse(session_id=sid)

    def _session(sid: str) -> Session:
        sess = sessions.get(sid)
        if sess is None:
            raise _http_error(404, "unknown_session", f"unknown session {sid!r}")
        return sess

    @app.delete("/sessions/{sid}")
    def close_session(sid: str):
        _session(sid)
        del sessions[sid]
        return {"closed": sid}

    @app.post("/sessions/{sid}/sequences/{seq_id}/advance", response_model=s.AdvanceResponse)
    def advance_seq(sid: str, seq_id: str, req: s.AdvanceRequest):
        sess = _session(sid)
        try:
            for token in req.tokens:
                sess.advance_sequence(seq_id, token)
        except SessionError as exc:
            raise _http_error(409, exc.code, exc.message)
        return s.AdvanceResponse(position=sess.position(seq_id))

    @app.post("/sessions/{sid}/sequences/{seq_id}/fork")
    def fork_seq(sid: str, seq_id: str, req: s.ForkRequest):
        sess = _session(sid)
        try:
            sess.fork(seq_id, req.new_id)
        except SessionError as exc:
            status = 404 if exc.code == "unknown_sequence" else 409
            raise _http_error(status, exc.code, exc.message)
        return {"forked": req.new_id}

    @app.get("/sessions/{sid}/sequences/{seq_id}/mask", response_model=s.MaskResponse)
    def sequence_mask(sid: str, seq_id: str, mode: str = "full"):
        sess = _session(sid)
        mask = sess.allowed_mask(seq_id, _parse_mode(mode))
        return s.MaskResponse(
            mode=mode,
            vocab_size=mask.size,
            mask_b64=base64.b64encode(mask.packed()).decode("ascii"),
            allowed_count=len(mask),
        )

    @app.post("/mask/replay", response_model=s.MaskResponse)
    def replay_mask(req: s.ReplayMaskRequest):
        """One-shot mask for a token prefix, recomputed from scratch.

        Independent of session state; the parity reference for clients
        that maintain sequences incrementally.
        """
        bundle = engine.bundle
        mode = _parse_mode(req.mode)
        state = initial_state(bundle.grammar_ctx)
        try:
            for token in req.tokens:
                state = advance(state, token)
        except GrammarError as exc:
            raise _http_error(409, "illegal_token", str(exc))
        mask = allowed_tokens(
            state, mode, bundle.graph, bundle.tries, bundle.vocab,
            strict_tails=bundle.strict_tails,
        )
        return s.MaskResponse(
            mode=req.mode,
            vocab_size=mask.size,
            mask_b64=base64.b64encode(mask.packed()).decode("ascii"),
            allowed_count=len(mask),
        )

    return app


def app_from_env() -> FastAPI:
    """Uvicorn entry point: index path from KGDECODE_INDEX."""
    index_path = os.environ.get("KGDECODE_INDEX")
    if not index_path:
        raise RuntimeError("set KGDECODE_INDEX to an index file built by 'kgdecode build-index'")
    return create_app(Engine(load_bundle(index_path)))
