"""Request/response models for the decoding service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    entities: int
    relations: int
    triples: int
    vocab_size: int


class VocabularyResponse(BaseModel):
    tokens: list[str]


class DecodeRequest(BaseModel):
    questions: list[str]
    mode: str = "full"
    beam_size: int = Field(default=10, ge=1)
    max_len: int = Field(default=128, ge=1)
    scorer: str = "uniform"
    seed: int = 0
    gold: dict[str, str] | None = None  # question -> gold query, for oracle scorers


class RankedQuery(BaseModel):
    query: str
    logp: float


class AnswerModel(BaseModel):
    kind: str
    value: list[str]
    rank: int


class QuestionResult(BaseModel):
    question: str
    ranked: list[RankedQuery]
    answer: AnswerModel | None
    steps: int
    dead_hypotheses: int
    error: str | None = None


class DecodeResponse(BaseModel):
    results: list[QuestionResult]


class SwapRequest(BaseModel):
    index_path: str


class SwapResponse(BaseModel):
    entities: int
    relations: int
    triples: int


class SessionCreateResponse(BaseModel):
    session_id: str


class AdvanceRequest(BaseModel):
    tokens: list[int]


class AdvanceResponse(BaseModel):
    position: int


class ForkRequest(BaseModel):
    new_id: str


class MaskResponse(BaseModel):
    mode: str
    vocab_size: int
    bit_order: str = "lsb0"  # token index 0 = least significant bit of byte 0
    mask_b64: str
    allowed_count: int


class ReplayMaskRequest(BaseModel):
    tokens: list[int]
    mode: str = "full"


class ErrorDetail(BaseModel):
    code: str
    message: str
