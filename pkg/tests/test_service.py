from __future__ import annotations

import base64

import pytest
from fastapi.testclient import TestClient

from kgdecode.engine import Engine
from kgdecode.index_io import save_bundle
from kgdecode.mask import MaskMode
from kgdecode.service.app import create_app
from kgdecode.session import Session
from kgdecode.vocab import default_vocabulary, tokenize_text

VOCAB = default_vocabulary()


@pytest.fixture()
def client(film_fixture):
    engine = Engine(film_fixture.bundle)
    return TestClient(create_app(engine))


def test_health(client, film_fixture):
    data = client.get("/health").json()
    assert data["status"] == "ok"
    assert data["entities"] == len(film_fixture.bundle.graph.entities)
    assert data["vocab_size"] == len(VOCAB)


def test_vocabulary_listing(client):
    tokens = client.get("/vocabulary").json()["tokens"]
    assert tokens == list(VOCAB.tokens)


def test_decode_endpoint_uniform(client):
    resp = client.post(
        "/decode",
        json={"questions": ["who?"], "mode": "full", "beam_size": 3, "max_len": 64},
    )
    assert resp.status_code == 200
    result = resp.json()["results"][0]
    assert result["ranked"]
    assert result["error"] is None


def test_decode_endpoint_oracle_gold(client, film_fixture):
    item = film_fixture.items[0]
    resp = client.post(
        "/decode",
        json={
            "questions": [item.question],
            "mode": "full",
            "beam_size": 1,
            "max_len": 128,
            "scorer": "noisy-oracle:0",
            "gold": {item.question: item.gold_query},
        },
    )
    result = resp.json()["results"][0]
    assert result["ranked"][0]["query"] == item.gold_query
    assert set(result["answer"]["value"]) == set(item.gold_answers)
    assert result["answer"]["rank"] == 1


def test_decode_bad_mode_rejected(client):
    resp = client.post("/decode", json={"questions": ["q"], "mode": "sideways"})
    assert resp.status_code == 422
    assert resp.json()["detail"]["code"] == "bad_mode"


def test_session_flow_and_masks(client, film_fixture):
    sid = client.post("/sessions").json()["session_id"]
    mask_resp = client.get(f"/sessions/{sid}/sequences/s1/mask", params={"mode": "full"}).json()
    assert mask_resp["bit_order"] == "lsb0"
    raw = base64.b64decode(mask_resp["mask_b64"])
    allowed = {i for i in range(mask_resp["vocab_size"]) if raw[i >> 3] & (1 << (i & 7))}
    assert allowed == {VOCAB.select_id, VOCAB.ask_id}

    tokens = list(tokenize_text("ASK {", VOCAB))
    adv = client.post(f"/sessions/{sid}/sequences/s1/advance", json={"tokens": tokens})
    assert adv.json()["position"] == 2

    fork = client.post(f"/sessions/{sid}/sequences/s1/fork", json={"new_id": "s2"})
    assert fork.status_code == 200

    illegal = client.post(
        f"/sessions/{sid}/sequences/s1/advance", json={"tokens": [VOCAB.rbrace_id]}
    )
    assert illegal.status_code == 409
    assert illegal.json()["detail"]["code"] == "illegal_token"

    closed = client.delete(f"/sessions/{sid}")
    assert closed.status_code == 200
    gone = client.get(f"/sessions/{sid}/sequences/s1/mask")
    assert gone.status_code == 404


def test_session_mask_matches_replay_endpoint(client, film_fixture):
    """The two service paths (incremental session vs one-shot replay)
    agree bit for bit, including the unattached-relation exclusion."""
    bundle = film_fixture.bundle
    head = bundle.entity_table.by_key["Michael_Bay"].token_seq
    prefix = list(tokenize_text("SELECT DISTINCT ?var0 WHERE {", VOCAB) + head) + [
        VOCAB.lbracket_id
    ]
    sid = client.post("/sessions").json()["session_id"]
    client.post(f"/sessions/{sid}/sequences/w/advance", json={"tokens": prefix})
    for mode in ("full", "no-pruning", "unconstrained"):
        sess_mask = client.get(
            f"/sessions/{sid}/sequences/w/mask", params={"mode": mode}
        ).json()
        replay_mask = client.post(
            "/mask/replay", json={"tokens": prefix, "mode": mode}
        ).json()
        assert sess_mask["mask_b64"] == replay_mask["mask_b64"]

    full = base64.b64decode(
        client.get(f"/sessions/{sid}/sequences/w/mask", params={"mode": "full"}).json()["mask_b64"]
    )
    w_char = VOCAB.char_id("w")
    assert not full[w_char >> 3] & (1 << (w_char & 7))  # 'write' path excluded
    nop = base64.b64decode(
        client.get(f"/sessions/{sid}/sequences/w/mask", params={"mode": "no-pruning"}).json()["mask_b64"]
    )
    assert nop[w_char >> 3] & (1 << (w_char & 7))


def test_replay_endpoint_rejects_illegal_prefix(client):
    resp = client.post("/mask/replay", json={"tokens": [VOCAB.rbrace_id], "mode": "full"})
    assert resp.status_code == 409


def test_swap_endpoint(client, small_fixture, tmp_path):
    path = str(tmp_path / "other.kgx")
    save_bundle(small_fixture.bundle, path)
    resp = client.post("/swap", json={"index_path": path})
    assert resp.status_code == 200
    assert resp.json()["triples"] == len(small_fixture.bundle.graph.triples)
    health = client.get("/health").json()
    assert health["entities"] == len(small_fixture.bundle.graph.entities)


def test_swap_endpoint_bad_path(client):
    resp = client.post("/swap", json={"index_path": "/does/not/exist.kgx"})
    assert resp.status_code == 422


def test_sessions_pin_their_bundle_across_swap(film_fixture, small_fixture, tmp_path):
    """A session opened before a swap keeps masking against the graph it
    was opened with; new sessions see the new graph."""
    engine = Engine(film_fixture.bundle)
    client = TestClient(create_app(engine))
    sid_old = client.post("/sessions").json()["session_id"]

    path = str(tmp_path / "swap.kgx")
    save_bundle(small_fixture.bundle, path)
    client.post("/swap", json={"index_path": path})
    sid_new = client.post("/sessions").json()["session_id"]

    prefix = list(tokenize_text("ASK {", VOCAB)) + [VOCAB.lbracket_id]
    for sid in (sid_old, sid_new):
        client.post(f"/sessions/{sid}/sequences/x/advance", json={"tokens": prefix})
    old_mask = client.get(f"/sessions/{sid_old}/sequences/x/mask").json()["mask_b64"]
    new_mask = client.get(f"/sessions/{sid_new}/sequences/x/mask").json()["mask_b64"]
    assert old_mask != new_mask

    expected_old = Session(film_fixture.bundle)
    for tok in prefix:
        expected_old.advance_sequence("x", tok)
    assert base64.b64decode(old_mask) == expected_old.allowed_mask("x", MaskMode.FULL).packed()
