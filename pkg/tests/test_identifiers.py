from __future__ import annotations

import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgdecode.identifiers import (
    IdentifierError,
    LabelEntry,
    build_identifier_table,
    default_label_entry,
    load_labels_file,
    make_identifier,
    write_labels_file,
)
from kgdecode.vocab import (
    TokenizationError,
    default_vocabulary,
    detokenize,
    tokenize_identifier,
    tokenize_text,
)

VOCAB = default_vocabulary()


def test_vocab_reserved_tokens_single():
    for tok in ["SELECT", "ASK", "DISTINCT", "COUNT", "WHERE", "{", "}", ".", "[", "]", "(", ")"]:
        assert VOCAB.tokens[VOCAB.id_of(tok)] == tok
    for i in range(10):
        assert VOCAB.id_of(f"?var{i}") == VOCAB.variable_ids[i]


def test_vocab_dense_roundtrip():
    for i, tok in enumerate(VOCAB.tokens):
        assert VOCAB.id_of(tok) == i
    assert len(set(VOCAB.tokens)) == len(VOCAB)


def test_tarantino_identifiers_match_published_forms():
    # Freebase-style and Wikidata-style subjects from the reference table.
    ident_fb = make_identifier(
        "m.0693l", "Quentin Tarantino", ["film director"], "fb:m.0693l", set(), VOCAB
    )
    assert ident_fb.surface == "[ quentin tarantino (film director) ]"
    ident_wd = make_identifier("Q3772", "Quentin Tarantino", ["human"], "wd:Q3772", set(), VOCAB)
    assert ident_wd.surface == "[ quentin tarantino (human) ]"


def test_collision_appends_iri():
    ident = make_identifier("E1", "Foo", [], "ex:E1", {"[ foo ]"}, VOCAB)
    assert ident.surface == "[ foo | ex:E1 ]"


def test_double_collision_is_error():
    taken = {"[ foo ]", "[ foo | ex:E1 ]"}
    with pytest.raises(IdentifierError):
        make_identifier("E1", "Foo", [], "ex:E1", taken, VOCAB)


def test_more_than_two_types_uses_lexicographically_smallest():
    ident = make_identifier("k", "X", ["zebra", "apple", "mango"], "ex:k", set(), VOCAB)
    assert ident.surface == "[ x (apple, mango) ]"


def test_empty_label_rejected():
    with pytest.raises(IdentifierError):
        make_identifier("k", "   ", [], "ex:k", set(), VOCAB)


def test_minimal_identifier_tokens():
    seq = tokenize_identifier("[ a ]", VOCAB)
    assert [VOCAB.token(t) for t in seq] == ["[", "a", "]"]


def test_tokenize_round_trip_examples():
    for surface in [
        "[ michael bay (film director) ]",
        "[ foo | ex:E1 ]",
        "[ a b c (t1, t2) ]",
    ]:
        seq = tokenize_identifier(surface, VOCAB)
        assert detokenize(seq, VOCAB) == surface
        assert seq[0] == VOCAB.lbracket_id and seq[-1] == VOCAB.rbracket_id


def test_reserved_terms_never_split_in_query_text():
    seq = tokenize_text("SELECT DISTINCT ?var0 WHERE { [ a ] [ b ] ?var0 . }", VOCAB)
    names = [VOCAB.token(t) for t in seq]
    assert names.count("SELECT") == 1
    assert names.count("DISTINCT") == 1
    assert names.count("WHERE") == 1
    assert "?var0" in names


def test_unrepresentable_character_named():
    with pytest.raises(TokenizationError, match="é"):
        tokenize_identifier("[ café ]", VOCAB)


def test_identifier_table_unique_and_deterministic():
    labels = {
        "E1": LabelEntry("E1", "Foo", (), "ex:E1"),
        "E2": LabelEntry("E2", "foo", (), "ex:E2"),  # same normalized label
        "E3": LabelEntry("E3", "Bar", ("t",), "ex:E3"),
    }
    t1 = build_identifier_table(labels, labels, VOCAB)
    t2 = build_identifier_table(["E3", "E2", "E1"], labels, VOCAB)
    assert {k: v.surface for k, v in t1.by_key.items()} == {
        k: v.surface for k, v in t2.by_key.items()
    }
    surfaces = [t1.by_key[k].surface for k in sorted(t1.by_key)]
    assert len(set(surfaces)) == len(surfaces)
    assert t1.by_key["E2"].surface == "[ foo | ex:E2 ]"  # E1 sorts first, keeps the bare form


def test_missing_label_defaults_to_key():
    entry = default_label_entry("Michael_Bay")
    assert entry.label == "Michael Bay"
    ident = make_identifier(entry.key, entry.label, entry.types, entry.iri, set(), VOCAB)
    assert ident.surface == "[ michael bay ]"


@settings(max_examples=200)
@given(
    label=st.text(alphabet=string.ascii_letters + " '-", min_size=1, max_size=20),
    types=st.lists(st.text(alphabet=string.ascii_lowercase, min_size=1, max_size=8), max_size=4),
)
def test_identifier_roundtrip_property(label, types):
    if not label.strip():
        return
    ident = make_identifier("k", label, types, "ex:k", set(), VOCAB)
    assert detokenize(ident.token_seq, VOCAB) == ident.surface


def test_bulk_uniqueness_with_forced_collisions():
    # 10^4 subjects drawn from only 50 base labels: collisions guaranteed.
    n = 10_000
    labels = {
        f"K{i:05d}": LabelEntry(f"K{i:05d}", f"name {i % 50}", ("thing",), f"ex:K{i:05d}")
        for i in range(n)
    }
    table = build_identifier_table(labels, labels, VOCAB)
    surfaces = {ident.surface for ident in table.by_key.values()}
    assert len(surfaces) == n
    for key in ("K00000", "K05000", "K09999"):
        ident = table.by_key[key]
        assert detokenize(ident.token_seq, VOCAB) == ident.surface
        assert table.by_surface[ident.surface] == key


def test_labels_file_roundtrip(tmp_path):
    path = str(tmp_path / "labels.tsv")
    entries = [
        LabelEntry("E1", "Foo Bar", ("t1", "t2"), "ex:E1"),
        LabelEntry("r1", "rel", (), "ex:r1"),
    ]
    write_labels_file(path, entries)
    loaded = load_labels_file(path)
    assert loaded == {e.key: e for e in entries}


def test_labels_file_malformed(tmp_path):
    path = str(tmp_path / "labels.tsv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("only-two\tfields\n")
    with pytest.raises(IdentifierError, match=":1"):
        load_labels_file(path)
