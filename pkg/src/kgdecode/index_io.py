"""Binary index files: graph, identifier tables and prebuilt tries.

Layout (little-endian):

    magic 'KGDX' | u8 version | u8 token_width | u16 flags
    string table: u32 count, then u32 length + utf-8 bytes each
    vocabulary:   u32 count, then u32 string refs (integrity check on load)
    config:       u8 max_patterns | u8 variable_budget | u8 strict_tails
    triples:      u32 count, then 3 x u32 string refs
    two tables:   u32 count, then (key ref, surface ref) pairs
    two tries:    preorder nodes, child tokens encoded at token_width

The token width is declared in the header so readers never guess it.
"""

from __future__ import annotations

import io
import struct

from .engine import IndexBundle
from .grammar import GrammarContext
from .identifiers import Identifier, IdentifierTable
from .kg import Triple, build_graph
from .trie import TokenTrie, TrieNode
from .vocab import Vocabulary, default_vocabulary, tokenize_identifier

MAGIC = b"KGDX"
VERSION = 1


class IndexFormatError(ValueError):
    pass


def _token_width(vocab_size: int) -> int:
    if vocab_size <= 0xFF:
        return 1
    if vocab_size <= 0xFFFF:
        return 2
    return 4


class _Writer:
    def __init__(self, token_width: int):
        self.buf = io.BytesIO()
        self.token_fmt = {1: "<B", 2: "<H", 4: "<I"}[token_width]

    def u8(self, v: int) -> None:
        self.buf.write(struct.pack("<B", v))

    def u16(self, v: int) -> None:
        self.buf.write(struct.pack("<H", v))

    def u32(self, v: int) -> None:
        self.buf.write(struct.pack("<I", v))

    def token(self, v: int) -> None:
        self.buf.write(struct.pack(self.token_fmt, v))

    def raw(self, data: bytes) -> None:
        self.buf.write(data)


class _Reader:
    def __init__(self, data: bytes, token_width: int = 1):
        self.data = data
        self.pos = 0
        self.token_fmt = {1: "<B", 2: "<H", 4: "<I"}[token_width]
        self.token_size = token_width

    def _unpack(self, fmt: str, size: int) -> int:
        if self.pos + size > len(self.data):
            raise IndexFormatError("truncated index file")
        (v,) = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return v

    def u8(self) -> int:
        return self._unpack("<B", 1)

    def u16(self) -> int:
        return self._unpack("<H", 2)

    def u32(self) -> int:
        return self._unpack("<I", 4)

    def token(self) -> int:
        return self._unpack(self.token_fmt, self.token_size)

    def raw(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IndexFormatError("truncated index file")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out


def _write_trie(w: _Writer, trie: TokenTrie, strings: dict[str, int]) -> None:
    def write_node(node: TrieNode) -> None:
        if node.terminal_key is not None:
            w.u8(1)
            w.u32(strings[node.terminal_key])
        else:
            w.u8(0)
        w.u32(len(node.sorted_items))
        for tok, child in node.sorted_items:
            w.token(tok)
            write_node(child)

    write_node(trie.root)


def _read_trie(r: _Reader, strings: list[str]) -> TokenTrie:
    trie = TokenTrie()
    key_sets: dict[int, set[str]] = {}

    def read_node() -> TrieNode:
        node = TrieNode()
        if r.u8():
            node.terminal_key = strings[r.u32()]
            trie.size += 1
        n_children = r.u32()
        children = []
        for _ in range(n_children):
            tok = r.token()
            children.append((tok, read_node()))
        node.children = dict(children)
        return node

    trie.root = read_node()

    def collect(node: TrieNode) -> frozenset[str]:
        keys: set[str] = set()
        if node.terminal_key is not None:
            keys.add(node.terminal_key)
        items = tuple(sorted(node.children.items()))
        node.sorted_items = items
        for _, child in items:
            keys |= collect(child)
        node.keys = frozenset(keys)
        return node.keys

    collect(trie.root)
    return trie


def save_bundle(bundle: IndexBundle, path: str) -> None:
    vocab = bundle.vocab
    width = _token_width(len(vocab))

    strings: dict[str, int] = {}

    def intern(s: str) -> int:
        if s not in strings:
            strings[s] = len(strings)
        return strings[s]

    for tok in vocab.tokens:
        intern(tok)
    triples = sorted(bundle.graph.triples)
    for h, rel, t in triples:
        intern(h), intern(rel), intern(t)
    for table in (bundle.entity_table, bundle.relation_table):
        for ident in table.identifiers():
            intern(ident.subject_key)
            intern(ident.surface)

    w = _Writer(width)
    w.raw(MAGIC)
    w.u8(VERSION)
    w.u8(width)
    w.u16(0)

    ordered = sorted(strings, key=strings.get)
    w.u32(len(ordered))
    for s in ordered:
        data = s.encode("utf-8")
        w.u32(len(data))
        w.raw(data)

    w.u32(len(vocab.tokens))
    for tok in vocab.tokens:
        w.u32(strings[tok])

    w.u8(bundle.grammar_ctx.max_patterns)
    w.u8(bundle.grammar_ctx.variable_budget)
    w.u8(1 if bundle.strict_tails else 0)

    w.u32(len(triples))
    for h, rel, t in triples:
        w.u32(strings[h])
        w.u32(strings[rel])
        w.u32(strings[t])

    for table in (bundle.entity_table, bundle.relation_table):
        idents = table.identifiers()
        w.u32(len(idents))
        for ident in idents:
            w.u32(strings[ident.subject_key])
            w.u32(strings[ident.surface])

    _write_trie(w, bundle.entity_trie, strings)
    _write_trie(w, bundle.relation_trie, strings)

    with open(path, "wb") as fh:
        fh.write(w.buf.getvalue())


def load_bundle(path: str, vocab: Vocabulary | None = None) -> IndexBundle:
    vocab = vocab or default_vocabulary()
    with open(path, "rb") as fh:
        data = fh.read()

    head = _Reader(data)
    if head.raw(4) != MAGIC:
        raise IndexFormatError(f"{path}: not an index file (bad magic)")
    version = head.u8()
    if version != VERSION:
        raise IndexFormatError(f"{path}: unsupported index version {version}")
    width = head.u8()
    if width not in (1, 2, 4):
        raise IndexFormatError(f"{path}: bad token width {width}")
    head.u16()

    r = _Reader(data, width)
    r.pos = head.pos

    n_strings = r.u32()
    strings: list[str] = []
    for _ in range(n_strings):
        n = r.u32()
        strings.append(r.raw(n).decode("utf-8"))

    n_vocab = r.u32()
    stored = tuple(strings[r.u32()] for _ in range(n_vocab))
    if stored != vocab.tokens:
        raise IndexFormatError(f"{path}: vocabulary differs from the active one")

    max_patterns = r.u8()
    variable_budget = r.u8()
    strict_tails = bool(r.u8())

    n_triples = r.u32()
    triples = [
        Triple(strings[r.u32()], strings[r.u32()], strings[r.u32()]) for _ in range(n_triples)
    ]
    graph = build_graph(triples)

    tables: list[IdentifierTable] = []
    for _ in range(2):
        n = r.u32()
        by_key: dict[str, Identifier] = {}
        by_surface: dict[str, str] = {}
        for _ in range(n):
            key = strings[r.u32()]
            surface = strings[r.u32()]
            by_key[key] = Identifier(key, surface, tokenize_identifier(surface, vocab))
            by_surface[surface] = key
        tables.append(IdentifierTable(by_key=by_key, by_surface=by_surface))
    entity_table, relation_table = tables

    entity_trie = _read_trie(r, strings)
    relation_trie = _read_trie(r, strings)
    if r.pos != len(data):
        raise IndexFormatError(f"{path}: {len(data) - r.pos} trailing bytes")

    ctx = GrammarContext(
        vocab=vocab,
        entity_trie=entity_trie,
        relation_trie=relation_trie,
        max_patterns=max_patterns,
        variable_budget=variable_budget,
    )
    return IndexBundle(
        vocab=vocab,
        graph=graph,
        entity_table=entity_table,
        relation_table=relation_table,
        entity_trie=entity_trie,
        relation_trie=relation_trie,
        grammar_ctx=ctx,
        strict_tails=strict_tails,
    )
