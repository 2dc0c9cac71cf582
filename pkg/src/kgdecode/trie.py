"""Prefix trie over identifier token sequences.

Every node remembers which subject keys pass through it, so candidate
tokens under a connectivity restriction come from one child scan with a
set-intersection test per child. Memory stays linear in the total token
count: each identifier contributes one key reference per node on its path.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .identifiers import Identifier


class TrieError(ValueError):
    """Raised on duplicate insertions."""


class TrieNode:
    __slots__ = ("children", "terminal_key", "keys", "sorted_items")

    def __init__(self):
        self.children: dict[int, TrieNode] = {}
        self.terminal_key: str | None = None
        self.keys: frozenset[str] = frozenset()
        self.sorted_items: tuple[tuple[int, TrieNode], ...] = ()


class TokenTrie:
    def __init__(self):
        self.root = TrieNode()
        self.size = 0

    def node_at(self, prefix: Sequence[int]) -> TrieNode | None:
        node = self.root
        for tok in prefix:
            node = node.children.get(tok)
            if node is None:
                return None
        return node

    def child(self, node: TrieNode, token: int) -> TrieNode | None:
        return node.children.get(token)

    def __len__(self) -> int:
        return self.size


def build_trie(identifiers: Iterable[Identifier]) -> TokenTrie:
    """Insert every identifier; duplicate token sequences are an error."""
    trie = TokenTrie()
    key_sets: dict[int, set[str]] = {}
    for ident in identifiers:
        node = trie.root
        key_sets.setdefault(id(node), set()).add(ident.subject_key)
        for tok in ident.token_seq:
            nxt = node.children.get(tok)
            if nxt is None:
                nxt = TrieNode()
                node.children[tok] = nxt
            node = nxt
            key_sets.setdefault(id(node), set()).add(ident.subject_key)
        if node.terminal_key is not None:
            raise TrieError(f"duplicate identifier token sequence for {ident.subject_key!r}")
        node.terminal_key = ident.subject_key
        trie.size += 1
    _freeze(trie.root, key_sets)
    return trie


def _freeze(node: TrieNode, key_sets: dict[int, set[str]]) -> None:
    node.keys = frozenset(key_sets.get(id(node), ()))
    node.sorted_items = tuple(sorted(node.children.items()))
    for _, child in node.sorted_items:
        _freeze(child, key_sets)


def allowed_continuations(trie: TokenTrie, prefix: Sequence[int]) -> set[int]:
    """Tokens ``w`` such that ``prefix + [w]`` prefixes some inserted sequence."""
    node = trie.node_at(prefix)
    if node is None:
        return set()
    return set(node.children)


def complete_key(trie: TokenTrie, seq: Sequence[int]) -> str | None:
    """The subject key when ``seq`` is exactly one full identifier, else None."""
    node = trie.node_at(seq)
    return None if node is None else node.terminal_key


def restricted_continuations(
    node: TrieNode, subjects: frozenset[str] | None
) -> list[int]:
    """Child tokens reaching at least one identifier of ``subjects``.

    ``None`` means no restriction. Returned sorted by token index so mask
    enumeration is deterministic.
    """
    if subjects is None:
        return [tok for tok, _ in node.sorted_items]
    out = []
    for tok, child in node.sorted_items:
        ck = child.keys
        if len(subjects) < len(ck):
            if not subjects.isdisjoint(ck):
                out.append(tok)
        elif not ck.isdisjoint(subjects):
            out.append(tok)
    return out


def iter_sequences(trie: TokenTrie) -> list[tuple[tuple[int, ...], str]]:
    """All (token sequence, key) pairs, in token order."""
    out: list[tuple[tuple[int, ...], str]] = []

    def walk(node: TrieNode, acc: list[int]) -> None:
        if node.terminal_key is not None:
            out.append((tuple(acc), node.terminal_key))
        for tok, child in node.sorted_items:
            acc.append(tok)
            walk(child, acc)
            acc.pop()

    walk(trie.root, [])
    return out
