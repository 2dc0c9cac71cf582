"""Token vocabulary: reserved query terms plus a character inventory.

Query structure words, braces, variables and the end-of-sequence marker are
single tokens so they are never split during generation. Everything inside a
bracketed identifier is tokenized character by character, which guarantees
total coverage without a pretrained subword vocabulary. A few glyphs
(``(``, ``)``, ``.``) serve both as structural tokens and as body
characters; they are one token either way and rendering decides by context.
"""

from __future__ import annotations

from functools import lru_cache

EOS = "</s>"

QUERY_TERMS = (
    "SELECT",
    "ASK",
    "DISTINCT",
    "COUNT",
    "WHERE",
    "{",
    "}",
    ".",
    "[",
    "]",
    "(",
    ")",
)

VARIABLE_TOKENS = tuple(f"?var{i}" for i in range(10))

# Index layout: keep closure/terminator tokens and variables below the
# identifier opener. Equal scores break ties toward smaller indices, so a
# tied beam prefers binding variables and closing the block over opening
# yet another identifier, which keeps uniform-score decoding productive.
_BEFORE_VARIABLES = ("SELECT", "ASK", "DISTINCT", "COUNT", "WHERE", "{", "}", ".")
_AFTER_VARIABLES = ("[", "]", "(", ")")

# Characters permitted inside identifier bodies (labels, types, IRIs).
# Square brackets and braces are excluded: they delimit identifiers and
# query blocks and may never occur inside one.
BODY_CHARS = (
    "abcdefghijklmnopqrstuvwxyz"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "0123456789"
    " !#%&'()*+,-./:;=?@_~|"
)


class TokenizationError(ValueError):
    """Raised when a string cannot be represented in the vocabulary."""


class Vocabulary:
    """Immutable token table with dense indices.

    Index layout is fixed: EOS, query terms, variables, then the character
    inventory in sorted order. Two vocabularies built from the same
    inventory are identical, which is what makes index files
    interchangeable across knowledge-base swaps.
    """

    def __init__(self, body_chars: str = BODY_CHARS):
        chars = sorted(set(body_chars))
        for ch in chars:
            if ch in "[]{}":
                raise ValueError(f"character {ch!r} is reserved for query structure")
        tokens: list[str] = [EOS, *_BEFORE_VARIABLES, *VARIABLE_TOKENS, *_AFTER_VARIABLES]
        seen = set(tokens)
        if len(seen) != len(tokens):
            raise ValueError("duplicate reserved tokens")
        for ch in chars:
            if ch not in seen:
                tokens.append(ch)
                seen.add(ch)
        self.tokens: tuple[str, ...] = tuple(tokens)
        self.index: dict[str, int] = {t: i for i, t in enumerate(self.tokens)}

        self.eos_id = self.index[EOS]
        self.select_id = self.index["SELECT"]
        self.ask_id = self.index["ASK"]
        self.distinct_id = self.index["DISTINCT"]
        self.count_id = self.index["COUNT"]
        self.where_id = self.index["WHERE"]
        self.lbrace_id = self.index["{"]
        self.rbrace_id = self.index["}"]
        self.dot_id = self.index["."]
        self.lbracket_id = self.index["["]
        self.rbracket_id = self.index["]"]
        self.lparen_id = self.index["("]
        self.rparen_id = self.index[")"]
        self.variable_ids: tuple[int, ...] = tuple(self.index[v] for v in VARIABLE_TOKENS)
        self._variable_set = frozenset(self.variable_ids)
        self._structural = frozenset(
            self.index[t] for t in (EOS, *QUERY_TERMS, *VARIABLE_TOKENS)
        )
        self._char_ids = frozenset(self.index[c] for c in chars)

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, token_id: int) -> str:
        return self.tokens[token_id]

    def id_of(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise TokenizationError(f"unknown token {token!r}") from None

    def is_char(self, token_id: int) -> bool:
        return token_id in self._char_ids

    def is_structural(self, token_id: int) -> bool:
        return token_id in self._structural

    def is_variable(self, token_id: int) -> bool:
        return token_id in self._variable_set

    def char_id(self, ch: str) -> int:
        tid = self.index.get(ch)
        if tid is None or tid not in self._char_ids:
            raise TokenizationError(f"character {ch!r} is not representable")
        return tid

    def describe(self, token_ids) -> list[str]:
        return [self.tokens[t] for t in token_ids]


@lru_cache(maxsize=1)
def default_vocabulary() -> Vocabulary:
    return Vocabulary()


def tokenize_identifier(surface: str, vocab: Vocabulary) -> tuple[int, ...]:
    """Tokenize one identifier surface of the form ``[ body ]``.

    The first token is ``[``, the last is ``]`` and the body in between is
    character tokens. Raises :class:`TokenizationError` naming the first
    character that has no token.
    """
    if not (surface.startswith("[ ") and surface.endswith(" ]")) or len(surface) < 5:
        raise TokenizationError(f"identifier surface must look like '[ body ]': {surface!r}")
    body = surface[2:-2]
    out = [vocab.lbracket_id]
    out.extend(vocab.char_id(ch) for ch in body)
    out.append(vocab.rbracket_id)
    return tuple(out)


def detokenize(token_ids, vocab: Vocabulary) -> str:
    """Render a token sequence back to query text.

    Structural tokens are joined by single spaces; identifier bodies are
    concatenated characters padded inside the brackets. This is the exact
    inverse of :func:`tokenize_text` on sequences the grammar accepts, and
    a total function on arbitrary sequences. EOS renders as nothing.
    """
    parts: list[str] = []
    in_ident = False
    for tid in token_ids:
        if tid == vocab.eos_id:
            continue
        s = vocab.tokens[tid]
        if in_ident:
            if tid == vocab.rbracket_id:
                parts.append(" ]")
                in_ident = False
            elif vocab.is_char(tid):
                parts.append(s)
            else:
                parts.append(" " + s)
        else:
            sep = "" if not parts else " "
            if tid == vocab.lbracket_id:
                parts.append(sep + "[ ")
                in_ident = True
            else:
                parts.append(sep + s)
    return "".join(parts)


def tokenize_text(text: str, vocab: Vocabulary) -> tuple[int, ...]:
    """Tokenize canonical query text (single-space separated pieces).

    Bracketed identifiers become ``[`` + character tokens + ``]``; every
    other piece must be a reserved structural token. Raises
    :class:`TokenizationError` naming the offending piece.
    """
    pieces = text.split()
    out: list[int] = []
    i = 0
    while i < len(pieces):
        piece = pieces[i]
        if piece == "[":
            j = i + 1
            body_pieces = []
            while j < len(pieces) and pieces[j] != "]":
                body_pieces.append(pieces[j])
                j += 1
            if j == len(pieces):
                raise TokenizationError("unterminated identifier: missing ']'")
            if not body_pieces:
                raise TokenizationError("empty identifier body")
            out.append(vocab.lbracket_id)
            out.extend(vocab.char_id(ch) for ch in " ".join(body_pieces))
            out.append(vocab.rbracket_id)
            i = j + 1
        else:
            tid = vocab.index.get(piece)
            if tid is None or not vocab.is_structural(tid):
                raise TokenizationError(f"piece {piece!r} is not a reserved token")
            out.append(tid)
            i += 1
    return tuple(out)
