"""Step-wise constraint sessions for external generation stacks.

A session pins one index bundle and tracks any number of named decoding
sequences. Callers advance a sequence one token at a time and read back
the allowed-token mask as a packed bitset (token index 0 is the least
significant bit of byte 0), which is how an external language model uses
the engine as a per-step logits filter. Masks for a sequence depend only
on that sequence's own history; forking copies the state cheaply, which
is how beam search on the caller's side maps onto sessions.
"""

from __future__ import annotations

import threading

from .engine import IndexBundle
from .grammar import DecoderState, GrammarError, advance, initial_state
from .mask import MaskMode, TokenMask, allowed_tokens


class SessionError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class Session:
    """Per-sequence decoder states over one pinned bundle.

    Distinct sequence ids may be driven concurrently; calls for a single
    id must be serialized by the caller.
    """

    def __init__(self, bundle: IndexBundle):
        self.bundle = bundle
        self._states: dict[str, DecoderState] = {}
        self._lock = threading.Lock()

    def _get(self, seq_id: str, create: bool = False) -> DecoderState:
        with self._lock:
            state = self._states.get(seq_id)
            if state is None:
                if not create:
                    raise SessionError("unknown_sequence", f"unknown sequence id {seq_id!r}")
                state = initial_state(self.bundle.grammar_ctx)
                self._states[seq_id] = state
            return state

    def advance_sequence(self, seq_id: str, token: int) -> None:
        """Apply one token. The token must have been allowed by the mask."""
        state = self._get(seq_id, create=True)
        try:
            new_state = advance(state, token)
        except GrammarError as exc:
            raise SessionError("illegal_token", str(exc)) from exc
        with self._lock:
            self._states[seq_id] = new_state

    def allowed_mask(self, seq_id: str, mode: MaskMode = MaskMode.FULL) -> TokenMask:
        """The mask at the sequence's current position; fresh ids start at
        the initial grammar state."""
        state = self._get(seq_id, create=True)
        return allowed_tokens(
            state,
            mode,
            self.bundle.graph,
            self.bundle.tries,
            self.bundle.vocab,
            strict_tails=self.bundle.strict_tails,
        )

    def fork(self, seq_id: str, new_id: str) -> None:
        """Copy a sequence's state under a new id (states are immutable)."""
        state = self._get(seq_id)
        with self._lock:
            if new_id in self._states:
                raise SessionError("sequence_exists", f"sequence id {new_id!r} already exists")
            self._states[new_id] = state

    def release(self, seq_id: str) -> None:
        with self._lock:
            if seq_id not in self._states:
                raise SessionError("unknown_sequence", f"unknown sequence id {seq_id!r}")
            del self._states[seq_id]

    def position(self, seq_id: str) -> int:
        return len(self._get(seq_id, create=True).emitted)

    def vocabulary_listing(self) -> list[str]:
        return list(self.bundle.vocab.tokens)


def open_session(index_path: str) -> Session:
    """Load an index file and open a session over it."""
    from .index_io import load_bundle

    return Session(load_bundle(index_path))
