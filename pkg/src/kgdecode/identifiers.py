"""Human-readable identifiers for entities and relations.

An identifier wraps a lowercased label (plus up to two type names) in
square brackets, e.g. ``[ quentin tarantino (film director) ]``. When two
subjects would collide on that surface, the IRI is appended before the
closing bracket to restore uniqueness.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .vocab import Vocabulary, tokenize_identifier

_WS = re.compile(r"\s+")


class IdentifierError(ValueError):
    """Raised on unresolvable identifier collisions or bad label input."""


@dataclass(frozen=True)
class Identifier:
    subject_key: str
    surface: str
    token_seq: tuple[int, ...]


@dataclass(frozen=True)
class LabelEntry:
    key: str
    label: str
    types: tuple[str, ...]
    iri: str


def _clean(text: str) -> str:
    return _WS.sub(" ", text.strip().lower())


def make_identifier(
    key: str,
    label: str,
    types: Iterable[str],
    iri: str,
    taken: set[str],
    vocab: Vocabulary,
) -> Identifier:
    """Construct the bracketed surface and its token sequence.

    When the subject carries more than two types, the two lexicographically
    smallest are used so that identical inputs always yield identical
    identifiers. A surface already in ``taken`` gets ``| iri`` appended; if
    even that collides the input is malformed (two subjects share an IRI).
    """
    label_c = _clean(label)
    if not label_c:
        raise IdentifierError(f"empty label for {key!r}")
    type_list = sorted({_clean(t) for t in types if _clean(t)})[:2]
    body = label_c if not type_list else f"{label_c} ({', '.join(type_list)})"
    surface = f"[ {body} ]"
    if surface in taken:
        surface = f"[ {body} | {iri} ]"
        if surface in taken:
            raise IdentifierError(f"identifier collision even with IRI suffix: {surface!r}")
    return Identifier(subject_key=key, surface=surface, token_seq=tokenize_identifier(surface, vocab))


@dataclass(frozen=True)
class IdentifierTable:
    """Identifiers for one subject namespace (entities or relations)."""

    by_key: dict[str, Identifier]
    by_surface: dict[str, str]

    def __len__(self) -> int:
        return len(self.by_key)

    def surface_of(self, key: str) -> str:
        return self.by_key[key].surface

    def key_of(self, surface: str) -> str | None:
        return self.by_surface.get(surface)

    def identifiers(self) -> list[Identifier]:
        return [self.by_key[k] for k in sorted(self.by_key)]


def default_label_entry(key: str) -> LabelEntry:
    """Fallback for subjects missing from the labels file: humanize the key."""
    return LabelEntry(key=key, label=key.replace("_", " "), types=(), iri=key)


def build_identifier_table(
    keys: Iterable[str],
    labels: Mapping[str, LabelEntry],
    vocab: Vocabulary,
) -> IdentifierTable:
    """Build identifiers for every key, deterministically.

    Keys are processed in sorted order so collision suffixing does not
    depend on input ordering.
    """
    taken: set[str] = set()
    by_key: dict[str, Identifier] = {}
    by_surface: dict[str, str] = {}
    for key in sorted(set(keys)):
        entry = labels.get(key) or default_label_entry(key)
        ident = make_identifier(key, entry.label, entry.types, entry.iri, taken, vocab)
        taken.add(ident.surface)
        by_key[key] = ident
        by_surface[ident.surface] = key
    return IdentifierTable(by_key=by_key, by_surface=by_surface)


def load_labels_file(path: str) -> dict[str, LabelEntry]:
    """Read the tab-separated labels file: key, label, ;-joined types, iri."""
    out: dict[str, LabelEntry] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4 or not fields[0].strip():
                raise IdentifierError(
                    f"{path}:{lineno}: expected 'key<TAB>label<TAB>types<TAB>iri'"
                )
            key = fields[0].strip()
            types = tuple(t.strip() for t in fields[2].split(";") if t.strip())
            out[key] = LabelEntry(key=key, label=fields[1].strip(), types=types, iri=fields[3].strip())
    return out


def write_labels_file(path: str, entries: Iterable[LabelEntry]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(f"{e.key}\t{e.label}\t{';'.join(e.types)}\t{e.iri}\n")
