"""Fine-grained sentiment dictionary: lemma sequences scored on [-1, 1].

File format: one `key<TAB>score` entry per line, `#` comments allowed.
Keys are case-insensitive lemma sequences of one to four lemmas
("brunt", "money supply").  Lookups are longest-match-first so a
compound entry shadows its prefix words.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

MAX_KEY_LEN = 4


class LexiconError(ValueError):
    """Raised for malformed or inconsistent lexicon files."""


@dataclass
class Lexicon:
    entries: dict[tuple[str, ...], float] = field(default_factory=dict)
    max_key_len: int = 0

    def add(self, key: Sequence[str], score: float) -> None:
        norm = tuple(k.lower() for k in key)
        if not norm or len(norm) > MAX_KEY_LEN:
            raise LexiconError(f"key length must be 1..{MAX_KEY_LEN}: {key!r}")
        if abs(score) > 1.0:
            raise LexiconError(f"score {score} outside [-1, 1] for key {key!r}")
        if norm in self.entries:
            raise LexiconError(f"duplicate key {' '.join(norm)!r}")
        self.entries[norm] = score
        self.max_key_len = max(self.max_key_len, len(norm))

    def lookup(self, lemmas: Sequence[str], start: int = 0) -> tuple[float, int]:
        """Longest match of `lemmas[start:]` against the dictionary.

        Returns (score, matched length); (0.0, 0) when nothing matches.
        """
        limit = min(self.max_key_len, len(lemmas) - start)
        for length in range(limit, 0, -1):
            key = tuple(l.lower() for l in lemmas[start : start + length])
            if key in self.entries:
                return self.entries[key], length
        return 0.0, 0

    def score_of(self, key: Sequence[str]) -> float:
        """Score of an exact key, 0.0 when absent."""
        return self.entries.get(tuple(k.lower() for k in key), 0.0)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: Sequence[str]) -> bool:
        return tuple(k.lower() for k in key) in self.entries


def load_lexicon(source: IO | Iterable[str] | str) -> Lexicon:
    """Load a lexicon from a path, file object, or iterable of lines."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            return load_lexicon(fh)
    lex = Lexicon()
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise LexiconError(
                f"line {lineno}: expected 'key<TAB>score', got {line!r}"
            )
        key = tuple(parts[0].split())
        try:
            score = float(parts[1])
        except ValueError:
            raise LexiconError(
                f"line {lineno}: non-numeric score {parts[1]!r}"
            ) from None
        if abs(score) > 1.0:
            raise LexiconError(f"line {lineno}: score {score} outside [-1, 1]")
        try:
            lex.add(key, score)
        except LexiconError as exc:
            raise LexiconError(f"line {lineno}: {exc}") from None
    return lex


def dump_lexicon(lex: Lexicon, path: str) -> None:
    """Write entries sorted by key; load(dump(x)) == x."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(lex.entries):
            fh.write(f"{' '.join(key)}\t{lex.entries[key]!r}\n")
