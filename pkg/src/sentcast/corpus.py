"""Document model and reader for pre-annotated, dependency-parsed news text.

The on-disk format is a tab-separated, CoNLL-style layout with document
metadata in comment lines:

    # doc_id = wsj-0001
    # date = 2016-02-11
    # outlet = testwire
    # categories = ECAT,GCAT
    # sent_id = wsj-0001:1
    1<TAB>The<TAB>the<TAB>DET<TAB>DT<TAB>3<TAB>det<TAB>_<TAB>_<TAB>_
    ...
    (blank line = sentence break)
    # end_doc

Token columns: INDEX, SURFACE, LEMMA, UPOS, XTAG, HEAD, DEP, FEATS,
NERTAG, MISC.  `_` means empty for FEATS/NERTAG/MISC.  No NLP model is
run here; every annotation is consumed as-is.
"""

from __future__ import annotations

import datetime as dt
import io
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

N_COLUMNS = 10


class CorpusFormatError(ValueError):
    """Raised when a corpus stream violates the documented layout."""


@dataclass(frozen=True)
class ParsedToken:
    """One annotated token; `index` and `head` are 1-based, head 0 = root."""

    index: int
    surface: str
    lemma: str
    upos: str
    xtag: str
    head: int
    dep: str
    feats: str = "_"
    ner: str = ""
    misc: str = "_"


@dataclass
class ParsedSentence:
    sentence_id: str
    tokens: list[ParsedToken]

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, index: int) -> ParsedToken:
        """Return the token with 1-based position `index`."""
        return self.tokens[index - 1]


@dataclass
class ParsedDocument:
    doc_id: str
    date: dt.date
    outlet: str = ""
    categories: set[str] = field(default_factory=set)
    sentences: list[ParsedSentence] = field(default_factory=list)


def dependency_children(sentence: ParsedSentence, index: int) -> list[int]:
    """All token indices whose head is `index`, in surface order."""
    return [t.index for t in sentence.tokens if t.head == index]


def _check_tree(sentence: ParsedSentence) -> None:
    roots = [t.index for t in sentence.tokens if t.head == 0]
    n = len(sentence.tokens)
    if len(roots) != 1:
        raise CorpusFormatError(
            f"sentence {sentence.sentence_id!r}: expected exactly one root, "
            f"found {len(roots)}"
        )
    for t in sentence.tokens:
        if t.head < 0 or t.head > n:
            raise CorpusFormatError(
                f"sentence {sentence.sentence_id!r}: head {t.head} of token "
                f"{t.index} out of range 1..{n}"
            )
    # every token must reach the root without revisiting a node
    for t in sentence.tokens:
        seen = set()
        node = t.index
        while node != 0:
            if node in seen:
                raise CorpusFormatError(
                    f"sentence {sentence.sentence_id!r}: head cycle through "
                    f"token {node}"
                )
            seen.add(node)
            node = sentence.token(node).head


def _decode_lines(source: IO | Iterable[str] | str) -> Iterator[str]:
    if isinstance(source, str):
        with open(source, "rb") as fh:
            yield from io.TextIOWrapper(fh, encoding="utf-8")
        return
    first = True
    for line in source:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        if first:
            line = line.lstrip("﻿")
            first = False
        yield line


class _DocBuilder:
    """Accumulates metadata and sentences until `# end_doc`."""

    def __init__(self) -> None:
        self.meta: dict[str, str] = {}
        self.sentences: list[ParsedSentence] = []
        self.pending_sent_id: str | None = None
        self.pending_tokens: list[ParsedToken] = []
        self.started = False

    def flush_sentence(self) -> None:
        if not self.pending_tokens:
            self.pending_sent_id = None
            return
        sent_id = self.pending_sent_id
        if sent_id is None:
            doc_id = self.meta.get("doc_id", "?")
            sent_id = f"{doc_id}:{len(self.sentences) + 1}"
        sentence = ParsedSentence(sent_id, self.pending_tokens)
        _check_tree(sentence)
        self.sentences.append(sentence)
        self.pending_sent_id = None
        self.pending_tokens = []

    def finish(self) -> ParsedDocument:
        self.flush_sentence()
        doc_id = self.meta.get("doc_id", "")
        if not doc_id:
            raise CorpusFormatError("document is missing a '# doc_id' line")
        raw_date = self.meta.get("date", "")
        try:
            doc_date = dt.date.fromisoformat(raw_date)
        except ValueError:
            raise CorpusFormatError(
                f"document {doc_id!r}: missing or invalid '# date' "
                f"(got {raw_date!r})"
            ) from None
        categories = {
            c.strip()
            for c in self.meta.get("categories", "").split(",")
            if c.strip()
        }
        return ParsedDocument(
            doc_id=doc_id,
            date=doc_date,
            outlet=self.meta.get("outlet", ""),
            categories=categories,
            sentences=self.sentences,
        )


def _parse_token(fields: list[str], lineno: int) -> ParsedToken:
    try:
        index = int(fields[0])
        head = int(fields[5])
    except ValueError:
        raise CorpusFormatError(
            f"line {lineno}: non-integer INDEX or HEAD column"
        ) from None
    return ParsedToken(
        index=index,
        surface=fields[1],
        lemma=fields[2],
        upos=fields[3],
        xtag=fields[4],
        head=head,
        dep=fields[6],
        feats=fields[7],
        ner="" if fields[8] == "_" else fields[8],
        misc=fields[9],
    )


def parse_corpus(source: IO | Iterable[str] | str) -> Iterator[ParsedDocument]:
    """Yield documents from a corpus stream (file object, lines, or path).

    Raises CorpusFormatError on malformed token lines (with line number),
    broken head structure (naming the sentence) or missing document
    metadata (naming the document).
    """
    builder = _DocBuilder()
    for lineno, raw in enumerate(_decode_lines(source), start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            builder.flush_sentence()
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body == "end_doc":
                yield builder.finish()
                builder = _DocBuilder()
                continue
            if "=" not in body:
                raise CorpusFormatError(
                    f"line {lineno}: comment line is not 'key = value': {line!r}"
                )
            key, value = body.split("=", 1)
            key = key.strip()
            value = value.strip()
            if key == "sent_id":
                builder.flush_sentence()
                builder.pending_sent_id = value
            else:
                builder.meta[key] = value
            builder.started = True
            continue
        fields = line.split("\t")
        if len(fields) != N_COLUMNS:
            raise CorpusFormatError(
                f"line {lineno}: expected {N_COLUMNS} tab-separated columns, "
                f"got {len(fields)}"
            )
        builder.pending_tokens.append(_parse_token(fields, lineno))
        builder.started = True
    if builder.started:
        # tolerate a missing trailing '# end_doc'
        yield builder.finish()


def serialize_document(doc: ParsedDocument) -> str:
    """Canonical text form of one document; inverse of parse_corpus."""
    lines = [f"# doc_id = {doc.doc_id}", f"# date = {doc.date.isoformat()}"]
    if doc.outlet:
        lines.append(f"# outlet = {doc.outlet}")
    if doc.categories:
        lines.append(f"# categories = {','.join(sorted(doc.categories))}")
    for sentence in doc.sentences:
        lines.append(f"# sent_id = {sentence.sentence_id}")
        for t in sentence.tokens:
            lines.append(
                "\t".join(
                    [
                        str(t.index),
                        t.surface,
                        t.lemma,
                        t.upos,
                        t.xtag,
                        str(t.head),
                        t.dep,
                        t.feats,
                        t.ner if t.ner else "_",
                        t.misc,
                    ]
                )
            )
        lines.append("")
    lines.append("# end_doc")
    return "\n".join(lines) + "\n"


def write_corpus(docs: Iterable[ParsedDocument], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(serialize_document(doc))
