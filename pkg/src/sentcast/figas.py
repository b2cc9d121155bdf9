"""Aspect-based sentence sentiment over dependency parses (FiGAS rules).

For every sentence containing a token of interest (ToI), the engine

  1. filters by detected location (default: keep US-related and
     unlocated text),
  2. detects the verbal tense nearest the ToI,
  3. walks the dependency tree through eight syntactic patterns to
     collect sentiment-bearing terms,
  4. propagates their dictionary scores into one value on [-1, 1],
     flipping the sign on negation and on negatively-scored ToIs.

Terms are ordered by dependency distance from the ToI: the directly
attached modifier or governing predicate comes first, its own modifiers
after.  The closest term anchors the propagation; every further term
scales it multiplicatively through the closest term's tone.
"""

from __future__ import annotations

import datetime as dt
from collections import defaultdict
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable, Iterator, Sequence

from .corpus import ParsedDocument, ParsedSentence, ParsedToken
from .lexicon import Lexicon

TENSES = ("past", "present", "future", "nan")

PAST_TAGS = frozenset({"VBD", "VBN"})
PRESENT_TAGS = frozenset({"VBP", "VBZ", "VBG"})
FUTURE_TAGS = frozenset({"MD"})
ADJ_TAGS = frozenset({"JJ", "JJR", "JJS"})
COMPARATIVE_ADV_TAGS = frozenset({"RBR", "RBS"})
ENTITY_TAGS = frozenset({"GPE", "NORP", "LOC", "ORG"})

# Location and organization names that mark text as US-related.
US_LOCATION_TERMS = (
    "America",
    "United States",
    "Columbia",
    "land of liberty",
    "new world",
    "U.S.",
    "U.S.A.",
    "USA",
    "US",
    "land of opportunity",
    "the states",
    "Fed",
    "Federal Reserve Board",
    "Federal Reserve",
    "Census Bureau",
    "Bureau of Economic Analysis",
    "Treasury Department",
    "Department of Commerce",
    "Bureau of Labor Statistics",
    "Bureau of Labour",
    "Department of Labor",
    "Open Market Committee",
    "BEA",
    "BIS",
    "Bureau of Statistics",
    "Board of Governors",
    "Congressional Budget Office",
    "CBO",
    "Internal Revenue Service",
    "IRS",
)


@dataclass(frozen=True)
class TopicSpec:
    """A named topic and the lemma sequences that signal it."""

    name: str
    tois: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if not self.tois:
            raise ValueError(f"topic {self.name!r} has no tokens of interest")
        for toi in self.tois:
            if not 1 <= len(toi) <= 4:
                raise ValueError(f"ToI must have 1..4 lemmas: {toi!r}")


@dataclass(frozen=True)
class ToiMatch:
    """Occurrence of a ToI: 1-based start token index and token length."""

    start: int
    length: int


@dataclass(frozen=True)
class ChunkScore:
    doc_id: str
    sentence_id: str
    topic: str
    tense: str
    score: float
    date: dt.date


@dataclass(frozen=True)
class LocationPolicy:
    """Which detected locations keep a sentence in scope."""

    allowed: frozenset[str]
    keep_unlocated: bool = True

    @classmethod
    def us_default(cls, keep_unlocated: bool = True) -> "LocationPolicy":
        return cls(
            allowed=frozenset(t.lower() for t in US_LOCATION_TERMS),
            keep_unlocated=keep_unlocated,
        )

    def permits(self, location: str | None) -> bool:
        if location is None:
            return self.keep_unlocated
        return location.lower() in self.allowed


def load_topics(source: IO | Iterable[str] | str) -> list[TopicSpec]:
    """Read topic specs from `[name]` sections with one ToI per line."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as fh:
            return load_topics(fh)
    topics: list[TopicSpec] = []
    name: str | None = None
    tois: list[tuple[str, ...]] = []

    def close() -> None:
        if name is not None:
            topics.append(TopicSpec(name, tuple(tois)))

    for raw in source:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            close()
            name = line[1:-1].strip()
            tois = []
        else:
            if name is None:
                raise ValueError(f"ToI line before any [topic] header: {line!r}")
            tois.append(tuple(line.lower().split()))
    close()
    return topics


def default_topics() -> list[TopicSpec]:
    """The six built-in economic topics."""
    ref = resources.files("sentcast.data").joinpath("topics.txt")
    with ref.open("r", encoding="utf-8") as fh:
        return load_topics(fh)


def match_tois(sentence: ParsedSentence, topic: TopicSpec) -> list[ToiMatch]:
    """Longest-match, non-overlapping ToI occurrences in surface order."""
    lemmas = [t.lemma.lower() for t in sentence.tokens]
    toi_set = set(topic.tois)
    max_len = max(len(t) for t in topic.tois)
    matches: list[ToiMatch] = []
    i = 0
    while i < len(lemmas):
        hit = 0
        for length in range(min(max_len, len(lemmas) - i), 0, -1):
            if tuple(lemmas[i : i + length]) in toi_set:
                matches.append(ToiMatch(start=i + 1, length=length))
                hit = length
                break
        i += hit if hit else 1
    return matches


def span_head(sentence: ParsedSentence, match: ToiMatch) -> int:
    """Index of the span token whose head lies outside the span (its root)."""
    span = range(match.start, match.start + match.length)
    for idx in span:
        head = sentence.token(idx).head
        if head == 0 or head not in span:
            return idx
    return match.start


def _entity_mentions(tokens: Sequence[ParsedToken]) -> list[str]:
    """Surfaces of maximal runs of identically-tagged entity tokens."""
    mentions: list[str] = []
    i = 0
    while i < len(tokens):
        tag = tokens[i].ner
        if tag in ENTITY_TAGS:
            j = i
            while (
                j + 1 < len(tokens)
                and tokens[j + 1].ner == tag
                and tokens[j + 1].index == tokens[j].index + 1
            ):
                j += 1
            mentions.append(" ".join(t.surface for t in tokens[i : j + 1]))
            i = j + 1
        else:
            i += 1
    return mentions


def _modal_mention(mentions: Sequence[str]) -> str | None:
    if not mentions:
        return None
    counts: dict[str, int] = {}
    first_form: dict[str, str] = {}
    for m in mentions:
        key = m.lower()
        counts[key] = counts.get(key, 0) + 1
        first_form.setdefault(key, m)
    best_key = None
    best_count = -1
    for m in mentions:  # iteration order breaks ties by first occurrence
        key = m.lower()
        if counts[key] > best_count:
            best_key, best_count = key, counts[key]
    return first_form[best_key]


def detect_location(
    doc: ParsedDocument, sentence: ParsedSentence
) -> str | None:
    """Most frequent entity in the sentence, else in the document, else None."""
    local = _modal_mention(_entity_mentions(sentence.tokens))
    if local is not None:
        return local
    doc_mentions: list[str] = []
    for s in doc.sentences:
        doc_mentions.extend(_entity_mentions(s.tokens))
    return _modal_mention(doc_mentions)


def _tense_of_tag(xtag: str) -> str | None:
    if xtag in PAST_TAGS:
        return "past"
    if xtag in PRESENT_TAGS:
        return "present"
    if xtag in FUTURE_TAGS:
        return "future"
    return None


def detect_tense(sentence: ParsedSentence, toi_index: int) -> str:
    """Distance-weighted vote over the sentence's verb tags.

    Each verb adds 1/(1 + distance-to-ToI) to its tense; the largest
    total wins.  Ties go to the tense with the closest verb, then to
    past over present over future.  No verb at all gives "nan".
    """
    weight: dict[str, float] = {}
    closest: dict[str, int] = {}
    for tok in sentence.tokens:
        tense = _tense_of_tag(tok.xtag)
        if tense is None:
            continue
        d = abs(tok.index - toi_index)
        weight[tense] = weight.get(tense, 0.0) + 1.0 / (1.0 + d)
        closest[tense] = min(closest.get(tense, d), d)
    if not weight:
        return "nan"
    priority = {"past": 0, "present": 1, "future": 2}
    return min(
        weight,
        key=lambda t: (-weight[t], closest[t], priority[t]),
    )


def _analyze(
    sentence: ParsedSentence, match: ToiMatch, lex: Lexicon
) -> tuple[list[tuple[int, float]], set[int]]:
    """Collect scored terms for one ToI occurrence.

    Returns (terms, chain): terms are (token index, dictionary score)
    pairs with nonzero score, ordered by dependency distance from the
    ToI (surface distance, then index, break ties); chain is the set of
    token indices touched by the matched patterns, used for negation
    scope.
    """
    span = set(range(match.start, match.start + match.length))
    anchor = span_head(sentence, match)
    children: dict[int, list[ParsedToken]] = defaultdict(list)
    for tok in sentence.tokens:
        children[tok.head].append(tok)

    collected: dict[int, tuple[int, float]] = {}  # index -> (depth, score)
    chain: set[int] = set(span)

    def add(tok: ParsedToken, depth: int) -> None:
        chain.add(tok.index)
        score = lex.score_of((tok.lemma,))
        prev = collected.get(tok.index)
        if prev is None or depth < prev[0]:
            collected[tok.index] = (depth, score)

    def extend_adjective(tok: ParsedToken, depth: int) -> None:
        # comparative/superlative adverbs modifying a collected adjective
        for c in children[tok.index]:
            if (
                c.dep == "advmod"
                and c.xtag in COMPARATIVE_ADV_TAGS
                and c.index not in span
            ):
                add(c, depth + 1)

    def extend_noun(tok: ParsedToken, depth: int) -> None:
        # adjectival modifiers of a collected noun
        for c in children[tok.index]:
            if (
                c.dep == "amod"
                and (c.xtag in ADJ_TAGS or c.upos == "VERB")
                and c.index not in span
            ):
                add(c, depth + 1)

    def expand_predicate(verb: ParsedToken, depth: int) -> None:
        for c in children[verb.index]:
            if c.index in span:
                continue
            if c.dep in ("xcomp", "advcl") and c.upos == "VERB":
                add(c, depth + 1)
            elif c.dep == "acomp" and c.xtag in ADJ_TAGS:
                add(c, depth + 1)
                extend_adjective(c, depth + 1)
            elif c.dep == "oprd" and c.xtag in ADJ_TAGS:
                add(c, depth + 1)
                extend_adjective(c, depth + 1)
            elif c.dep == "advmod" and c.xtag in COMPARATIVE_ADV_TAGS:
                add(c, depth + 1)
            elif c.dep in ("dobj", "attr") and c.upos == "NOUN":
                add(c, depth + 1)
                extend_noun(c, depth + 1)
            elif c.dep == "prep":
                chain.add(c.index)
                for g in children[c.index]:
                    if g.index in span:
                        continue
                    if g.dep == "pobj" and g.upos == "NOUN":
                        add(g, depth + 2)
                        extend_noun(g, depth + 2)
                    elif g.dep == "pcomp" and g.upos == "VERB":
                        add(g, depth + 2)

    # modifiers attached directly to the ToI
    for c in children[anchor]:
        if c.index in span:
            continue
        if c.dep == "amod" and (c.xtag in ADJ_TAGS or c.upos == "VERB"):
            add(c, 1)
            if c.xtag in ADJ_TAGS:
                extend_adjective(c, 1)
        elif c.dep == "acl" and c.upos == "VERB":
            add(c, 1)

    # governing predicate: direct verb head, or the head of a prep the
    # ToI is object of ("rise in money supply")
    a_tok = sentence.token(anchor)
    if a_tok.head != 0:
        head_tok = sentence.token(a_tok.head)
        if head_tok.index not in span:
            if head_tok.upos == "VERB":
                add(head_tok, 1)
                expand_predicate(head_tok, 1)
            elif (
                a_tok.dep == "pobj"
                and head_tok.dep == "prep"
                and head_tok.head != 0
            ):
                grand = sentence.token(head_tok.head)
                if grand.index not in span:
                    chain.add(head_tok.index)
                    if grand.upos == "VERB":
                        add(grand, 2)
                        expand_predicate(grand, 2)
                    elif grand.upos == "NOUN":
                        add(grand, 2)
                        extend_noun(grand, 2)

    chain.add(anchor)
    ordered = sorted(
        collected.items(),
        key=lambda kv: (kv[1][0], abs(kv[0] - anchor), kv[0]),
    )
    terms = [(idx, score) for idx, (_, score) in ordered if score != 0.0]
    return terms, chain


def apply_rules(
    sentence: ParsedSentence, toi: ToiMatch, lex: Lexicon
) -> list[tuple[int, float]]:
    """Sentiment-bearing dependents of a ToI occurrence, nearest first."""
    terms, _ = _analyze(sentence, toi, lex)
    return terms


def propagate(
    terms: Sequence[tuple[object, float]],
    toi_score: float = 0.0,
    negated: bool = False,
) -> float:
    """Combine ordered term scores into one chunk score on [-1, 1].

    The closest term's score is amplified (or dampened) by the summed
    tone of the remaining terms; the sign flips once if the ToI itself
    carries negative sentiment and once more under negation.
    """
    if not terms:
        return 0.0
    s1 = terms[0][1]
    rest = sum(score for _, score in terms[1:])
    s = s1 + s1 * rest
    s = max(-1.0, min(1.0, s))
    if toi_score < 0:
        s = -s
    if negated:
        s = -s
    return s


def _is_negated(sentence: ParsedSentence, chain: set[int]) -> bool:
    return any(t.dep == "neg" and t.head in chain for t in sentence.tokens)


def score_sentence(
    doc: ParsedDocument,
    sentence: ParsedSentence,
    topic: TopicSpec,
    lex: Lexicon,
    policy: LocationPolicy | None = None,
) -> ChunkScore | None:
    """Score one sentence for one topic; None when out of scope.

    A sentence is out of scope when it contains no ToI or its detected
    location is not permitted by the policy.  With several ToI matches
    the chunk score is the mean of the per-match scores and the tense is
    taken at the first match.
    """
    if policy is None:
        policy = LocationPolicy.us_default()
    matches = match_tois(sentence, topic)
    if not matches:
        return None
    if not policy.permits(detect_location(doc, sentence)):
        return None
    lemmas = [t.lemma for t in sentence.tokens]
    scores = []
    for m in matches:
        terms, chain = _analyze(sentence, m, lex)
        toi_score = lex.score_of(lemmas[m.start - 1 : m.start - 1 + m.length])
        scores.append(propagate(terms, toi_score, _is_negated(sentence, chain)))
    tense = detect_tense(sentence, span_head(sentence, matches[0]))
    return ChunkScore(
        doc_id=doc.doc_id,
        sentence_id=sentence.sentence_id,
        topic=topic.name,
        tense=tense,
        score=sum(scores) / len(scores),
        date=doc.date,
    )


def score_corpus(
    docs: Iterable[ParsedDocument],
    topics: Sequence[TopicSpec],
    lex: Lexicon,
    policy: LocationPolicy | None = None,
) -> Iterator[ChunkScore]:
    """ChunkScores for every (sentence, topic) pair, in corpus order."""
    if policy is None:
        policy = LocationPolicy.us_default()
    for doc in docs:
        for sentence in doc.sentences:
            for topic in topics:
                chunk = score_sentence(doc, sentence, topic, lex, policy)
                if chunk is not None:
                    yield chunk
