"""Shared test utilities: random parse trees and a brute-force term
enumerator kept independent of the engine implementation."""

from __future__ import annotations

import numpy as np

from sentcast.corpus import ParsedSentence, ParsedToken
from sentcast.lexicon import Lexicon

ADJ_TAGS = {"JJ", "JJR", "JJS"}
CMP_ADV_TAGS = {"RBR", "RBS"}

UPOS_POOL = ["NOUN", "VERB", "ADJ", "ADV", "DET", "ADP", "PROPN", "PART"]
XTAGS = {
    "NOUN": ["NN", "NNS"],
    "PROPN": ["NNP"],
    "VERB": ["VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "MD"],
    "ADJ": ["JJ", "JJR", "JJS"],
    "ADV": ["RB", "RBR", "RBS"],
    "DET": ["DT"],
    "ADP": ["IN"],
    "PART": ["TO", "POS"],
}
DEP_POOL = [
    "amod", "acl", "acomp", "oprd", "advmod", "dobj", "attr", "prep",
    "pobj", "pcomp", "xcomp", "advcl", "nsubj", "det", "compound",
    "aux", "punct", "poss", "conj",
]
LEMMA_POOL = [
    "gain", "loss", "weak", "strong", "good", "poor", "well", "more",
    "rise", "fall", "grow", "slow", "boost", "crisis", "robust", "tight",
    "form", "thing", "report", "time", "move", "plan", "state", "group",
]


def random_lexicon(rng: np.random.Generator) -> Lexicon:
    lex = Lexicon()
    for lemma in LEMMA_POOL:
        if rng.random() < 0.6:
            score = float(np.round(rng.uniform(-1.0, 1.0), 3))
            if score != 0.0:
                lex.add((lemma,), score)
    return lex


def random_sentence(rng: np.random.Generator, max_tokens: int = 12,
                    toi_lemma: str = "economy") -> ParsedSentence:
    """Random labelled tree with exactly one ToI token."""
    n = int(rng.integers(2, max_tokens + 1))
    # random rooted tree: token 1 is root, others attach to a lower index
    heads = [0] + [int(rng.integers(1, i + 1)) for i in range(1, n)]
    order = rng.permutation(n)  # shuffle which position gets which node
    # relabel so heads refer to surface positions
    pos_of = {int(order[k]) + 1: k + 1 for k in range(n)}
    toi_pos = int(rng.integers(1, n + 1))
    tokens = []
    for node in range(1, n + 1):
        pos = pos_of[node]
        upos = str(rng.choice(UPOS_POOL))
        xtag = str(rng.choice(XTAGS[upos]))
        dep = str(rng.choice(DEP_POOL)) if heads[node - 1] else "root"
        lemma = str(rng.choice(LEMMA_POOL))
        if pos == toi_pos:
            lemma, upos, xtag = toi_lemma, "NOUN", "NN"
        head_pos = pos_of[heads[node - 1]] if heads[node - 1] else 0
        tokens.append(
            ParsedToken(
                index=pos,
                surface=lemma,
                lemma=lemma,
                upos=upos,
                xtag=xtag,
                head=head_pos,
                dep=dep,
            )
        )
    tokens.sort(key=lambda t: t.index)
    return ParsedSentence("rand:1", tokens)


def oracle_terms(sentence: ParsedSentence, start: int, length: int,
                 lex: Lexicon) -> list[tuple[int, float]]:
    """Enumerate scored dependents by scanning every token pair against
    the pattern definitions; no tree walking shared with the engine."""
    toks = sentence.tokens
    span = set(range(start, start + length))
    anchor = next(
        i for i in range(start, start + length)
        if toks[i - 1].head == 0 or toks[i - 1].head not in span
    )
    found: dict[int, int] = {}

    def note(idx: int, depth: int) -> None:
        if idx in span:
            return
        if idx not in found or depth < found[idx]:
            found[idx] = depth

    def is_adj(t: ParsedToken) -> bool:
        return t.xtag in ADJ_TAGS

    def adv_ext(idx: int, depth: int) -> None:
        for u in toks:
            if u.head == idx and u.dep == "advmod" and u.xtag in CMP_ADV_TAGS:
                note(u.index, depth)

    def amod_ext(idx: int, depth: int) -> None:
        for u in toks:
            if (u.head == idx and u.dep == "amod"
                    and (is_adj(u) or u.upos == "VERB")):
                note(u.index, depth)

    for t in toks:
        if t.head != anchor or t.index in span:
            continue
        if t.dep == "amod" and (is_adj(t) or t.upos == "VERB"):
            note(t.index, 1)
            if is_adj(t):
                adv_ext(t.index, 2)
        if t.dep == "acl" and t.upos == "VERB":
            note(t.index, 1)

    def verb_patterns(vidx: int, vdepth: int) -> None:
        for t in toks:
            if t.head != vidx or t.index in span:
                continue
            if t.dep in ("xcomp", "advcl") and t.upos == "VERB":
                note(t.index, vdepth + 1)
            elif t.dep == "acomp" and is_adj(t):
                note(t.index, vdepth + 1)
                adv_ext(t.index, vdepth + 2)
            elif t.dep == "oprd" and is_adj(t):
                note(t.index, vdepth + 1)
                adv_ext(t.index, vdepth + 2)
            elif t.dep == "advmod" and t.xtag in CMP_ADV_TAGS:
                note(t.index, vdepth + 1)
            elif t.dep in ("dobj", "attr") and t.upos == "NOUN":
                note(t.index, vdepth + 1)
                amod_ext(t.index, vdepth + 2)
            elif t.dep == "prep":
                for u in toks:
                    if u.head != t.index or u.index in span:
                        continue
                    if u.dep == "pobj" and u.upos == "NOUN":
                        note(u.index, vdepth + 2)
                        amod_ext(u.index, vdepth + 3)
                    elif u.dep == "pcomp" and u.upos == "VERB":
                        note(u.index, vdepth + 2)

    a = toks[anchor - 1]
    if a.head != 0 and a.head not in span:
        h = toks[a.head - 1]
        if h.upos == "VERB":
            note(h.index, 1)
            verb_patterns(h.index, 1)
        elif a.dep == "pobj" and h.dep == "prep" and h.head != 0:
            if h.head not in span:
                g = toks[h.head - 1]
                if g.upos == "VERB":
                    note(g.index, 2)
                    verb_patterns(g.index, 2)
                elif g.upos == "NOUN":
                    note(g.index, 2)
                    amod_ext(g.index, 3)

    ordered = sorted(found.items(),
                     key=lambda kv: (kv[1], abs(kv[0] - anchor), kv[0]))
    out = []
    for idx, _ in ordered:
        score = lex.score_of((toks[idx - 1].lemma,))
        if score != 0.0:
            out.append((idx, score))
    return out
