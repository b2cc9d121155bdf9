"""Synthetic corpus, vintages, and target DGP for desk-scale runs.

The corpus is assembled from hand-parsed sentence templates, one or
more per dependency pattern the scorer handles, each with a known
expected score and tense.  A slow-moving latent mood tilts the daily
mix toward positive or negative templates, so the daily sentiment sum
carries a persistent signal.  The target variable is generated so that
its transformed value loads on the smoothed driver-topic sentiment at a
fixed horizon, on its own lag, and on the monthly factor; every ground
truth lands in a JSON manifest.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import asdict, dataclass
from importlib import resources

import numpy as np

from .corpus import ParsedDocument, ParsedSentence, ParsedToken, write_corpus
from .realtime import Release, VintageStore, assign_release_date, save_vintages

# (surface, lemma, upos, xtag, head, dep[, ner])
_TOK = tuple


@dataclass(frozen=True)
class SentenceTemplate:
    name: str
    topic: str
    score: float | None  # None = excluded by the location policy
    tense: str
    mood: int  # +1 positive, -1 negative, 0 neutral or excluded
    tokens: tuple


def _t(surface, lemma, upos, xtag, head, dep, ner=""):
    return (surface, lemma, upos, xtag, head, dep, ner)


TEMPLATES: tuple[SentenceTemplate, ...] = (
    SentenceTemplate(
        "amod_adjective", "monetary_policy", 0.7, "nan", +1,
        (
            _t("Higher", "high", "ADJ", "JJR", 3, "amod"),
            _t("interest", "interest", "NOUN", "NN", 3, "compound"),
            _t("rates", "rate", "NOUN", "NNS", 0, "root"),
            _t(".", ".", "PUNCT", ".", 3, "punct"),
        ),
    ),
    SentenceTemplate(
        "amod_verb", "manufacturing", 0.5, "present", +1,
        (
            _t("Rising", "rise", "VERB", "VBG", 3, "amod"),
            _t("industrial", "industrial", "ADJ", "JJ", 3, "amod"),
            _t("production", "production", "NOUN", "NN", 0, "root"),
            _t(".", ".", "PUNCT", ".", 3, "punct"),
        ),
    ),
    SentenceTemplate(
        "clausal_complement", "economy", 0.45, "present", +1,
        (
            _t("Analysts", "analyst", "NOUN", "NNS", 2, "nsubj"),
            _t("expect", "expect", "VERB", "VBP", 0, "root"),
            _t("the", "the", "DET", "DT", 4, "det"),
            _t("economy", "economy", "NOUN", "NN", 2, "dobj"),
            _t("to", "to", "PART", "TO", 6, "aux"),
            _t("grow", "grow", "VERB", "VB", 2, "xcomp"),
            _t(".", ".", "PUNCT", ".", 2, "punct"),
        ),
    ),
    SentenceTemplate(
        # -0.4 + (-0.4)(0.3) = -0.52
        "adjectival_complement", "economy", -0.52, "present", -1,
        (
            _t("The", "the", "DET", "DT", 3, "det"),
            _t("U.S.", "U.S.", "PROPN", "NNP", 3, "compound", "GPE"),
            _t("economy", "economy", "NOUN", "NN", 5, "nsubj"),
            _t("is", "be", "VERB", "VBZ", 5, "aux"),
            _t("becoming", "become", "VERB", "VBG", 0, "root"),
            _t("more", "more", "ADV", "RBR", 7, "advmod"),
            _t("vulnerable", "vulnerable", "ADJ", "JJ", 5, "acomp"),
            _t(".", ".", "PUNCT", ".", 5, "punct"),
        ),
    ),
    SentenceTemplate(
        # two matches (bank, lending) with the same chain, mean 0.6
        "object_predicate", "financial_sector", 0.6, "past", +1,
        (
            _t("The", "the", "DET", "DT", 3, "det"),
            _t("bank", "bank", "NOUN", "NN", 3, "nsubj"),
            _t("kept", "keep", "VERB", "VBD", 0, "root"),
            _t("lending", "lending", "NOUN", "NN", 3, "dobj"),
            _t("stronger", "strong", "ADJ", "JJR", 3, "oprd"),
            _t(".", ".", "PUNCT", ".", 3, "punct"),
        ),
    ),
    SentenceTemplate(
        "comparative_adverb", "manufacturing", 0.4, "past", +1,
        (
            _t("Manufacturing", "manufacturing", "NOUN", "NN", 2, "nsubj"),
            _t("fared", "fare", "VERB", "VBD", 0, "root"),
            _t("better", "well", "ADV", "RBR", 2, "advmod"),
            _t(".", ".", "PUNCT", ".", 2, "punct"),
        ),
    ),
    SentenceTemplate(
        # brunt reaches the ToI through the neutral verb "carry"
        "direct_object", "manufacturing", -0.125, "present", -1,
        (
            _t("The", "the", "DET", "DT", 4, "det"),
            _t("US", "US", "PROPN", "NNP", 4, "compound", "GPE"),
            _t("manufacturing", "manufacturing", "NOUN", "NN", 4, "compound"),
            _t("sector", "sector", "NOUN", "NN", 6, "nsubj"),
            _t("has", "have", "VERB", "VBZ", 6, "aux"),
            _t("carried", "carry", "VERB", "VBN", 0, "root"),
            _t("the", "the", "DET", "DT", 8, "det"),
            _t("brunt", "brunt", "NOUN", "NN", 6, "dobj"),
            _t("of", "of", "ADP", "IN", 8, "prep"),
            _t("the", "the", "DET", "DT", 13, "det"),
            _t("global", "global", "ADJ", "JJ", 13, "amod"),
            _t("economic", "economic", "ADJ", "JJ", 13, "amod"),
            _t("slowdown", "slowdown", "NOUN", "NN", 9, "pobj"),
            _t(".", ".", "PUNCT", ".", 6, "punct"),
        ),
    ),
    SentenceTemplate(
        "attribute", "financial_sector", 0.55, "present", +1,
        (
            _t("Bonds", "bond", "NOUN", "NNS", 3, "nsubj"),
            _t("have", "have", "VERB", "VBP", 3, "aux"),
            _t("been", "be", "VERB", "VBN", 0, "root"),
            _t("a", "a", "DET", "DT", 6, "det"),
            _t("good", "good", "ADJ", "JJ", 6, "amod"),
            _t("investment", "investment", "NOUN", "NN", 3, "attr"),
            _t(".", ".", "PUNCT", ".", 3, "punct"),
        ),
    ),
    SentenceTemplate(
        "preposition_object", "financial_sector", 0.65, "present", +1,
        (
            _t("The", "the", "DET", "DT", 3, "det"),
            _t("equity", "equity", "NOUN", "NN", 3, "compound"),
            _t("market", "market", "NOUN", "NN", 4, "nsubj"),
            _t("is", "be", "VERB", "VBZ", 0, "root"),
            _t("in", "in", "ADP", "IN", 4, "prep"),
            _t("robust", "robust", "ADJ", "JJ", 7, "amod"),
            _t("form", "form", "NOUN", "NN", 5, "pobj"),
            _t(".", ".", "PUNCT", ".", 4, "punct"),
        ),
    ),
    SentenceTemplate(
        # 0.5 + 0.5 * 0.35 = 0.675
        "preposition_complement", "monetary_policy", 0.675, "past", +1,
        (
            _t("The", "the", "DET", "DT", 3, "det"),
            _t("Federal", "federal", "PROPN", "NNP", 3, "compound", "ORG"),
            _t("Reserve", "reserve", "PROPN", "NNP", 4, "nsubj", "ORG"),
            _t("succeeded", "succeed", "VERB", "VBD", 0, "root"),
            _t("in", "in", "ADP", "IN", 4, "prep"),
            _t("stabilizing", "stabilize", "VERB", "VBG", 5, "pcomp"),
            _t("prices", "price", "NOUN", "NNS", 6, "dobj"),
            _t(".", ".", "PUNCT", ".", 4, "punct"),
        ),
    ),
    SentenceTemplate(
        "adjectival_clause", "economy", -0.45, "present", -1,
        (
            _t("The", "the", "DET", "DT", 2, "det"),
            _t("economy", "economy", "NOUN", "NN", 0, "root"),
            _t("struggling", "struggle", "VERB", "VBG", 2, "acl"),
            _t("with", "with", "ADP", "IN", 3, "prep"),
            _t("weak", "weak", "ADJ", "JJ", 6, "amod"),
            _t("demand", "demand", "NOUN", "NN", 4, "pobj"),
            _t(".", ".", "PUNCT", ".", 2, "punct"),
        ),
    ),
    SentenceTemplate(
        # (-0.3 + (-0.3)(-0.4)) = -0.18, sign flipped by the negation
        "negation", "economy", 0.18, "past", +1,
        (
            _t("The", "the", "DET", "DT", 2, "det"),
            _t("economy", "economy", "NOUN", "NN", 5, "nsubj"),
            _t("did", "do", "VERB", "VBD", 5, "aux"),
            _t("not", "not", "PART", "RB", 5, "neg"),
            _t("suffer", "suffer", "VERB", "VB", 0, "root"),
            _t("a", "a", "DET", "DT", 7, "det"),
            _t("slowdown", "slowdown", "NOUN", "NN", 5, "dobj"),
            _t(".", ".", "PUNCT", ".", 5, "punct"),
        ),
    ),
    SentenceTemplate(
        # rise scores +0.5 but the ToI itself is negative: sign flips
        "negative_toi_flip", "unemployment", -0.5, "present", -1,
        (
            _t("Unemployment", "unemployment", "NOUN", "NN", 3, "nsubj"),
            _t("is", "be", "VERB", "VBZ", 3, "aux"),
            _t("rising", "rise", "VERB", "VBG", 0, "root"),
            _t(".", ".", "PUNCT", ".", 3, "punct"),
        ),
    ),
    SentenceTemplate(
        "governing_verb", "inflation", 0.4, "past", +1,
        (
            _t("Inflation", "inflation", "NOUN", "NN", 2, "nsubj"),
            _t("accelerated", "accelerate", "VERB", "VBD", 0, "root"),
            _t("sharply", "sharply", "ADV", "RB", 2, "advmod"),
            _t(".", ".", "PUNCT", ".", 2, "punct"),
        ),
    ),
    SentenceTemplate(
        "inverse_preposition", "monetary_policy", 0.5, "nan", +1,
        (
            _t("A", "a", "DET", "DT", 2, "det"),
            _t("rise", "rise", "NOUN", "NN", 0, "root"),
            _t("in", "in", "ADP", "IN", 2, "prep"),
            _t("the", "the", "DET", "DT", 6, "det"),
            _t("money", "money", "NOUN", "NN", 6, "compound"),
            _t("supply", "supply", "NOUN", "NN", 3, "pobj"),
            _t(".", ".", "PUNCT", ".", 2, "punct"),
        ),
    ),
    SentenceTemplate(
        "compound_amod", "monetary_policy", -0.1, "nan", -1,
        (
            _t("Tighter", "tight", "ADJ", "JJR", 3, "amod"),
            _t("monetary", "monetary", "ADJ", "JJ", 3, "amod"),
            _t("policy", "policy", "NOUN", "NN", 0, "root"),
            _t(".", ".", "PUNCT", ".", 3, "punct"),
        ),
    ),
    SentenceTemplate(
        "no_scored_terms", "economy", 0.0, "past", 0,
        (
            _t("Investors", "investor", "NOUN", "NNS", 2, "nsubj"),
            _t("discussed", "discuss", "VERB", "VBD", 0, "root"),
            _t("the", "the", "DET", "DT", 4, "det"),
            _t("economy", "economy", "NOUN", "NN", 2, "dobj"),
            _t(".", ".", "PUNCT", ".", 2, "punct"),
        ),
    ),
    SentenceTemplate(
        "foreign_location", "economy", None, "past", 0,
        (
            _t("China", "China", "PROPN", "NNP", 3, "poss", "GPE"),
            _t("'s", "'s", "PART", "POS", 1, "case"),
            _t("economy", "economy", "NOUN", "NN", 4, "nsubj"),
            _t("slowed", "slow", "VERB", "VBD", 0, "root"),
            _t(".", ".", "PUNCT", ".", 4, "punct"),
        ),
    ),
)

TEMPLATE_BY_NAME = {t.name: t for t in TEMPLATES}
_POSITIVE = [t for t in TEMPLATES if t.mood > 0]
_NEGATIVE = [t for t in TEMPLATES if t.mood < 0]
_NEUTRAL = [t for t in TEMPLATES if t.mood == 0]


def template_sentence(template: SentenceTemplate, sent_id: str) -> ParsedSentence:
    tokens = [
        ParsedToken(
            index=i + 1,
            surface=tok[0],
            lemma=tok[1],
            upos=tok[2],
            xtag=tok[3],
            head=tok[4],
            dep=tok[5],
            ner=tok[6],
        )
        for i, tok in enumerate(template.tokens)
    ]
    return ParsedSentence(sent_id, tokens)


def fixture_lexicon_text() -> str:
    ref = resources.files("sentcast.data").joinpath("lexicon_fixture.tsv")
    return ref.read_text(encoding="utf-8")


@dataclass
class SynthConfig:
    seed: int = 42
    start: dt.date = dt.date(2003, 1, 1)
    years: int = 13
    eta: float = 0.5
    rho: float = 0.3
    gamma: float = 0.4
    noise_sd: float = 0.10
    h0_days: int = 8
    driver_topic: str = "economy"
    target: str = "TGT"
    release_lag_days: int = 14
    revision_lag_days: int = 30
    revision_sd_first: float = 2e-4
    revision_sd_second: float = 5e-5
    smoothing_window: int = 30
    sentences_per_day: float = 6.0


def _month_ends(start: dt.date, end: dt.date) -> list[dt.date]:
    out = []
    y, m = start.year, start.month
    while True:
        ny, nm = (y + 1, 1) if m == 12 else (y, m + 1)
        month_end = dt.date(ny, nm, 1) - dt.timedelta(days=1)
        if month_end > end:
            break
        out.append(month_end)
        y, m = ny, nm
    return out


def _week_ends(start: dt.date, end: dt.date) -> list[dt.date]:
    # ISO weeks, ending Sunday
    first = start + dt.timedelta(days=(6 - start.weekday()) % 7)
    out = []
    day = first
    while day <= end:
        out.append(day)
        day += dt.timedelta(days=7)
    return out


def _trailing_mean(x: np.ndarray, window: int) -> np.ndarray:
    c = np.concatenate([[0.0], np.cumsum(x)])
    n = len(x)
    out = np.empty(n)
    for i in range(n):
        lo = max(0, i - window + 1)
        out[i] = (c[i + 1] - c[lo]) / (i + 1 - lo)
    return out


@dataclass
class SimResult:
    docs: list
    sentence_records: list[dict]
    days: list[dt.date]
    driver_daily: np.ndarray
    store: VintageStore
    target_growth: dict[str, float]


def simulate(config: SynthConfig) -> SimResult:
    """Draw the synthetic corpus and vintages in memory."""
    rng = np.random.default_rng(config.seed)
    end = config.start + dt.timedelta(days=365 * config.years)
    n_days = (end - config.start).days + 1
    days = [config.start + dt.timedelta(days=i) for i in range(n_days)]

    # latent mood tilts the daily draw toward positive or negative news
    mood = np.empty(n_days)
    mood[0] = 0.0
    shocks = rng.standard_normal(n_days)
    for i in range(1, n_days):
        mood[i] = 0.98 * mood[i - 1] + 0.14 * shocks[i]
    mood = np.clip(mood, -1.5, 1.5)

    docs: list[ParsedDocument] = []
    sentence_records: list[dict] = []
    driver_daily = np.zeros(n_days)
    for i, day in enumerate(days):
        k = 1 + rng.poisson(max(config.sentences_per_day - 1.0, 0.0))
        p_pos = float(np.clip(0.5 + 0.35 * mood[i], 0.05, 0.95))
        drawn = []
        for _ in range(k):
            u = rng.random()
            if u < 0.08:
                pool = _NEUTRAL
            elif u < 0.08 + (1 - 0.08) * p_pos:
                pool = _POSITIVE
            else:
                pool = _NEGATIVE
            drawn.append(pool[int(rng.integers(0, len(pool)))])
        # foreign-located sentences get their own document so their
        # location does not bleed into entity-free sentences
        groups = [
            (f"synth-{day.isoformat()}",
             [t for t in drawn if t.score is not None]),
            (f"synth-{day.isoformat()}-x",
             [t for t in drawn if t.score is None]),
        ]
        for doc_id, templates in groups:
            if not templates:
                continue
            sentences = []
            for j, template in enumerate(templates):
                sent_id = f"{doc_id}:{j + 1}"
                sentences.append(template_sentence(template, sent_id))
                sentence_records.append(
                    {
                        "doc_id": doc_id,
                        "sentence_id": sent_id,
                        "template": template.name,
                        "topic": template.topic,
                        "score": template.score,
                        "tense": template.tense,
                    }
                )
                if (template.topic == config.driver_topic
                        and template.score is not None):
                    driver_daily[i] += template.score
            docs.append(
                ParsedDocument(
                    doc_id=doc_id,
                    date=day,
                    outlet="synthwire",
                    categories={"ECAT"},
                    sentences=sentences,
                )
            )

    driver_smooth = _trailing_mean(driver_daily, config.smoothing_window)
    day_index = {day: i for i, day in enumerate(days)}

    store = VintageStore()
    month_ends = _month_ends(config.start, end)
    week_ends = _week_ends(config.start, end)

    factor = np.empty(len(month_ends))
    f_shocks = rng.standard_normal(len(month_ends))
    factor[0] = f_shocks[0] * 0.5
    for i in range(1, len(month_ends)):
        factor[i] = 0.7 * factor[i - 1] + 0.5 * f_shocks[i]
    for i, me in enumerate(month_ends):
        store.add(Release("CFNAI", me, "month",
                          assign_release_date("CFNAI", me), float(factor[i])))

    for name, phi, sd, lag in (("NFCI", 0.9, 0.3, 3), ("ADS", 0.85, 0.4, 1)):
        z = np.empty(len(week_ends))
        w_shocks = rng.standard_normal(len(week_ends))
        z[0] = w_shocks[0] * sd
        for i in range(1, len(week_ends)):
            z[i] = phi * z[i - 1] + sd * w_shocks[i]
        for i, we in enumerate(week_ends):
            store.add(Release(name, we, "week",
                              we + dt.timedelta(days=lag), float(z[i])))

    # target growth loads on smoothed sentiment at the h0 origin
    warmup = config.smoothing_window * 2
    target_months = [
        me for me in month_ends
        if day_index.get(
            me + dt.timedelta(days=config.release_lag_days - config.h0_days), 0
        ) >= warmup
    ]
    y_values = {}
    eps = rng.standard_normal(len(target_months)) * config.noise_sd
    deltas1 = rng.standard_normal(len(target_months)) * config.revision_sd_first
    deltas2 = rng.standard_normal(len(target_months)) * config.revision_sd_second
    level = 100.0
    y_prev = 0.0
    month_pos = {me: i for i, me in enumerate(month_ends)}
    for i, me in enumerate(target_months):
        origin = me + dt.timedelta(days=config.release_lag_days - config.h0_days)
        s_val = driver_smooth[day_index[origin]]
        # previous month's factor: published before the short-horizon
        # origins, so the benchmark can actually use it
        f_val = factor[month_pos[me] - 1]
        y = (config.eta * s_val + config.rho * y_prev
             + config.gamma * f_val + eps[i])
        level = level * (1.0 + y / 100.0)
        first_date = me + dt.timedelta(days=config.release_lag_days)
        second_date = me + dt.timedelta(
            days=config.release_lag_days + config.revision_lag_days
        )
        store.add(Release(config.target, me, "month", first_date,
                          float(level * (1.0 + deltas1[i]))))
        store.add(Release(config.target, me, "month", second_date,
                          float(level * (1.0 + deltas2[i]))))
        y_values[me.isoformat()] = float(y)
        y_prev = y

    return SimResult(
        docs=docs,
        sentence_records=sentence_records,
        days=days,
        driver_daily=driver_daily,
        store=store,
        target_growth=y_values,
    )


def generate(config: SynthConfig, out_dir: str) -> dict:
    """Write corpus, lexicon, vintages, and manifest; return the manifest."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    sim = simulate(config)
    docs = sim.docs
    days = sim.days
    n_days = len(days)
    driver_daily = sim.driver_daily
    sentence_records = sim.sentence_records

    corpus_path = os.path.join(out_dir, "corpus.clu")
    lexicon_path = os.path.join(out_dir, "lexicon.tsv")
    vintages_path = os.path.join(out_dir, "vintages.csv")
    manifest_path = os.path.join(out_dir, "manifest.json")
    write_corpus(docs, corpus_path)
    with open(lexicon_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(fixture_lexicon_text())
    save_vintages(sim.store, vintages_path)

    manifest = {
        "config": {
            **{k: (v.isoformat() if isinstance(v, dt.date) else v)
               for k, v in asdict(config).items()},
        },
        "paths": {
            "corpus": "corpus.clu",
            "lexicon": "lexicon.tsv",
            "vintages": "vintages.csv",
        },
        "templates": {
            t.name: {"topic": t.topic, "score": t.score, "tense": t.tense}
            for t in TEMPLATES
        },
        "n_documents": len(docs),
        "n_sentences": len(sentence_records),
        "sentences": sentence_records,
        "driver_daily": {
            days[i].isoformat(): float(driver_daily[i]) for i in range(n_days)
        },
        "target_growth": sim.target_growth,
    }
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest
