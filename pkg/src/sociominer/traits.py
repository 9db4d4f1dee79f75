"""Per-committer text corpora and 52-trait personality scoring.

Two backends produce :class:`TraitVector` objects with the same contract:
an offline lexicon scorer (bundled word list, see ``data/lexicon.json``) and
a client for any HTTP service that accepts ``{"text": ...}`` and answers
``{"traits": {key: fraction, ...}}``.
"""

from __future__ import annotations

import csv
import json
import math
import string
import urllib.error
import urllib.request
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (IneligibleCorpus, InputError, SchemaError, ServiceError,
                     TransportError, UnknownTrait)
from .identity import IdentityMap
from .ingest import EmailMessage
from .taxonomy import N_TRAITS, TRAIT_INDEX, TRAIT_KEYS

MIN_WORDS = 3500


@dataclass(frozen=True)
class AuthorCorpus:
    identity_id: str
    text: str
    word_count: int
    eligible: bool


@dataclass(frozen=True)
class TraitVector:
    identity_id: str
    values: tuple[float, ...]
    source: str  # lexicon | remote

    def __post_init__(self):
        if len(self.values) != N_TRAITS:
            raise ValueError(f"TraitVector needs {N_TRAITS} values, got {len(self.values)}")
        if any(not (0.0 <= v <= 1.0) for v in self.values):
            raise ValueError("trait values must lie in [0, 1]")

    def __getitem__(self, key: str) -> float:
        return self.values[TRAIT_INDEX[key]]


def count_words(text: str) -> int:
    return len(text.split())


def build_author_corpus(messages: Iterable[EmailMessage], imap: IdentityMap,
                        min_words: int = MIN_WORDS,
                        identities: Iterable[str] | None = None) -> list[AuthorCorpus]:
    """Concatenate each identity's cleaned message bodies in time order.

    Corpora below ``min_words`` are returned with ``eligible=False``. When
    ``identities`` is given, only those identity ids get a corpus.
    """
    wanted = set(identities) if identities is not None else None
    by_id: dict[str, list[EmailMessage]] = {}
    for m in messages:
        ident = imap.lookup(m.sender_email)
        if ident is None or (wanted is not None and ident.id not in wanted):
            continue
        by_id.setdefault(ident.id, []).append(m)
    out = []
    for ident_id in sorted(by_id):
        msgs = sorted(by_id[ident_id], key=lambda m: (m.timestamp, m.message_id))
        text = "\n".join(m.body_clean for m in msgs)
        n = count_words(text)
        out.append(AuthorCorpus(ident_id, text, n, n >= min_words))
    return out


def tokenize(text: str) -> list[str]:
    tokens = (t.strip(string.punctuation) for t in text.lower().split())
    return [t for t in tokens if t]


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


class Lexicon:
    """Word -> [(trait, weight)] table with per-trait (mu, sigma) calibration."""

    def __init__(self, entries: Mapping[str, Mapping[str, float]],
                 calibration: Mapping[str, Mapping[str, float]] | None = None,
                 name: str = "custom"):
        self.name = name
        self.entries: dict[str, tuple[tuple[str, float], ...]] = {}
        for word, weights in entries.items():
            for key in weights:
                if key not in TRAIT_INDEX:
                    raise UnknownTrait(key)
            self.entries[word.lower()] = tuple((k, float(w)) for k, w in weights.items())
        calibration = calibration or {}
        for key in calibration:
            if key not in TRAIT_INDEX:
                raise UnknownTrait(key)
        self.mu = np.array([float(calibration.get(k, {}).get("mu", 0.0)) for k in TRAIT_KEYS])
        self.sigma = np.array([float(calibration.get(k, {}).get("sigma", 1.0)) for k in TRAIT_KEYS])
        if np.any(self.sigma <= 0):
            raise InputError("lexicon calibration sigma must be > 0")

    @classmethod
    def from_json(cls, d: Mapping) -> "Lexicon":
        return cls(d["entries"], d.get("calibration"), d.get("name", "custom"))

    @classmethod
    def load(cls, path=None) -> "Lexicon":
        if path is None:
            text = resources.files("sociominer").joinpath("data/lexicon.json").read_text("utf-8")
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        return cls.from_json(json.loads(text))

    def raw_scores(self, text: str) -> tuple[np.ndarray, int]:
        """Summed trait weights per word and the whitespace word count."""
        n = count_words(text)
        totals = np.zeros(N_TRAITS)
        for token, count in Counter(tokenize(text)).items():
            for key, weight in self.entries.get(token, ()):
                totals[TRAIT_INDEX[key]] += weight * count
        return totals / max(n, 1), n

    def score_text(self, text: str) -> np.ndarray:
        rates, _ = self.raw_scores(text)
        z = (rates - self.mu) / self.sigma
        return np.array([_logistic(v) for v in z])


def score_traits_lexicon(corpus: AuthorCorpus, lexicon: Lexicon) -> TraitVector:
    if not corpus.eligible:
        raise IneligibleCorpus(f"{corpus.identity_id}: {corpus.word_count} words is below the gate")
    values = lexicon.score_text(corpus.text)
    return TraitVector(corpus.identity_id, tuple(float(v) for v in values), "lexicon")


def parse_trait_response(identity_id: str, payload) -> TraitVector:
    traits = payload.get("traits") if isinstance(payload, Mapping) else None
    if not isinstance(traits, Mapping):
        raise SchemaError("response has no 'traits' object")
    values = []
    for key in TRAIT_KEYS:
        if key not in traits:
            raise SchemaError(f"response is missing trait {key!r}")
        v = traits[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not (0.0 <= v <= 1.0):
            raise SchemaError(f"trait {key!r} value {v!r} is not a fraction in [0, 1]")
        values.append(float(v))
    return TraitVector(identity_id, tuple(values), "remote")


def score_traits_remote(corpus: AuthorCorpus, endpoint: str, timeout: float = 30.0) -> TraitVector:
    if not corpus.eligible:
        raise IneligibleCorpus(f"{corpus.identity_id}: {corpus.word_count} words is below the gate")
    body = json.dumps({"text": corpus.text}).encode("utf-8")
    req = urllib.request.Request(endpoint, data=body, method="POST",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            status, raw = resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        raise ServiceError(exc.code, exc.read().decode("utf-8", "replace")) from None
    except (urllib.error.URLError, OSError) as exc:
        raise TransportError(str(exc)) from exc
    if not 200 <= status < 300:
        raise ServiceError(status)
    try:
        payload = json.loads(raw)
    except ValueError as exc:
        raise SchemaError(f"response is not JSON: {exc}") from None
    return parse_trait_response(corpus.identity_id, payload)


def score_corpora(corpora: Sequence[AuthorCorpus], scorer: Callable[[AuthorCorpus], TraitVector],
                  concurrency: int = 1) -> list[TraitVector]:
    """Score eligible corpora, optionally in parallel; output sorted by identity id."""
    eligible = [c for c in corpora if c.eligible]
    if concurrency > 1 and len(eligible) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            vectors = list(pool.map(scorer, eligible))
    else:
        vectors = [scorer(c) for c in eligible]
    return sorted(vectors, key=lambda v: v.identity_id)


class LexiconTraitScorer(TransformerMixin, BaseEstimator):
    """Transform raw texts into an ``(n_texts, 52)`` array of trait fractions.

    ``lexicon_path=None`` uses the bundled word list. Texts below
    ``min_words`` raise :class:`IneligibleCorpus` unless ``min_words=0``.
    """

    def __init__(self, lexicon_path=None, min_words=MIN_WORDS):
        self.lexicon_path = lexicon_path
        self.min_words = min_words

    def fit(self, X=None, y=None):
        self.lexicon_ = Lexicon.load(self.lexicon_path)
        self.feature_names_out_ = np.array(TRAIT_KEYS, dtype=object)
        return self

    def transform(self, X):
        if not hasattr(self, "lexicon_"):
            self.fit()
        out = np.empty((len(X), N_TRAITS))
        for i, text in enumerate(X):
            n = count_words(text)
            corpus = AuthorCorpus(str(i), text, n, n >= self.min_words)
            out[i] = score_traits_lexicon(corpus, self.lexicon_).values
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(TRAIT_KEYS, dtype=object)


# ---- traits.csv --------------------------------------------------------

def write_traits_csv(path, vectors: Iterable[TraitVector]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["identity_id", *TRAIT_KEYS])
        for v in sorted(vectors, key=lambda v: v.identity_id):
            w.writerow([v.identity_id, *(f"{x:.6f}" for x in v.values)])


def read_traits_csv(path, source: str = "lexicon") -> list[TraitVector]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["identity_id", *TRAIT_KEYS]:
        raise InputError(f"{path}: header does not match the trait taxonomy")
    out = []
    for row in rows[1:]:
        if len(row) != N_TRAITS + 1:
            raise InputError(f"{path}: row for {row[:1]} has {len(row)} columns")
        out.append(TraitVector(row[0], tuple(float(x) for x in row[1:]), source))
    return out


def write_corpora_csv(path, corpora: Iterable[AuthorCorpus]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["identity_id", "word_count", "eligible"])
        for c in corpora:
            w.writerow([c.identity_id, c.word_count, int(c.eligible)])
