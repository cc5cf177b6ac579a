"""Inverted index over text leaves, and tf-idf ranked search.

Tokenizer: lowercase, split on non-alphanumeric, drop empties — no
stemming, no stop words (deterministic and language-neutral). Score of a
document for a query is the sum over query tokens (with multiplicity) of
tf * idf where tf = term_frequency / doc_length and
idf = ln(1 + doc_count / (1 + docs_containing_term)). Ties break by
ascending record id so result pages are reproducible.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from ..fields import iter_text_leaves
from ..records import MetaRecord

# letters and digits only; \w minus underscore, unicode-aware
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)

TOKENIZER_CONFIG = {"kind": "tokenizer", "name": "alnum-lower", "version": 1}


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def record_tokens(record: MetaRecord) -> list[str]:
    tokens: list[str] = []
    for _, text in iter_text_leaves(record.fields):
        tokens.extend(tokenize(text))
    return tokens


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    doc_lengths: dict[str, int] = field(default_factory=dict)
    doc_count: int = 0
    built_at_snapshot: str = ""

    def validate(self) -> None:
        assert self.doc_count == len(self.doc_lengths)
        for term, posting in self.postings.items():
            ids = [doc_id for doc_id, _ in posting]
            assert ids == sorted(ids) and len(set(ids)) == len(ids), term

    def to_value(self) -> dict:
        return {
            "built_at_snapshot": self.built_at_snapshot,
            "doc_count": self.doc_count,
            "doc_lengths": self.doc_lengths,
            "postings": {t: [[d, tf] for d, tf in p] for t, p in self.postings.items()},
        }

    @staticmethod
    def from_value(value: dict) -> "InvertedIndex":
        return InvertedIndex(
            postings={t: [(d, tf) for d, tf in p] for t, p in value["postings"].items()},
            doc_lengths=dict(value["doc_lengths"]),
            doc_count=value["doc_count"],
            built_at_snapshot=value["built_at_snapshot"],
        )


def build_index(records: Iterable[MetaRecord], snapshot: str = "") -> InvertedIndex:
    """Full index build. Records with no text still count toward doc_count."""
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    for record in records:
        tokens = record_tokens(record)
        doc_lengths[record.id] = len(tokens)
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, []).append((record.id, tf))
    for posting in postings.values():
        posting.sort(key=lambda item: item[0])
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        doc_count=len(doc_lengths),
        built_at_snapshot=snapshot,
    )


def rebuild_search_index(store, registry, pseudonym_key, timestamp: str) -> InvertedIndex:
    """Full rebuild over the store snapshot, persisted and lineage-logged.

    Hospital records are indexed through their anonymised projection
    (original record ids kept as posting ids), so identifier tokens are
    never searchable. Needs the pseudonym key whenever hospital records
    exist.
    """
    from ..canonical import digest_value
    from ..errors import ConfigError
    from ..records import Stage, SubDomain, event
    from dataclasses import replace

    def projected():
        for record in store.scan():
            if record.sub_domain == SubDomain.HOSPITAL:
                from ..hospital.anonymise import anonymise

                if not pseudonym_key:
                    raise ConfigError(
                        "CDP_PSEUDONYM_KEY is required to index hospital records"
                    )
                anon = anonymise(record, registry.anonymise_policy(), pseudonym_key)
                yield replace(anon, id=record.id)
            else:
                yield record

    index = build_index(projected(), snapshot=store.snapshot_marker())
    store.save_index_blob(index.to_value())
    store.append_lineage(event(
        Stage.INDEX,
        config_digest=digest_value(TOKENIZER_CONFIG),
        timestamp=timestamp,
    ))
    return index


def search(query: str, index: InvertedIndex, limit: int = 50) -> list[tuple[str, float]]:
    """Ranked (record id, score) for documents sharing at least one token."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    scores: dict[str, float] = {}
    for token in tokenize(query):
        posting = index.postings.get(token)
        if not posting:
            continue  # unknown tokens contribute zero
        idf = math.log(1.0 + index.doc_count / (1.0 + len(posting)))
        for doc_id, tf in posting:
            weight = (tf / index.doc_lengths[doc_id]) * idf
            scores[doc_id] = scores.get(doc_id, 0.0) + weight
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:limit]
