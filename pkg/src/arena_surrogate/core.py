"""Domain types shared across the pipeline, dataset validation and seeded RNG."""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

import numpy as np


class Verdict(enum.Enum):
    WIN_A = "A"
    WIN_B = "B"
    TIE = "TIE"

    def flipped(self) -> "Verdict":
        if self is Verdict.WIN_A:
            return Verdict.WIN_B
        if self is Verdict.WIN_B:
            return Verdict.WIN_A
        return self

    @property
    def score_a(self) -> float:
        return {Verdict.WIN_A: 1.0, Verdict.WIN_B: 0.0, Verdict.TIE: 0.5}[self]


@dataclass(frozen=True)
class Passage:
    passage_id: str
    text: str
    relevant: bool


@dataclass(frozen=True)
class QueryRecord:
    query_id: str
    language: str
    text: str
    passages: tuple[Passage, ...]

    def __post_init__(self):
        if not self.passages:
            raise ValueError(f"query {self.query_id!r} has no passages")
        ids = [p.passage_id for p in self.passages]
        if len(set(ids)) != len(ids):
            raise ValueError(f"query {self.query_id!r} has duplicate passage ids")

    @property
    def relevant_ids(self) -> frozenset[str]:
        return frozenset(p.passage_id for p in self.passages if p.relevant)


@dataclass(frozen=True)
class RagResponse:
    model_id: str
    query_id: str
    raw_text: str
    reason: str | None = None
    answer: str | None = None
    cited_ids: tuple[str, ...] = ()
    # cited ids that are not passages of the query; kept so citation
    # metrics count them against precision
    unknown_cited: tuple[str, ...] = ()


@dataclass(frozen=True)
class PairwiseJudgment:
    query_id: str
    model_a: str
    model_b: str
    verdict: Verdict
    swapped: bool = False
    raw: str | None = None

    def __post_init__(self):
        if self.model_a == self.model_b:
            raise ValueError("a model cannot be judged against itself")

    def presented(self) -> "PairwiseJudgment":
        """Same judgment expressed in presentation order (undoes canonicalisation)."""
        v = self.verdict.flipped() if self.swapped else self.verdict
        return PairwiseJudgment(self.query_id, self.model_a, self.model_b, v, self.swapped, self.raw)


@dataclass
class ValidationReport:
    unknown_query_refs: list[tuple[str, str]] = field(default_factory=list)
    queries_without_relevant: list[str] = field(default_factory=list)
    missing_responses: list[tuple[str, str]] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not (self.unknown_query_refs or self.queries_without_relevant or self.missing_responses)

    def __bool__(self) -> bool:
        return not self.is_empty

    def lines(self) -> list[str]:
        out = [f"response from {m!r} references unknown query {q!r}" for m, q in self.unknown_query_refs]
        out += [f"query {q!r} has no relevant passage" for q in self.queries_without_relevant]
        out += [f"model {m!r} has no response for query {q!r}" for m, q in self.missing_responses]
        return out


def validate_dataset(queries, responses) -> ValidationReport:
    """Check that responses join to queries and cover the full model x query grid.

    Never raises; an empty report means the dataset is ready for the pipeline.
    """
    report = ValidationReport()
    by_id = {q.query_id: q for q in queries}
    models = sorted({r.model_id for r in responses})
    seen = set()
    for r in responses:
        if r.query_id not in by_id:
            report.unknown_query_refs.append((r.model_id, r.query_id))
        else:
            seen.add((r.model_id, r.query_id))
    report.queries_without_relevant = sorted(q.query_id for q in queries if not q.relevant_ids)
    report.missing_responses = [
        (m, q) for m in models for q in sorted(by_id) if (m, q) not in seen
    ]
    return report


def derive_rng(seed: int, label: str) -> np.random.Generator:
    """Independent, reproducible PCG64 stream keyed by ``(seed, label)``.

    The label is hashed into the SeedSequence spawn key, so streams for
    different labels are statistically independent and can be created in
    any order (or in parallel) without changing each other's draws.
    """
    if not label:
        raise ValueError("label must be non-empty")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=16).digest()
    key = tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=key)))


def uniform_u64(seed: int, label: str, n: int) -> np.ndarray:
    """First ``n`` raw 64-bit draws of the ``(seed, label)`` stream."""
    return derive_rng(seed, label).bit_generator.random_raw(n)
