from __future__ import annotations

import enum
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from ..core import QueryRecord, RagResponse
from .citations import citation_metrics
from .langid import TextTooShort, detect_language
from .overlap import bleu, rouge_l
from .parsing import parse_citations, parse_rag_output, strip_citations


class FeatureName(str, enum.Enum):
    LANG_TARGET = "lang_target"
    LANG_ENGLISH = "lang_english"
    CITATION_RECALL10 = "citation_recall10"
    CITATION_MAP10 = "citation_map10"
    SUPPORT_ENTAILMENT = "support_entailment"
    SUPPORT_NEUTRAL = "support_neutral"
    RERANKER_SCORE = "reranker_score"
    ANSWER_ROUGE_L = "answer_rouge_l"
    ANSWER_BLEU = "answer_bleu"
    LLM_ANSWER_OVERLAP = "llm_answer_overlap"
    LLM_FLUENCY = "llm_fluency"


ALL_FEATURES: tuple[FeatureName, ...] = tuple(FeatureName)

FEATURE_RANGES: dict[FeatureName, tuple[float, float]] = {
    FeatureName.LANG_TARGET: (0.0, 1.0),
    FeatureName.LANG_ENGLISH: (0.0, 1.0),
    FeatureName.CITATION_RECALL10: (0.0, 1.0),
    FeatureName.CITATION_MAP10: (0.0, 1.0),
    FeatureName.SUPPORT_ENTAILMENT: (0.0, 1.0),
    FeatureName.SUPPORT_NEUTRAL: (0.0, 1.0),
    FeatureName.RERANKER_SCORE: (0.0, math.inf),
    FeatureName.ANSWER_ROUGE_L: (0.0, 1.0),
    FeatureName.ANSWER_BLEU: (0.0, 1.0),
    FeatureName.LLM_ANSWER_OVERLAP: (1.0, 5.0),
    FeatureName.LLM_FLUENCY: (1.0, 5.0),
}

EXTERNAL_FEATURES = frozenset({
    FeatureName.SUPPORT_ENTAILMENT,
    FeatureName.SUPPORT_NEUTRAL,
    FeatureName.RERANKER_SCORE,
    FeatureName.LLM_ANSWER_OVERLAP,
    FeatureName.LLM_FLUENCY,
})
LLM_FEATURES = (FeatureName.LLM_ANSWER_OVERLAP, FeatureName.LLM_FLUENCY)
LOW_CORRELATION_FEATURES = (
    FeatureName.LANG_TARGET,
    FeatureName.LANG_ENGLISH,
    FeatureName.SUPPORT_ENTAILMENT,
    FeatureName.SUPPORT_NEUTRAL,
)

PRESETS: dict[str, tuple[FeatureName, ...]] = {
    "all11": ALL_FEATURES,
    "no_llm9": tuple(f for f in ALL_FEATURES if f not in LLM_FEATURES),
    "no_lowcorr7": tuple(f for f in ALL_FEATURES if f not in LOW_CORRELATION_FEATURES),
    "only_llm2": LLM_FEATURES,
}


class FeatureError(ValueError):
    pass


def resolve_subset(subset: str | Sequence[str] | None) -> tuple[FeatureName, ...]:
    """Preset name or explicit list -> features in canonical enumeration order."""
    if subset is None:
        return ALL_FEATURES
    if isinstance(subset, str):
        try:
            return PRESETS[subset]
        except KeyError:
            raise FeatureError(f"unknown feature subset {subset!r}; presets: {sorted(PRESETS)}") from None
    chosen = {FeatureName(s) for s in subset}
    if not chosen:
        raise FeatureError("feature subset is empty")
    return tuple(f for f in ALL_FEATURES if f in chosen)


def check_range(feature: FeatureName, value: float) -> float:
    value = float(value)
    lo, hi = FEATURE_RANGES[feature]
    if not math.isfinite(value) or not lo <= value <= hi:
        raise FeatureError(f"{feature.value}={value} outside [{lo}, {hi}]")
    return value


@dataclass(frozen=True)
class FeatureRecord:
    model_id: str
    query_id: str
    feature: FeatureName
    value: float

    def to_json(self) -> dict:
        return {"model": self.model_id, "query_id": self.query_id, "feature": self.feature.value, "value": self.value}


@dataclass
class FeatureVector:
    model_id: str
    values: dict[FeatureName, float]
    n_queries: int
    missing: dict[FeatureName, int] = field(default_factory=dict)

    def as_row(self, features: Sequence[FeatureName]) -> list[float]:
        return [self.values[f] for f in features]

    def to_json(self) -> dict:
        return {
            "model": self.model_id,
            "n_queries": self.n_queries,
            "values": {f.value: v for f, v in self.values.items()},
            "missing": {f.value: n for f, n in self.missing.items() if n},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureVector":
        vec = cls(
            obj["model"],
            {FeatureName(k): float(v) for k, v in obj["values"].items()},
            int(obj.get("n_queries", 0)),
            {FeatureName(k): int(v) for k, v in obj.get("missing", {}).items()},
        )
        for f, v in vec.values.items():
            check_range(f, v)
        return vec


def ingest_external_scores(records: Iterable[dict]) -> list[FeatureRecord]:
    """Validate externally produced scores (NLI support, reranker, pointwise LLM judge).

    Each record is ``{"model", "query_id", "feature", "value"}``. LLM-judge
    scores must be integers in 1..5; reranker scores may exceed 1.
    """
    out = []
    for i, rec in enumerate(records):
        try:
            feature = FeatureName(rec["feature"])
        except ValueError:
            raise FeatureError(f"record {i}: unknown feature {rec['feature']!r}") from None
        if feature not in EXTERNAL_FEATURES:
            raise FeatureError(f"record {i}: {feature.value} is computed internally, not ingested")
        value = rec["value"]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise FeatureError(f"record {i}: value must be a number")
        try:
            value = check_range(feature, value)
        except FeatureError as e:
            raise FeatureError(f"record {i}: {e}") from None
        if feature in LLM_FEATURES and value != int(value):
            raise FeatureError(f"record {i}: {feature.value} must be an integer score, got {value}")
        out.append(FeatureRecord(str(rec["model"]), str(rec["query_id"]), feature, value))
    return out


def aggregate_features(
    records: Iterable[FeatureRecord],
    models: Sequence[str],
    feature_subset=None,
    queries: Sequence[str] | None = None,
) -> list[FeatureVector]:
    """Per-model macro average of each selected feature over queries.

    Missing (model, query, feature) triples are left out of that feature's
    mean and counted in ``FeatureVector.missing``. Duplicate records for the
    same triple are averaged first so each query carries equal weight.
    """
    features = resolve_subset(feature_subset)
    wanted = set(features)
    per: dict[tuple[str, FeatureName], dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    seen_queries: dict[str, set[str]] = defaultdict(set)
    all_queries: set[str] = set()
    for r in records:
        if r.feature not in wanted:
            continue
        per[(r.model_id, r.feature)][r.query_id].append(r.value)
        seen_queries[r.model_id].add(r.query_id)
        all_queries.add(r.query_id)
    universe = set(queries) if queries is not None else all_queries
    out = []
    for m in models:
        values = {}
        missing = {}
        for f in features:
            by_q = per.get((m, f))
            if not by_q:
                raise FeatureError(f"model {m!r} has no records for feature {f.value}")
            means = [sum(v) / len(v) for _, v in sorted(by_q.items())]
            values[f] = sum(means) / len(means)
            missing[f] = len(universe - set(by_q))
        out.append(FeatureVector(m, values, len(seen_queries[m]), missing))
    return out


def make_response(model_id: str, query: QueryRecord, raw_text: str) -> RagResponse:
    reason, answer = parse_rag_output(raw_text)
    cited = parse_citations(raw_text)
    known = {p.passage_id for p in query.passages}
    return RagResponse(
        model_id=model_id,
        query_id=query.query_id,
        raw_text=raw_text,
        reason=reason,
        answer=answer,
        cited_ids=tuple(cited),
        unknown_cited=tuple(c for c in cited if c not in known),
    )


def _detection_text(resp: RagResponse) -> str:
    parts = [p for p in (resp.reason, resp.answer) if p]
    return strip_citations(" ".join(parts))


def response_features(
    query: QueryRecord,
    resp: RagResponse,
    gold_answer: str | None,
    profiles=None,
    k: int = 10,
) -> tuple[list[FeatureRecord], list[str]]:
    """Deterministic features for one (model, query); returns (records, flags)."""
    flags = []
    rec = []

    def add(f, v):
        rec.append(FeatureRecord(resp.model_id, query.query_id, f, check_range(f, v)))

    try:
        probs = detect_language(_detection_text(resp), profiles)
        add(FeatureName.LANG_TARGET, probs.get(query.language, 0.0))
        add(FeatureName.LANG_ENGLISH, probs.get("en", 0.0))
    except TextTooShort:
        add(FeatureName.LANG_TARGET, 0.0)
        add(FeatureName.LANG_ENGLISH, 0.0)
        flags.append("text_too_short")

    if not query.relevant_ids:
        flags.append("no_relevant_passages")
    if resp.unknown_cited:
        flags.append("unknown_citations")
    recall, ap = citation_metrics(resp.cited_ids, query.relevant_ids, k)
    add(FeatureName.CITATION_RECALL10, recall)
    add(FeatureName.CITATION_MAP10, ap)

    if gold_answer is None:
        flags.append("no_gold_answer")
    else:
        cand = strip_citations(resp.answer or "")
        ref = strip_citations(gold_answer)
        add(FeatureName.ANSWER_ROUGE_L, rouge_l(cand, ref))
        add(FeatureName.ANSWER_BLEU, bleu(cand, ref))
    return rec, flags
