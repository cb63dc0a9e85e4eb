"""Synthetic worlds with known Bradley-Terry strengths, plus brute-force oracles.

Nothing here is used by the production path; it exists so properties of the
pipeline can be checked against ground truth without any LLM in the loop.
"""
from __future__ import annotations

import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ._backend import HAVE_NUMBA, njit
from .arena import PairCounts, regularized_wins
from .core import PairwiseJudgment, Verdict, derive_rng
from .textmetrics.features import (ALL_FEATURES, EXTERNAL_FEATURES, FEATURE_RANGES, LLM_FEATURES, FeatureName,
                                   FeatureVector)

# Baseline names in a plausible strength order (strongest first); used when a
# world has exactly 19 models so the default holdout names resolve.
BASELINE_MODELS = (
    "GPT-4o", "GPT-4", "Llama-3 (70B)", "Mixtral (8x22B)", "Command R", "Aya-23",
    "Qwen2 (7B)", "Phi-3 (medium)", "Mixtral (8x7B)", "Command R+", "Llama-3 (8B)",
    "GPT-3.5", "Gemma-1.1 (7B)", "Mistral-v0.3 (7B)", "Mistral-v0.2 (7B)",
    "Phi-3 (small)", "Qwen2 (1.5B)", "Phi-3 (mini)", "Gemma-1.1 (2B)",
)

# raw signal -> feature scale: value = offset + scale * raw, then clamped
_AFFINE = {
    (0.0, 1.0): (0.5, 1 / 8),
    (1.0, 5.0): (3.0, 1 / 2),
    (0.0, math.inf): (1.0, 1 / 4),
}


def evenly_spaced_logits(n: int, lo: float = -2.5, hi: float = 2.5) -> list[float]:
    """Strongest first."""
    return list(np.linspace(hi, lo, n))


def default_model_names(n: int) -> tuple[str, ...]:
    if n == len(BASELINE_MODELS):
        return BASELINE_MODELS
    return tuple(f"model-{i:02d}" for i in range(n))


@dataclass
class SyntheticWorld:
    n_models: int
    true_logits: Sequence[float]
    n_queries: int = 100
    feature_spec: Mapping[FeatureName, tuple[float, float]] = field(
        default_factory=lambda: {f: (1.0, 0.3) for f in ALL_FEATURES})
    p_tie: float = 0.0
    seed: int = 0
    model_names: Sequence[str] | None = None

    def __post_init__(self):
        t = np.asarray(self.true_logits, dtype=np.float64)
        if t.shape != (self.n_models,):
            raise ValueError("need one true logit per model")
        # skip re-centring when already centred so JSON round trips are exact
        if abs(t.mean()) > 1e-12:
            t = t - t.mean()
        self.true_logits = tuple(float(v) for v in t)
        if self.model_names is None:
            self.model_names = default_model_names(self.n_models)
        self.model_names = tuple(self.model_names)
        if len(set(self.model_names)) != self.n_models:
            raise ValueError("model names must be unique")
        if not 0 <= self.p_tie < 1:
            raise ValueError("p_tie must lie in [0, 1)")
        self.feature_spec = {FeatureName(k): (float(w), float(s)) for k, (w, s) in self.feature_spec.items()}
        for f, (_, sd) in self.feature_spec.items():
            if sd < 0:
                raise ValueError(f"noise_sd for {f.value} must be >= 0")

    @property
    def query_ids(self) -> list[str]:
        return [f"q{i:04d}" for i in range(self.n_queries)]

    def truth(self) -> dict[str, float]:
        return dict(zip(self.model_names, self.true_logits))

    @classmethod
    def from_json(cls, obj: dict) -> "SyntheticWorld":
        feats = obj.get("features")
        kwargs = {}
        if feats is not None:
            kwargs["feature_spec"] = {
                k: (v["signal_weight"], v["noise_sd"]) if isinstance(v, Mapping) else tuple(v)
                for k, v in feats.items()
            }
        logits = obj.get("true_logits") or evenly_spaced_logits(obj["n_models"])
        return cls(
            n_models=obj["n_models"],
            true_logits=logits,
            n_queries=obj.get("n_queries", 100),
            p_tie=obj.get("p_tie", 0.0),
            seed=obj.get("seed", 0),
            model_names=obj.get("model_names"),
            **kwargs,
        )

    def to_json(self) -> dict:
        return {
            "n_models": self.n_models,
            "true_logits": list(self.true_logits),
            "n_queries": self.n_queries,
            "p_tie": self.p_tie,
            "features": {f.value: {"signal_weight": w, "noise_sd": s} for f, (w, s) in self.feature_spec.items()},
            "seed": self.seed,
            "model_names": list(self.model_names),
        }


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def generate_judgments(world: SyntheticWorld) -> list[PairwiseJudgment]:
    """Every unordered pair judged on every query; P(i wins) = (1 - p_tie) * sigmoid(li - lj)."""
    if world.n_models < 2:
        raise ValueError("need at least two models")
    rng = derive_rng(world.seed, "judgments")
    pairs = list(itertools.combinations(range(world.n_models), 2))
    logits = np.asarray(world.true_logits)
    i_idx = np.array([p[0] for p in pairs])
    j_idx = np.array([p[1] for p in pairs])
    p_win = (1.0 - world.p_tie) * _sigmoid(logits[i_idx] - logits[j_idx])
    u = rng.random((world.n_queries, len(pairs)))
    names = world.model_names
    out = []
    for q, qid in enumerate(world.query_ids):
        for k, (i, j) in enumerate(pairs):
            if u[q, k] < p_win[k]:
                v = Verdict.WIN_A
            elif u[q, k] < p_win[k] + world.p_tie:
                v = Verdict.TIE
            else:
                v = Verdict.WIN_B
            out.append(PairwiseJudgment(qid, names[i], names[j], v))
    return out


def generate_features(world: SyntheticWorld) -> list[FeatureVector]:
    """One feature vector per model: clamp(affine(signal_weight * logit + noise))."""
    rng = derive_rng(world.seed, "features")
    feats = [f for f in ALL_FEATURES if f in world.feature_spec]
    noise = rng.standard_normal((world.n_models, len(feats)))
    out = []
    for i, m in enumerate(world.model_names):
        values = {}
        for k, f in enumerate(feats):
            w, sd = world.feature_spec[f]
            lo, hi = FEATURE_RANGES[f]
            offset, scale = _AFFINE[(lo, hi)]
            raw = w * world.true_logits[i] + sd * noise[i, k]
            values[f] = float(min(max(offset + scale * raw, lo), hi))
        out.append(FeatureVector(m, values, world.n_queries))
    return out


def bt_log_likelihood(logits: np.ndarray, wins: np.ndarray) -> np.ndarray:
    """Log-likelihood for one logit vector or a batch of shape (..., n)."""
    d = logits[..., :, None] - logits[..., None, :]
    # log sigmoid(d), stable for large |d|
    log_p = -np.logaddexp(0.0, -d)
    return (wins * log_p).sum(axis=(-1, -2))


def brute_force_bt(counts: PairCounts, grid_step: float = 0.01, grid_radius: float = 3.0,
                   reg: float = 0.0) -> np.ndarray:
    """Exhaustive grid search for the centred BT maximum likelihood (<= 4 models).

    The first n - 1 logits range over the grid and the last one is fixed by
    centring. ``reg`` applies the same pseudo-counts as ``fit_bt``.
    """
    n = len(counts.models)
    if n > 4:
        raise ValueError("brute_force_bt is limited to 4 models")
    if n < 2:
        raise ValueError("need at least two models")
    wins = regularized_wins(counts, reg)
    np.fill_diagonal(wins, 0.0)
    steps = int(round(grid_radius / grid_step))
    grid = np.arange(-steps, steps + 1) * grid_step
    best_ll = -np.inf
    best = None
    # iterate the first free coordinate, vectorise the rest
    for t0 in grid:
        rest = np.stack(np.meshgrid(*([grid] * (n - 2)), indexing="ij"), axis=-1).reshape(-1, n - 2) \
            if n > 2 else np.zeros((1, 0))
        free = np.column_stack([np.full(rest.shape[0], t0), rest])
        theta = np.column_stack([free, -free.sum(axis=1)])
        ll = bt_log_likelihood(theta, wins)
        k = int(np.argmax(ll))
        if ll[k] > best_ll:
            best_ll = ll[k]
            best = theta[k]
    return np.asarray(best)


def brute_force_lcs(a: Sequence, b: Sequence) -> int:
    """LCS length straight from the recursive definition (no memo)."""
    if len(a) > 12 or len(b) > 12:
        raise ValueError("brute_force_lcs is limited to length 12")
    if not a or not b:
        return 0
    if a[0] == b[0]:
        return 1 + brute_force_lcs(a[1:], b[1:])
    return max(brute_force_lcs(a[1:], b), brute_force_lcs(a, b[1:]))


def brute_force_tau(rank_a: Sequence[float], rank_b: Sequence[float]) -> float:
    """Kendall tau-b by direct pair enumeration (n <= 9)."""
    n = len(rank_a)
    if n != len(rank_b):
        raise ValueError("length mismatch")
    if n > 9:
        raise ValueError("brute_force_tau is limited to 9 items")
    conc = disc = ta = tb = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = rank_a[i] - rank_a[j]
            db = rank_b[i] - rank_b[j]
            if da == 0 and db == 0:
                continue
            if da == 0:
                ta += 1
            elif db == 0:
                tb += 1
            elif da * db > 0:
                conc += 1
            else:
                disc += 1
    denom = math.sqrt((conc + disc + ta) * (conc + disc + tb))
    return (conc - disc) / denom if denom else float("nan")


def _all_sequences(max_len: int, alphabet: int) -> tuple[np.ndarray, np.ndarray]:
    seqs = [s for L in range(max_len + 1) for s in itertools.product(range(alphabet), repeat=L)]
    buf = np.zeros((len(seqs), max_len), dtype=np.int64)
    lens = np.zeros(len(seqs), dtype=np.int64)
    for k, s in enumerate(seqs):
        buf[k, :len(s)] = s
        lens[k] = len(s)
    return buf, lens


def _masks_by_popcount(max_len: int) -> tuple[np.ndarray, np.ndarray]:
    """For each length m, all m-bit masks ordered by descending popcount."""
    chunks, offsets = [], [0]
    for m in range(max_len + 1):
        masks = sorted(range(1 << m), key=lambda x: (-bin(x).count("1"), x))
        chunks.append(np.array(masks, dtype=np.int64))
        offsets.append(offsets[-1] + len(masks))
    return np.concatenate(chunks), np.array(offsets, dtype=np.int64)


def _lcs_enum(a, b, masks, offsets):
    # largest subsequence of a (by enumeration) that is also a subsequence of b
    m = a.shape[0]
    for k in range(offsets[m], offsets[m + 1]):
        mask = masks[k]
        j = 0
        ok = True
        size = 0
        for i in range(m):
            if (mask >> i) & 1:
                size += 1
                while j < b.shape[0] and b[j] != a[i]:
                    j += 1
                if j == b.shape[0]:
                    ok = False
                    break
                j += 1
        if ok:
            return size
    return 0


def lcs_by_enumeration(a: Sequence[int], b: Sequence[int]) -> int:
    """LCS length by testing every subsequence of ``a`` against ``b``."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    masks, offsets = _masks_by_popcount(a.size)
    return int(_lcs_enum(a, b, masks, offsets))


if HAVE_NUMBA:
    from .kernels.text import _lcs_nb

    _lcs_enum_nb = njit(_lcs_enum)

    def _sweep(buf, lens, masks, offsets):
        n = buf.shape[0]
        mismatches = 0
        for p in range(n):
            a = buf[p, :lens[p]]
            for q in range(n):
                b = buf[q, :lens[q]]
                if _lcs_enum_nb(a, b, masks, offsets) != _lcs_nb(a, b):
                    mismatches += 1
        return mismatches

    _sweep_nb = njit(_sweep)
else:  # pragma: no cover
    _sweep_nb = None


def exhaustive_lcs_check(max_len: int = 8, alphabet: int = 3) -> tuple[int, int]:
    """Compare the subsequence-enumeration oracle against the compiled DP
    kernel on every ordered pair of sequences up to ``max_len``.

    Returns (pairs checked, mismatches). Needs numba: at the defaults the
    sweep covers ~9.7e7 pairs.
    """
    if _sweep_nb is None:
        raise RuntimeError("exhaustive_lcs_check requires numba")
    buf, lens = _all_sequences(max_len, alphabet)
    masks, offsets = _masks_by_popcount(max_len)
    return int(buf.shape[0]) ** 2, int(_sweep_nb(buf, lens, masks, offsets))


@dataclass(frozen=True)
class SyntheticCorpus:
    """Text-level stand-in for a RAG dataset, shaped like the pipeline's input files."""

    queries: list[dict]
    responses: list[dict]
    gold: list[dict]
    external_scores: list[dict]


def synthetic_corpus(world: SyntheticWorld, n_passages: int = 5, n_relevant: int = 2) -> SyntheticCorpus:
    """Queries, passages and model outputs whose quality follows the true logits.

    A model of strength l keeps each gold-answer word and cites a relevant
    passage with probability sigmoid(l); otherwise it substitutes a random
    word or an irrelevant passage. The five externally scored features are
    drawn like ``generate_features`` but per (model, query).
    """
    from .textmetrics.langid import corpus_text

    if not 1 <= n_relevant < n_passages:
        raise ValueError("need 1 <= n_relevant < n_passages")
    rng = derive_rng(world.seed, "corpus")
    sentences = [s.strip() + "." for s in corpus_text("en").split(".") if s.strip()]
    vocab = sorted({w.strip(",").lower() for s in sentences for w in s.rstrip(".").split()})
    skill = _sigmoid(np.asarray(world.true_logits))
    queries, gold, responses, external = [], [], [], []
    for q, qid in enumerate(world.query_ids):
        picks = rng.choice(len(sentences), size=n_passages, replace=False)
        doc = 1000 + q
        passages = [{"passage_id": f"{doc}#{k}", "text": sentences[s], "relevant": k < n_relevant}
                    for k, s in enumerate(picks)]
        answer = sentences[picks[0]]
        queries.append({"query_id": qid, "language": "en", "text": f"Question {q}: what does passage {doc} say?",
                        "passages": passages})
        gold.append({"query_id": qid, "answer": answer})
        words = answer.rstrip(".").split()
        for i, m in enumerate(world.model_names):
            keep = rng.random(len(words)) < skill[i]
            subs = rng.integers(0, len(vocab), size=len(words))
            said = " ".join(w if k else vocab[s] for w, k, s in zip(words, keep, subs))
            good = rng.random(n_relevant) < skill[i]
            bad = rng.integers(n_relevant, n_passages, size=n_relevant)
            cites = "".join(f" [{passages[k if g else b]['passage_id']}]" for k, (g, b) in enumerate(zip(good, bad)))
            text = (f"##Reason: The contexts describe the topic in detail and support the claim{cites}. "
                    f"##Answer: {said}.")
            responses.append({"model": m, "query_id": qid, "output": text})
    feats = [f for f in ALL_FEATURES if f in EXTERNAL_FEATURES and f in world.feature_spec]
    noise = rng.standard_normal((world.n_models, world.n_queries, len(feats)))
    for i, m in enumerate(world.model_names):
        for q, qid in enumerate(world.query_ids):
            for k, f in enumerate(feats):
                w, sd = world.feature_spec[f]
                lo, hi = FEATURE_RANGES[f]
                offset, scale = _AFFINE[(lo, hi)]
                v = min(max(offset + scale * (w * world.true_logits[i] + sd * noise[i, q, k]), lo), hi)
                v = int(round(v)) if f in LLM_FEATURES else round(float(v), 6)
                external.append({"model": m, "query_id": qid, "feature": f.value, "value": v})
    return SyntheticCorpus(queries, responses, gold, external)

