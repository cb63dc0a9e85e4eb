"""Pairwise LLM judge over a generic chat-completion endpoint."""
from __future__ import annotations

import itertools
import logging
import os
import time
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import httpx

from ..arena import UnparseableVerdict, canonicalize_verdict
from ..core import PairwiseJudgment, QueryRecord, Verdict, derive_rng
from .config import JudgeEndpointConfig
from .prompts import REQUIRED, check_template, load_template, render

log = logging.getLogger(__name__)

SWAP_LABEL = "judge-swap"
_RETRY_STATUS = frozenset({408, 409, 425, 429, 500, 502, 503, 504})


class JudgeError(RuntimeError):
    pass


class JudgeClient:
    """Posts one user message and returns ``choices[0].message.content``.

    The credential is read from the environment on construction and only
    ever placed in the Authorization header.
    """

    def __init__(self, endpoint: JudgeEndpointConfig, transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(endpoint.credential_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(base_url=endpoint.base_url.rstrip("/"), headers=headers,
                                  timeout=endpoint.timeout, transport=transport)

    def close(self) -> None:
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def complete(self, prompt: str) -> str:
        body = {
            "model": self.endpoint.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.endpoint.temperature,
        }
        last = "no attempt made"
        for attempt in range(self.endpoint.max_retries + 1):
            if attempt:
                time.sleep(self.endpoint.backoff * 2 ** (attempt - 1))
            try:
                resp = self._http.post("/chat/completions", json=body)
            except httpx.TransportError as e:
                last = f"transport error: {type(e).__name__}"
                continue
            if resp.status_code in _RETRY_STATUS:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise JudgeError(f"HTTP {resp.status_code} from judge endpoint")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError):
                raise JudgeError("judge response lacks choices[0].message.content") from None
        raise JudgeError(f"judge endpoint failed after {self.endpoint.max_retries + 1} attempts ({last})")


@dataclass(frozen=True)
class PairTask:
    query_id: str
    model_a: str
    model_b: str
    swapped: bool


def plan_pairs(models: Sequence[str], query_ids: Sequence[str], seed: int) -> list[PairTask]:
    """Every unordered model pair on every query, ordered by (query, pair).

    Presentation order is flipped with probability 0.5 from the
    ``(seed, "judge-swap")`` stream, one draw per task in plan order.
    """
    pairs = list(itertools.combinations(sorted(models), 2))
    qs = sorted(query_ids)
    flips = derive_rng(seed, SWAP_LABEL).random(len(pairs) * len(qs)) < 0.5
    return [PairTask(q, a, b, bool(flips[k]))
            for k, (q, (a, b)) in enumerate(itertools.product(qs, pairs))]


def format_documents(query: QueryRecord) -> str:
    return "\n".join(f"[{p.passage_id}] {p.text}" for p in query.passages)


@dataclass
class JudgeRun:
    judgments: list[PairwiseJudgment] = field(default_factory=list)
    rejects: list[dict] = field(default_factory=list)
    n_requests: int = 0

    @property
    def partial(self) -> bool:
        return bool(self.rejects)


def run_judging(queries: Sequence[QueryRecord], outputs: Mapping[tuple[str, str], str], models: Sequence[str],
                endpoint: JudgeEndpointConfig, seed: int, client: JudgeClient | None = None,
                template: str | None = None) -> JudgeRun:
    """Judge all pairs; ``outputs`` maps (model, query_id) to the raw RAG output."""
    template = template if template is not None else load_template(endpoint.template)
    check_template(template, REQUIRED["pairwise_judge"])
    by_q = {q.query_id: q for q in queries}
    missing = sorted((m, q) for m in models for q in by_q if (m, q) not in outputs)
    if missing:
        raise JudgeError(f"{len(missing)} (model, query) responses missing, e.g. {missing[:3]}")
    tasks = plan_pairs(models, list(by_q), seed)
    own = client is None
    client = client or JudgeClient(endpoint)

    def one(t: PairTask):
        first, second = (t.model_b, t.model_a) if t.swapped else (t.model_a, t.model_b)
        q = by_q[t.query_id]
        prompt = render(template, query=q.text, documents=format_documents(q),
                        answer_a=outputs[(first, t.query_id)], answer_b=outputs[(second, t.query_id)])
        try:
            raw = client.complete(prompt)
        except JudgeError as e:
            return None, str(e)
        try:
            return PairwiseJudgment(t.query_id, t.model_a, t.model_b,
                                    canonicalize_verdict(raw, t.swapped), t.swapped, raw), raw
        except UnparseableVerdict as e:
            return None, f"{e}: {raw[:200]}"

    try:
        with ThreadPoolExecutor(max_workers=endpoint.workers) as ex:
            results = list(ex.map(one, tasks))
    finally:
        if own:
            client.close()
    run = JudgeRun(n_requests=len(tasks))
    for t, (j, info) in zip(tasks, results):
        if j is not None:
            run.judgments.append(j)
        else:
            run.rejects.append({"query_id": t.query_id, "model_a": t.model_a, "model_b": t.model_b,
                                "swapped": t.swapped, "error": info})
    if run.rejects:
        log.warning("%d of %d judge calls rejected", len(run.rejects), len(tasks))
    return run


def judgment_to_json(j: PairwiseJudgment) -> dict:
    return {"query_id": j.query_id, "model_a": j.model_a, "model_b": j.model_b,
            "verdict": j.verdict.value, "swapped": j.swapped, "raw": j.raw}


def judgment_from_json(obj: dict) -> PairwiseJudgment:
    return PairwiseJudgment(str(obj["query_id"]), str(obj["model_a"]), str(obj["model_b"]),
                            Verdict(obj["verdict"]), bool(obj.get("swapped", False)), obj.get("raw"))
