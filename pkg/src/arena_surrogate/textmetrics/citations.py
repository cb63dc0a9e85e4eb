from __future__ import annotations

from collections.abc import Iterable, Sequence


def citation_metrics(cited_ids: Sequence[str], relevant_ids: Iterable[str], k: int = 10) -> tuple[float, float]:
    """Recall@k and truncated average precision (MAP@k for one query).

    Only the first ``k`` cited ids count. AP is normalised by
    ``min(|relevant|, k)``; relevant passages never cited contribute 0.
    With no relevant passages both scores are 1.0 since nothing can be
    penalised; callers flag such queries.
    """
    if k <= 0:
        raise ValueError("k must be >= 1")
    relevant = set(relevant_ids)
    if not relevant:
        return 1.0, 1.0
    top = list(cited_ids)[:k]
    hits = 0
    precision_sum = 0.0
    for rank, pid in enumerate(top, start=1):
        if pid in relevant:
            hits += 1
            precision_sum += hits / rank
    return hits / len(relevant), precision_sum / min(len(relevant), k)
