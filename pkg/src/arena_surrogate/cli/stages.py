"""Pipeline stages. Each ``cmd_*`` reads its inputs, writes files under the
output directory and returns a process exit code."""
from __future__ import annotations

import logging
from collections import Counter
from pathlib import Path

from .. import __version__
from ..ablation import ablate_features, ablate_sampling
from ..arena import BtFit, JudgmentPool, bootstrap_bt
from ..core import Passage, QueryRecord, validate_dataset
from ..simkit import SyntheticWorld, evenly_spaced_logits, generate_features, generate_judgments, synthetic_corpus
from ..surrogate import HoldoutProtocol, surrogate_pipeline
from ..textmetrics.features import (EXTERNAL_FEATURES, FeatureError, FeatureName, FeatureVector, aggregate_features,
                                    ingest_external_scores, make_response, resolve_subset, response_features)
from .config import ConfigError, RunConfig
from .io import InputError, read_json, read_jsonl, sha256_file, write_csv, write_json, write_jsonl
from .judge import JudgeError, judgment_from_json, judgment_to_json, run_judging

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 3

FEATURES_JSONL = "features.jsonl"
VECTORS_JSON = "feature_vectors.json"
JUDGMENTS_JSONL = "judgments.jsonl"
REJECTS_JSONL = "judge_rejects.jsonl"
BT_JSON = "bt_fit.json"
BT_CSV = "bt_leaderboard.csv"
FOREST_JSON = "forest.json"
SURROGATE_CSV = "surrogate_leaderboard.csv"
SURROGATE_JSON = "surrogate_report.json"
ABLATE_SAMPLING_CSV = "ablate_sampling.csv"
ABLATE_FEATURES_CSV = "ablate_features.csv"
REPORT_MD = "report.md"
REPORT_JSON = "report.json"


class StageError(ValueError):
    pass


# ---------------------------------------------------------------- inputs

def _each(path: Path, parse):
    out = []
    for lineno, obj in enumerate(read_jsonl(path), 1):
        try:
            out.append(parse(obj))
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"{path}: record {lineno}: {type(e).__name__}: {e}") from None
    return out


def _query(obj) -> QueryRecord:
    return QueryRecord(str(obj["query_id"]), str(obj["language"]), str(obj["text"]),
                       tuple(Passage(str(p["passage_id"]), str(p["text"]), bool(p["relevant"]))
                             for p in obj["passages"]))


def load_queries(path: Path) -> list[QueryRecord]:
    return _each(path, _query)


def load_outputs(path: Path) -> dict[tuple[str, str], str]:
    out = {}
    for m, q, text in _each(path, lambda o: (str(o["model"]), str(o["query_id"]), str(o["output"]))):
        if (m, q) in out:
            raise InputError(f"{path}: duplicate response for model {m!r}, query {q!r}")
        out[(m, q)] = text
    return out


def load_gold(path: Path) -> dict[str, str]:
    return dict(_each(path, lambda o: (str(o["query_id"]), str(o["answer"]))))


def _need(cfg: RunConfig, given: Path | None, produced: str, what: str) -> Path:
    path = given if given is not None else cfg.out(produced)
    if not Path(path).exists():
        raise StageError(f"missing {what}: {path}")
    return Path(path)


def load_vectors(path: Path) -> list[FeatureVector]:
    doc = read_json(path)
    return [FeatureVector.from_json(v) for v in doc["vectors"]]


def load_pool(path: Path) -> JudgmentPool:
    return JudgmentPool.from_judgments(_each(path, judgment_from_json))


def _holdout(cfg: RunConfig) -> HoldoutProtocol:
    return HoldoutProtocol(frozenset(cfg.holdout_models))


# ---------------------------------------------------------------- features

def cmd_features(cfg: RunConfig) -> int:
    p = cfg.paths
    if p.queries is None or p.responses is None:
        raise StageError("features needs paths.queries and paths.responses")
    subset = resolve_subset(cfg.feature_subset)
    external_needed = [f for f in subset if f in EXTERNAL_FEATURES]
    if external_needed and p.external_scores is None:
        raise StageError("no external score file for ingested features: "
                         + ", ".join(f.value for f in external_needed))
    overlap_needed = {FeatureName.ANSWER_ROUGE_L, FeatureName.ANSWER_BLEU} & set(subset)
    if overlap_needed and p.gold is None:
        raise StageError("answer-overlap features need paths.gold")

    queries = load_queries(p.queries)
    outputs = load_outputs(p.responses)
    gold = load_gold(p.gold) if p.gold is not None else {}
    by_q = {q.query_id: q for q in queries}
    responses = [make_response(m, by_q[q], text) for (m, q), text in sorted(outputs.items()) if q in by_q]
    report = validate_dataset(queries, responses)
    for line in report.lines():
        log.warning("%s", line)
    unknown = sorted({q for (_, q) in outputs if q not in by_q})
    if unknown:
        raise StageError(f"responses reference unknown queries: {unknown[:5]}")

    wanted = set(subset)
    records, flags = [], Counter()
    for r in responses:
        recs, fl = response_features(by_q[r.query_id], r, gold.get(r.query_id))
        records += [x for x in recs if x.feature in wanted]
        flags.update(fl)
    if external_needed:
        ext = ingest_external_scores(_each(p.external_scores, lambda o: o))
        records += [x for x in ext if x.feature in wanted]
    models = sorted({m for m, _ in outputs})
    try:
        vectors = aggregate_features(records, models, subset, queries=sorted(by_q))
    except FeatureError as e:
        raise StageError(f"aggregation failed: {e}") from None

    order = {f: i for i, f in enumerate(subset)}
    records.sort(key=lambda r: (r.model_id, r.query_id, order[r.feature]))
    write_jsonl(cfg.out(FEATURES_JSONL), (r.to_json() for r in records))
    write_json(cfg.out(VECTORS_JSON), {
        "language": cfg.language,
        "features": [f.value for f in subset],
        "flags": dict(sorted(flags.items())),
        "vectors": [v.to_json() for v in vectors],
    })
    write_csv(cfg.out(f"features_{cfg.language}.csv"), ["model"] + [f.value for f in subset],
              ([v.model_id] + v.as_row(subset) for v in vectors))
    log.info("features: %d models x %d features", len(vectors), len(subset))
    return EXIT_OK


# ---------------------------------------------------------------- judge

def cmd_judge(cfg: RunConfig, client=None) -> int:
    if cfg.judge is None:
        raise StageError("judge needs a 'judge' endpoint section in the config")
    if cfg.paths.queries is None or cfg.paths.responses is None:
        raise StageError("judge needs paths.queries and paths.responses")
    queries = load_queries(cfg.paths.queries)
    outputs = load_outputs(cfg.paths.responses)
    models = sorted({m for m, _ in outputs})
    try:
        run = run_judging(queries, outputs, models, cfg.judge, cfg.seed, client=client)
    except JudgeError as e:
        raise StageError(str(e)) from None
    write_jsonl(cfg.out(JUDGMENTS_JSONL), (judgment_to_json(j) for j in run.judgments))
    write_jsonl(cfg.out(REJECTS_JSONL), run.rejects)
    write_json(cfg.out("judge_meta.json"), {
        "requests": run.n_requests, "accepted": len(run.judgments), "rejected": len(run.rejects),
        "endpoint_model": cfg.judge.model, "temperature": cfg.judge.temperature, "template": cfg.judge.template,
        "seed": cfg.seed, "rng_labels": ["judge-swap"],
    })
    return EXIT_PARTIAL if run.partial else EXIT_OK


# ---------------------------------------------------------------- fit-bt

def cmd_fit_bt(cfg: RunConfig) -> int:
    pool = load_pool(_need(cfg, cfg.paths.judgments, JUDGMENTS_JSONL, "judgments"))
    tcfg = cfg.tournament_for(pool.n_queries)
    fit = bootstrap_bt(pool, tcfg, workers=cfg.workers)
    write_json(cfg.out(BT_JSON), fit.to_json())
    write_csv(cfg.out(BT_CSV), ["rank", "model", "mean", "ci_low_offset", "ci_high_offset", "logit"],
              ([i + 1, r["model"], r["mean"], r["ci_low_offset"], r["ci_high_offset"], r["logit"]]
               for i, r in enumerate(fit.rows())))
    return EXIT_OK


# ---------------------------------------------------------------- surrogate

def _surrogate_inputs(cfg: RunConfig):
    vectors = load_vectors(_need(cfg, cfg.paths.features, VECTORS_JSON, "feature vectors"))
    bt = BtFit.from_json(read_json(_need(cfg, cfg.paths.bt_fit, BT_JSON, "BT fit")))
    have = {v.model_id for v in vectors}
    absent = sorted(set(cfg.holdout_models) - have)
    if absent:
        raise StageError(f"holdout models have no feature vectors: {absent}")
    return vectors, bt


def cmd_surrogate(cfg: RunConfig) -> int:
    vectors, bt = _surrogate_inputs(cfg)
    protocol = _holdout(cfg)
    res = surrogate_pipeline(vectors, bt, protocol, cfg.forest, cfg.seed, resolve_subset(cfg.feature_subset),
                             cfg.train_predictions,
                             per_tournament=cfg.per_tournament_r2 and len(protocol.holdout_models) >= 2)
    for w in res.warnings:
        log.warning("%s", w)
    write_json(cfg.out(FOREST_JSON), res.forest.to_json())
    bt_ranks = res.bt_leaderboard.ranks()
    bt_scores = res.bt_leaderboard.scores()
    train = set(res.train.model_ids)
    rows = []
    for e in res.leaderboard.entries:
        rows.append({"rank": e.rank, "model": e.model, "predicted_logit": e.score,
                     "bt_rank": bt_ranks.get(e.model), "bt_mean": bt_scores.get(e.model),
                     "role": "train" if e.model in train else
                             ("holdout" if e.model in protocol.holdout_models else "unfitted")})
    write_csv(cfg.out(SURROGATE_CSV), ["rank", "model", "predicted_logit", "bt_rank", "bt_mean", "role"],
              ([r[k] if r[k] is not None else "" for k in ("rank", "model", "predicted_logit", "bt_rank",
                                                            "bt_mean", "role")] for r in rows))
    write_json(cfg.out(SURROGATE_JSON), {
        "tau_vs_bt": res.tau_vs_bt,
        "holdout_r2": res.holdout_r2,
        "r2_protocol": res.r2_protocol.to_json() if res.r2_protocol else None,
        "feature_importance": res.importances,
        "features": [f.value for f in res.train.feature_names],
        "train_models": list(res.train.model_ids),
        "holdout_models": sorted(protocol.holdout_models),
        "train_predictions": cfg.train_predictions,
        "warnings": res.warnings,
        "leaderboard": rows,
        "seed": cfg.seed,
        "rng_labels": ["forest/tree-<t>"] + (["tournament-<i>/forest/tree-<t>"] if res.r2_protocol else []),
    })
    return EXIT_OK


# ---------------------------------------------------------------- ablations

def cmd_ablate_sampling(cfg: RunConfig, query_grid=None, fraction_grid=None, reps=None) -> int:
    a = cfg.ablation
    qg = tuple(query_grid) if query_grid is not None else a.query_grid
    fg = tuple(fraction_grid) if fraction_grid is not None else a.fraction_grid
    if not qg or not fg:
        raise StageError("sampling grids must be non-empty")
    pool = load_pool(_need(cfg, cfg.paths.judgments, JUDGMENTS_JSONL, "judgments"))
    too_big = [q for q in qg if q > pool.n_queries]
    if too_big:
        raise StageError(f"query grid exceeds the {pool.n_queries} judged queries: {too_big}")
    vectors = None
    if a.with_surrogate:
        vp = cfg.paths.features or cfg.out(VECTORS_JSON)
        if Path(vp).exists():
            vectors = load_vectors(vp)
    log.info("seed %d, rng labels: ablate-sampling/<n_queries>/<fraction>/<rep>", cfg.seed)
    cells = ablate_sampling(pool, qg, fg, reps or a.reps, cfg.seed, cfg.tournament.reg, vectors,
                            _holdout(cfg), cfg.forest)
    header = ["n_queries", "match_fraction", "reps", "bt_tau_mean", "bt_tau_sd", "failures"]
    if vectors is not None:
        header += ["surrogate_tau_mean", "surrogate_tau_sd"]
    write_csv(cfg.out(ABLATE_SAMPLING_CSV), header, ([c.row()[h] for h in header] for c in cells))
    return EXIT_OK


def cmd_ablate_features(cfg: RunConfig, presets=None) -> int:
    vectors, bt = _surrogate_inputs(cfg)
    presets = tuple(presets) if presets else cfg.ablation.presets
    log.info("seed %d, rng labels: forest/tree-<t> per preset", cfg.seed)
    rows = ablate_features(vectors, bt, presets, _holdout(cfg), cfg.forest, cfg.seed,
                           per_tournament=cfg.per_tournament_r2 and len(cfg.holdout_models) >= 2)
    header = list(rows[0])
    write_csv(cfg.out(ABLATE_FEATURES_CSV), header, ([r[h] for h in header] for r in rows))
    return EXIT_OK


# ---------------------------------------------------------------- report

_UPSTREAM = (FEATURES_JSONL, VECTORS_JSON, JUDGMENTS_JSONL, BT_JSON, BT_CSV, FOREST_JSON, SURROGATE_CSV,
             SURROGATE_JSON, ABLATE_SAMPLING_CSV, ABLATE_FEATURES_CSV)


def _fmt(v, nd=3):
    return "n/a" if v is None else f"{v:.{nd}f}"


def cmd_report(cfg: RunConfig) -> int:
    for name in (BT_JSON, SURROGATE_JSON):
        if not cfg.out(name).exists():
            raise StageError(f"missing upstream artifact {name} in {cfg.output_dir}")
    bt = BtFit.from_json(read_json(cfg.out(BT_JSON)))
    sur = read_json(cfg.out(SURROGATE_JSON))
    hashes = {name: sha256_file(cfg.out(name)) for name in _UPSTREAM if cfg.out(name).exists()}
    bt_rows = bt.rows()
    sur_rank = {r["model"]: r for r in sur["leaderboard"]}
    side = []
    for i, r in enumerate(bt_rows):
        s = sur_rank.get(r["model"], {})
        side.append({"model": r["model"], "bt_rank": i + 1, "bt_mean": r["mean"],
                     "ci_low_offset": r["ci_low_offset"], "ci_high_offset": r["ci_high_offset"],
                     "surrogate_rank": s.get("rank"), "predicted_logit": s.get("predicted_logit"),
                     "role": s.get("role")})
    imp = sorted(sur["feature_importance"].items(), key=lambda kv: (-kv[1], kv[0]))
    doc = {
        "version": __version__,
        "language": cfg.language,
        "seed": cfg.seed,
        "upstream_sha256": hashes,
        "bt": {"metadata": bt.metadata, "n_models": len(bt.models)},
        "surrogate": {k: sur[k] for k in ("tau_vs_bt", "holdout_r2", "r2_protocol", "train_predictions",
                                          "holdout_models", "warnings")},
        "feature_importance": dict(imp),
        "leaderboards": side,
    }
    write_json(cfg.out(REPORT_JSON), doc)

    md = [f"# Leaderboard report ({cfg.language})", "",
          f"- seed: {cfg.seed}",
          f"- tournaments: {bt.metadata.get('n_tournaments')}, queries per tournament: {bt.metadata.get('n_queries')}",
          f"- Kendall tau (surrogate vs BT): {_fmt(sur['tau_vs_bt'])}",
          f"- holdout R^2 (pooled fit): {_fmt(sur['holdout_r2'])}"]
    r2p = sur.get("r2_protocol")
    if r2p:
        md.append(f"- holdout R^2 over {r2p['n_fits']} per-tournament fits: {_fmt(r2p['mean'])} "
                  f"[{_fmt(r2p['ci_low'])}, {_fmt(r2p['ci_high'])}]")
    for w in sur["warnings"]:
        md.append(f"- warning: {w}")
    md += ["", "## Leaderboards", "",
           "| BT rank | model | BT logit | 95% CI | surrogate rank | predicted logit | role |",
           "|---:|---|---:|---|---:|---:|---|"]
    for r in side:
        ci = f"{r['ci_low_offset']:+.3f} / {r['ci_high_offset']:+.3f}"
        md.append(f"| {r['bt_rank']} | {r['model']} | {r['bt_mean']:.3f} | {ci} | "
                  f"{r['surrogate_rank'] if r['surrogate_rank'] is not None else '-'} | "
                  f"{_fmt(r['predicted_logit'])} | {r['role'] or '-'} |")
    md += ["", "## Feature importance", "", "| feature | importance |", "|---|---:|"]
    md += [f"| {k} | {v:.4f} |" for k, v in imp]
    md += ["", "## Inputs", "", "| file | sha256 |", "|---|---|"]
    md += [f"| {k} | `{v}` |" for k, v in sorted(hashes.items())]
    cfg.out(REPORT_MD).write_text("\n".join(md) + "\n", encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------- simulate

def cmd_simulate(cfg: RunConfig, n_models: int | None = None, n_queries: int | None = None,
                 text: bool = False) -> int:
    spec = dict(cfg.simulate or {})
    if n_models is not None:
        spec["n_models"] = n_models
        spec.pop("true_logits", None)
        spec.pop("model_names", None)
    if n_queries is not None:
        spec["n_queries"] = n_queries
    spec.setdefault("n_models", 19)
    spec["seed"] = cfg.seed
    if "true_logits" not in spec:
        spec["true_logits"] = evenly_spaced_logits(spec["n_models"])
    try:
        world = SyntheticWorld.from_json(spec)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"simulate: {e}") from None
    write_json(cfg.out("world.json"), world.to_json())
    write_jsonl(cfg.out(JUDGMENTS_JSONL), (judgment_to_json(j) for j in generate_judgments(world)))
    if text:
        c = synthetic_corpus(world)
        write_jsonl(cfg.out("queries.jsonl"), c.queries)
        write_jsonl(cfg.out("responses.jsonl"), c.responses)
        write_jsonl(cfg.out("gold.jsonl"), c.gold)
        write_jsonl(cfg.out("external_scores.jsonl"), c.external_scores)
    else:
        vectors = generate_features(world)
        write_json(cfg.out(VECTORS_JSON), {
            "language": cfg.language,
            "features": [f.value for f in vectors[0].values],
            "flags": {},
            "vectors": [v.to_json() for v in vectors],
        })
    truth = sorted(world.truth().items(), key=lambda kv: (-kv[1], kv[0]))
    write_csv(cfg.out("truth.csv"), ["rank", "model", "true_logit"],
              ([i + 1, m, v] for i, (m, v) in enumerate(truth)))
    return EXIT_OK


