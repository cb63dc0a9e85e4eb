"""Run configuration: one self-describing JSON document per run."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..arena import TournamentConfig
from ..surrogate import DEFAULT_HOLDOUT, ForestParams
from ..textmetrics.features import PRESETS, resolve_subset
from .io import read_json

KIND = "arena-surrogate-run"
VERSION = 1
CREDENTIAL_ENV = "ARENA_JUDGE_API_KEY"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Paths:
    queries: Path | None = None
    responses: Path | None = None
    gold: Path | None = None
    external_scores: Path | None = None
    judgments: Path | None = None
    features: Path | None = None
    bt_fit: Path | None = None


@dataclass(frozen=True)
class JudgeEndpointConfig:
    base_url: str
    model: str
    temperature: float = 0.1
    max_retries: int = 3
    timeout: float = 60.0
    credential_env: str = CREDENTIAL_ENV
    workers: int = 4
    template: str = "pairwise_judge.v1"
    backoff: float = 0.5

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError("judge temperature must be >= 0")
        if self.max_retries < 0 or self.workers < 1 or self.timeout <= 0:
            raise ConfigError("judge max_retries >= 0, workers >= 1 and timeout > 0 required")


@dataclass(frozen=True)
class AblationConfig:
    query_grid: tuple[int, ...] = (20, 50, 100)
    fraction_grid: tuple[float, ...] = (0.25, 0.5, 1.0)
    reps: int = 10
    presets: tuple[str, ...] = tuple(PRESETS)
    with_surrogate: bool = True


@dataclass(frozen=True)
class RunConfig:
    language: str = "en"
    paths: Paths = field(default_factory=Paths)
    tournament: TournamentConfig = field(default_factory=TournamentConfig)
    # None: bootstrap sample size equals the number of judged queries
    tournament_queries: int | None = None
    forest: ForestParams = field(default_factory=ForestParams)
    feature_subset: str | tuple[str, ...] = "all11"
    holdout_models: tuple[str, ...] = tuple(sorted(DEFAULT_HOLDOUT))
    seed: int = 0
    output_dir: Path = Path("out")
    judge: JudgeEndpointConfig | None = None
    ablation: AblationConfig = field(default_factory=AblationConfig)
    simulate: dict | None = None
    per_tournament_r2: bool = True
    train_predictions: str = "oob"
    workers: int = 1

    def with_overrides(self, seed: int | None = None, out: str | Path | None = None) -> "RunConfig":
        cfg = self
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=int(seed))
        if out is not None:
            cfg = dataclasses.replace(cfg, output_dir=Path(out))
        return cfg

    def tournament_for(self, n_pool_queries: int) -> TournamentConfig:
        nq = self.tournament_queries or n_pool_queries
        return dataclasses.replace(self.tournament, seed=self.seed, n_queries=nq)

    def out(self, name: str) -> Path:
        return self.output_dir / name


def _strict(cls, obj: dict, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(obj) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return dict(obj)


def config_from_dict(obj: dict, base_dir: Path = Path(".")) -> RunConfig:
    obj = dict(obj)
    kind, version = obj.pop("kind", KIND), obj.pop("version", VERSION)
    if kind != KIND or version != VERSION:
        raise ConfigError(f"expected kind={KIND!r} version={VERSION}, got {kind!r} {version!r}")
    obj = _strict(RunConfig, obj, "config")

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else base_dir / p

    try:
        if "paths" in obj:
            raw = _strict(Paths, obj["paths"], "paths")
            obj["paths"] = Paths(**{k: resolve(v) for k, v in raw.items()})
        if "tournament" in obj:
            t = _strict(TournamentConfig, obj["tournament"], "tournament")
            t.pop("seed", None)
            obj["tournament"] = TournamentConfig(**t)
        if "forest" in obj:
            obj["forest"] = ForestParams(**_strict(ForestParams, obj["forest"], "forest"))
        if obj.get("judge") is not None:
            obj["judge"] = JudgeEndpointConfig(**_strict(JudgeEndpointConfig, obj["judge"], "judge"))
        if "ablation" in obj:
            a = _strict(AblationConfig, obj["ablation"], "ablation")
            for k in ("query_grid", "fraction_grid", "presets"):
                if k in a:
                    a[k] = tuple(a[k])
            obj["ablation"] = AblationConfig(**a)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None
    if isinstance(obj.get("feature_subset"), list):
        obj["feature_subset"] = tuple(obj["feature_subset"])
    if "holdout_models" in obj:
        obj["holdout_models"] = tuple(obj["holdout_models"])
    if "output_dir" in obj:
        obj["output_dir"] = resolve(obj["output_dir"])
    cfg = RunConfig(**obj)
    try:
        resolve_subset(cfg.feature_subset)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if cfg.train_predictions not in ("oob", "in_sample"):
        raise ConfigError("train_predictions must be 'oob' or 'in_sample'")
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    """Parse and validate a config file; every referenced input must exist."""
    if path is None:
        return RunConfig()
    path = Path(path)
    cfg = config_from_dict(read_json(path), path.parent)
    missing = [f"{k}={v}" for k, v in dataclasses.asdict(cfg.paths).items() if v is not None and not Path(v).exists()]
    if missing:
        raise ConfigError(f"referenced files do not exist: {missing}")
    return cfg
