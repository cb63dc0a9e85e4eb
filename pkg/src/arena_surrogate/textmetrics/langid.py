"""Character-trigram language identification.

Each language profile is an L2-normalised trigram frequency vector; a text is
scored by cosine similarity against every profile and the similarities are
turned into probabilities with a temperature softmax.
"""
from __future__ import annotations

import json
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

MIN_CHARS = 20
DEFAULT_TEMPERATURE = 0.05


class TextTooShort(ValueError):
    pass


@dataclass(frozen=True)
class LanguageProfile:
    language: str
    trigram_weights: dict[str, float]

    @classmethod
    def from_json(cls, obj: dict) -> "LanguageProfile":
        return cls(obj["language"], _l2_normalise(Counter(obj["trigrams"])))

    def to_json(self) -> dict:
        return {"language": self.language, "trigrams": dict(sorted(self.trigram_weights.items()))}


def _clean(text: str) -> str:
    text = unicodedata.normalize("NFC", text).lower()
    chars = [ch if unicodedata.category(ch)[0] in "LM" else " " for ch in text]
    return " ".join("".join(chars).split())


def trigram_counts(text: str) -> Counter:
    s = f" {_clean(text)} "
    return Counter(s[i:i + 3] for i in range(len(s) - 2))


def _l2_normalise(counts) -> dict[str, float]:
    norm = math.sqrt(sum(float(v) ** 2 for v in counts.values()))
    if norm == 0:
        return {}
    return {k: float(v) / norm for k, v in counts.items() if v > 0}


def build_profile(language: str, corpus: str, top_k: int | None = None) -> LanguageProfile:
    counts = trigram_counts(corpus)
    if top_k is not None:
        counts = Counter(dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]))
    return LanguageProfile(language, _l2_normalise(counts))


def _data_dir():
    return resources.files("arena_surrogate.textmetrics") / "data"


@lru_cache(maxsize=None)
def load_profiles() -> tuple[LanguageProfile, ...]:
    """Bundled profiles, one per supported language, sorted by code."""
    out = []
    for entry in sorted(_data_dir().joinpath("profiles").iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            out.append(LanguageProfile.from_json(json.loads(entry.read_text(encoding="utf-8"))))
    return tuple(out)


def supported_languages() -> frozenset[str]:
    return frozenset(p.language for p in load_profiles())


def corpus_text(language: str) -> str:
    return _data_dir().joinpath("corpora", f"{language}.txt").read_text(encoding="utf-8")


def rebuild_bundled_profiles(out_dir: str | Path) -> list[Path]:
    """Regenerate the profile JSON files from the fixture corpora."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for entry in sorted(_data_dir().joinpath("corpora").iterdir(), key=lambda p: p.name):
        if not entry.name.endswith(".txt"):
            continue
        lang = entry.name[:-4]
        prof = build_profile(lang, entry.read_text(encoding="utf-8"))
        path = out_dir / f"{lang}.json"
        path.write_text(json.dumps(prof.to_json(), ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
    return written


def detect_language(text: str, profiles=None, temperature: float = DEFAULT_TEMPERATURE) -> dict[str, float]:
    if profiles is None:
        profiles = load_profiles()
    if len(profiles) < 2:
        raise ValueError("need at least two language profiles")
    if sum(1 for ch in text if not ch.isspace()) < MIN_CHARS:
        raise TextTooShort(f"language detection needs >= {MIN_CHARS} non-whitespace characters")
    vec = _l2_normalise(trigram_counts(text))
    sims = [sum(w * p.trigram_weights.get(g, 0.0) for g, w in vec.items()) for p in profiles]
    top = max(sims)
    exps = [math.exp((s - top) / temperature) for s in sims]
    z = sum(exps)
    return {p.language: e / z for p, e in zip(profiles, exps)}
