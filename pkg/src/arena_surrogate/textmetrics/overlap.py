"""Lexical answer-overlap metrics: ROUGE-L F1 and smoothed sentence BLEU."""
from __future__ import annotations

import math
import unicodedata
from collections import Counter

import numpy as np

from ..kernels import lcs_length

# Scripts written without spaces between words; each character is a token.
_CHAR_TOKEN_RANGES = (
    (0x0E00, 0x0E7F),  # Thai
    (0x3040, 0x30FF),  # Hiragana, Katakana
    (0x3400, 0x4DBF),  # CJK ext A
    (0x4E00, 0x9FFF),  # CJK unified
    (0xF900, 0xFAFF),  # CJK compatibility
    (0x20000, 0x2A6DF),
)


def _is_char_token(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CHAR_TOKEN_RANGES)


def tokenize(text: str, mode: str = "auto") -> list[str]:
    """Lower-cased tokens after NFC normalisation.

    ``auto`` splits on anything that is not a letter, mark or digit and emits
    Han/Kana/Thai characters as single tokens. ``whitespace`` only splits on
    whitespace.
    """
    text = unicodedata.normalize("NFC", text).lower()
    if mode == "whitespace":
        return text.split()
    if mode != "auto":
        raise ValueError(f"unknown tokenizer mode {mode!r}")
    tokens: list[str] = []
    word: list[str] = []
    for ch in text:
        if _is_char_token(ch):
            if word:
                tokens.append("".join(word))
                word = []
            if unicodedata.category(ch)[0] == "M" and tokens:
                tokens[-1] += ch  # keep Thai vowel/tone marks on their base
            else:
                tokens.append(ch)
        elif unicodedata.category(ch)[0] in "LMN":
            word.append(ch)
        elif word:
            tokens.append("".join(word))
            word = []
    if word:
        tokens.append("".join(word))
    return tokens


def _ids(a: list[str], b: list[str]) -> tuple[np.ndarray, np.ndarray]:
    vocab: dict[str, int] = {}
    ia = np.array([vocab.setdefault(t, len(vocab)) for t in a], dtype=np.int64)
    ib = np.array([vocab.setdefault(t, len(vocab)) for t in b], dtype=np.int64)
    return ia, ib


def lcs_tokens(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    return lcs_length(*_ids(a, b))


def rouge_l(candidate: str, reference: str, tokenizer_mode: str = "auto") -> float:
    cand = tokenize(candidate, tokenizer_mode)
    ref = tokenize(reference, tokenizer_mode)
    return rouge_l_tokens(cand, ref)


def rouge_l_tokens(cand: list[str], ref: list[str]) -> float:
    lcs = lcs_tokens(cand, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(cand)
    r = lcs / len(ref)
    return 2 * p * r / (p + r)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, reference: str, max_n: int = 4, tokenizer_mode: str = "auto") -> float:
    return bleu_tokens(tokenize(candidate, tokenizer_mode), tokenize(reference, tokenizer_mode), max_n)


def bleu_tokens(cand: list[str], ref: list[str], max_n: int = 4) -> float:
    """Sentence BLEU with add-one smoothing on the n >= 2 precisions."""
    if not cand or not ref:
        return 0.0
    log_p = 0.0
    for n in range(1, max_n + 1):
        c = _ngrams(cand, n)
        r = _ngrams(ref, n)
        matched = sum(min(cnt, r[g]) for g, cnt in c.items())
        total = sum(c.values())
        if n == 1:
            if matched == 0:
                return 0.0
            log_p += math.log(matched / total)
        else:
            log_p += math.log((matched + 1) / (total + 1))
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1 - len(ref) / len(cand))
    return bp * math.exp(log_p / max_n)
