from __future__ import annotations

import re

_REASON = re.compile(r"^\s*##\s*reason\s*:?", re.IGNORECASE | re.MULTILINE)
_REASON_ANY = re.compile(r"##\s*reason\s*:?", re.IGNORECASE)
_ANSWER = re.compile(r"##\s*answer\s*:?", re.IGNORECASE)
_CITATION = re.compile(r"\[(\d+#\d+|\d+)\]")


def parse_rag_output(raw_text: str) -> tuple[str | None, str | None]:
    """Split a ``##Reason: ... ##Answer: ...`` response into its two parts.

    Parsing is total. Without a reason marker, the reason is ``None`` and the
    answer is whatever follows an answer marker, or the whole text when no
    marker is present. A reason marker without a following answer marker
    yields ``(reason, None)``.
    """
    m = _REASON.search(raw_text) or _REASON_ANY.search(raw_text)
    if m is None:
        a = _ANSWER.search(raw_text)
        if a is None:
            return None, raw_text.strip()
        return None, raw_text[a.end():].strip()
    rest = raw_text[m.end():]
    a = _ANSWER.search(rest)
    if a is None:
        return rest.strip(), None
    return rest[:a.start()].strip(), rest[a.end():].strip()


def parse_citations(text: str) -> list[str]:
    """Bracketed passage ids (``[123#4]`` or ``[7]``) in order of first use."""
    seen: dict[str, None] = {}
    for m in _CITATION.finditer(text):
        seen.setdefault(m.group(1), None)
    return list(seen)


def strip_citations(text: str) -> str:
    return _CITATION.sub(" ", text)
