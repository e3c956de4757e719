"""Canonical text normalization used for all documents and queries.

Rules: Unicode NFC, ASCII letters lowercased, whitespace runs collapsed to a
single space, leading/trailing whitespace dropped. Applying the function twice
gives the same result as applying it once.
"""

import re
import unicodedata

_WS_RUN = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    text = unicodedata.normalize("NFC", text)
    text = "".join(c.lower() if "A" <= c <= "Z" else c for c in text)
    return _WS_RUN.sub(" ", text).strip()
