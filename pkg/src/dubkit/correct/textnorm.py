"""Text normalization front-end applied before transcript comparison.

Three passes, in order: a pluggable character mapping (the bundled one
covers a small traditional-to-simplified list; production runs load a
full table via load_tables), full-width to ASCII folding (unifies
punctuation width and canonicalizes digit strings to one numeric form),
and whitespace collapse. Normalization is idempotent as long as the
character map sends everything to fixed points, which the bundled table
does.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

# Small curated traditional -> simplified mapping; enough for tests and
# for corpora that are already mostly simplified. Swap in a full table
# for production via load_tables().
_BUNDLED_CHAR_MAP = {
    "說": "说",
    "話": "话",
    "時": "时",
    "間": "间",
    "來": "来",
    "東": "东",
    "們": "们",
    "這": "这",
    "國": "国",
    "學": "学",
    "會": "会",
    "麼": "么",
    "體": "体",
    "點": "点",
    "現": "现",
    "過": "过",
    "還": "还",
    "對": "对",
    "開": "开",
    "關": "关",
}


@dataclass(frozen=True)
class NormalizationTables:
    char_map: Mapping[str, str] = field(default_factory=lambda: dict(_BUNDLED_CHAR_MAP))


DEFAULT_TABLES = NormalizationTables()


def load_tables(path) -> NormalizationTables:
    """Load a character map from a JSON file: {"char_map": {...}}."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    char_map = data.get("char_map")
    if not isinstance(char_map, dict):
        raise ValueError(f"{path}: expected a 'char_map' object")
    return NormalizationTables(char_map=dict(char_map))


def _fold_width(ch: str) -> str:
    code = ord(ch)
    if 0xFF01 <= code <= 0xFF5E:  # full-width ASCII variants, digits included
        return chr(code - 0xFEE0)
    if code == 0x3000:  # ideographic space
        return " "
    return ch


def normalize_text(s: str, tables: NormalizationTables = DEFAULT_TABLES) -> str:
    mapped = "".join(tables.char_map.get(ch, ch) for ch in s)
    folded = "".join(_fold_width(ch) for ch in mapped)
    return " ".join(folded.split())
