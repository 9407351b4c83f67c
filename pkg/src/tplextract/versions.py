"""Version ordering used when several versions of one library compete.

Versions are split into parts on ``.``, ``-``, ``_`` and ``+`` and at every
digit/letter boundary. Parts are compared left to right:

* numeric parts compare numerically and outrank any non-numeric part;
* a version that runs out of parts sits between the two: an extra numeric
  part makes the longer version greater, an extra text part makes it lower;
* text parts compare case-insensitively, with ``dev`` below every other
  word and ``rc`` then ``snapshot`` above them;
* trailing ``release``/``ga``/``final`` parts are dropped, so they compare
  equal to the bare version.
"""

from __future__ import annotations

import enum
import functools
import re

_PART_RE = re.compile(r"\d+|[^\d.\-_+]+")

_TRAILING_RELEASE = {"release", "ga", "final"}
_WORD_RANK = {"dev": 0, "rc": 2, "snapshot": 3, "release": 4, "ga": 4, "final": 4}
_GENERIC_WORD = 1

# element keys: (0, rank, word) < END < (2, number)
_END = (1,)


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@functools.lru_cache(maxsize=4096)
def version_key(version: str) -> tuple:
    """Return a tuple whose natural ordering is the version ordering."""
    parts = _PART_RE.findall(version)
    while parts and parts[-1].lower() in _TRAILING_RELEASE:
        parts.pop()
    key = []
    for part in parts:
        if part.isdigit():
            key.append((2, int(part)))
        else:
            word = part.lower()
            key.append((0, _WORD_RANK.get(word, _GENERIC_WORD), word))
    key.append(_END)
    return tuple(key)


def compare_versions(a: str, b: str) -> Ordering:
    ka, kb = version_key(a), version_key(b)
    if ka < kb:
        return Ordering.LESS
    if ka > kb:
        return Ordering.GREATER
    return Ordering.EQUAL
