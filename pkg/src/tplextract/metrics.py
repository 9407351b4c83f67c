"""Agreement between extracted label sets and golden dependency lists."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class EvaluationPair:
    project_id: str
    predicted: frozenset
    golden: frozenset

    @classmethod
    def of(cls, project_id: str, predicted: Iterable, golden: Iterable) -> "EvaluationPair":
        return cls(project_id, frozenset(_triplet(x) for x in predicted), frozenset(_triplet(x) for x in golden))


def _triplet(x) -> tuple:
    if isinstance(x, tuple):
        return x
    if hasattr(x, "key"):
        return x.key
    g, a, *rest = str(x).split(":")
    return (g, a, rest[0] if rest and rest[0] else None)


def _counts(pairs: Sequence) -> tuple[list, list]:
    pred, gold = [], []
    for p in pairs:
        if isinstance(p, EvaluationPair):
            pred.append(len(p.predicted))
            gold.append(len(p.golden))
        else:
            pred.append(p[0])
            gold.append(p[1])
    return pred, gold


def pearson(pairs: Sequence) -> Optional[float]:
    """Correlation of predicted vs golden label counts; ``None`` when either vector is constant.

    ``pairs`` holds :class:`EvaluationPair` objects or ``(predicted count, golden count)`` tuples.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise InsufficientData("pearson needs at least two pairs")
    x, y = _counts(pairs)
    n = len(x)
    mx, my = math.fsum(x) / n, math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        return None
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def mae(pairs: Sequence) -> float:
    pairs = list(pairs)
    if not pairs:
        raise InsufficientData("mae needs at least one pair")
    x, y = _counts(pairs)
    return math.fsum(abs(a - b) for a, b in zip(x, y)) / len(x)


def match_rate(pairs: Sequence) -> float:
    """Fraction of pairs whose predicted and golden sets are equal."""
    pairs = list(pairs)
    if not pairs:
        raise InsufficientData("match_rate needs at least one pair")
    return sum(1 for p in pairs if p.predicted == p.golden) / len(pairs)


@dataclass(frozen=True)
class MetricsSummary:
    n: int
    pearson_r: Optional[float]
    mae: float
    match_rate: float

    @classmethod
    def of(cls, pairs: Sequence[EvaluationPair]) -> "MetricsSummary":
        pairs = list(pairs)
        if not pairs:
            raise InsufficientData("no evaluation pairs")
        r = pearson(pairs) if len(pairs) >= 2 else None
        return cls(len(pairs), r, mae(pairs), match_rate(pairs))

    def to_dict(self) -> dict:
        return {"n": self.n, "pearson_r": "UNDEFINED" if self.pearson_r is None else self.pearson_r,
                "mae": self.mae, "match_rate": self.match_rate}

    def render(self) -> str:
        r = "UNDEFINED" if self.pearson_r is None else f"{self.pearson_r:.4f}"
        return f"n={self.n}  r={r}  MAE={self.mae:.4f}  MatchRate={self.match_rate:.4f}"


def load_labels(path) -> frozenset:
    """Triplets from a golden/prediction file: ``g:a:v`` lines (``#`` comments) or a JSON report."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{") or stripped.startswith("["):
        data = json.loads(text)
        deps = data.get("dependencies", []) if isinstance(data, dict) else data
        out = set()
        for d in deps:
            if isinstance(d, dict):
                out.add((d["group"], d["artifact"], d.get("version")))
            else:
                out.add(_triplet(d))
        return frozenset(out)
    out = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(":")
        if len(parts) < 2:
            continue
        # a trailing status column written by the lines format is not identity
        version = parts[2] if len(parts) > 2 and parts[2] else None
        out.add((parts[0], parts[1], version))
    return frozenset(out)


_LABEL_SUFFIXES = (".json", ".txt", ".lines", ".golden")


def label_files(location) -> dict[str, Path]:
    """``{stem: path}`` for a directory of label files, or a single file."""
    p = Path(location)
    if p.is_file():
        return {_stem(p): p}
    out = {}
    for f in sorted(p.iterdir()):
        if f.is_file() and f.suffix in _LABEL_SUFFIXES and f.name != "summary.json":
            out.setdefault(_stem(f), f)
    return out


def _stem(p: Path) -> str:
    name = p.name
    for suffix in (".report.json", ".golden.txt"):
        if name.endswith(suffix):
            return name[:-len(suffix)]
    return p.stem


def pair_up(pred_location, gold_location) -> tuple[list[EvaluationPair], list[str], list[str]]:
    """``(pairs, stems only in predictions, stems only in goldens)``."""
    pred = label_files(pred_location)
    gold = label_files(gold_location)
    pairs = [EvaluationPair(s, load_labels(pred[s]), load_labels(gold[s])) for s in sorted(pred.keys() & gold.keys())]
    return pairs, sorted(pred.keys() - gold.keys()), sorted(gold.keys() - pred.keys())
