"""Unevaluated binding values: literals, references and concatenations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from . import expr as ex

# calls whose single string argument names a property: findProperty("x")
_PROPERTY_CALLS = {"property", "findProperty", "getProperty", "gradleProperty", "get", "getAt", "extra"}


@dataclass(frozen=True)
class Literal:
    text: str

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class Reference:
    path: str
    fallback: Optional["Value"] = None

    def __str__(self):
        return "${%s}" % self.path


@dataclass(frozen=True)
class Concat:
    pieces: tuple

    def __str__(self):
        return "".join(str(p) for p in self.pieces)


Value = Union[Literal, Reference, Concat]


def concat(pieces) -> Optional[Value]:
    """Flatten and merge pieces; a single piece is returned as-is."""
    flat: list = []
    for piece in pieces:
        if piece is None:
            return None
        items = piece.pieces if isinstance(piece, Concat) else (piece,)
        for item in items:
            if isinstance(item, Literal) and flat and isinstance(flat[-1], Literal):
                flat[-1] = Literal(flat[-1].text + item.text)
            else:
                flat.append(item)
    flat = [p for p in flat if not (isinstance(p, Literal) and p.text == "" and len(flat) > 1)]
    if not flat:
        return Literal("")
    if len(flat) == 1:
        return flat[0]
    return Concat(tuple(flat))


def to_value(node: ex.Node) -> Optional[Value]:
    """Convert a scalar expression to a :data:`Value`; ``None`` if it is not one."""
    if isinstance(node, ex.Str):
        return concat([Literal(p) if isinstance(p, str) else to_value(p) for p in node.parts])
    if isinstance(node, ex.Num):
        return Literal(node.text)
    if isinstance(node, ex.Concat):
        return concat([to_value(item) for item in node.items])
    if isinstance(node, ex.Elvis):
        primary = to_value(node.primary)
        fallback = to_value(node.fallback)
        if isinstance(primary, Reference) and fallback is not None:
            return Reference(primary.path, fallback)
        return primary if primary is not None else fallback
    if isinstance(node, ex.Call):
        name = ex.call_name(node)
        pos = node.positional()
        if name in _PROPERTY_CALLS and len(pos) == 1 and isinstance(pos[0], ex.Str) and pos[0].literal is not None:
            # findProperty("x"), rootProject.ext.get("x"), providers.gradleProperty("x")
            return Reference(pos[0].literal)
        if name in ("getOrElse", "orElse", "getOrDefault") and len(pos) == 1 and isinstance(node.func, ex.Attr):
            inner = to_value(node.func.obj)
            fallback = to_value(pos[0])
            if isinstance(inner, Reference) and fallback is not None:
                return Reference(inner.path, fallback)
            return inner
    path = ex.dotted(node)
    if path:
        if len(path) == 1 and path[0] in ("true", "false", "null"):
            return Literal(path[0])
        return Reference(".".join(path))
    return None


def references(value: Optional[Value]) -> list[str]:
    if value is None:
        return []
    if isinstance(value, Reference):
        return [value.path] + references(value.fallback)
    if isinstance(value, Concat):
        return [r for p in value.pieces for r in references(p)]
    return []
