"""Symbolic terms: functor-with-arguments values for events, fluents and fluent values.

Terms are hash-consed: ``term(...)`` returns the one canonical instance per
structure, so structural equality collapses to identity and terms are cheap
dict keys.  Every term carries its canonical text (unique per structure) and
a stable 64-bit signed hash of that text, used as a kd-tree coordinate.
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass, field

#: Reserved kd-tree coordinate sentinels.  No symbol hash or time tick may
#: take either value; range boxes use them as "unbounded" markers.
NEG_INF = -(2**63)
POS_INF = 2**63 - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_BARE_NAME = re.compile(r"[a-z$][A-Za-z0-9_$]*\Z")


def hash64(text: str) -> int:
    """FNV-1a over UTF-8 bytes, folded to signed 64-bit, sentinels remapped.

    The remap keeps the two reserved coordinates unreachable from symbol
    hashes; callers must still re-check term equality after retrieval since
    distinct texts can collide.
    """
    h = _FNV_OFFSET
    for b in text.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    if h >= 2**63:
        h -= 2**64
    if h == NEG_INF:
        return NEG_INF + 1
    if h == POS_INF:
        return POS_INF - 1
    return h


@dataclass(frozen=True, eq=False)
class Term:
    """A hash-consed symbolic term.  Build via term()/atom(), never directly."""

    functor: str
    args: tuple = ()
    text: str = field(default="", compare=False)
    h64: int = field(default=0, compare=False)
    ground: bool = field(default=True, compare=False)

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return f"Term({self.text})"


_interned: dict[tuple, Term] = {}
_intern_lock = threading.Lock()


def _render_arg(a) -> str:
    if isinstance(a, Term):
        return a.text
    if isinstance(a, float):
        return repr(a)
    return str(a)


def _render(functor: str, args: tuple) -> str:
    if functor == "[]":
        return "[" + ", ".join(_render_arg(a) for a in args) + "]"
    if _BARE_NAME.match(functor) or functor == "_":
        head = functor
    else:
        head = "'" + functor.replace("\\", "\\\\").replace("'", "\\'") + "'"
    if not args:
        return head
    return head + "(" + ", ".join(_render_arg(a) for a in args) + ")"


def _arg_key(a):
    if isinstance(a, Term):
        return a
    # int and float compare equal in Python (5 == 5.0); tag with the type so
    # interning keeps them distinct, matching the canonical text.
    return (type(a).__name__, a)


def term(functor: str, *args) -> Term:
    """Return the interned term ``functor(args...)``.

    String arguments are coerced to atoms; numeric arguments must be finite
    ints or floats (bools are rejected).
    """
    if not isinstance(functor, str) or not functor:
        raise TypeError(f"functor must be a non-empty string, got {functor!r}")
    coerced = []
    for a in args:
        if isinstance(a, Term):
            coerced.append(a)
        elif isinstance(a, str):
            coerced.append(term(a))
        elif isinstance(a, bool):
            raise TypeError("bool is not a valid term argument")
        elif isinstance(a, int):
            coerced.append(a)
        elif isinstance(a, float):
            if not math.isfinite(a):
                raise ValueError(f"non-finite number in term: {a!r}")
            coerced.append(a)
        else:
            raise TypeError(f"invalid term argument: {a!r}")
    targs = tuple(coerced)
    key = (functor,) + tuple(_arg_key(a) for a in targs)
    t = _interned.get(key)
    if t is None:
        text = _render(functor, targs)
        ground = functor != "_" and all(
            (not isinstance(a, Term)) or a.ground for a in targs
        )
        with _intern_lock:
            t = _interned.setdefault(
                key, Term(functor, targs, text, hash64(text), ground)
            )
    return t


def atom(name: str) -> Term:
    """The zero-arity term ``name``."""
    return term(name)


#: Matches anything at its position, including inside argument lists.
WILDCARD = term("_")


def list_term(*items) -> Term:
    """A list-shaped term rendered ``[a, b, ...]``."""
    return term("[]", *items)


def match(pattern: Term, value: Term) -> bool:
    """Structural match with wildcards; no variable binding."""
    if pattern is value or pattern is WILDCARD:
        return True
    if pattern.functor != value.functor or len(pattern.args) != len(value.args):
        return False
    for p, v in zip(pattern.args, value.args):
        if isinstance(p, Term):
            if p is WILDCARD:
                continue
            if not isinstance(v, Term) or not match(p, v):
                return False
        else:
            if isinstance(v, Term) or type(p) is not type(v) or p != v:
                return False
    return True


def arg_hash(a) -> int:
    """Coordinate hash for a term argument (term, int or float)."""
    if isinstance(a, Term):
        return a.h64
    if isinstance(a, float):
        return hash64(repr(a))
    return hash64(str(a))


class TermSyntaxError(ValueError):
    pass


_NUMBER = re.compile(r"-?\d+(\.\d+(e[+-]?\d+)?)?|-?\d+e[+-]?\d+", re.IGNORECASE)
_NAME = re.compile(r"[a-zA-Z_$][A-Za-z0-9_$]*")


def parse_term(text: str) -> Term:
    """Parse canonical term text back into the interned term.

    Grammar (EBNF):
        term   = list | quoted | number | name [ "(" args ")" ]
        list   = "[" [ term { "," term } ] "]"
        args   = term { "," term }
        quoted = "'" chars "'"            (backslash escapes ' and \\)
        name   = letter-or-_-or-$ followed by word chars; "_" alone is the wildcard
    """
    t, pos = _parse(text, 0)
    pos = _skip_ws(text, pos)
    if pos != len(text):
        raise TermSyntaxError(f"trailing input at {pos}: {text[pos:]!r}")
    if not isinstance(t, Term):
        raise TermSyntaxError("bare numbers are arguments, not terms")
    return t


def _skip_ws(s: str, i: int) -> int:
    while i < len(s) and s[i] in " \t":
        i += 1
    return i


def _parse(s: str, i: int):
    i = _skip_ws(s, i)
    if i >= len(s):
        raise TermSyntaxError("unexpected end of input")
    c = s[i]
    if c == "[":
        items, i = _parse_seq(s, i + 1, "]")
        return list_term(*items), i
    if c == "'":
        j = i + 1
        out = []
        while j < len(s) and s[j] != "'":
            if s[j] == "\\" and j + 1 < len(s):
                out.append(s[j + 1])
                j += 2
            else:
                out.append(s[j])
                j += 1
        if j >= len(s):
            raise TermSyntaxError("unterminated quoted name")
        name = "".join(out)
        return _maybe_args(s, j + 1, name)
    m = _NUMBER.match(s, i)
    if m and (c.isdigit() or c == "-"):
        tok = m.group(0)
        if "." in tok or "e" in tok or "E" in tok:
            return float(tok), m.end()
        return int(tok), m.end()
    m = _NAME.match(s, i)
    if not m:
        raise TermSyntaxError(f"unexpected character at {i}: {c!r}")
    return _maybe_args(s, m.end(), m.group(0))


def _maybe_args(s: str, i: int, name: str):
    if i < len(s) and s[i] == "(":
        args, i = _parse_seq(s, i + 1, ")")
        return term(name, *args), i
    return term(name), i


def _parse_seq(s: str, i: int, closer: str):
    items = []
    i = _skip_ws(s, i)
    if i < len(s) and s[i] == closer:
        return items, i + 1
    while True:
        t, i = _parse(s, i)
        items.append(t)
        i = _skip_ws(s, i)
        if i < len(s) and s[i] == ",":
            i += 1
            continue
        if i < len(s) and s[i] == closer:
            return items, i + 1
        raise TermSyntaxError(f"expected ',' or '{closer}' at {i}")
