"""Ordinals below epsilon_0 in Cantor normal form, plus a Kleene-style notation fragment.

Two layers live here:

* :class:`CnfOrdinal` -- ordinal *values*, written ``w^e1*c1 + w^e2*c2 + ...``
  with strictly decreasing exponents.  Comparison is lexicographic on the
  term list and :func:`hessenberg_sum` adds coefficients exponent-wise.
* Notations (:class:`One`, :class:`Succ`, :class:`Lim`) -- finite trees whose
  limit nodes carry an inspectable generator instead of a machine index.
  Every generator shape in the catalog knows the supremum of its sequence,
  which is what makes :func:`value_of` total on well-formed trees.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Optional, Tuple, Union

from .errors import (
    NestingTooDeep,
    OutOfBound,
    ParseError,
    SearchExhausted,
    UnrepresentableLimit,
)

MAX_NESTING = 4
DEFAULT_SEARCH_BOUND = 64


# ---------------------------------------------------------------------------
# Cantor normal form values
# ---------------------------------------------------------------------------

@total_ordering
@dataclass(frozen=True)
class CnfOrdinal:
    terms: Tuple[Tuple["CnfOrdinal", int], ...] = ()

    def __post_init__(self):
        prev = None
        for exp, coeff in self.terms:
            if not isinstance(coeff, int) or coeff < 1:
                raise ValueError(f"coefficient must be a positive int, got {coeff!r}")
            if prev is not None and cnf_compare(exp, prev) >= 0:
                raise ValueError("exponents must be strictly decreasing")
            prev = exp
        if self.nesting() > MAX_NESTING:
            raise NestingTooDeep(f"CNF nesting exceeds {MAX_NESTING}")

    def nesting(self) -> int:
        if not self.terms:
            return 0
        return 1 + max(exp.nesting() for exp, _ in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_finite(self) -> bool:
        return all(exp.is_zero for exp, _ in self.terms)

    @property
    def is_limit(self) -> bool:
        return bool(self.terms) and not self.terms[-1][0].is_zero

    def as_int(self) -> int:
        if not self.is_finite:
            raise ValueError(f"{self} is infinite")
        return self.terms[0][1] if self.terms else 0

    def __lt__(self, other: "CnfOrdinal") -> bool:
        return cnf_compare(self, other) < 0

    def __str__(self) -> str:
        return render_cnf(self)

    def __repr__(self) -> str:
        return f"CnfOrdinal({render_cnf(self)!r})"


ZERO = CnfOrdinal()


def cnf(n: int) -> CnfOrdinal:
    """The finite ordinal ``n``."""
    if n < 0:
        raise ValueError("ordinals are nonnegative")
    return ZERO if n == 0 else CnfOrdinal(((ZERO, n),))


def omega_pow(exp: CnfOrdinal, coeff: int = 1) -> CnfOrdinal:
    return CnfOrdinal(((exp, coeff),))


OMEGA = omega_pow(cnf(1))


def cnf_compare(a: CnfOrdinal, b: CnfOrdinal) -> int:
    """Return -1, 0 or 1 as ``a`` is below, equal to or above ``b``."""
    for (ea, ca), (eb, cb) in zip(a.terms, b.terms):
        c = cnf_compare(ea, eb)
        if c:
            return c
        if ca != cb:
            return -1 if ca < cb else 1
    la, lb = len(a.terms), len(b.terms)
    return (la > lb) - (la < lb)


def hessenberg_sum(a: CnfOrdinal, b: CnfOrdinal) -> CnfOrdinal:
    merged = {}
    for exp, coeff in a.terms + b.terms:
        merged[exp] = merged.get(exp, 0) + coeff
    exps = sorted(merged, key=_SortKey, reverse=True)
    return CnfOrdinal(tuple((e, merged[e]) for e in exps))


def hessenberg_total(values: Iterable[CnfOrdinal]) -> CnfOrdinal:
    total = ZERO
    for v in values:
        total = hessenberg_sum(total, v)
    return total


class _SortKey:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return cnf_compare(self.v, other.v) < 0


def ordinal_add(a: CnfOrdinal, b: CnfOrdinal) -> CnfOrdinal:
    """Ordinary (non-commutative) ordinal addition; used for notation suprema."""
    if b.is_zero:
        return a
    lead, lead_coeff = b.terms[0]
    kept = []
    for exp, coeff in a.terms:
        c = cnf_compare(exp, lead)
        if c > 0:
            kept.append((exp, coeff))
        elif c == 0:
            lead_coeff += coeff
            break
        else:
            break
    return CnfOrdinal(tuple(kept) + ((lead, lead_coeff),) + b.terms[1:])


def successor(a: CnfOrdinal) -> CnfOrdinal:
    return ordinal_add(a, cnf(1))


def times_omega(a: CnfOrdinal) -> CnfOrdinal:
    """``a * w``: for nonzero ``a`` this is ``w^(e+1)`` with ``e`` the leading exponent."""
    if a.is_zero:
        return ZERO
    return omega_pow(successor(a.terms[0][0]))


def render_cnf(a: CnfOrdinal) -> str:
    if a.is_zero:
        return "0"
    parts = []
    for exp, coeff in a.terms:
        if exp.is_zero:
            parts.append(str(coeff))
            continue
        if exp == cnf(1):
            head = "w"
        elif exp.is_finite or (len(exp.terms) == 1 and exp.terms[0][1] == 1 and exp.terms[0][0] == cnf(1)):
            head = f"w^{render_cnf(exp)}"
        else:
            head = f"w^({render_cnf(exp)})"
        parts.append(head if coeff == 1 else f"{head}*{coeff}")
    return "+".join(parts)


_CNF_TOKEN = re.compile(r"\s*(\d+|w|\^|\*|\+|\(|\))")


def _tokenize(text: str):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _CNF_TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character in CNF expression {text!r} at {pos}")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse_cnf(text: str) -> CnfOrdinal:
    """Parse ``w^2*3+w+1`` style expressions; terms are combined with ordinal addition."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty CNF expression")
    value, pos = _parse_sum(tokens, 0)
    if pos != len(tokens):
        raise ParseError(f"trailing tokens in {text!r}")
    return value


def _parse_sum(tokens, pos):
    value, pos = _parse_term(tokens, pos)
    while pos < len(tokens) and tokens[pos] == "+":
        rhs, pos = _parse_term(tokens, pos + 1)
        value = ordinal_add(value, rhs)
    return value, pos


def _parse_term(tokens, pos):
    if pos >= len(tokens):
        raise ParseError("expected a term")
    tok = tokens[pos]
    if tok.isdigit():
        return cnf(int(tok)), pos + 1
    if tok != "w":
        raise ParseError(f"unexpected token {tok!r}")
    pos += 1
    exp = cnf(1)
    if pos < len(tokens) and tokens[pos] == "^":
        pos += 1
        if pos < len(tokens) and tokens[pos] == "(":
            exp, pos = _parse_sum(tokens, pos + 1)
            if pos >= len(tokens) or tokens[pos] != ")":
                raise ParseError("unbalanced parenthesis")
            pos += 1
        elif pos < len(tokens) and tokens[pos] == "w":
            exp, pos = cnf(1), pos + 1
        elif pos < len(tokens) and tokens[pos].isdigit():
            exp, pos = cnf(int(tokens[pos])), pos + 1
        else:
            raise ParseError("bad exponent")
    coeff = 1
    if pos < len(tokens) and tokens[pos] == "*":
        if pos + 1 >= len(tokens) or not tokens[pos + 1].isdigit():
            raise ParseError("coefficient must be an integer")
        coeff = int(tokens[pos + 1])
        pos += 2
    if coeff == 0:
        return ZERO, pos
    return omega_pow(exp, coeff), pos


# ---------------------------------------------------------------------------
# Notations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class One:
    """Notation for 0."""

    def __str__(self):
        return "0"


@dataclass(frozen=True)
class Succ:
    of: "Notation"

    def __str__(self):
        return f"succ({self.of})"


@dataclass(frozen=True)
class Lim:
    gen: "Generator"
    search_bound: int = DEFAULT_SEARCH_BOUND

    def __post_init__(self):
        if self.search_bound < 1:
            raise ValueError("search_bound must be positive")

    def __str__(self):
        return f"lim({self.gen})"


Notation = Union[One, Succ, Lim]

# Generator catalog.  Each shape yields a strictly increasing sequence and
# knows its supremum.


@dataclass(frozen=True)
class FiniteGen:
    """n -> notation of n; supremum w."""

    def at(self, n: int) -> Notation:
        return finite_notation(n)

    def supremum(self) -> CnfOrdinal:
        return OMEGA

    def __str__(self):
        return "finite"


@dataclass(frozen=True)
class AddGen:
    """n -> base + n; supremum base + w."""

    base: Notation

    def at(self, n: int) -> Notation:
        a = self.base
        for _ in range(n):
            a = Succ(a)
        return a

    def supremum(self) -> CnfOrdinal:
        return ordinal_add(value_of(self.base), OMEGA)

    def __str__(self):
        return f"add {self.base}"


@dataclass(frozen=True)
class MulGen:
    """n -> base * n; supremum base * w.  ``base`` must denote a nonzero ordinal."""

    base: Notation

    def __post_init__(self):
        if isinstance(self.base, One):
            raise ValueError("mul generator needs a nonzero base")

    def at(self, n: int) -> Notation:
        a: Notation = One()
        for _ in range(n):
            a = notation_add(a, self.base)
        return a

    def supremum(self) -> CnfOrdinal:
        return times_omega(value_of(self.base))

    def __str__(self):
        return f"mul {self.base}"


@dataclass(frozen=True)
class ShiftGen:
    """n -> left + inner(n); arises from adding a limit notation on the right."""

    left: Notation
    inner: "Generator"

    def at(self, n: int) -> Notation:
        return notation_add(self.left, self.inner.at(n))

    def supremum(self) -> CnfOrdinal:
        return ordinal_add(value_of(self.left), _supremum(self.inner))

    def __str__(self):
        return f"shift {self.left} {self.inner}"


Generator = Union[FiniteGen, AddGen, MulGen, ShiftGen]
_CATALOG = (FiniteGen, AddGen, MulGen, ShiftGen)


def _supremum(gen) -> CnfOrdinal:
    if not isinstance(gen, _CATALOG):
        raise UnrepresentableLimit(f"generator {gen!r} is not a catalog shape")
    return gen.supremum()


def finite_notation(n: int) -> Notation:
    a: Notation = One()
    for _ in range(n):
        a = Succ(a)
    return a


OMEGA_NOTATION = Lim(FiniteGen())


def notation_add(a: Notation, b: Notation) -> Notation:
    """Notation for |a| + |b|, by recursion on ``b``."""
    if isinstance(b, One):
        return a
    if isinstance(b, Succ):
        return Succ(notation_add(a, b.of))
    return Lim(ShiftGen(a, b.gen), b.search_bound)


def value_of(a: Notation) -> CnfOrdinal:
    # iterative on successor chains so long finite notations do not recurse deeply
    steps = 0
    while isinstance(a, Succ):
        steps += 1
        a = a.of
    if isinstance(a, One):
        base = ZERO
    elif isinstance(a, Lim):
        base = _supremum(a.gen)
    else:
        raise TypeError(f"not a notation: {a!r}")
    return ordinal_add(base, cnf(steps)) if steps else base


def fundamental_at(a: Notation, n: int) -> Notation:
    if not isinstance(a, Lim):
        raise TypeError("fundamental sequences exist only for limit notations")
    if n < 0 or n >= a.search_bound:
        raise OutOfBound(f"index {n} outside [0, {a.search_bound})")
    if not isinstance(a.gen, _CATALOG):
        raise UnrepresentableLimit(f"generator {a.gen!r} is not a catalog shape")
    return a.gen.at(n)


def _lt(b: Notation, a: Notation) -> Optional[bool]:
    """Three-valued b <_O a: True, False, or None when the bounded search gives up."""
    try:
        if cnf_compare(value_of(b), value_of(a)) >= 0:
            return False
    except UnrepresentableLimit:
        pass
    if isinstance(a, One):
        return False
    if isinstance(a, Succ):
        if b == a.of:
            return True
        return _lt(b, a.of)
    for n in range(a.search_bound):
        if _lt(b, fundamental_at(a, n)):
            return True
    # value check above could not refute, so the answer stays open
    return None


def notation_lt(b: Notation, a: Notation) -> bool:
    r = _lt(b, a)
    if r is None:
        raise SearchExhausted(f"could not settle {b} <_O {a} within the search bound")
    return r


def notation_compare(a: Notation, b: Notation) -> str:
    """Return '=', '<', '>' or '|' (incomparable) under <_O."""
    if a == b:
        return "="
    if notation_lt(a, b):
        return "<"
    if notation_lt(b, a):
        return ">"
    return "|"


# ---------------------------------------------------------------------------
# Notation text syntax
# ---------------------------------------------------------------------------

def parse_notation(text: str) -> Notation:
    """Parse ``0``, ``succ(x)``, ``lim(finite)``, ``lim(add x)``, ``lim(mul x)``.

    A bare integer ``n`` is accepted as shorthand for ``succ^n(0)``.
    """
    node, rest = _parse_notation(text.strip())
    if rest.strip():
        raise ParseError(f"trailing input {rest!r}")
    return node


def _parse_notation(s: str):
    s = s.lstrip()
    m = re.match(r"\d+", s)
    if m:
        return finite_notation(int(m.group())), s[m.end():]
    if s.startswith("succ("):
        inner, rest = _parse_notation(s[5:])
        rest = rest.lstrip()
        if not rest.startswith(")"):
            raise ParseError("expected ')' after succ argument")
        return Succ(inner), rest[1:]
    if s.startswith("lim("):
        body = s[4:].lstrip()
        if body.startswith("finite"):
            gen, rest = FiniteGen(), body[6:]
        elif body.startswith("add ") or body.startswith("mul "):
            kind = body[:3]
            base, rest = _parse_notation(body[4:])
            try:
                gen = AddGen(base) if kind == "add" else MulGen(base)
            except ValueError as exc:
                raise ParseError(str(exc)) from exc
        else:
            raise ParseError(f"unknown limit generator in {s!r}")
        rest = rest.lstrip()
        if not rest.startswith(")"):
            raise ParseError("expected ')' to close lim(")
        return Lim(gen), rest[1:]
    raise ParseError(f"cannot parse notation {s!r}")


def looks_like_notation(text: str) -> bool:
    t = text.strip()
    return t.startswith(("succ(", "lim(")) or t.isdigit()
