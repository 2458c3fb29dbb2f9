"""Induced measures on cylinders, computed by exhaustive preimage counting.

All values are exact dyadic rationals held as :class:`fractions.Fraction`.
An interval ``[lower, upper]`` brackets the true cylinder measure: inputs of
length ``useBound`` whose output already extends ``sigma`` count toward the
lower end, inputs whose output is merely comparable with ``sigma`` count
toward the upper end.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, Iterable, List, Sequence, Tuple

from .errors import NotPrefixFree
from .functionals import PrefixFunctional
from .streams import BitStream


def _is_dyadic(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


def format_dyadic(q: Fraction) -> str:
    """Render ``q`` as ``p/2^k`` with k minimal."""
    k = q.denominator.bit_length() - 1
    return f"{q.numerator}/2^{k}"


_DYADIC_RE = re.compile(r"^\s*(-?\d+)\s*/\s*2\^(\d+)\s*$")


def parse_dyadic(text: str) -> Fraction:
    m = _DYADIC_RE.match(text)
    if not m:
        raise ValueError(f"not a dyadic literal: {text!r}")
    return Fraction(int(m.group(1)), 2 ** int(m.group(2)))


@dataclass(frozen=True)
class DyadicInterval:
    lower: Fraction
    upper: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lower), Fraction(self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if not (_is_dyadic(lo) and _is_dyadic(hi)):
            raise ValueError("interval endpoints must be dyadic")
        if not (0 <= lo <= hi <= 1):
            raise ValueError(f"invalid interval [{lo}, {hi}]")

    @classmethod
    def exact(cls, q) -> "DyadicInterval":
        return cls(Fraction(q), Fraction(q))

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def contains(self, other: "DyadicInterval") -> bool:
        return self.lower <= other.lower and other.upper <= self.upper

    def refines_sum(self, parts: Iterable["DyadicInterval"]) -> bool:
        """Whether this interval is consistent with the componentwise sum of ``parts``.

        A parent cylinder sees at least as many settled outputs as its two
        children together, so its lower end is at least their summed lower ends
        and its upper end at most their summed upper ends.
        """
        parts = list(parts)
        lo = sum((p.lower for p in parts), Fraction(0))
        hi = sum((p.upper for p in parts), Fraction(0))
        return lo <= self.lower and self.upper <= hi

    def to_json(self) -> dict:
        return {"lower": format_dyadic(self.lower), "upper": format_dyadic(self.upper)}

    def __str__(self):
        return f"[{self.lower}, {self.upper}]"


FULL = DyadicInterval.exact(1)
EMPTY = DyadicInterval.exact(0)


IMAGE_CAP = 8


def _inputs(u: int) -> Iterable[str]:
    return ("".join(bits) for bits in product("01", repeat=u))


@lru_cache(maxsize=256)
def _images(f: PrefixFunctional, u: int, cap: int) -> Tuple[str, ...]:
    # Memoized per (functional, useBound, cap); functionals are immutable.
    return tuple(f.eval(tau, cap) for tau in _inputs(u))


def _count(images: Sequence[str], sigma: str) -> Tuple[int, int]:
    n = len(sigma)
    extends = compatible = 0
    for out in images:
        if len(out) >= n:
            if out[:n] == sigma:
                extends += 1
                compatible += 1
        elif sigma.startswith(out):
            compatible += 1
    return extends, compatible


def induced_measure(f: PrefixFunctional, sigma: str, use_bound: int) -> DyadicInterval:
    """Bracket the measure induced by ``f`` on the cylinder of ``sigma``."""
    if not sigma:
        return FULL
    # one image table serves every short cylinder
    images = _images(f, use_bound, max(len(sigma), IMAGE_CAP))
    lo, hi = _count(images, sigma)
    scale = Fraction(1, 2 ** use_bound)
    return DyadicInterval(lo * scale, hi * scale)


def product_measure(a: DyadicInterval, b: DyadicInterval) -> DyadicInterval:
    return DyadicInterval(a.lower * b.lower, a.upper * b.upper)


def atom_probe(f: PrefixFunctional, point: BitStream, depth: int, use_bound: int) -> DyadicInterval:
    """Measure of the depth-``depth`` cylinder around ``point``; an upper bound on its mass."""
    return induced_measure(f, point.prefix(depth), use_bound)


def normalize_cylinders(cylinders: Iterable[str]) -> List[str]:
    """Drop cylinders covered by a shorter one; the result is prefix-free and sorted."""
    kept: List[str] = []
    for c in sorted(set(cylinders), key=lambda s: (len(s), s)):
        if not any(c.startswith(k) for k in kept):
            kept.append(c)
    return sorted(kept)


def is_prefix_free(cylinders: Sequence[str]) -> bool:
    cs = sorted(cylinders)
    # In lexicographic order a prefix sorts immediately before some extension of it.
    return len(set(cs)) == len(cs) and not any(
        cs[i + 1].startswith(cs[i]) for i in range(len(cs) - 1))


def open_measure_bound(f: PrefixFunctional, cylinders: Sequence[str], use_bound: int,
                       normalize: bool = True) -> DyadicInterval:
    """Bracket the measure of the union of ``cylinders``."""
    if normalize:
        cylinders = normalize_cylinders(cylinders)
    elif not is_prefix_free(cylinders):
        raise NotPrefixFree(f"overlapping cylinders: {list(cylinders)}")
    lo = hi = Fraction(0)
    for c in cylinders:
        iv = induced_measure(f, c, use_bound)
        lo += iv.lower
        hi += iv.upper
    return DyadicInterval(lo, min(hi, Fraction(1)))


@dataclass
class CylinderTable:
    depth: int
    entries: Dict[str, DyadicInterval]

    @classmethod
    def build(cls, f: PrefixFunctional, depth: int, use_bound: int) -> "CylinderTable":
        entries = {}
        for n in range(depth + 1):
            for sigma in _inputs(n):
                entries[sigma] = induced_measure(f, sigma, use_bound)
        return cls(depth, entries)

    def level(self, n: int) -> List[DyadicInterval]:
        return [iv for s, iv in self.entries.items() if len(s) == n]

    def level_sums(self, n: int) -> Tuple[Fraction, Fraction]:
        ivs = self.level(n)
        return sum((i.lower for i in ivs), Fraction(0)), sum((i.upper for i in ivs), Fraction(0))

    def normalized(self) -> bool:
        for n in range(self.depth + 1):
            lo, hi = self.level_sums(n)
            if not lo <= 1 <= hi:
                return False
        return True

    def nested(self) -> bool:
        for s, iv in self.entries.items():
            if len(s) < self.depth and not iv.refines_sum([self.entries[s + "0"], self.entries[s + "1"]]):
                return False
        return True

    def to_json(self) -> list:
        return [{"sigma": s, **iv.to_json()}
                for s, iv in sorted(self.entries.items(), key=lambda kv: (len(kv[0]), kv[0]))]

    @classmethod
    def from_json(cls, data: list) -> "CylinderTable":
        entries = {e["sigma"]: DyadicInterval(parse_dyadic(e["lower"]), parse_dyadic(e["upper"]))
                   for e in data}
        return cls(max((len(s) for s in entries), default=0), entries)
