"""Binary sequences: stage scripts, lazy streams, joins and index-set restrictions.

A :class:`Delta02Script` stands in for a limit-computable set: it lists, for
each bit below ``depth``, the finitely many stages at which that bit changes.
Stage ``s`` of the approximation is obtained by replaying changes up to ``s``.

Layouts used throughout the package:

* ``join2`` -- even positions carry the left stream, odd the right one.
* ``nfold_join`` -- left-nested ``((A0 + A1) + A2) + ...``.
* ``infinite_join`` -- component ``k`` occupies ``I(k)``, the positions whose
  binary expansion ends in exactly ``k`` ones.
"""
from __future__ import annotations

import random
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

from .errors import DepthExceeded, EmptyList, IndexSetExhausted, ParseError

Change = Tuple[int, int]  # (stage, new value)


# ---------------------------------------------------------------------------
# Stage scripts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Delta02Script:
    depth: int
    changes: Tuple[Tuple[int, Tuple[Change, ...]], ...] = ()

    def __post_init__(self):
        seen = set()
        for bit, lst in self.changes:
            if bit in seen:
                raise ValueError(f"bit {bit} listed twice")
            seen.add(bit)
            if not 0 <= bit < self.depth:
                raise ValueError(f"bit {bit} outside depth {self.depth}")
            prev = -1
            for stage, value in lst:
                if value not in (0, 1):
                    raise ValueError("bit values must be 0 or 1")
                if stage <= prev:
                    raise ValueError(f"stages for bit {bit} must strictly increase")
                if stage <= bit:
                    raise ValueError(f"bit {bit} may not change at stage {stage} <= {bit}")
                prev = stage
        object.__setattr__(self, "_table", {b: lst for b, lst in self.changes if lst})

    @classmethod
    def from_dict(cls, depth: int, changes: Dict[int, Sequence[Change]]) -> "Delta02Script":
        items = tuple(sorted((b, tuple(tuple(c) for c in lst)) for b, lst in changes.items() if lst))
        return cls(depth, items)

    def changes_of(self, n: int) -> Tuple[Change, ...]:
        return self._table.get(n, ())

    def _check(self, n: int):
        if n >= self.depth or n < 0:
            raise DepthExceeded(f"bit {n} outside script depth {self.depth}")

    def stage_bit(self, n: int, s: int) -> int:
        """A_s(n)."""
        self._check(n)
        value = 0
        for stage, v in self.changes_of(n):
            if stage > s:
                break
            value = v
        return value

    def approx_prefix(self, s: int, n: int) -> str:
        """A_s restricted to [0, n) (bits at or beyond s are necessarily 0)."""
        if n > self.depth:
            raise DepthExceeded(f"prefix length {n} exceeds depth {self.depth}")
        return "".join(str(self.stage_bit(i, s)) for i in range(n))

    def max_stage(self) -> int:
        return max((lst[-1][0] for lst in self._table.values()), default=0)

    def to_text(self) -> str:
        lines = [f"depth {self.depth}"]
        for bit, lst in self.changes:
            body = ", ".join(f"{s}={v}" for s, v in lst)
            lines.append(f"bit {bit}: {body}")
        return "\n".join(lines) + "\n"


def limit_bit(script: Delta02Script, n: int) -> int:
    script._check(n)
    lst = script.changes_of(n)
    return lst[-1][1] if lst else 0


def limit_prefix(script: Delta02Script, n: int) -> str:
    if n > script.depth:
        raise DepthExceeded(f"prefix length {n} exceeds depth {script.depth}")
    return "".join(str(limit_bit(script, i)) for i in range(n))


def stage_set(script: Delta02Script, s: int) -> str:
    if s > script.depth:
        raise DepthExceeded(f"stage {s} exceeds depth {script.depth}")
    return script.approx_prefix(s, s)


def stabilization_stage(script: Delta02Script, d: int) -> int:
    if d > script.depth:
        raise DepthExceeded(f"{d} exceeds depth {script.depth}")
    last = [script.changes_of(n)[-1][0] for n in range(d) if script.changes_of(n)]
    return max(last) + 1 if last else 0


def parse_script(text: str) -> Delta02Script:
    """Read the ``depth <d>`` / ``bit <n>: <stage>=<value>, ...`` seed format."""
    depth = None
    changes: Dict[int, List[Change]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("depth"):
                depth = int(line.split()[1])
            elif line.startswith("bit"):
                head, body = line.split(":", 1)
                bit = int(head.split()[1])
                if bit in changes:
                    raise ValueError(f"bit {bit} listed twice")
                pairs = []
                for item in body.split(","):
                    if item.strip():
                        s, v = item.split("=")
                        pairs.append((int(s), int(v)))
                changes[bit] = pairs
            else:
                raise ValueError(f"unrecognized line {line!r}")
        except (ValueError, IndexError) as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    if depth is None:
        raise ParseError("missing 'depth' header")
    try:
        return Delta02Script.from_dict(depth, changes)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def load_script(path) -> Delta02Script:
    with open(path) as fh:
        return parse_script(fh.read())


def random_script(seed: int, depth: int = 64, max_changes: int = 3, max_delay: int = 3) -> Delta02Script:
    """A reproducible script whose bit ``n`` settles by stage ``n + max_changes * max_delay``."""
    rng = random.Random(seed)
    changes: Dict[int, List[Change]] = {}
    for n in range(depth):
        stage, value, lst = n, 0, []
        for _ in range(rng.randint(0, max_changes)):
            stage += rng.randint(1, max_delay)
            value ^= 1
            lst.append((stage, value))
        if lst:
            changes[n] = lst
    return Delta02Script.from_dict(depth, changes)


def subscript(script: Delta02Script, position: Callable[[int], int]) -> Delta02Script:
    """Script of the bits at ``position(0) < position(1) < ...`` with stages re-indexed.

    New change stage for bit ``m`` is ``max(old stage, m + 1)``; changes that
    collide after re-indexing keep the later value, so limits are untouched.
    """
    changes: Dict[int, List[Change]] = {}
    m = 0
    while True:
        p = position(m)
        if p >= script.depth:
            break
        merged: Dict[int, int] = {}
        for stage, value in script.changes_of(p):
            merged[max(stage, m + 1)] = value
        if merged:
            changes[m] = sorted(merged.items())
        m += 1
    return Delta02Script.from_dict(m, changes)


# ---------------------------------------------------------------------------
# Index families
# ---------------------------------------------------------------------------

def trailing_ones(p: int) -> int:
    return ((p ^ (p + 1)).bit_length()) - 1


@dataclass(frozen=True)
class IndexFamily:
    """One of I(k), J(n), evens, odds or an explicit sorted list."""

    kind: str
    param: int = 0
    elements: Tuple[int, ...] = ()

    @staticmethod
    def I(k: int) -> "IndexFamily":
        return IndexFamily("I", k)

    @staticmethod
    def J(n: int) -> "IndexFamily":
        return IndexFamily("J", n)

    @staticmethod
    def evens() -> "IndexFamily":
        return IndexFamily("evens")

    @staticmethod
    def odds() -> "IndexFamily":
        return IndexFamily("odds")

    @staticmethod
    def explicit(elements: Sequence[int]) -> "IndexFamily":
        return IndexFamily("explicit", elements=tuple(sorted(set(elements))))

    def nth(self, m: int) -> int:
        """Principal function: the (m+1)-st element."""
        k = self.param
        if self.kind == "I":
            return (m << (k + 1)) + (1 << k) - 1
        if self.kind == "J":
            return (m << k) + (1 << k) - 1
        if self.kind == "evens":
            return 2 * m
        if self.kind == "odds":
            return 2 * m + 1
        if m >= len(self.elements):
            raise IndexSetExhausted(f"explicit set has only {len(self.elements)} elements")
        return self.elements[m]

    def rank(self, p: int) -> int:
        """Number of elements below ``p`` (the index of ``p`` when it is a member)."""
        k = self.param
        if self.kind == "I":
            return max(0, -(-(p - (1 << k) + 1) // (1 << (k + 1))))
        if self.kind == "J":
            return max(0, -(-(p - (1 << k) + 1) // (1 << k)))
        if self.kind == "evens":
            return (p + 1) // 2
        if self.kind == "odds":
            return p // 2
        return sum(1 for e in self.elements if e < p)

    def __contains__(self, n: int) -> bool:
        return index_member(self, n)


def index_member(family: IndexFamily, n: int) -> bool:
    if family.kind == "I":
        return trailing_ones(n) == family.param
    if family.kind == "J":
        return trailing_ones(n) >= family.param
    if family.kind == "evens":
        return n % 2 == 0
    if family.kind == "odds":
        return n % 2 == 1
    return n in family.elements


# ---------------------------------------------------------------------------
# Join layouts as pure position arithmetic
# ---------------------------------------------------------------------------

def nfold_locate(p: int, n: int) -> Tuple[int, int]:
    """Which component (and index within it) owns position ``p`` in an n-fold join."""
    while n > 1:
        if p & 1:
            return n - 1, p >> 1
        p >>= 1
        n -= 1
    return 0, p


def nfold_position(i: int, m: int, n: int) -> int:
    if i == 0:
        return m << (n - 1)
    return ((m << 1) | 1) << (n - 1 - i)


def infinite_locate(p: int) -> Tuple[int, int]:
    k = trailing_ones(p)
    return k, p >> (k + 1)


def infinite_position(k: int, m: int) -> int:
    return IndexFamily.I(k).nth(m)


def split_nfold(bits: str, n: int) -> List[str]:
    """Component prefixes determined by a finite n-fold-join prefix."""
    out = [[] for _ in range(n)]
    for p, b in enumerate(bits):
        i, _ = nfold_locate(p, n)
        out[i].append(b)
    return ["".join(x) for x in out]


def merge_nfold(parts: Sequence[str], cap: int = None) -> str:
    """Longest prefix of the n-fold join fully determined by ``parts``."""
    n = len(parts)
    out = []
    p = 0
    while cap is None or p < cap:
        i, m = nfold_locate(p, n)
        if m >= len(parts[i]):
            break
        out.append(parts[i][m])
        p += 1
    return "".join(out)


def split_infinite(bits: str) -> Dict[int, str]:
    out: Dict[int, List[str]] = {}
    for p, b in enumerate(bits):
        k, _ = infinite_locate(p)
        out.setdefault(k, []).append(b)
    return {k: "".join(v) for k, v in out.items()}


def component_bits(bits: str, k: int) -> str:
    """Bits of component ``k`` (infinite-join layout) available in ``bits``."""
    fam = IndexFamily.I(k)
    out = []
    m = 0
    while True:
        p = fam.nth(m)
        if p >= len(bits):
            return "".join(out)
        out.append(bits[p])
        m += 1


# ---------------------------------------------------------------------------
# Lazy streams
# ---------------------------------------------------------------------------

class BitStream:
    """An infinite binary sequence evaluated on demand.

    Subclasses implement :meth:`_bit`; :meth:`bit_at` memoizes under a lock so
    concurrent readers see the same bits.
    """

    def __init__(self):
        self._memo: Dict[int, int] = {}
        self._lock = threading.Lock()

    def _bit(self, i: int) -> int:
        raise NotImplementedError

    def bit_at(self, i: int) -> int:
        if i < 0:
            raise IndexError(i)
        with self._lock:
            hit = self._memo.get(i)
        if hit is not None:
            return hit
        b = self._bit(i)
        with self._lock:
            self._memo.setdefault(i, b)
        return b

    def prefix(self, n: int) -> str:
        return "".join(str(self.bit_at(i)) for i in range(n))

    def ones_from(self):
        """Index from which the stream is known to be all ones, or None."""
        return None


class ScriptLimit(BitStream):
    def __init__(self, script: Delta02Script):
        super().__init__()
        self.script = script

    def _bit(self, i):
        return limit_bit(self.script, i)

    def __repr__(self):
        return f"ScriptLimit(depth={self.script.depth})"


class EventuallyConstant(BitStream):
    def __init__(self, prefix: str, tail: int):
        super().__init__()
        self.head = prefix
        self.tail = int(tail)

    def _bit(self, i):
        return int(self.head[i]) if i < len(self.head) else self.tail

    def ones_from(self):
        if self.tail != 1:
            return None
        return len(self.head.rstrip("1"))

    def __repr__(self):
        return f"EventuallyConstant({self.head!r}, {self.tail})"


def constant(bit: int) -> EventuallyConstant:
    return EventuallyConstant("", bit)


class Join2(BitStream):
    def __init__(self, left: BitStream, right: BitStream):
        super().__init__()
        self.left, self.right = left, right

    def _bit(self, i):
        return (self.right if i & 1 else self.left).bit_at(i >> 1)


class NFoldJoin(BitStream):
    def __init__(self, streams: Sequence[BitStream]):
        super().__init__()
        if not streams:
            raise EmptyList("n-fold join needs at least one stream")
        self.streams = list(streams)

    def _bit(self, i):
        k, m = nfold_locate(i, len(self.streams))
        return self.streams[k].bit_at(m)


class InfiniteJoin(BitStream):
    def __init__(self, family: Callable[[int], BitStream]):
        super().__init__()
        self.family = family
        self._components: Dict[int, BitStream] = {}

    def component(self, k: int) -> BitStream:
        if k not in self._components:
            self._components[k] = self.family(k)
        return self._components[k]

    def _bit(self, i):
        k, m = infinite_locate(i)
        return self.component(k).bit_at(m)


class Restrict(BitStream):
    def __init__(self, source: BitStream, index: IndexFamily):
        super().__init__()
        self.source, self.index = source, index

    def _bit(self, i):
        return self.source.bit_at(self.index.nth(i))


def join2(a: BitStream, b: BitStream) -> BitStream:
    return Join2(a, b)


def nfold_join(streams: Sequence[BitStream]) -> BitStream:
    if not streams:
        raise EmptyList("n-fold join needs at least one stream")
    if len(streams) == 1:
        return streams[0]
    return NFoldJoin(streams)


def infinite_join(family: Callable[[int], BitStream]) -> BitStream:
    return InfiniteJoin(family)


def restrict(y: BitStream, z: IndexFamily) -> BitStream:
    return Restrict(y, z)


def interleave_str(a: str, b: str) -> str:
    """Longest determined prefix of the pairwise join of two finite prefixes."""
    n = min(2 * len(a), 2 * len(b) + 1)
    return "".join(b[i >> 1] if i & 1 else a[i >> 1] for i in range(n))
