"""Countable image classes, their points, and Cantor-Bendixson ranks.

A class is described by the recipe that produced it (:class:`Rank1`,
:class:`Product`, :class:`DynJoinClass`, :class:`ThetaClass`).  Points are
images of explicit symbolic inputs, so every point can be re-evaluated and
its structural rank read off the recipe.

Finite enumerations cannot see convergence on their own: two points at
distance ``2^-k`` look the same whichever one is the limit.  Every enumerated
point therefore carries ``approach``, the keys of enumerated points that the
recipe's parametrization makes converge to it.  The derivative removes a
point once it is resolved at the working depth and none of its approachers
is left.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import product
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from . import ordinals as O
from .errors import HorizonExceeded, UndecidableEquality
from .functionals import (Constant, DynJoin, Output, PairJoin, Phi, PrefixFunctional,
                          _table, component_script, route, s_indices, split_script)
from .ordinals import CnfOrdinal
from .streams import (BitStream, Delta02Script, EventuallyConstant, IndexFamily,
                      infinite_locate, join2, limit_prefix)

UNKNOWN = None
"""Value returned by :func:`brute_rank` when the enumeration cannot witness a rank."""

ZERO = O.ZERO
ONE = O.cnf(1)

# Output cap used when a recipe needs the long-run behaviour of a point.
STRUCT_CAP = 1 << 13
# Blocks a partial rank-one stream must spell out before it counts as R
# (at most half the script depth).
DECIDE_BLOCKS = 16
# Input bits fed to a dynamic join; components k <= 5 see 64 bits each.
DYN_INPUT_HORIZON = 1 << 12


# ---------------------------------------------------------------------------
# Inputs and points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolicInput:
    """An input to a class functional.

    ``designated`` marks the class's own limit input.  Otherwise a leaf is
    ``prefix`` followed by ``0^ω``, and a compound input lists per-component
    inputs in ``parts`` (components past the list read ``0^ω``).
    """

    designated: bool = False
    prefix: str = ""
    parts: Tuple["SymbolicInput", ...] = ()

    @staticmethod
    def leaf(prefix: str) -> "SymbolicInput":
        return SymbolicInput(prefix=prefix)

    @staticmethod
    def of(*parts: "SymbolicInput") -> "SymbolicInput":
        return SymbolicInput(parts=tuple(parts))

    def part(self, i: int) -> "SymbolicInput":
        if self.designated:
            return DESIGNATED
        return self.parts[i] if i < len(self.parts) else ZERO_INPUT

    def replace(self, i: int, x: "SymbolicInput") -> "SymbolicInput":
        parts = list(self.parts) + [ZERO_INPUT] * max(0, i + 1 - len(self.parts))
        parts[i] = x
        return SymbolicInput(parts=tuple(parts))

    def describe(self) -> str:
        if self.designated:
            return "A"
        if self.parts:
            return "(" + ", ".join(p.describe() for p in self.parts) + ", 0^w...)"
        return f"{self.prefix}0^w"


DESIGNATED = SymbolicInput(designated=True)
ZERO_INPUT = SymbolicInput()


@dataclass(frozen=True, eq=False)
class SymbolicPoint:
    """A class point: its output, the input generating it, and its approachers.

    ``form`` is ``EventuallyOne`` when the output is known to be ``prefix 1^ω``
    (with ``prefix`` empty or ending in 0), else ``LimitPoint`` with ``prefix``
    holding the bits known up to the evaluation horizon.
    """

    key: tuple
    form: str
    prefix: str
    name: str
    input: SymbolicInput
    approach: Optional[FrozenSet[tuple]] = None
    transfinite: bool = False

    def bit_at(self, i: int) -> int:
        if i < len(self.prefix):
            return int(self.prefix[i])
        if self.form == "EventuallyOne":
            return 1
        raise HorizonExceeded(f"bit {i} of {self.name} is past the evaluation horizon")

    def bits(self, n: int) -> str:
        if self.form == "EventuallyOne":
            return (self.prefix + "1" * n)[:n]
        if n > len(self.prefix):
            raise HorizonExceeded(f"{self.name} known to {len(self.prefix)} bits, {n} requested")
        return self.prefix[:n]

    def __eq__(self, other):
        return isinstance(other, SymbolicPoint) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"SymbolicPoint({self.name})"


def EventuallyOne(prefix: str, name: str = "", key: Optional[tuple] = None, input: SymbolicInput = DESIGNATED,
                  approach=None, transfinite=False) -> SymbolicPoint:
    head = prefix.rstrip("1")
    return SymbolicPoint(key or ("eo", head), "EventuallyOne", head, name or f"{head}1^w",
                         input, approach, transfinite)


def LimitPoint(generator: BitStream, name: str, horizon: int, key: Optional[tuple] = None,
               input: SymbolicInput = DESIGNATED, approach=None, transfinite=False) -> SymbolicPoint:
    return SymbolicPoint(key or ("limit", name), "LimitPoint", generator.prefix(horizon), name,
                         input, approach, transfinite)


def point_from_output(out: Output, key: tuple, name: str, x: SymbolicInput, horizon: int,
                      approach=None, transfinite=False) -> SymbolicPoint:
    if out.complete:
        return EventuallyOne(out.bits[:out.ones_from], name, key, x, approach, transfinite)
    if len(out.bits) < horizon:
        raise HorizonExceeded(f"{name}: only {len(out.bits)} output bits below the input horizon")
    return SymbolicPoint(key, "LimitPoint", out.bits[:horizon], name, x, approach, transfinite)


def lcp(a: str, b: str) -> int:
    n = min(len(a), len(b))
    for i in range(n):
        if a[i] != b[i]:
            return i
    return n


# ---------------------------------------------------------------------------
# Class descriptors
# ---------------------------------------------------------------------------

@dataclass
class _Entry:
    input: SymbolicInput
    approach: set
    transfinite: bool
    name: str


class ClassDescriptor:
    """Recipe for an image class ``F(2^ω)`` together with its designated input."""

    @property
    def functional(self) -> PrefixFunctional:
        raise NotImplementedError

    @property
    def limit_rank(self) -> CnfOrdinal:
        """Structural rank of the designated point."""
        raise NotImplementedError

    def stream(self, x: SymbolicInput) -> BitStream:
        raise NotImplementedError

    def is_designated(self, x: SymbolicInput) -> bool:
        raise NotImplementedError

    def point_key(self, x: SymbolicInput) -> tuple:
        raise NotImplementedError

    def structural_rank(self, x: SymbolicInput) -> CnfOrdinal:
        raise NotImplementedError

    def entries(self, bound: int) -> Dict[tuple, _Entry]:
        raise NotImplementedError

    def decompose(self, x: SymbolicInput, out: Output, partial: bool = False) -> Optional[CnfOrdinal]:
        """Rank of the point ``out`` read off its bits; None when undecided.

        ``x`` only supplies non-uniform advice (the stall index of a dynamic
        join).  ``partial`` marks a component stream recovered from a larger
        output, which may be cut short by its siblings.
        """
        raise NotImplementedError

    def output(self, x: SymbolicInput, cap: int) -> Output:
        return self.functional.evaluate(self.input_prefix(x), cap)

    def input_prefix(self, x: SymbolicInput) -> str:
        return self.stream(x).prefix(self.functional.horizon)


class ConstantClass(ClassDescriptor):
    """The singleton ``{0^ω}``."""

    def __init__(self, horizon: int = 0):
        self._f = Constant("", 0, horizon=horizon)

    @property
    def functional(self):
        return self._f

    @property
    def limit_rank(self):
        return ZERO

    def stream(self, x):
        return EventuallyConstant("", 0)

    def is_designated(self, x):
        return True

    def point_key(self, x):
        return ("const",)

    def structural_rank(self, x):
        return ZERO

    def entries(self, bound):
        return {("const",): _Entry(DESIGNATED, set(), False, "0^w")}

    def decompose(self, x, out, partial=False):
        return ZERO

    def __repr__(self):
        return "ConstantClass()"


class Rank1(ClassDescriptor):
    """Image class of the rank-one functional of ``script``."""

    def __init__(self, script: Delta02Script):
        self.script = script
        self._phi = Phi(script)
        self.designated_prefix = limit_prefix(script, script.depth)

    @property
    def functional(self):
        return self._phi

    @property
    def limit_rank(self):
        return ONE

    def stream(self, x):
        if x.designated:
            return EventuallyConstant(self.designated_prefix, 0)
        return EventuallyConstant(x.prefix, 0)

    def is_designated(self, x):
        return x.designated or self.stream(x).prefix(self.script.depth) == self.designated_prefix

    def point_key(self, x):
        if self.is_designated(x):
            return ("R",)
        out = self.output(x, 0)
        if not out.complete:
            raise UndecidableEquality(f"input {x.describe()} matches every stage search up to depth")
        return ("eo", out.bits[:out.ones_from])

    def structural_rank(self, x):
        return ONE if self.is_designated(x) else ZERO

    def deviants(self, bound: int) -> List[Tuple[int, str]]:
        """(deviation position, minimal input prefix) for inputs leaving A at n < bound.

        A depth-first search extends each deviating prefix until its stage
        search fails; every leaf fixes the image, which ``leaf + 0^ω`` realizes.
        """
        a = self.designated_prefix
        found = []
        for n in range(min(bound, self.script.depth)):
            stack = [a[:n] + ("1" if a[n] == "0" else "0")]
            while stack:
                pre = stack.pop()
                if s_indices(self.script, pre)[-1] is None:
                    found.append((n, pre))
                elif len(pre) < self.script.depth:
                    stack.extend([pre + "1", pre + "0"])
        return found

    def entries(self, bound):
        out: Dict[tuple, _Entry] = {}
        for n, pre in self.deviants(bound):
            x = SymbolicInput.leaf(pre)
            key = self.point_key(x)
            if key not in out:
                out[key] = _Entry(x, set(), False, f"Phi({pre}0^w)")
        out[("R",)] = _Entry(DESIGNATED, set(out), False, "R")
        return out

    def decompose(self, x, out, partial=False):
        """Parse ``1^s 0`` blocks against the stage table.

        A run of ones longer than any block the stage search allows, or a
        known ones-tail, proves the search failed: the point is isolated.
        Recovering every block (``DECIDE_BLOCKS`` of them for a partial
        stream) and finding they spell A makes it R.
        """
        min_blocks = DECIDE_BLOCKS if partial else None
        table = _table(self.script)
        depth = self.script.depth
        need = depth if min_blocks is None else min(min_blocks, (depth + 1) // 2)
        bits = out.bits[:out.ones_from] if out.complete else out.bits
        pos, lo, decoded = 0, 0, []
        while len(decoded) < depth:
            n = len(decoded) + 1
            hi = max(table.stab[n], lo)
            j = bits.find("0", pos)
            if j < 0:
                if out.complete or len(bits) - pos > hi:
                    return ZERO
                break
            s = j - pos
            if s > hi:
                return ZERO
            if s < lo:
                return UNKNOWN
            decoded.append(str((table.row(s) >> (n - 1)) & 1))
            pos, lo = j + 1, s + 1
        if out.complete:
            return ZERO
        if "".join(decoded) != self.designated_prefix[:len(decoded)]:
            return UNKNOWN
        return ONE if len(decoded) >= need else UNKNOWN

    def __repr__(self):
        return f"Rank1(depth={self.script.depth})"


class Product(ClassDescriptor):
    """``P ⊗ Q``: joins of a point of each class."""

    def __init__(self, left: ClassDescriptor, right: ClassDescriptor):
        self.left, self.right = left, right
        self._f = PairJoin(left.functional, right.functional)

    @property
    def functional(self):
        return self._f

    @property
    def limit_rank(self):
        return O.hessenberg_sum(self.left.limit_rank, self.right.limit_rank)

    def _parts(self, x):
        return (DESIGNATED, DESIGNATED) if x.designated else (x.part(0), x.part(1))

    def stream(self, x):
        a, b = self._parts(x)
        return join2(self.left.stream(a), self.right.stream(b))

    def is_designated(self, x):
        a, b = self._parts(x)
        return self.left.is_designated(a) and self.right.is_designated(b)

    def point_key(self, x):
        a, b = self._parts(x)
        return ("pair", self.left.point_key(a), self.right.point_key(b))

    def structural_rank(self, x):
        a, b = self._parts(x)
        return O.hessenberg_sum(self.left.structural_rank(a), self.right.structural_rank(b))

    def entries(self, bound):
        el, er = _entries(self.left, bound), _entries(self.right, bound)
        out = {}
        for kl, l in el.items():
            for kr, r in er.items():
                approach = {("pair", a, kr) for a in l.approach} | {("pair", kl, b) for b in r.approach}
                out[("pair", kl, kr)] = _Entry(SymbolicInput.of(l.input, r.input), approach,
                                               l.transfinite or r.transfinite, f"<{l.name}, {r.name}>")
        return out

    def decompose(self, x, out, partial=False):
        a, b = self._parts(x)
        halves = split_output(out)
        ranks = [self.left.decompose(a, halves[0], True), self.right.decompose(b, halves[1], True)]
        if UNKNOWN in ranks:
            return UNKNOWN
        return O.hessenberg_sum(*ranks)

    def __repr__(self):
        return f"Product({self.left!r}, {self.right!r})"


def split_output(out: Output) -> Tuple[Output, Output]:
    """Undo a pair join on a (possibly complete) output."""
    q = out.ones_from
    left = Output(out.bits[0::2], None if q is None else (q + 1) // 2)
    right = Output(out.bits[1::2], None if q is None else q // 2)
    return left, right


class DynJoinClass(ClassDescriptor):
    """Image class of the dynamic join of a family of classes.

    Enumeration starts from every pattern of designated and ``0^ω`` inputs on
    the first ``max_prefix`` components, then varies each designated component
    that the phase machine activates over its own enumeration, keeping the
    phase log of the base intact.  This covers the ``B^n`` family for
    ``n <= max_prefix`` and the points converging to them.
    """

    def __init__(self, components: Union[Sequence[ClassDescriptor], Callable[[int], ClassDescriptor]],
                 limit_rank: Optional[CnfOrdinal] = None, max_prefix: int = 3,
                 input_horizon: int = DYN_INPUT_HORIZON):
        if callable(components):
            self._family = components
        else:
            listed = list(components)
            self._family = lambda k: listed[k] if k < len(listed) else ConstantClass()
        self._cache: Dict[int, ClassDescriptor] = {}
        self._limit = limit_rank if limit_rank is not None else O.OMEGA
        self.max_prefix = max_prefix
        self._f = DynJoin(lambda k: self.component(k).functional, input_horizon)
        self._runs: Dict[SymbolicInput, tuple] = {}
        self._prefixes: Dict[SymbolicInput, str] = {}

    def component(self, k: int) -> ClassDescriptor:
        if k not in self._cache:
            self._cache[k] = self._family(k)
        return self._cache[k]

    @property
    def functional(self):
        return self._f

    @property
    def limit_rank(self):
        return self._limit

    def stream(self, x):
        return _JoinedInput(self, x)

    def input_prefix(self, x):
        if x not in self._prefixes:
            self._prefixes[x] = _joined_prefix(self, x, self._f.horizon)
        return self._prefixes[x]

    def is_designated(self, x):
        return x.designated

    def run(self, x: SymbolicInput):
        """Phase machine on ``x``, run until its stall is decided."""
        if x not in self._runs:
            out, state = self._f.run(self.input_prefix(x), 1024)
            if not state.stalled:
                out, state = self._f.run(self.input_prefix(x), STRUCT_CAP)
            if not x.designated and not state.stalled:
                raise UndecidableEquality(f"no stall decided for {x.describe()} within {STRUCT_CAP} bits")
            self._runs[x] = (out, state)
        return self._runs[x]

    def point_key(self, x):
        if x.designated:
            return ("xi", "A")
        _, st = self.run(x)
        comps = tuple(self.component(i).point_key(x.part(i)) for i in range(st.phase + 1))
        return ("xi", tuple(st.completed_boundaries), st.phase, comps)

    def structural_rank(self, x):
        if x.designated:
            return self._limit
        _, st = self.run(x)
        return O.hessenberg_total(self.component(i).structural_rank(x.part(i)) for i in range(st.phase + 1))

    def entries(self, bound):
        return _dyn_entries(self, bound, self.max_prefix)

    def decompose(self, x, out, partial=False):
        """Recover the component streams through the eq1/eq2 offsets and rank them.

        The stall index comes from the phase machine on ``x``; the designated
        input never stalls and gets the limit rank.
        """
        if x.designated:
            return self._limit
        phase = self.run(x)[1].phase
        streams = recover_components(out, replay_boundaries(out.bits, phase), phase)
        ranks = [self.component(i).decompose(x.part(i), streams[i], True) for i in range(phase + 1)]
        if UNKNOWN in ranks:
            return UNKNOWN
        return O.hessenberg_total(ranks)

    def __repr__(self):
        return f"DynJoinClass(limit={O.render_cnf(self._limit)})"


class _JoinedInput(BitStream):
    def __init__(self, cls: DynJoinClass, x: SymbolicInput):
        super().__init__()
        self.cls, self.x = cls, x

    def _bit(self, i):
        k, m = infinite_locate(i)
        return self.cls.component(k).stream(self.x.part(k)).bit_at(m)


def _joined_prefix(cls: DynJoinClass, x: SymbolicInput, length: int) -> str:
    # Same bits as _JoinedInput, assembled per component for speed.
    out = ["0"] * length
    k = 0
    while (1 << k) - 1 < length:
        fam = IndexFamily.I(k)
        count = fam.rank(length)
        bits = cls.component(k).stream(x.part(k)).prefix(count)
        for m, b in enumerate(bits):
            out[fam.nth(m)] = b
        k += 1
    return "".join(out)


def replay_boundaries(bits: str, stop_phase: Optional[int] = None) -> List[int]:
    """Phase boundaries read off an output by re-running the routing on its own bits."""
    phase, owing, bounds = 0, {0}, []
    for p, b in enumerate(bits):
        if stop_phase is not None and phase >= stop_phase:
            break
        if b == "0":
            owing.discard(route(p, phase))
        if not owing:
            bounds.append(p + 1)
            phase += 1
            owing = set(range(phase + 1))
    return bounds


def recover_components(out: Output, bounds: Sequence[int], phase: int) -> List[Output]:
    """Component streams of a stalled dynamic-join output.

    Component ``k < phase`` is its bits routed up to the end of phase ``k``
    followed by ``I_k`` from offset ``d_k``; component ``phase`` lives on
    ``J_phase`` from the last boundary.
    """
    bits, q = out.bits, out.ones_from
    streams = []
    for k in range(phase + 1):
        if k < phase:
            head = [bits[p] for p in range(bounds[k]) if _routed(p, bounds) == k]
            region, d = IndexFamily.I(k), IndexFamily.I(k).rank(bounds[k])
        else:
            head = []
            start = bounds[-1] if bounds else 0
            region, d = IndexFamily.J(phase), IndexFamily.J(phase).rank(start)
        tail = []
        i = 0
        while True:
            p = region.nth(i + d)
            if p >= len(bits):
                break
            tail.append(bits[p])
            i += 1
        ones_from = None
        if q is not None:
            ones_from = len(head) + max(0, region.rank(q) - d)
        streams.append(Output("".join(head + tail), ones_from))
    return streams


def _routed(p: int, bounds: Sequence[int]) -> int:
    phase = sum(1 for b in bounds if b <= p)
    return route(p, phase)


class ThetaClass(ClassDescriptor):
    """Class built by recursion on an ordinal notation."""

    def __init__(self, script: Delta02Script, notation: O.Notation):
        self.script, self.notation = script, notation

    @cached_property
    def resolved(self) -> ClassDescriptor:
        return _theta_descriptor(self.script, self.notation)

    @property
    def functional(self):
        return self.resolved.functional

    @property
    def limit_rank(self):
        return O.value_of(self.notation)

    def stream(self, x):
        return self.resolved.stream(x)

    def input_prefix(self, x):
        return self.resolved.input_prefix(x)

    def is_designated(self, x):
        return self.resolved.is_designated(x)

    def point_key(self, x):
        return self.resolved.point_key(x)

    def structural_rank(self, x):
        return self.resolved.structural_rank(x)

    def entries(self, bound):
        return self.resolved.entries(bound)

    def decompose(self, x, out, partial=False):
        return self.resolved.decompose(x, out, partial)

    def __repr__(self):
        return f"ThetaClass({self.notation})"


@lru_cache(maxsize=None)
def _theta_descriptor(script: Delta02Script, a: O.Notation) -> ClassDescriptor:
    if isinstance(a, O.One):
        return ConstantClass(script.depth)
    if isinstance(a, O.Succ) and isinstance(a.of, O.One):
        return Rank1(script)
    if isinstance(a, O.Succ):
        return Product(ThetaClass(split_script(script, 0), a.of), Rank1(split_script(script, 1)))
    return DynJoinClass(lambda k: ThetaClass(component_script(script, k), O.fundamental_at(a, k)),
                        limit_rank=O.value_of(a), input_horizon=script.depth)


def unit_gamma_join(scripts: Sequence[Delta02Script], **kw) -> DynJoinClass:
    """Dynamic join whose k-th component is the rank-one class of ``scripts[k mod len]``."""
    comps = [Rank1(s) for s in scripts]
    return DynJoinClass(lambda k: comps[k % len(comps)], **kw)


def b_input(n: int) -> SymbolicInput:
    """``B^n``: designated components below ``n``, ``0^ω`` from ``n`` on."""
    return SymbolicInput(parts=(DESIGNATED,) * n)


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

_ENTRY_CACHE: Dict[Tuple[int, int], Dict[tuple, _Entry]] = {}


def _entries(cls: ClassDescriptor, bound: int) -> Dict[tuple, _Entry]:
    key = (id(cls), bound)
    hit = _ENTRY_CACHE.get(key)
    if hit is None or hit[0] is not cls:
        hit = (cls, cls.entries(bound))
        _ENTRY_CACHE[key] = hit
    return hit[1]


def _dyn_entries(cls: DynJoinClass, bound: int, m_max: int) -> Dict[tuple, _Entry]:
    """Bases with components in {A_i, 0^ω}, each with its local product of variations.

    Past the last completed boundary a stalled run copies every active
    component forever, so swapping a component for any point whose output
    agrees on the bits consumed before that boundary keeps the phase log.
    The points near a base are therefore a product over its components.
    """
    out: Dict[tuple, _Entry] = {}
    for pattern in product((False, True), repeat=m_max):
        base = SymbolicInput(parts=tuple(DESIGNATED if d else ZERO_INPUT for d in pattern))
        _, st = cls.run(base)
        used = st.consumed_at_boundary[-1] if st.consumed_at_boundary else ()
        axes = []
        for i in range(min(st.phase + 1, m_max)):
            if not pattern[i]:
                continue
            comp = cls.component(i)
            need = used[i] if i < len(used) else 0
            target = comp.output(DESIGNATED, need).bits[:need]
            # deviation positions count from the blocks already spent on the phase log
            entries = _entries(comp, target.count("0") + bound)
            keep = {k: e for k, e in entries.items()
                    if comp.output(e.input, need).bits[:need] == target}
            axes.append((i, keep))
        keys = [list(keep) for _, keep in axes]
        for combo in product(*keys):
            x = base
            for (i, keep), k in zip(axes, combo):
                x = x.replace(i, keep[k].input)
            key = cls.point_key(x)
            if key[1:3] != (tuple(st.completed_boundaries), st.phase):
                raise AssertionError(f"variation {x.describe()} changed the phase log")
            approach = set()
            for n, ((i, keep), k) in enumerate(zip(axes, combo)):
                for q in keep[k].approach:
                    if q in keep:
                        y = x.replace(i, keep[q].input)
                        approach.add(cls.point_key(y))
            trans = any(keep[k].transfinite for (i, keep), k in zip(axes, combo))
            if key in out:
                out[key].approach |= approach
            else:
                out[key] = _Entry(x, approach, trans, "Xi" + x.describe())
    out[("xi", "A")] = _Entry(DESIGNATED, set(out), O.cnf_compare(cls.limit_rank, O.OMEGA) >= 0, "Xi(A)")
    return out


_POINT_CACHE: Dict[Tuple[int, int, int], tuple] = {}


def _enumerate(cls: ClassDescriptor, bound: int, horizon: int) -> Tuple[SymbolicPoint, ...]:
    # Failed separations are cached as well; brute_rank probes bounds repeatedly.
    key = (id(cls), bound, horizon)
    hit = _POINT_CACHE.get(key)
    if hit is None or hit[0] is not cls:
        try:
            hit = (cls, _build_points(cls, bound, horizon), None)
        except HorizonExceeded as exc:
            hit = (cls, None, exc)
        _POINT_CACHE[key] = hit
    if hit[2] is not None:
        raise hit[2]
    return hit[1]


def _build_points(cls: ClassDescriptor, bound: int, horizon: int) -> Tuple[SymbolicPoint, ...]:
    points = []
    for key, e in _entries(cls, bound).items():
        out = cls.output(e.input, horizon)
        points.append(point_from_output(out, key, e.name, e.input, horizon,
                                        frozenset(e.approach), e.transfinite))
    points.sort(key=lambda p: (p.bits(horizon), p.form))
    for a, b in zip(points, points[1:]):
        if a.bits(horizon) == b.bits(horizon):
            raise HorizonExceeded(f"{a.name} and {b.name} agree on the first {horizon} bits")
    return tuple(points)


def enumerate_points(cls: ClassDescriptor, bound: int, horizon: int = 64) -> List[SymbolicPoint]:
    """Designated point plus images of deviant inputs with parameters below ``bound``."""
    if bound < 1:
        raise ValueError("bound must be at least 1")
    return list(_enumerate(cls, bound, horizon))


def resolvable_points(cls: ClassDescriptor, bound: int, depth: int) -> Tuple[int, List[SymbolicPoint]]:
    """Enumeration at the largest bound, counting up from 1, that stays separated within ``depth`` bits.

    Counting up avoids building the large unresolvable enumerations first.
    """
    best = None
    for b in range(1, bound + 1):
        try:
            best = (b, enumerate_points(cls, b, depth))
        except HorizonExceeded:
            break
    if best is None:
        raise HorizonExceeded(f"no enumeration of {cls!r} separates within {depth} bits")
    return best


def verify_points(cls: ClassDescriptor, points: Iterable[SymbolicPoint], depth: int) -> int:
    """Re-evaluate every point through the class functional; returns the count checked."""
    n = 0
    for p in points:
        out = cls.output(p.input, depth)
        expect = p.bits(depth)
        got = (out.bits + ("1" * depth if out.complete else ""))[:depth]
        if got != expect:
            raise AssertionError(f"{p.name}: re-evaluation differs from symbolic bits")
        n += 1
    return n


# ---------------------------------------------------------------------------
# Derivative and ranks
# ---------------------------------------------------------------------------

def _approachers(p: SymbolicPoint, keys: set, points: Sequence[SymbolicPoint]) -> bool:
    if p.approach is not None:
        return any(k in keys for k in p.approach)
    if p.form == "LimitPoint":
        return any(q.form == "EventuallyOne" for q in points)
    return False


def cb_derivative(points: Sequence[SymbolicPoint], depth: int) -> List[SymbolicPoint]:
    """Drop points isolated within ``depth`` bits that have no approacher left."""
    keys = {p.key for p in points}
    out = []
    for p in points:
        mine = p.bits(depth)
        crowded = any(q is not p and q.bits(depth) == mine for q in points)
        if crowded or _approachers(p, keys, points):
            out.append(p)
    return out


def derivative_rank(points: Sequence[SymbolicPoint], p: SymbolicPoint, depth: int) -> Optional[int]:
    current = list(points)
    if p not in current:
        raise ValueError(f"{p.name} is not in the enumeration")
    count = 0
    while True:
        nxt = cb_derivative(current, depth)
        if p not in nxt:
            return count
        if len(nxt) == len(current):
            return UNKNOWN
        current, count = nxt, count + 1


def brute_rank(cls: ClassDescriptor, p: SymbolicPoint, bound: int = 16, depth: int = 64) -> Optional[int]:
    """Iterated-derivative rank of ``p`` in the largest resolvable enumeration.

    Points of transfinite structural rank are never ranked this way.
    """
    if p.transfinite:
        return UNKNOWN
    try:
        _, points = resolvable_points(cls, bound, depth)
    except HorizonExceeded:
        return UNKNOWN
    if p not in points:
        return UNKNOWN
    return derivative_rank(points, p, depth)


def structural_rank(cls: ClassDescriptor, x: SymbolicInput) -> CnfOrdinal:
    return cls.structural_rank(x)


def decomposition_rank(cls: ClassDescriptor, x: SymbolicInput) -> Optional[CnfOrdinal]:
    """Rank of the image of ``x`` recovered from its output bits."""
    return cls.decompose(x, cls.output(x, STRUCT_CAP))


@dataclass
class RankEntry:
    point_id: str
    prefix: str
    structural: CnfOrdinal
    brute: Optional[int]
    decomposed: Optional[CnfOrdinal]
    error: Optional[str] = None

    @property
    def faithful(self) -> bool:
        return self.decomposed is not None and self.decomposed == self.structural

    def to_json(self) -> dict:
        return {
            "pointId": self.point_id,
            "prefix": self.prefix,
            "structuralRank": O.render_cnf(self.structural),
            "bruteRank": "unknown" if self.brute is None else self.brute,
            "faithful": self.faithful,
            **({"error": self.error} if self.error else {}),
        }


@dataclass
class RankReport:
    entries: List[RankEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.faithful for e in self.entries)

    def failures(self) -> List[RankEntry]:
        return [e for e in self.entries if not e.faithful]

    def to_json(self) -> list:
        return [e.to_json() for e in self.entries]


def rank_faithful_check(cls: ClassDescriptor, bound: int = 8, depth: int = 64,
                        with_brute: bool = False) -> RankReport:
    """Structural rank against the decomposition-route rank for every enumerated point.

    Never raises: an enumeration that cannot be resolved becomes a single failing
    entry for the designated point, carrying the diagnostic.
    """
    report = RankReport()
    try:
        _, points = resolvable_points(cls, bound, depth)
    except (HorizonExceeded, UndecidableEquality) as exc:
        prefix = cls.output(DESIGNATED, min(depth, 32)).bits[:min(depth, 32)]
        report.entries.append(RankEntry("designated", prefix, cls.limit_rank, UNKNOWN, UNKNOWN,
                                        f"{type(exc).__name__}: {exc}"))
        return report
    for p in points:
        structural = cls.structural_rank(p.input)
        error = None
        try:
            decomposed = decomposition_rank(cls, p.input)
        except (HorizonExceeded, UndecidableEquality) as exc:
            decomposed, error = UNKNOWN, f"{type(exc).__name__}: {exc}"
        brute = brute_rank(cls, p, bound, depth) if with_brute else UNKNOWN
        report.entries.append(RankEntry(p.name, p.bits(min(depth, 32)), structural, brute,
                                        decomposed, error))
    return report
