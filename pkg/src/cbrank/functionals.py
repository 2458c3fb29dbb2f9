"""Prefix-monotone functionals: the rank-one map, finite products, the dynamic join and Theta.

Every functional maps a finite input prefix to the longest output prefix it
determines, truncated at an explicit ``cap``.  Evaluation returns an
:class:`Output`, which may additionally record that the whole infinite output
is known: ``ones_from = q`` means the output is ``bits[:q]`` followed by ones
forever.  That flag is how the desk-scale stabilization oracle propagates: it
lets the dynamic join decide that a phase will never complete.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from . import ordinals as O
from .errors import (
    ComponentStall,
    DepthExceeded,
    HorizonExceeded,
    MalformedOutput,
    NotStalled,
    PhaseIncomplete,
    PrefixTooShort,
)
from .streams import (
    BitStream,
    Delta02Script,
    IndexFamily,
    component_bits,
    interleave_str,
    subscript,
    trailing_ones,
)


@dataclass(frozen=True)
class Output:
    bits: str
    ones_from: Optional[int] = None

    @property
    def complete(self) -> bool:
        return self.ones_from is not None

    def bit(self, i: int) -> Optional[int]:
        if i < len(self.bits):
            return int(self.bits[i])
        if self.ones_from is not None:
            return 1
        return None


# ---------------------------------------------------------------------------
# Stage search for the rank-one functional
# ---------------------------------------------------------------------------

class _StageTable:
    """Bitmask view of a script: A_s as an int for every stage up to settling."""

    def __init__(self, script: Delta02Script):
        self.script = script
        top = script.max_stage()
        rows = []
        for s in range(top + 1):
            v = 0
            for n in range(min(s, script.depth)):
                if script.stage_bit(n, s):
                    v |= 1 << n
            rows.append(v)
        self.rows = rows
        self.top = top
        stab = [0]
        for n in range(script.depth):
            lst = script.changes_of(n)
            stab.append(max(stab[-1], lst[-1][0] + 1 if lst else 0))
        self.stab = stab

    def row(self, s: int) -> int:
        return self.rows[min(s, self.top)]


@lru_cache(maxsize=None)
def _table(script: Delta02Script) -> _StageTable:
    return _StageTable(script)


def _as_int(bits: str) -> int:
    v = 0
    for i, b in enumerate(bits):
        if b == "1":
            v |= 1 << i
    return v


def _next_stage(table: _StageTable, xint: int, n: int, lo: int) -> Optional[int]:
    mask = (1 << n) - 1
    target = xint & mask
    hi = max(table.stab[n], lo)
    for s in range(lo, hi + 1):
        if table.row(s) & mask == target:
            return s
    return None


def s_indices(script: Delta02Script, x: str) -> List[Optional[int]]:
    """s_1, s_2, ... for every n <= |x|; entries after the first None are None."""
    if len(x) > script.depth:
        raise DepthExceeded(f"input length {len(x)} exceeds script depth {script.depth}")
    table = _table(script)
    xint = _as_int(x)
    out: List[Optional[int]] = []
    prev = None
    for n in range(1, len(x) + 1):
        s = _next_stage(table, xint, n, 0 if prev is None else prev + 1)
        out.append(s)
        if s is None:
            out.extend([None] * (len(x) - n))
            break
        prev = s
    return out


def s_index(script: Delta02Script, x_prefix: str, n: int) -> Optional[int]:
    """Least stage matching ``x_prefix[:n]`` above the previous index; None when undefined."""
    if n > len(x_prefix):
        raise PrefixTooShort(f"need {n} input bits, have {len(x_prefix)}")
    if n < 1:
        raise ValueError("s-indices start at n = 1")
    return s_indices(script, x_prefix[:n])[n - 1]


def phi_output(script: Delta02Script, x: str, cap: int) -> Output:
    out = []
    length = 0
    for s in s_indices(script, x):
        if s is None:
            return Output("".join(out) + "1" * max(0, cap - length), length)
        out.append("1" * s + "0")
        length += s + 1
    return Output("".join(out)[:cap])


def phi_eval(script: Delta02Script, x_prefix: str, cap: int) -> str:
    return phi_output(script, x_prefix, cap).bits[:cap]


def phi_decode(script: Delta02Script, output: str) -> str:
    """Recover the input prefix encoded by the complete ``1^s 0`` blocks of ``output``."""
    table = _table(script)
    recovered = ""
    prev = None
    pos = 0
    n = 0
    while n < script.depth:
        n += 1
        lo = 0 if prev is None else prev + 1
        hi = max(table.stab[n], lo)
        end = output.find("0", pos)
        run = (len(output) if end < 0 else end) - pos
        if run > hi:
            raise MalformedOutput(f"block {n} has {run} ones, more than stage bound {hi}")
        if end < 0:
            break
        if run < lo:
            raise MalformedOutput(f"block {n} stage {run} does not exceed previous stage {prev}")
        candidate = script.approx_prefix(run, n)
        if candidate[:-1] != recovered:
            raise MalformedOutput(f"block {n} is inconsistent with earlier blocks")
        recovered = candidate
        prev = run
        pos = end + 1
    return recovered


# ---------------------------------------------------------------------------
# Script splitters
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def split_script(script: Delta02Script, i: int) -> Delta02Script:
    if i not in (0, 1):
        raise ValueError("split index must be 0 or 1")
    return subscript(script, lambda m: 2 * m + i)


@lru_cache(maxsize=None)
def component_script(script: Delta02Script, n: int) -> Delta02Script:
    fam = IndexFamily.I(n)
    return subscript(script, fam.nth)


# ---------------------------------------------------------------------------
# Functional kinds
# ---------------------------------------------------------------------------

class PrefixFunctional:
    """Base class; subclasses implement :meth:`evaluate`."""

    horizon: int = 0

    def evaluate(self, x: str, cap: int) -> Output:
        raise NotImplementedError

    def eval(self, x: str, cap: int) -> str:
        return self.evaluate(x, cap).bits[:cap]

    def on_stream(self, x: BitStream, cap: int) -> Output:
        return self.evaluate(x.prefix(self.horizon), cap)


class Phi(PrefixFunctional):
    def __init__(self, script: Delta02Script):
        self.script = script
        self.horizon = script.depth

    def evaluate(self, x, cap):
        return phi_output(self.script, x, cap)

    def __repr__(self):
        return f"Phi(depth={self.script.depth})"


class Constant(PrefixFunctional):
    def __init__(self, prefix: str = "", tail: int = 0, horizon: int = 0):
        self.head, self.tail, self.horizon = prefix, tail, horizon

    def evaluate(self, x, cap):
        if self.tail == 1:
            head = self.head.rstrip("1")
            return Output(head + "1" * max(0, cap - len(head)), len(head))
        return Output((self.head + "0" * cap)[:cap])

    def __repr__(self):
        return f"Constant({self.head!r}, {self.tail})"


class PairJoin(PrefixFunctional):
    """X0 + X1  |->  left(X0) + right(X1)."""

    def __init__(self, left: PrefixFunctional, right: PrefixFunctional):
        self.left, self.right = left, right
        self.horizon = max(2 * left.horizon, 2 * right.horizon + 1)

    def parts(self, x: str, cap: int) -> Tuple[Output, Output]:
        return (self.left.evaluate(x[0::2][:self.left.horizon], (cap + 1) // 2),
                self.right.evaluate(x[1::2][:self.right.horizon], cap // 2))

    def evaluate(self, x, cap):
        o0, o1 = self.parts(x, cap)
        return _pair_output(o0, o1, cap)

    def __repr__(self):
        return f"PairJoin({self.left!r}, {self.right!r})"


def _pair_output(o0: Output, o1: Output, cap: int) -> Output:
    if o0.complete and o1.complete:
        q = max(2 * o0.ones_from, 2 * o1.ones_from + 1)
        bits = "".join(str(o1.bit(i >> 1) if i & 1 else o0.bit(i >> 1)) for i in range(max(cap, q)))
        return Output(bits, q)
    a, b = o0.bits, o1.bits
    if o0.complete:
        a = a + "1" * max(0, len(b) + 1 - len(a))
    if o1.complete:
        b = b + "1" * max(0, len(a) - len(b))
    return Output(interleave_str(a, b)[:cap])


def Psi(scripts: Sequence[Delta02Script]) -> PrefixFunctional:
    """Left-nested product of rank-one functionals, one per script."""
    if not scripts:
        raise ValueError("Psi needs at least one script")
    f: PrefixFunctional = Phi(scripts[0])
    for s in scripts[1:]:
        f = PairJoin(f, Phi(s))
    return f


def psi_eval(scripts: Sequence[Delta02Script], x_prefix: str, cap: int) -> str:
    return Psi(scripts).eval(x_prefix, cap)


# ---------------------------------------------------------------------------
# Dynamic join
# ---------------------------------------------------------------------------

@dataclass
class ComponentProgress:
    consumed: int = 0
    zeros_this_phase: int = 0
    activated: bool = False


@dataclass
class PhaseState:
    phase: int = 0
    next_output_pos: int = 0
    per_component: List[ComponentProgress] = field(default_factory=list)
    completed_boundaries: List[int] = field(default_factory=list)
    consumed_at_boundary: List[Tuple[int, ...]] = field(default_factory=list)
    stalled: bool = False
    sources: List[int] = field(default_factory=list)

    @property
    def last_completed(self) -> int:
        return len(self.completed_boundaries) - 1

    def to_json(self) -> dict:
        return {
            "phase": self.phase,
            "nextOutputPos": self.next_output_pos,
            "completedBoundaries": list(self.completed_boundaries),
            "stalled": self.stalled,
            "perComponent": [
                {"bitsConsumed": c.consumed, "zerosThisPhase": c.zeros_this_phase, "activated": c.activated}
                for c in self.per_component
            ],
        }


def route(p: int, phase: int) -> int:
    """Component whose bit is written at output position ``p`` during ``phase``."""
    t = trailing_ones(p)
    return t if t < phase else phase


class DynJoin(PrefixFunctional):
    """Phase-based interleaving of a family of functionals.

    ``components`` is a sequence or a callable ``k -> PrefixFunctional``;
    component ``k`` reads the input bits at positions in ``I(k)``.
    """

    def __init__(self, components: Union[Sequence[PrefixFunctional], Callable[[int], PrefixFunctional]],
                 horizon: int):
        if callable(components):
            self._family = components
            self._fixed = None
        else:
            self._fixed = list(components)
            self._family = None
        self._cache: Dict[int, PrefixFunctional] = {}
        self.horizon = horizon

    def component(self, k: int) -> PrefixFunctional:
        if k not in self._cache:
            if self._fixed is not None:
                if k >= len(self._fixed):
                    # past the listed components the family is the all-zero map
                    self._cache[k] = Constant("", 0)
                else:
                    self._cache[k] = self._fixed[k]
            else:
                self._cache[k] = self._family(k)
        return self._cache[k]

    def evaluate(self, x, cap):
        return self.run(x, cap)[0]

    def run(self, x: str, cap: int) -> Tuple[Output, PhaseState]:
        outs: Dict[int, Output] = {}

        def out_of(k):
            if k not in outs:
                f = self.component(k)
                outs[k] = f.evaluate(component_bits(x, k)[:f.horizon], cap)
            return outs[k]

        state = PhaseState(per_component=[ComponentProgress(activated=True)])
        comps = state.per_component
        bits: List[str] = []
        p = 0
        phase = 0
        while p < cap:
            k = route(p, phase)
            o = out_of(k)
            c = comps[k]
            if c.consumed >= len(o.bits):
                break
            b = o.bits[c.consumed]
            bits.append(b)
            state.sources.append(k)
            c.consumed += 1
            if b == "0":
                c.zeros_this_phase += 1
            p += 1
            if all(comps[i].zeros_this_phase for i in range(phase + 1)):
                state.completed_boundaries.append(p)
                state.consumed_at_boundary.append(tuple(cc.consumed for cc in comps))
                for cc in comps:
                    cc.zeros_this_phase = 0
                phase += 1
                comps.append(ComponentProgress(activated=True))
        state.phase = phase
        state.next_output_pos = p

        # A phase is decidedly stuck when some component still owing a zero
        # has nothing left but ones.
        def exhausted(i):
            o = out_of(i)
            return o.complete and "0" not in o.bits[comps[i].consumed:o.ones_from]

        owing = [i for i in range(phase + 1) if not comps[i].zeros_this_phase]
        state.stalled = any(exhausted(i) for i in owing)
        ones_from = None
        if state.stalled and all(out_of(i).complete for i in range(phase + 1)):
            ones_from = len("".join(bits).rstrip("1"))
            for i in range(phase + 1):
                o = out_of(i)
                ahead = max(o.ones_from, comps[i].consumed) - comps[i].consumed
                if ahead:
                    # position just past the last significant bit still owed by component i
                    region = IndexFamily.I(i) if i < phase else IndexFamily.J(phase)
                    ones_from = max(ones_from, region.nth(region.rank(p) + ahead - 1) + 1)
            if ones_from > len(bits):
                # the tail starts past the cap: rerun far enough to hold it
                return self.run(x, ones_from)
        return Output("".join(bits), ones_from), state

    def __repr__(self):
        return f"DynJoin(horizon={self.horizon})"


def dyn_join_eval(components, x_prefix: str, cap: int, horizon: Optional[int] = None,
                  require: Optional[int] = None) -> Tuple[str, PhaseState]:
    """Run the phase machine; ``require`` demands at least that many output bits."""
    f = components if isinstance(components, DynJoin) else DynJoin(components, horizon or len(x_prefix))
    out, state = f.run(x_prefix, cap)
    if require is not None and len(out.bits) < min(require, cap):
        raise ComponentStall(f"output stopped at {len(out.bits)} bits, {require} required")
    return out.bits[:cap], state


def eq1_offsets(state: PhaseState, k: int) -> Tuple[int, int]:
    if k > state.last_completed:
        raise PhaseIncomplete(f"phase {k} did not complete")
    c = state.consumed_at_boundary[k][k]
    d = IndexFamily.I(k).rank(state.completed_boundaries[k])
    return c, d


def eq2_offset(state: PhaseState) -> int:
    if not state.stalled:
        raise NotStalled("no phase is known to stall")
    start = state.completed_boundaries[-1] if state.completed_boundaries else 0
    return IndexFamily.J(state.phase).rank(start)


def verify_offset(component: str, joined: str, region: IndexFamily, c: int, d: int,
                  count: Optional[int] = None) -> int:
    """Check component[i + c] == joined restricted to region at (i + d); return bits checked.

    Raises AssertionError on the first mismatch.
    """
    i = 0
    while count is None or i < count:
        p = region.nth(i + d)
        if i + c >= len(component) or p >= len(joined):
            break
        if component[i + c] != joined[p]:
            raise AssertionError(f"offset identity fails at i={i}")
        i += 1
    return i


# ---------------------------------------------------------------------------
# Theta
# ---------------------------------------------------------------------------

class Theta(PrefixFunctional):
    """Transfinite driver: recursion on the notation picks the construction."""

    def __init__(self, script: Delta02Script, notation: O.Notation):
        self.script = script
        self.notation = notation
        self.horizon = script.depth

    @cached_property
    def inner(self) -> PrefixFunctional:
        return build_theta(self.script, self.notation)

    def evaluate(self, x, cap):
        return self.inner.evaluate(x, cap)

    def __repr__(self):
        return f"Theta({self.notation}, depth={self.script.depth})"


_NOTATION_TWO = O.Succ(O.One())


@lru_cache(maxsize=None)
def build_theta(script: Delta02Script, a: O.Notation) -> PrefixFunctional:
    if isinstance(a, O.One):
        # rank 0: a single computable point
        return Constant("", 0, horizon=script.depth)
    if a == _NOTATION_TWO:
        return Phi(script)
    if isinstance(a, O.Succ):
        return PairJoin(Theta(split_script(script, 0), a.of), Phi(split_script(script, 1)))
    O.value_of(a)  # surfaces UnrepresentableLimit early
    return DynJoin(lambda k: Theta(component_script(script, k), O.fundamental_at(a, k)), script.depth)


def theta_eval(script: Delta02Script, a: O.Notation, x_prefix: str, cap: int) -> str:
    return Theta(script, a).eval(x_prefix, cap)


class FunctionalOutput(BitStream):
    """F(X) as a lazy stream, evaluated once on the input's horizon prefix."""

    def __init__(self, functional: PrefixFunctional, source: BitStream, cap: int):
        super().__init__()
        self.functional, self.source, self.cap = functional, source, cap

    @cached_property
    def output(self) -> Output:
        return self.functional.on_stream(self.source, self.cap)

    def _bit(self, i):
        b = self.output.bit(i) if i < self.cap or self.output.complete else None
        if b is None:
            raise HorizonExceeded(f"bit {i} not determined by input horizon {self.functional.horizon}")
        return b

    def ones_from(self):
        return self.output.ones_from
