"""Invariant suites behind ``cbrank verify``.

Each suite returns a dict with the number of checks run and a list of
failure descriptions; a suite passes when that list is empty.
"""

from __future__ import annotations

import random
from itertools import product
from pathlib import Path
from typing import Callable, Dict, List

from . import ordinals as O
from .functionals import Phi, Psi, Theta, phi_decode, phi_eval
from .measure import CylinderTable
from .streams import IndexFamily, index_member, limit_prefix, load_script
from .topology import Rank1, brute_rank, resolvable_points, rank_faithful_check


def load_corpus(seed_dir: Path):
    return {p.stem: load_script(p) for p in sorted(Path(seed_dir).glob("*.seed"))}


def random_cnf(rng: random.Random, level: int = 4, coeff: int = 10) -> O.CnfOrdinal:
    """A random ordinal below ``ω^level · coeff``."""
    terms = []
    for e in range(level - 1, -1, -1):
        c = rng.randrange(0, coeff if e == level - 1 else 4)
        if c:
            terms.append((O.cnf(e), c))
    return O.CnfOrdinal(tuple(terms))


def suite_ordinals(corpus, cases: int = 1000) -> dict:
    rng = random.Random(7)
    fails: List[str] = []
    s, zero = O.hessenberg_sum, O.ZERO
    for _ in range(cases):
        a, b, c = (random_cnf(rng) for _ in range(3))
        if s(a, b) != s(b, a):
            fails.append(f"commutativity {a} {b}")
        if s(s(a, b), c) != s(a, s(b, c)):
            fails.append(f"associativity {a} {b} {c}")
        if s(a, zero) != a:
            fails.append(f"identity {a}")
        if O.cnf_compare(b, c) < 0 and O.cnf_compare(s(a, b), s(a, c)) >= 0:
            fails.append(f"monotonicity {a} {b} {c}")
        m, n = rng.randrange(100), rng.randrange(100)
        if s(O.cnf(m), O.cnf(n)) != O.cnf(m + n):
            fails.append(f"finite {m} {n}")
    return {"checks": cases, "failures": fails}


def suite_streams(corpus, limit: int = 1 << 16, kmax: int = 16) -> dict:
    fails = []
    for n in range(limit):
        owners = [k for k in range(kmax + 1) if index_member(IndexFamily.I(k), n)]
        if len(owners) != 1:
            fails.append(f"{n} lies in I_k for k in {owners}")
    for k in range(6):
        fam = IndexFamily.I(k)
        for m in range(64):
            if fam.rank(fam.nth(m)) != m:
                fails.append(f"I({k}) rank/nth mismatch at {m}")
    return {"checks": limit + 6 * 64, "failures": fails}


def suite_functionals(corpus, u: int = 8) -> dict:
    fails = []
    checks = 0
    names = sorted(corpus)
    for name, script in corpus.items():
        other = corpus[names[(names.index(name) + 1) % len(names)]]
        kinds = {"phi": Phi(script), "psi2": Psi([script, other]),
                 "theta2": Theta(script, O.parse_notation("succ(succ(0))"))}
        for kind, f in kinds.items():
            images = {"": f.eval("", 64)}
            for n in range(1, u + 1):
                for bits in product("01", repeat=n):
                    tau = "".join(bits)
                    img = f.eval(tau, 64)
                    checks += 1
                    if not img.startswith(images[tau[:-1]]):
                        fails.append(f"{name}/{kind}: monotonicity fails at {tau}")
                    images[tau] = img
        for n in range(1, 25):
            m = len(phi_decode(script, phi_eval(script, limit_prefix(script, n), 4096)))
            checks += 1
            if 4 * m < n:
                fails.append(f"{name}: decoder recovers {m} bits from n = {n}")
    return {"checks": checks, "failures": fails}


def suite_measure(corpus, depth: int = 4) -> dict:
    fails = []
    checks = 0
    for name, script in corpus.items():
        prev = None
        for u in (6, 8, 10):
            table = CylinderTable.build(Phi(script), depth, u)
            checks += 1
            if not (table.normalized() and table.nested()):
                fails.append(f"{name}: table at u={u} not normalized and nested")
            if prev is not None and not all(prev.entries[s].contains(iv) for s, iv in table.entries.items()):
                fails.append(f"{name}: intervals grow from u={u - 2} to u={u}")
            prev = table
    return {"checks": checks, "failures": fails}


def suite_topology(corpus) -> dict:
    fails = []
    agreements = 0
    for name, script in corpus.items():
        cls = Rank1(script)
        _, points = resolvable_points(cls, 16, 64)
        for p in points:
            brute = brute_rank(cls, p, 16, 64)
            if brute is None or O.cnf(brute) != cls.structural_rank(p.input):
                fails.append(f"{name}/{p.name}: brute {brute} vs structural")
            else:
                agreements += 1
        report = rank_faithful_check(cls, 8)
        fails += [f"{name}/{e.point_id}: not rank-faithful" for e in report.failures()]
    return {"checks": agreements, "failures": fails, "oracleAgreements": agreements}


SUITES: Dict[str, Callable] = {
    "ordinals": suite_ordinals,
    "streams": suite_streams,
    "functionals": suite_functionals,
    "measure": suite_measure,
    "topology": suite_topology,
}


def run_suites(names, seed_dir) -> List[dict]:
    corpus = load_corpus(seed_dir)
    results = []
    for name in names:
        res = SUITES[name](corpus)
        results.append({"suite": name, "passed": not res["failures"], **res})
    return results
