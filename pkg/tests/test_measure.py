from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from cbrank import ordinals as O
from cbrank.errors import NotPrefixFree
from cbrank.functionals import Constant, Phi, Theta, phi_eval, split_script
from cbrank.measure import (
    EMPTY, FULL, CylinderTable, DyadicInterval, atom_probe, format_dyadic, induced_measure,
    is_prefix_free, normalize_cylinders, open_measure_bound, parse_dyadic, product_measure,
)
from cbrank.streams import EventuallyConstant, constant, interleave_str, limit_prefix, random_script

HALF, QUARTER = Fraction(1, 2), Fraction(1, 4)
ZERO_MAP = Constant("", 0)


def strings(max_len):
    for n in range(max_len + 1):
        yield from ("".join(b) for b in product("01", repeat=n))


def brute_interval(f, sigma, u):
    """Direct count over all inputs, independent of the memoized table."""
    lo = hi = 0
    for tau in strings(u):
        if len(tau) != u:
            continue
        out = f.eval(tau, len(sigma))
        lo += out.startswith(sigma) and len(out) >= len(sigma)
        hi += sigma.startswith(out) or out.startswith(sigma)
    return DyadicInterval(Fraction(lo, 2 ** u), Fraction(hi, 2 ** u))


class TestDyadic:
    def test_rejects_non_dyadic(self):
        with pytest.raises(ValueError):
            DyadicInterval(Fraction(1, 3), Fraction(1, 2))

    def test_rejects_inverted(self):
        with pytest.raises(ValueError):
            DyadicInterval(HALF, QUARTER)

    @given(st.integers(0, 1 << 12), st.integers(12, 20))
    def test_format_round_trip(self, p, k):
        q = Fraction(p, 2 ** k)
        assert parse_dyadic(format_dyadic(q)) == q


class TestInducedMeasure:
    def test_empty_cylinder(self, ex1):
        assert induced_measure(Phi(ex1), "", 5) == FULL

    def test_example_script(self, ex1):
        assert induced_measure(Phi(ex1), "1", 1) == DyadicInterval.exact(HALF)

    def test_constant_map(self):
        assert induced_measure(ZERO_MAP, "1", 3) == EMPTY

    @settings(max_examples=30, deadline=None)
    @given(st.text("01", max_size=4), st.integers(0, 6))
    def test_matches_direct_count(self, sigma, u):
        f = Phi(random_script(11, depth=16))
        assert induced_measure(f, sigma, u) == brute_interval(f, sigma, u)

    def test_bracketing_shrinks(self, corpus):
        for script in corpus.values():
            f = Phi(script)
            for sigma in strings(4):
                prev = None
                for u in (6, 8, 10, 12):
                    iv = induced_measure(f, sigma, u)
                    if prev is not None:
                        assert prev.contains(iv)
                    prev = iv


class TestProduct:
    def test_examples(self):
        x = DyadicInterval(QUARTER, HALF)
        assert product_measure(FULL, x) == x
        assert product_measure(DyadicInterval.exact(HALF), DyadicInterval.exact(QUARTER)) == \
            DyadicInterval.exact(Fraction(1, 8))
        assert product_measure(EMPTY, x) == EMPTY

    @pytest.mark.parametrize("u", [8, 12])
    def test_case_two_factorization(self, corpus, u):
        two = O.Succ(O.Succ(O.One()))
        for script in corpus.values():
            theta = Theta(script, two)
            left, right = Phi(split_script(script, 0)), Phi(split_script(script, 1))
            for sigma in strings(3):
                for tau in strings(3):
                    if len(tau) not in (len(sigma), len(sigma) - 1):
                        continue
                    joint = induced_measure(theta, interleave_str(sigma, tau), u)
                    bound = product_measure(induced_measure(left, sigma, u // 2),
                                            induced_measure(right, tau, u // 2))
                    assert bound.lower <= joint.lower and joint.upper <= bound.upper


class TestAtoms:
    def test_constant_point(self):
        assert atom_probe(ZERO_MAP, constant(0), 8, 8) == FULL

    def test_limit_point_not_whole_space(self, ex1):
        r = EventuallyConstant(phi_eval(ex1, limit_prefix(ex1, 64), 64), 0)
        assert atom_probe(Phi(ex1), r, 4, 10).upper < 1

    def test_non_image_point(self, ex1):
        assert atom_probe(Phi(ex1), EventuallyConstant("1100", 0), 4, 10) == EMPTY


class TestOpenSets:
    def test_examples(self, ex1):
        f = Phi(ex1)
        assert open_measure_bound(f, [], 4) == EMPTY
        assert open_measure_bound(f, ["0", "1"], 4) == FULL
        assert open_measure_bound(f, ["11"], 2) == EMPTY

    def test_overlap(self, ex1):
        with pytest.raises(NotPrefixFree):
            open_measure_bound(Phi(ex1), ["0", "01"], 4, normalize=False)
        assert open_measure_bound(Phi(ex1), ["0", "01"], 4) == induced_measure(Phi(ex1), "0", 4)

    @given(st.lists(st.text("01", max_size=6), max_size=8))
    def test_normalize_prefix_free(self, cyls):
        norm = normalize_cylinders(cyls)
        assert is_prefix_free(norm)
        # same union: every input cylinder lies under a kept one
        assert all(any(c.startswith(k) for k in norm) for c in cyls)


class TestTables:
    @pytest.mark.parametrize("u", [6, 8, 10, 12])
    def test_normalized_and_nested(self, corpus, u):
        for script in corpus.values():
            table = CylinderTable.build(Phi(script), 4, u)
            assert table.normalized() and table.nested()

    def test_lower_sums_close_to_one(self, corpus):
        for script in corpus.values():
            table = CylinderTable.build(Phi(script), 4, 12)
            for n in range(5):
                assert 1 - table.level_sums(n)[0] <= QUARTER

    def test_json_round_trip(self, ex1):
        table = CylinderTable.build(Phi(ex1), 3, 6)
        back = CylinderTable.from_json(table.to_json())
        assert back.entries == table.entries
        assert table.to_json()[0] == {"sigma": "", "lower": "1/2^0", "upper": "1/2^0"}
