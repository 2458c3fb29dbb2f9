import pytest
from hypothesis import given, settings, strategies as st

from cbrank import ordinals as O
from cbrank.errors import (ComponentStall, DepthExceeded, MalformedOutput, NotStalled,
                           PhaseIncomplete, PrefixTooShort)
from cbrank.functionals import (
    Constant, DynJoin, Phi, Theta, component_script, dyn_join_eval, eq1_offsets, eq2_offset,
    phi_decode, phi_eval, psi_eval, s_index, split_script, theta_eval, verify_offset,
)
from cbrank.streams import (Delta02Script, EventuallyConstant, IndexFamily, component_bits, constant,
                            infinite_join, interleave_str, limit_bit, limit_prefix, random_script)

from oracles import naive_dyn, naive_pair, naive_phi

scripts = st.integers(0, 10 ** 6).map(lambda seed: random_script(seed, depth=24))
ZEROS = [Constant("", 0)]


def designated_join(family, length):
    """Prefix of the infinite join of the limit sequences of ``family``."""
    streams = [EventuallyConstant(limit_prefix(s, s.depth), 0) for s in family]
    return infinite_join(lambda k: streams[k] if k < len(streams) else constant(0)).prefix(length)


class TestStageSearch:
    def test_examples(self, ex1):
        assert s_index(ex1, "1", 1) == 1
        assert s_index(ex1, "0", 1) == 0
        assert s_index(ex1, "10", 2) is None

    def test_prefix_too_short(self, ex1):
        with pytest.raises(PrefixTooShort):
            s_index(ex1, "1", 2)


class TestPhi:
    def test_examples(self, ex1):
        assert phi_eval(ex1, "11", 8) == "10110"
        assert phi_eval(ex1, "0", 8) == "0"
        assert phi_eval(ex1, "10", 8) == "10111111"

    def test_depth(self, ex1):
        with pytest.raises(DepthExceeded):
            phi_eval(ex1, "0" * 65, 8)

    @settings(max_examples=60)
    @given(scripts, st.text("01", max_size=16))
    def test_matches_reference(self, script, x):
        assert phi_eval(script, x, 256) == naive_phi(script, x, 256)

    @settings(max_examples=60)
    @given(scripts, st.text("01", max_size=16), st.text("01", max_size=6))
    def test_monotone(self, script, x, more):
        assert phi_eval(script, x + more, 128).startswith(phi_eval(script, x, 128))

    @given(scripts, st.text("01", min_size=1, max_size=12))
    def test_deviation_gives_ones_tail(self, script, x):
        # any input that leaves the limit is eventually coded by 1^w
        if not limit_prefix(script, script.depth).startswith(x):
            out = phi_eval(script, x + "0" * (script.depth - len(x)), 4096)
            assert out.endswith("1" * 64)


class TestDecode:
    def test_examples(self, ex1):
        assert phi_decode(ex1, "10110") == "11"
        assert phi_decode(ex1, "0") == "0"
        with pytest.raises(MalformedOutput):
            phi_decode(ex1, "1" * 200)

    def test_round_trip(self, corpus):
        for script in corpus.values():
            for n in range(1, 25):
                got = phi_decode(script, phi_eval(script, limit_prefix(script, n), 4096))
                assert len(got) >= n / 4
                assert limit_prefix(script, script.depth).startswith(got)


class TestProducts:
    def test_single(self, ex1):
        assert psi_eval([ex1], "110", 32) == phi_eval(ex1, "110", 32)

    def test_pair(self, ex1):
        x = interleave_str("11", "0")
        assert psi_eval([ex1, ex1], x, 32) == naive_pair("10110", "0", 32)

    def test_empty_input(self, ex1):
        assert psi_eval([ex1, ex1], "", 32) == ""

    @settings(max_examples=40)
    @given(scripts, scripts, st.text("01", max_size=20))
    def test_pair_is_interleaving(self, a, b, x):
        left, right = phi_eval(a, x[0::2], 64), phi_eval(b, x[1::2], 64)
        assert psi_eval([a, b], x, 64) == naive_pair(left, right, 64)


class TestDynJoin:
    def test_all_zero(self):
        bits, state = dyn_join_eval(ZEROS * 8, "", 16, horizon=0)
        # expected values from the reference phase machine
        assert (bits, state.completed_boundaries) == ("0" * 16, [1, 3, 6, 12])

    def test_first_component_never_zero(self):
        bits, state = dyn_join_eval([Constant("", 1)], "", 16, horizon=0)
        assert bits == "1" * 16
        assert state.completed_boundaries == []

    def test_designated_completes_every_phase(self, ex1):
        f = Theta(ex1, O.parse_notation("lim(finite)")).inner
        out, state = f.run(limit_prefix(ex1, 64), 64)
        assert not state.stalled
        assert len(state.completed_boundaries) >= 3
        assert state.completed_boundaries[-1] <= len(out.bits)

    @settings(max_examples=80)
    @given(st.lists(st.tuples(st.text("01", max_size=6), st.integers(0, 1)), min_size=1, max_size=4))
    def test_matches_reference(self, family):
        comps = [Constant(p, t) for p, t in family]
        streams = [p + str(t) * 64 for p, t in family]
        bits, state = dyn_join_eval(comps, "", 48, horizon=0)
        ref_bits, ref_bounds = naive_dyn(lambda k: streams[k] if k < len(streams) else "0" * 64, 48)
        assert bits == ref_bits
        assert state.completed_boundaries == ref_bounds

    def test_activation(self):
        _, state = dyn_join_eval(ZEROS * 8, "", 16, horizon=0)
        assert all(c.activated for c in state.per_component)
        assert len(state.per_component) == state.phase + 1

    def test_required_output(self):
        f = DynJoin([Phi(Delta02Script(1))], horizon=1)
        with pytest.raises(ComponentStall):
            dyn_join_eval(f, "", 64, require=64)


class TestOffsets:
    def test_all_zero(self):
        bits, state = dyn_join_eval(ZEROS * 8, "", 64, horizon=0)
        assert eq1_offsets(state, 0) == (1, 1)
        c, d = eq1_offsets(state, 1)
        assert verify_offset("0" * 64, bits, IndexFamily.I(1), c, d) > 0
        with pytest.raises(PhaseIncomplete):
            eq1_offsets(state, state.last_completed + 1)
        with pytest.raises(NotStalled):
            eq2_offset(state)

    def test_stall_recovers_ones(self):
        bits, state = dyn_join_eval([Constant("", 0), Constant("", 1)], "", 256, horizon=0)
        assert state.stalled and state.phase == 1
        d = eq2_offset(state)
        assert verify_offset("1" * 256, bits, IndexFamily.J(state.phase), 0, d, 64) == 64

    def test_designated_eq1_theta_limit(self, corpus):
        # components of a limit construction are finite at desk scale; every bit they have must replay
        for script in corpus.values():
            f = Theta(script, O.parse_notation("lim(finite)")).inner
            x = limit_prefix(script, 64)
            out, state = f.run(x, 4096)
            for k in range(min(4, state.last_completed) + 1):
                c, d = eq1_offsets(state, k)
                comp = f.component(k)
                bits = comp.evaluate(component_bits(x, k)[:comp.horizon], 4096).bits
                verify_offset(bits, out.bits, IndexFamily.I(k), c, d, 64)

    def test_designated_eq1_rank_one_family(self, corpus):
        family = list(corpus.values())
        x = designated_join(family, 8192)
        f = DynJoin([Phi(s) for s in family], horizon=8192)
        out, state = f.run(x, 8192)
        assert state.last_completed >= 4
        for k in range(5):
            c, d = eq1_offsets(state, k)
            bits = phi_eval(family[k], component_bits(x, k)[:64], 8192)
            assert verify_offset(bits, out.bits, IndexFamily.I(k), c, d, 64) == 64


class TestSplitters:
    def test_no_change(self):
        assert split_script(Delta02Script(16), 0) == Delta02Script(8)
        assert component_script(Delta02Script(64), 5).changes == ()

    def test_stage_remap(self):
        s = Delta02Script.from_dict(8, {2: [(3, 1)]})
        half = split_script(s, 0)
        (bit, ((stage, value),)), = half.changes
        assert (bit, value) == (1, 1) and stage >= 2

    def test_single_change_classified(self):
        s = Delta02Script.from_dict(16, {3: [(5, 1)]})  # 3 lies in I(2)
        assert len(component_script(s, 2).changes) == 1
        assert component_script(s, 0).changes == ()

    @given(scripts, st.integers(0, 1), st.integers(0, 11))
    def test_split_coherent(self, script, i, n):
        assert limit_bit(split_script(script, i), n) == limit_bit(script, 2 * n + i)

    @given(scripts, st.integers(0, 3), st.integers(0, 2))
    def test_component_coherent(self, script, k, m):
        fam = IndexFamily.I(k)
        if fam.nth(m) < script.depth:
            assert limit_bit(component_script(script, k), m) == limit_bit(script, fam.nth(m))


class TestTheta:
    def test_notation_of_one(self, ex1):
        assert theta_eval(ex1, O.Succ(O.One()), "11", 32) == phi_eval(ex1, "11", 32)

    @pytest.mark.parametrize("x", ["", "1", "1101", "0110100111"])
    def test_successor_is_pair_join(self, ex1, x):
        two = O.Succ(O.Succ(O.One()))
        left = phi_eval(split_script(ex1, 0), x[0::2], 128)
        right = phi_eval(split_script(ex1, 1), x[1::2], 128)
        assert theta_eval(ex1, two, x, 128) == naive_pair(left, right, 128)

    def test_limit_is_dynamic_join(self, ex1):
        w = O.parse_notation("lim(finite)")
        comps = lambda k: Theta(component_script(ex1, k), O.fundamental_at(w, k))
        x = limit_prefix(ex1, 64)
        assert theta_eval(ex1, w, x, 128) == dyn_join_eval(comps, x, 128, horizon=64)[0]
