import json

import pytest

from cbrank import ordinals as O
from cbrank.cli import main
from cbrank.functionals import Theta, dyn_join_eval, verify_offset
from cbrank.measure import CylinderTable
from cbrank.streams import IndexFamily, component_bits, limit_prefix, load_script

from conftest import CORPUS_DIR

EX1 = str(CORPUS_DIR / "ex1.seed")


def construct(tmp_path, ordinal, seed=EX1, name="report.json", extra=()):
    out = tmp_path / name
    code = main(["construct", "--ordinal", ordinal, "--seed", seed, "--out", str(out), *extra])
    return code, (json.loads(out.read_text()) if code == 0 else None), out


class TestConstruct:
    def test_rank_one(self, tmp_path):
        code, report, _ = construct(tmp_path, "succ(0)")
        assert code == 0
        assert report["schema"] == 1
        assert report["rankOfLimitPoint"] == "1"
        assert all(p["faithful"] for p in report["points"])

    def test_limit(self, tmp_path):
        code, report, _ = construct(tmp_path, "lim(finite)")
        assert code == 0
        assert report["rankOfLimitPoint"] == "w"
        assert report["phaseLog"] == sorted(report["phaseLog"])

    def test_rank_two(self, tmp_path):
        code, report, _ = construct(tmp_path, "succ(succ(0))")
        assert report["rankOfLimitPoint"] == "2"
        assert any(e["k"] == 0 for e in report["eq1"])

    def test_deterministic(self, tmp_path):
        _, _, a = construct(tmp_path, "succ(succ(0))", name="a.json")
        _, _, b = construct(tmp_path, "succ(succ(0))", name="b.json")
        assert a.read_bytes() == b.read_bytes()

    def test_report_replays(self, tmp_path):
        _, report, _ = construct(tmp_path, "lim(finite)")
        script = load_script(EX1)
        theta = Theta(script, O.parse_notation("lim(finite)"))
        x = limit_prefix(script, 64)
        bits, _ = dyn_join_eval(theta.inner, x, 4096)
        assert bits.startswith(report["outputPrefix"])
        for entry in report["eq1"]:
            comp = theta.inner.component(entry["k"])
            cbits = comp.evaluate(component_bits(x, entry["k"])[:comp.horizon], 4096).bits
            got = verify_offset(cbits, bits, IndexFamily.I(entry["k"]), entry["c"], entry["d"], 64)
            assert got == entry["verifiedBits"]
        table = CylinderTable.from_json(report["measureTable"])
        assert table.normalized() and table.nested()

    def test_parse_error(self, tmp_path, capsys):
        code, _, _ = construct(tmp_path, "succ(")
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_missing_seed(self, tmp_path):
        assert construct(tmp_path, "succ(0)", seed=str(tmp_path / "nope.seed"))[0] == 2

    def test_horizon_exceeded(self, tmp_path, monkeypatch):
        # this class needs about 128 bits to separate its points
        r1 = str(CORPUS_DIR / "r1.seed")
        monkeypatch.setenv("CBRL_HORIZON", "64")
        assert construct(tmp_path, "succ(succ(succ(0)))", seed=r1)[0] == 3

    def test_bad_horizon_variable(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CBRL_HORIZON", "lots")
        assert construct(tmp_path, "succ(0)")[0] == 2


class TestOrdinal:
    @pytest.mark.parametrize("argv, text", [
        (["value", "succ(succ(0))"], "2"),
        (["sum", "w*2+1", "w+3"], "w*3+4"),
        (["compare", "succ(0)", "lim(finite)"], "<"),
        (["compare", "w+1", "w*2"], "<"),
    ])
    def test_examples(self, argv, text, capsys):
        assert main(["ordinal", *argv]) == 0
        assert capsys.readouterr().out.strip() == text

    def test_parse_error(self):
        assert main(["ordinal", "value", "w+"]) == 2

    def test_search_exhausted(self):
        assert main(["ordinal", "compare", "100", "lim(finite)"]) == 4


class TestVerify:
    def test_ordinals(self, capsys):
        assert main(["verify", "--suite", "ordinals", "--seedDir", str(CORPUS_DIR)]) == 0
        (result,) = json.loads(capsys.readouterr().out)
        assert result["passed"] and result["checks"] >= 1000

    def test_topology(self, capsys):
        assert main(["verify", "--suite", "topology", "--seedDir", str(CORPUS_DIR)]) == 0
        (result,) = json.loads(capsys.readouterr().out)
        assert result["oracleAgreements"] > 0

    def test_missing_corpus(self, tmp_path):
        assert main(["verify", "--suite", "ordinals", "--seedDir", str(tmp_path)]) == 2
