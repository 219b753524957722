import io
import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiralcdr.cdr import Patch
from chiralcdr.cli.config import DEFAULT_CONFIG, ConfigError, load_config, parse_config
from chiralcdr.cli.lang import LoweringError, ParseError, evaluate, parse_expr
from chiralcdr.cli.main import main
from chiralcdr.cli.report import Record, Report, counts_from_records, emit_report, render_text, summary_line
from chiralcdr.cohomlab import enumerate_basis
from chiralcdr.voa import LambdaPoly, derivative, wick

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
P2 = Patch.standard(2)
BASIS = [e for w in range(3) for e in enumerate_basis(P2.ctx, w, poly_degree=2).elements()]


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def small_config(tmp_path, extra=""):
    p = tmp_path / "cfg.ini"
    p.write_text("[patch]\nn = 3\n[forms]\nH = :c[1] c[2] c[3]:\n[run]\nsamples = 3\nwitnesses = 2\n" + extra)
    return str(p)


class TestLanguage:
    def test_examples(self):
        assert evaluate(":b[1] d^1 c[1]:", P2.ctx) == wick(P2.b(1), derivative(P2.c(1)))
        got = evaluate("[beta[1] lam gamma[1]^2]", P2.ctx)
        assert isinstance(got, LambdaPoly) and got.entry(0) == P2.fn(P2.coordinate(1) * 2)
        assert parse_expr("[beta[1] lam gamma[1]^2]") is not None

    @pytest.mark.parametrize("text,err", [
        (":b[1]", ParseError), ("[b[1] lam", ParseError), ("b[1] o(x) c[1]", ParseError),
        ("b[9]", LoweringError), ("foo", LoweringError),
    ])
    def test_errors(self, text, err):
        with pytest.raises(err):
            evaluate(text, P2.ctx)

    def test_error_position(self):
        with pytest.raises(ParseError) as info:
            evaluate("b[1] o(x) c[1]", P2.ctx)
        assert info.value.pos == 7

    @given(st.lists(st.tuples(st.sampled_from(BASIS), st.integers(-3, 3)), min_size=1, max_size=4))
    def test_print_parse_round_trip(self, terms):
        e = sum((b * k for b, k in terms[1:]), terms[0][0] * terms[0][1])
        assert evaluate(str(e), P2.ctx) == e


class TestConfig:
    def test_default(self):
        cfg = load_config(None)
        assert cfg.n == 3 and cfg.seed == 7 and cfg.form("H").is_closed()
        assert parse_config(DEFAULT_CONFIG).raw_forms == cfg.raw_forms

    def test_shipped_configs_load(self):
        for p in sorted(CONFIGS.glob("*.ini")):
            load_config(str(p))

    @pytest.mark.parametrize("text", [
        "[nope]\n",
        "[patch]\nn = 3\n[forms]\nX = c[1]\n",
        "[patch]\nn = 3\n[forms]\nH = :c[1] c[2]:\n",
        "[patch]\nn = 4\n[forms]\nH = gamma[4] * :c[1] c[2] c[3]:\n",
        "[patch]\nn = 2\n[forms]\nF_A = :c[1] c[2]:\nF_Ahat = :c[1]:\n",
        "[patch]\nn = -1\n",
        "[run]\nseed = x\n",
        "[forms]\nH = :c[1]\n",
        "[run]\nsample = 5\n",
    ])
    def test_rejected(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.ini"))


class TestReport:
    def test_summary_and_formats(self):
        rep = Report()
        rep.add("s", "a", "anchor", True)
        rep.add("s", "b", "anchor", False, "x + 1")
        rep.skip("s", "c", "anchor", "why")
        assert summary_line(rep.counts()) == "1 passed, 1 failed, 1 skipped"
        assert render_text(rep).splitlines()[-1] == "1 passed, 1 failed, 1 skipped"
        assert counts_from_records(emit_report(rep, "records")) == rep.counts()
        assert rep.exit_code() == 1
        with pytest.raises(ValueError):
            emit_report(rep, "xml")

    def test_records_are_sorted(self):
        rep = Report()
        rep.add("s", "z", "a", True)
        rep.add("s", "a", "a", True)
        checks = [json.loads(line)["check"] for line in emit_report(rep, "records").splitlines()]
        assert checks == ["a", "z"]

    def test_pass_only(self):
        rep = Report([Record("s", "a", "anchor", "pass")])
        assert summary_line(rep.counts()) == "1 passed, 0 failed" and rep.exit_code() == 0


class TestMain:
    def test_ope_file(self):
        code, out = run("ope", str(CONFIGS / "queries.txt"))
        assert code == 0
        assert "[beta[1] lam gamma[1]^2]  =>  2*gamma[1]" in out
        assert "2*i*exp(i*2*theta1)" in out

    def test_ope_errors(self, tmp_path, capsys):
        p = tmp_path / "q.txt"
        p.write_text("% patch n=1\n:b[1]\n")
        assert run("ope", str(p))[0] == 2
        assert f"{p}:2:1: syntax error" in capsys.readouterr().err
        p.write_text("% torus\n")
        assert run("ope", str(p))[0] == 2
        assert run("ope", str(tmp_path / "none.txt"))[0] == 2

    def test_usage_errors(self, tmp_path):
        assert run()[0] == 2
        assert run("verify", "nonsense")[0] == 2
        bad = tmp_path / "bad.ini"
        bad.write_text("[forms]\nH = :c[1] c[2]:\n")
        assert run("verify", "cdr", str(bad))[0] == 2

    def test_pair_report_passes_and_formats_agree(self):
        cfg = str(CONFIGS / "pair_n2.ini")
        code, text = run("report", "--config", cfg)
        code2, records = run("report", "--config", cfg, "--format", "records")
        assert code == code2 == 0
        assert text.splitlines()[-1] == summary_line(counts_from_records(records))
        assert text.splitlines()[-1].endswith(" 0 failed")
        assert run("report", "--config", cfg, "--format", "records")[1] == records

    def test_corrupted_bracket_fails(self, tmp_path):
        code, out = run("verify", "courant", small_config(tmp_path, "corrupt = true\n"), "--format", "records")
        assert code == 1
        failing = {json.loads(line)["check"] for line in out.splitlines() if '"fail"' in line}
        assert "axiom/standard-corrupted/2" in failing

    def test_character(self, tmp_path):
        code, out = run("character", small_config(tmp_path, "order = 4\n"))
        assert code == 0
        assert "through q^4" in out and out.strip().endswith("0 failed")
