"""Command line: subcommands, artifacts and exit codes."""

import json

import pytest

from strip_spectrum import main as cli
from strip_spectrum.spectral.executor import BatteryExecutor

RUN_TOML = """
[geometry]
a = 1.0
bc = "robin"
alpha = 1.0
beta = 1.0

[[measure]]
type = "lebesgue"
x1_min = -2.0
x1_max = 2.0

[potential]
expression = "{potential}"

[controls]
L = 4.0
h = 0.25
max_refinements = 0
"""


def _write_config(tmp_path, potential: str = "2*indicator(x1, -1, 1)", name: str = "run.toml"):
    path = tmp_path / name
    path.write_text(RUN_TOML.format(potential=potential))
    return path


def _run(command: str, config, out, *extra) -> int:
    argv = [command, "--out", str(out), "--quiet"]
    if config is not None:
        argv += ["--config", str(config)]
    return cli.main(argv + list(extra))


def _report(out) -> dict:
    return json.loads((out / "report.json").read_text())


def _always_fails(full, seed):
    return False, "violated"


class TestSubcommands:
    def test_cross_section(self, tmp_path):
        out = tmp_path / "cs"
        assert _run("cross-section", _write_config(tmp_path), out) == 0
        report = _report(out)
        assert report["command"] == "cross-section"
        assert report["schema_version"] == "1.0"
        assert report["lambda1"] == pytest.approx(-1.0, abs=1e-9)
        assert report["lambda2"] == pytest.approx(9.8696044010893586, abs=1e-9)
        assert report["branch"] == "hyperbolic"
        assert (out / "u1.csv").read_text().startswith("x2,u1\n")

    def test_cross_section_neumann(self, tmp_path):
        config = tmp_path / "neumann.toml"
        config.write_text(RUN_TOML.format(potential="0").replace("alpha = 1.0", "alpha = 0.0")
                          .replace("beta = 1.0", "beta = 0.0"))
        out = tmp_path / "neumann"
        assert _run("cross-section", config, out) == 0
        report = _report(out)
        assert report["lambda1"] == pytest.approx(0.0, abs=1e-12)
        assert report["lambda2"] == pytest.approx(9.8696044010893586, abs=1e-9)

    def test_bound_with_zero_potential(self, tmp_path):
        out = tmp_path / "bound"
        assert _run("bound", _write_config(tmp_path, potential="0"), out) == 0
        report = _report(out)
        assert report["rhs_1d"] == 1.0
        assert report["rhs_total"] == 1.0
        assert report["refinement"]["v_star_norm"] == pytest.approx(0.0, abs=1e-12)
        assert (out / "windows.csv").read_text().splitlines()[0] == "n,lo,hi,F,above_threshold,truncated"
        assert (out / "cells.csv").exists()

    def test_bound_report_fields_and_terms_csv(self, tmp_path):
        out = tmp_path / "bound"
        assert _run("bound", _write_config(tmp_path), out) == 0
        report = _report(out)
        assert {"f_terms", "m_terms", "rhs_1d", "rhs_total", "weak_l1"} <= report.keys()
        assert report["f_terms"]["0"] == pytest.approx(4.0, rel=1e-2)
        assert set(report["m_terms"]) == {"-3", "-2", "-1", "0", "1", "2"}
        lines = (out / "terms.csv").read_text().splitlines()
        assert lines[0] == "n,F,M"
        assert len(lines) - 1 == len(set(report["f_terms"]) | set(report["m_terms"]))
        refinement = report["refinement"]
        assert refinement["rhs_refined"] >= report["rhs_1d"]
        assert refinement["c_d"] == pytest.approx(4 * 0.046)

    def test_reruns_are_byte_identical(self, tmp_path):
        config = _write_config(tmp_path)
        first, second = tmp_path / "first", tmp_path / "second"
        assert _run("bound", config, first) == 0
        assert _run("bound", config, second) == 0
        for name in ("report.json", "windows.csv", "cells.csv", "terms.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_count_with_matrix_dump(self, tmp_path):
        out = tmp_path / "count"
        assert _run("count", _write_config(tmp_path), out, "--dump-matrix") == 0
        report = _report(out)
        assert report["n_neg"] >= 1
        assert report["stable"] is False
        assert {"n_neg", "n_zero", "trace"} <= report.keys()
        assert "refinement_trace" not in report
        assert len(report["trace"]) == 1
        rows, cols, nnz = map(int, (out / "matrix.txt").read_text().splitlines()[0].split())
        assert rows == cols == report["dimension"]
        assert nnz > 0
        assert (out / "trace.csv").read_text().splitlines()[0] == "h,L,n_neg"

    def test_count1d(self, tmp_path):
        out = tmp_path / "count1d"
        assert _run("count1d", _write_config(tmp_path), out) == 0
        report = _report(out)
        assert report["sandwich_holds"] is True
        assert report["coupling"] == 2.0
        assert report["n_neg"] <= report["rhs_1d"]

    def test_quadrature(self, tmp_path):
        out = tmp_path / "quad"
        assert _run("quadrature", _write_config(tmp_path), out) == 0
        lines = (out / "quadrature.csv").read_text().splitlines()
        assert lines[0] == "x1,x2,weight"
        report = _report(out)
        assert report["total_mass"] == pytest.approx(4.0)
        assert len(lines) - 1 == report["nodes"]

    def test_norms(self, tmp_path):
        out = tmp_path / "norms"
        assert _run("norms", _write_config(tmp_path), out) == 0
        cells = _report(out)["cells"]
        assert [c["n"] for c in cells] == [-3, -2, -1, 0, 1, 2]
        for c in cells:
            assert c["luxemburg"] <= c["orlicz"] * (1 + 1e-9)

    def test_ahlfors(self, tmp_path):
        out = tmp_path / "ahlfors"
        assert _run("ahlfors", _write_config(tmp_path), out) == 0
        report = _report(out)
        assert report["d_hat"] == pytest.approx(2.0, abs=0.2)
        assert isinstance(report["doubling_chain_holds"], bool)
        assert [c["n"] for c in report["cells"]] == [-2, -1, 0, 1]


class TestErrors:
    def test_invalid_config(self, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"geometry": {"a": -1.0}}))
        out = tmp_path / "bad"
        assert _run("bound", config, out) == 1
        error = json.loads((out / "error.json").read_text())
        assert error["error"] == "ConfigError"
        assert error["exit_code"] == 1
        assert error["command"] == "bound"

    def test_negative_potential(self, tmp_path):
        out = tmp_path / "neg"
        assert _run("bound", _write_config(tmp_path, potential="x1"), out) == 1
        assert "negative" in json.loads((out / "error.json").read_text())["details"]

    def test_missing_config_flag(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            _run("bound", None, tmp_path / "none")
        assert exc.value.code == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            cli.main(["spectrum"])


class TestVerify:
    def test_selected_checks_pass(self, tmp_path):
        out = tmp_path / "verify"
        code = _run("verify", None, out, "--check", "cross_section_closed_forms", "--check", "testfunction_energies")
        assert code == 0
        report = _report(out)
        assert report["passed"] is True
        assert report["battery"] == "quick"
        assert [c["name"] for c in report["checks"]] == ["cross_section_closed_forms", "testfunction_energies"]
        assert all(c["execution_time"] is None for c in report["checks"])
        assert len((out / "checks.csv").read_text().splitlines()) == 3

    def test_failing_check_exits_with_two(self, tmp_path, monkeypatch):
        executor = BatteryExecutor(checks={"always_fails": _always_fails})
        monkeypatch.setattr(cli, "battery_executor", executor)
        out = tmp_path / "verify"
        assert _run("verify", None, out) == 2
        assert _report(out)["passed"] is False
        error = json.loads((out / "error.json").read_text())
        assert error["error"] == "AssertionFailure"
        assert "always_fails" in error["details"]

    def test_unknown_check(self, tmp_path):
        out = tmp_path / "verify"
        assert _run("verify", None, out, "--check", "no_such_check") == 1

    def test_table_printed(self, tmp_path, capsys):
        cli.main(["verify", "--out", str(tmp_path / "v"), "--check", "cross_section_closed_forms"])
        printed = capsys.readouterr().out
        assert "cross_section_closed_forms" in printed
        assert "PASSED: 1/1 checks" in printed
