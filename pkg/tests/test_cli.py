import csv
import io
import json
import math

import pytest

from symdisc.cli import eval_expr, main
from symdisc.optics.netlist import from_json, parse_text


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestExpressions:
    @pytest.mark.parametrize(
        "text,value",
        [("pi/3", math.pi / 3), ("0.3pi", 0.3 * math.pi), ("π/4", math.pi / 4), ("arccos(1/sqrt(3))", math.acos(1 / math.sqrt(3))), ("2*pi/5", 2 * math.pi / 5)],
    )
    def test_values(self, text, value):
        assert eval_expr(text) == pytest.approx(value, abs=1e-15)

    def test_rejects_code(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["discriminate", "--angles", "__import__('os').getcwd()"])
        assert exc.value.code == 2


class TestDiscriminate:
    def test_two_states(self, capsys):
        code, out, _ = run(capsys, "discriminate", "--dim", "2", "--angles", "pi/6")
        assert code == 0
        rep = json.loads(out)
        assert rep["p_d"] == pytest.approx(0.5, abs=1e-12)
        assert rep["completeness_residual"] < 1e-10

    def test_equal_amplitudes(self, capsys):
        code, out, _ = run(capsys, "discriminate", "--coeffs", "0.5,0.5,0.5,0.5")
        assert code == 0
        assert json.loads(out)["p_d"] == pytest.approx(1.0, abs=1e-12)

    def test_reference_angles(self, capsys):
        code, out, _ = run(capsys, "discriminate", "--angles", "pi/3,0.3pi,pi/4")
        rep = json.loads(out)
        s = math.sin(math.pi / 3) * math.sin(0.3 * math.pi) * math.sin(math.pi / 4)
        assert rep["p_d"] == pytest.approx(4 * s * s, abs=1e-12)
        assert rep["min_index"] == 3

    @pytest.mark.parametrize(
        "argv,code",
        [
            (["--angles", "0"], 4),
            (["--angles", "pi/2"], 4),
            (["--coeffs", "0.6,-0.8"], 5),
            (["--coeffs", "1,0"], 6),
            (["--coeffs", "0.5,0.5"], 7),
        ],
    )
    def test_domain_errors(self, capsys, argv, code):
        got, _, err = run(capsys, "discriminate", *argv)
        assert got == code
        assert "error" in err

    def test_dim_mismatch_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["discriminate", "--dim", "4", "--angles", "pi/3"])
        assert exc.value.code == 2


class TestCompile:
    def test_counts(self, capsys):
        code, out, _ = run(capsys, "compile", "--dim", "4", "--format", "csv")
        assert code == 0
        row = list(csv.DictReader(io.StringIO(out)))[0]
        assert (row["hwp"], row["pbs"], row["bs"]) == ("7", "6", "4")

    def test_netlist_text_parses(self, capsys):
        _, out, _ = run(capsys, "compile", "--angles", "pi/3,0.3pi,pi/4", "--state", "2")
        net = parse_text(out)
        assert net.dim == 4 and net.metadata["state"] == 2

    def test_non_power_of_two(self, capsys):
        code, _, err = run(capsys, "compile", "--dim", "3")
        assert code == 9
        assert "power of two" in err

    def test_check_counts(self, capsys):
        code, out, _ = run(capsys, "compile", "--check-counts")
        assert code == 0
        rows = {r["dim"]: (r["hwp"], r["pbs"], r["bs"]) for r in csv.DictReader(io.StringIO(out))}
        assert rows == {"4": ("7", "6", "4"), "8": ("15", "14", "12"), "16": ("31", "30", "32")}

    def test_out_directory(self, capsys, tmp_path):
        code, _, _ = run(capsys, "compile", "--dim", "8", "--out", str(tmp_path / "net"))
        assert code == 0
        d = tmp_path / "net"
        assert parse_text((d / "netlist.txt").read_text()) == from_json((d / "netlist.json").read_text())
        assert (d / "counts.csv").read_text().startswith("dim,hwp,pbs,bs")

    def test_output_dir_env(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("SYMDISC_OUTPUT_DIR", str(tmp_path))
        run(capsys, "compile", "--dim", "2", "--out", "rel")
        assert (tmp_path / "rel" / "netlist.json").exists()


class TestSimulate:
    ARGS = ("simulate", "--angles", "pi/3,0.3pi,pi/4", "--trials", "100000", "--seed", "3")

    def test_report(self, capsys):
        code, out, _ = run(capsys, *self.ARGS)
        assert code == 0
        rep = json.loads(out)
        p = rep["analytic_p_d"]
        assert abs(rep["conclusive_rate"] - p) < 4 * math.sqrt(p * (1 - p) / 1e5)
        assert rep["error_count"] == 0

    def test_zero_trials(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--angles", "pi/4", "--trials", "0"])
        assert exc.value.code == 2

    def test_invalid_config_exit(self, capsys):
        code, _, err = run(capsys, "simulate", "--angles", "pi/4", "--trials", "10", "--extinction", "0.5")
        assert code == 12
        assert "InvalidConfig" in err

    def test_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        extra = ("--extinction", "1000", "--phase-noise", "0.05")
        run(capsys, *self.ARGS, *extra, "--out", str(a))
        run(capsys, *self.ARGS, *extra, "--workers", "4", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_csv(self, capsys):
        _, out, _ = run(capsys, *self.ARGS, "--format", "csv", "--state", "1")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [r["trials"] for r in rows] == ["0", "100000", "0", "0"]

    def test_non_power_of_two_uses_abstract(self, capsys):
        code, out, _ = run(capsys, "simulate", "--angles", "0.9,0.8", "--trials", "1000")
        assert code == 0
        assert json.loads(out)["dim"] == 3


class TestSweep:
    def test_two_state_rows(self, capsys):
        code, out, _ = run(capsys, "sweep", "--dim", "2", "--grid", "0.1,pi/4,5")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 5
        for r in rows:
            theta = float(r["theta"])
            assert float(r["p_d"]) == pytest.approx(1 - math.cos(2 * theta), abs=1e-12)

    def test_invalid_point_flagged(self, capsys):
        code, out, _ = run(capsys, "sweep", "--dim", "2", "--values", "pi/4,pi/2,0.3", "--trials", "1000")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [r["valid"] for r in rows] == ["1", "0", "1"]
        assert rows[1]["note"]
        assert rows[2]["empirical_rate"]


class TestVerify:
    def test_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--draws", "5")
        assert code == 0
        assert out.rstrip().endswith("ALL PASS")

    def test_eight(self, capsys):
        code, out, _ = run(capsys, "verify", "--dim", "8", "--draws", "3", "--format", "json")
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_injected_fault(self, capsys):
        code, out, _ = run(capsys, "verify", "--draws", "2", "--inject-fault", "fourier")
        assert code == 1
        assert "FAIL  fourier" in out
