import csv
import json
import math
import subprocess
import sys

import pytest

from framewidths.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, load_config, main

SEQ = """[experiment]
kind = sequence
p = 1
q = 2
t = 1
n_list = 16 32 64 128
n_random = 4
seed = 3
[tolerances]
slope = 0.2
"""


@pytest.fixture
def seq_config(tmp_path):
    path = tmp_path / "seq.ini"
    path.write_text(SEQ)
    return path


def with_keys(**keys) -> str:
    """SEQ with the given [experiment] keys replaced or appended."""
    lines = SEQ.splitlines()
    for k, v in keys.items():
        hit = [i for i, ln in enumerate(lines) if ln.split("=")[0].strip() == k]
        if hit:
            lines[hit[0]] = f"{k} = {v}"
        else:
            lines.insert(lines.index("[tolerances]"), f"{k} = {v}")
    return "\n".join(lines) + "\n"


def run(*argv):
    return main([str(a) for a in argv])


def test_rates_writes_three_files(seq_config, tmp_path):
    out = tmp_path / "out"
    assert run("rates", "--config", seq_config, "--out", out, "--quiet") == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["errors.csv", "plot.dat", "report.json"]
    report = json.loads((out / "report.json").read_text())
    assert report["target_slope"] == -1.0 and report["within_tolerance"] is True
    assert report["frame_constants"]["A"] == 1.0
    raw = (out / "errors.csv").read_bytes()
    assert raw.startswith(b"n,error\r\n")
    rows = list(csv.reader(raw.decode().splitlines()))[1:]
    assert [int(r[0]) for r in rows] == [16, 32, 64, 128]
    # plot.dat holds log10 pairs of the same samples
    plot = [tuple(map(float, line.split())) for line in (out / "plot.dat").read_text().splitlines()]
    for (x, y), (n, e) in zip(plot, rows):
        assert x == pytest.approx(math.log10(int(n))) and y == pytest.approx(math.log10(float(e)))


def test_rates_rerun_is_byte_identical(seq_config, tmp_path):
    for name in ("a", "b"):
        assert run("rates", "--config", seq_config, "--out", tmp_path / name, "--quiet") == EXIT_OK
    for f in ("errors.csv", "report.json", "plot.dat"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_command_line_overrides(seq_config, tmp_path, capsys):
    out = tmp_path / "o"
    assert run("rates", "--config", seq_config, "--out", out, "--n-list", "8,16,32,64,128", "--t", "1.5") == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert report["t"] == pytest.approx(1.5)
    assert [n for n, _ in report["samples"]] == [8, 16, 32, 64, 128]
    assert "slope" in capsys.readouterr().out


def test_t_condition_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(with_keys(t="0.2"))
    assert run("rates", "--config", path, "--out", tmp_path / "x") == EXIT_CONFIG
    diag = json.loads(capsys.readouterr().err)
    assert diag["field"] == "t" and "t > d(1/p - 1/2)" in diag["message"]
    assert not (tmp_path / "x").exists()


@pytest.mark.parametrize("key,value", [("kind", "heat"), ("family", "3,3"), ("p", "abc"), ("colour", "red"),
                                       ("n_list", "16 32"), ("dictionary", "dct"), ("seed", "x")])
def test_config_field_errors(tmp_path, capsys, key, value):
    path = tmp_path / "c.ini"
    path.write_text(with_keys(**{key: value}))
    assert run("rates", "--config", path, "--out", tmp_path / "x") == EXIT_CONFIG
    assert json.loads(capsys.readouterr().err)["field"] == key


def test_missing_config_file(tmp_path):
    assert run("rates", "--config", tmp_path / "nope.ini") == EXIT_CONFIG


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["transmogrify"])
    assert exc.value.code == EXIT_CONFIG
    with pytest.raises(SystemExit) as exc:
        main(["rates", "--seed", "-1"])
    assert exc.value.code == EXIT_CONFIG
    assert "usage" in capsys.readouterr().err


def test_load_config_fractions(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(with_keys(p="2/3", t="1.5"))
    cfg = load_config(path)
    assert cfg.source.p == pytest.approx(2 / 3) and cfg.source.s == pytest.approx(1.5)
    assert cfg.tolerances == {"slope": 0.2}


def test_frame_bounds_tight_duplicate(tmp_path, capsys):
    assert run("frame-bounds", "tight-duplicate", "--out", tmp_path) == EXIT_OK
    res = json.loads((tmp_path / "frame_bounds.json").read_text())
    assert res["A"] == pytest.approx(1, abs=1e-8) and res["B"] == pytest.approx(1, abs=1e-8)
    assert res["A_prime_sampled"] == pytest.approx(2**-0.5, abs=1e-6)
    assert res["size"] == res["dim"] + 1


def test_frame_bounds_from_file(tmp_path, capsys):
    frame = {"analysis": [[1, 0], [0, 1]], "atoms": [[1, 0], [0, 1]], "name": "identity"}
    path = tmp_path / "f.json"
    path.write_text(json.dumps(frame))
    assert run("frame-bounds", "--frame", path, "--quiet", "--out", tmp_path) == EXIT_OK
    res = json.loads((tmp_path / "frame_bounds.json").read_text())
    assert res["A"] == pytest.approx(1) and res["B"] == pytest.approx(1)


def test_counterexample_pathological(tmp_path):
    assert run("counterexample", "pathological", "--delta", "0.1", "--quiet", "--out", tmp_path) == EXIT_OK
    res = json.loads((tmp_path / "counterexample_pathological.json").read_text())
    assert res["all_below_epsilon"] is True
    assert max(res["distances"]) < 1e-3
    assert res["measured_B_over_A"] < 2


def test_counterexample_growing(tmp_path):
    assert run("counterexample", "tight-growing", "--size", "30", "--quiet", "--out", tmp_path) == EXIT_OK
    rows = json.loads((tmp_path / "counterexample_tight-growing.json").read_text())["sections"]
    assert len(rows) == 30 and rows[-1]["A_prime"] < 0.2


def test_threshold_demo_rows(tmp_path):
    assert run("threshold-demo", "--trials", "20", "--dim", "32", "--quiet", "--out", tmp_path) == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "threshold.csv").read_text().splitlines()))
    assert len(rows) == 20
    for r in rows:
        assert int(r["m"]) <= 2 * int(r["n"])
        assert float(r["error"]) <= float(r["bound"]) * (1 + 1e-6)


def test_stability_subcommand(tmp_path):
    assert run("stability", "--box", "0.25:0.75", "--j-max", "5", "--quiet", "--out", tmp_path) == EXIT_OK
    res = json.loads((tmp_path / "stability.json").read_text())
    assert res["A_prime_spectral"] > 0 and math.isfinite(res["B"])


def test_verify_subcommand(tmp_path):
    assert run("verify", "--quiet", "--out", tmp_path) == EXIT_OK
    assert json.loads((tmp_path / "verify.json").read_text())["passed"] is True


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "framewidths", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "rates" in proc.stdout
