import json

import pytest

from omdbarrier.cli import main


def test_gen_and_run_from_file(tmp_path, capsys):
    m = tmp_path / "m.csv"
    assert main(["gen", "--kind", "dominant-asset", "-d", "3", "-T", "40", "--seed", "2", "-o", str(m)]) == 0
    out = tmp_path / "out"
    assert main(["run", "--algorithm", "lb-omd", "-d", "3", "-T", "40", "--source", str(m),
                 "-o", str(out), "--acceptance"]) == 0
    line = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert line["bound_satisfied"] is True
    assert (out / "lb-omd_d3_T40_s0.csv").exists()


def test_gen_quantum(tmp_path):
    p = tmp_path / "o.json"
    assert main(["gen", "--problem", "quantum", "-d", "2", "-T", "5", "-o", str(p)]) == 0
    assert len(json.loads(p.read_text())) == 5


def test_bit_stable_csv(tmp_path):
    args = ["run", "--algorithm", "eg", "-d", "4", "-T", "200", "--seed", "7"]
    assert main(args + ["-o", str(tmp_path / "a")]) == 0
    assert main(args + ["-o", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "eg_d4_T200_s7.csv").read_bytes()
    assert a == (tmp_path / "b" / "eg_d4_T200_s7.csv").read_bytes()
    assert main(["compare", str(tmp_path / "a" / "eg_d4_T200_s7.csv"),
                 str(tmp_path / "b" / "eg_d4_T200_s7.csv")]) == 0


def test_compare_detects_difference(tmp_path):
    for s in ("1", "2"):
        main(["run", "--algorithm", "lb-ftrl", "-d", "3", "-T", "50", "--seed", s, "-o", str(tmp_path)])
    a, b = tmp_path / "lb-ftrl_d3_T50_s1.csv", tmp_path / "lb-ftrl_d3_T50_s2.csv"
    assert main(["compare", str(a), str(b)]) == 2
    assert main(["compare", str(a), str(b), "--atol", "1e6"]) == 0


def test_parallel_seeds(tmp_path, capsys):
    assert main(["run", "--algorithm", "q-lb-omd", "-d", "2", "-T", "30", "--seed", "1", "2", "3",
                 "--jobs", "2", "-o", str(tmp_path)]) == 0
    seeds = [json.loads(l)["seed"] for l in capsys.readouterr().out.splitlines()]
    assert seeds == [1, 2, 3]
    assert len(list(tmp_path.glob("*.csv"))) == 3


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("OMDBARRIER_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", "--algorithm", "lb-omd", "-d", "2", "-T", "10"]) == 0
    assert (tmp_path / "env" / "lb-omd_d2_T10_s0.json").exists()


def test_operational_error_exit_code(tmp_path):
    assert main(["run", "--algorithm", "eg", "-d", "10", "-T", "5", "-o", str(tmp_path)]) == 1
    assert main(["run", "--algorithm", "lb-omd", "-d", "2", "-T", "10", "--source",
                 str(tmp_path / "missing.csv"), "-o", str(tmp_path)]) == 1


def test_acceptance_violation_exit_code(tmp_path, monkeypatch):
    import omdbarrier.experiment as exp
    monkeypatch.setattr(exp, "regret_bound", lambda *a, **k: -1.0)
    args = ["run", "--algorithm", "lb-omd", "-d", "3", "-T", "20", "-o", str(tmp_path)]
    assert main(args) == 0
    assert main(args + ["--acceptance"]) == 2


def test_verify(tmp_path):
    p = tmp_path / "v.jsonl"
    assert main(["verify", "--samples", "100", "-o", str(p)]) == 0
    rows = [json.loads(l) for l in p.read_text().splitlines()]
    assert all(r["ok"] for r in rows)


def test_bad_arguments():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--algorithm", "nope", "-d", "2", "-T", "3"])
    assert exc.value.code == 1
