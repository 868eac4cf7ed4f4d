import io

import pytest

from spade.cli import main
from spade.conformance import read_vectors

from test_conformance import flip_sticky


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


@pytest.mark.parametrize("argv, value", [(("p8", "40"), "1"), (("p8", "6c"), "7/2"), (("p16", "8000"), "NaR"),
                                         (("p8", "01"), "1/64"), (("p8", "ff"), "-1/64"), (("p32", "00000000"), "0")])
def test_decode(argv, value):
    code, out = run("decode", *argv)
    assert code == 0
    assert out.splitlines()[-1] == f"value   {value}"


def test_decode_fields():
    code, out = run("decode", "p8", "6c")
    lines = dict(line.split(None, 1) for line in out.splitlines())
    assert (lines["sign"], lines["k"], lines["e"], lines["sf"]) == ("0", "1", "0", "1")


@pytest.mark.parametrize("argv", [("p8", "123"), ("p8", "zz"), ("p16", "40"), ("p7", "40"), ("p8",)])
def test_decode_usage_errors(argv, capsys):
    code, _ = run("decode", *argv)
    assert code == 2


def test_conformance_pass_and_save(tmp_path):
    path = tmp_path / "v.txt"
    code, out = run("conformance", "p16", "--count", "40", "--seed", "3", "--save-vectors", str(path))
    assert code == 0 and "RESULT: PASS" in out and "80/80 lane cases pass" in out
    code, out2 = run("conformance", "p16", "--vectors", str(path))
    assert code == 0 and "80/80" in out2
    assert len(read_vectors(path)) == 40


def test_conformance_count_zero():
    code, out = run("conformance", "p8", "--count", "0")
    assert code == 0 and "coverage" not in out


def test_conformance_mismatch_dumps(monkeypatch, tmp_path):
    flip_sticky(monkeypatch)
    dump = tmp_path / "fail.txt"
    code, out = run("conformance", "p8", "--count", "300", "--dump-failures", str(dump))
    assert code == 1 and "RESULT: FAIL" in out
    failures = read_vectors(dump)
    assert failures and all(v.expected is not None for v in failures)
    monkeypatch.undo()
    code, _ = run("conformance", "p8", "--vectors", str(dump))
    assert code == 0


@pytest.mark.parametrize("argv", [("p11",), ("p16", "--exhaustive"), ("p8", "--vectors", "/no/such/file")])
def test_conformance_usage_errors(argv):
    assert run("conformance", *argv)[0] == 2


def test_conformance_mode_mismatch(tmp_path):
    path = tmp_path / "v.txt"
    run("conformance", "p8", "--count", "2", "--save-vectors", str(path))
    assert run("conformance", "p16", "--vectors", str(path))[0] == 2


def test_trace(tmp_path):
    ops = tmp_path / "ops.txt"
    ops.write_text("# lane 0 only\n00000060 00000068\n\n")
    log = tmp_path / "t.log"
    assert run("trace", "p8", str(ops), "-o", str(log))[0] == 0
    text = log.read_text()
    assert "stage3.lane0=00006000\n" in text
    first = log.read_bytes()
    run("trace", "p8", str(ops), "-o", str(log))
    assert log.read_bytes() == first


def test_trace_empty(tmp_path):
    ops = tmp_path / "ops.txt"
    ops.write_text("")
    log = tmp_path / "t.log"
    assert run("trace", "p32", str(ops), "-o", str(log))[0] == 0
    assert log.read_text() == ""


def test_trace_parse_error_has_line(tmp_path, capsys):
    ops = tmp_path / "ops.txt"
    ops.write_text("00000060 00000068\n00000060 xyz\n")
    assert run("trace", "p8", str(ops))[0] == 2
    assert "ops.txt:2" in capsys.readouterr().err


def test_infer_missing_file(tmp_path, capsys):
    missing = tmp_path / "nope.spdw"
    assert run("infer", "--weights", str(missing))[0] == 2
    assert str(missing) in capsys.readouterr().err


def test_infer_env_dataset_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SPADE_DATA_DIR", str(tmp_path / "absent"))
    assert run("infer", "-n", "1")[0] == 2
    assert "absent" in capsys.readouterr().err


def test_infer_small(tmp_path):
    csv_path = tmp_path / "acc.csv"
    code, out = run("infer", "-n", "10", "--precision", "float,p16", "--layer-precision", "p8,p8,p16,p32",
                    "--csv", str(csv_path))
    assert code == 0
    assert "p16" in out.lower() and "per-layer" in out
    rows = csv_path.read_text().splitlines()
    assert rows[0] == "precision,samples,accuracy,delta_pt"
    assert len(rows) == 4


def test_infer_float_matches_recorded_baseline():
    code, out = run("infer", "--precision", "float")
    assert code == 0
    assert "recorded float baseline: 0.9410" in out
    assert "float                       0.9410" in out


def test_no_command_is_usage_error():
    assert run()[0] == 2
