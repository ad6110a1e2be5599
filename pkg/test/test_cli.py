import json
import math
import os
import sys

import pytest
from click.testing import CliRunner
from loguru import logger

from primexp.main import Options, _scan_config, main
from primexp.records import read_records

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "primexp", "configs")


@pytest.fixture(autouse=True)
def restore_logging():
    yield
    logger.remove()
    logger.add(sys.stderr)


def invoke(*args):
    return CliRunner().invoke(main, ["--log-level", "ERROR", *args])


def invoke_json(*args):
    result = invoke(*args)
    assert result.exit_code == 0, result.output
    return json.loads(result.output)


def test_wk():
    payload = invoke_json("wk", "--q", "16", "--k", "3")
    assert (payload["rat"], payload["rad"]) == ("3/4", 2)
    assert payload["value"] == pytest.approx(0.75 * math.sqrt(2))


def test_sum_at_zero():
    payload = invoke_json("sum", "--alpha", "0", "--k", "3", "--x", "10", "--y", "10")
    assert payload["re"] == pytest.approx(sum(math.log(p) for p in (11, 13, 2, 17, 19)))
    assert payload["terms"] == 5


def test_weyl_uses_theta_for_the_length():
    payload = invoke_json("weyl", "--alpha", "0", "--k", "2", "--x", "100", "--theta", "1/2")
    assert payload["re"] == 10.0


def test_sum_needs_a_length():
    result = invoke("sum", "--alpha", "1/3", "--k", "3", "--x", "100")
    assert result.exit_code == 2
    assert "error:" in result.output


def test_precision_failure_exits_with_3():
    result = invoke("--precision-bits", "64", "sum", "--alpha", "pi", "--k", "3", "--x", "1000000", "--y", "100")
    assert result.exit_code == 3
    assert "error:" in result.output


def test_gauss_single_modulus():
    payload = invoke_json("gauss", "--k", "3", "--q", "9")
    assert payload["abs"] == pytest.approx(3 + 6 * math.cos(2 * math.pi / 9), abs=1e-9)
    assert payload["ratio"] == pytest.approx(payload["abs"] / 3)


def test_approx():
    payload = invoke_json("approx", "--alpha", "pi", "--Q", "100", "--list")
    assert (payload["a"], payload["q"]) == (22, 7)
    assert [c["q"] for c in payload["convergents"]] == [1, 7]


def test_classify():
    payload = invoke_json("classify", "--alpha", "1/3", "--k", "3", "--theta", "1", "--x", "1000", "--P", "10")
    assert payload["kind"] == "major"
    assert (payload["a"], payload["q"]) == (1, 3)


def test_classify_needs_one_P():
    result = invoke("classify", "--alpha", "1/3", "--k", "3", "--theta", "1", "--x", "1000", "--P", "10", "--P-exp", "1/3")
    assert result.exit_code == 2


def test_exponents():
    payload = invoke_json("exponents", "--k", "3", "--theta", "1")
    assert payload["rho_max"]["exact"] == "1/14"
    assert payload["plan"]["J"] == 4


def test_exponents_out_of_range():
    assert invoke("exponents", "--k", "3", "--theta", "0.8").exit_code == 2


def test_hb_verify():
    payload = invoke_json("hb-verify", "--nmax", "200", "--J", "2")
    assert payload["ok"] is True


def test_hb_cases(tmp_path):
    path = str(tmp_path / "cases.csv")
    result = invoke("-o", path, "hb-cases", "--x", "10000", "--theta", "1", "--k", "3")
    assert result.exit_code == 0, result.output
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    assert lines[0] == "j,ranges,case,S,M,r,M1,M2,window_ok"
    assert len(lines) > 1


def test_lemma3_audit_uses_global_seed(tmp_path):
    first, second = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    args = ("lemma3-audit", "--cases", "5", "--q-max", "50", "--n-max", "100")
    assert invoke("--seed", "7", "-o", first, *args).exit_code == 0
    assert invoke("--seed", "7", "-o", second, *args).exit_code == 0
    assert read_records(first) == read_records(second)
    assert len(read_records(first)) == 5


def test_dichotomy_emits_one_record(tmp_path):
    path = str(tmp_path / "d.jsonl")
    result = invoke("--format", "jsonl", "-o", path, "dichotomy", "--alpha", "1/3", "--x", "1000", "--y", "1000", "--k", "3", "--rho", "1/14")
    assert result.exit_code == 0, result.output
    (record,) = read_records(path, "jsonl")
    assert record.q == 3


def test_scan_minor(tmp_path):
    path = str(tmp_path / "minor.csv")
    result = invoke("-o", path, "scan-minor", "--k", "3", "--theta", "1", "--x", "1000", "--samples", "4")
    assert result.exit_code == 0, result.output
    assert "max ratio" in result.output
    records = read_records(path)
    assert records and all(r.arc == "minor" for r in records)


def test_scan_minor_from_config(tmp_path):
    path = str(tmp_path / "minor.csv")
    config = os.path.join(CONFIG_DIR, "scan_minor.json")
    result = invoke("-o", path, "scan-minor", "--config", config, "--x", "1000", "--samples", "4")
    assert result.exit_code == 0, result.output
    assert {r.x for r in read_records(path)} == {1000}


def test_scan_config_seed_survives_default_options(tmp_path):
    config = tmp_path / "seeded.json"
    config.write_text(json.dumps({"k": 3, "theta": "1", "x": [1000], "samples": 4, "seed": 5, "threads": 2}))
    from_file, explicit, other = (str(tmp_path / name) for name in ("a.csv", "b.csv", "c.csv"))
    assert invoke("-o", from_file, "scan-minor", "--config", str(config)).exit_code == 0
    assert invoke("--seed", "5", "-o", explicit, "scan-minor", "--config", str(config)).exit_code == 0
    assert invoke("--seed", "1", "-o", other, "scan-minor", "--config", str(config)).exit_code == 0
    with open(from_file, "rb") as a, open(explicit, "rb") as b:
        assert a.read() == b.read()
    assert {r.alpha for r in read_records(from_file)} != {r.alpha for r in read_records(other)}


def test_scan_config_keeps_file_values_unless_flags_are_given(tmp_path):
    config = tmp_path / "seeded.json"
    config.write_text(json.dumps({"seed": 5, "threads": 2, "precision_bits": 320}))
    opts = Options(precision_bits=256, threads=1, seed=1, out=None, fmt="csv")
    cfg = _scan_config(opts, str(config))
    assert (cfg.seed, cfg.threads, cfg.precision_bits) == (5, 2, 320)
    opts.explicit = {"seed": 9}
    assert _scan_config(opts, str(config)).seed == 9


def test_scan_minor_files_do_not_depend_on_threads(tmp_path):
    paths = [str(tmp_path / f"minor{i}.csv") for i in range(3)]
    args = ("scan-minor", "--k", "3", "--theta", "1", "--x", "10000", "--x", "100000", "--samples", "4")
    for path, threads in zip(paths, ("1", "1", "4")):
        result = invoke("--seed", "11", "--threads", threads, "-o", path, *args)
        assert result.exit_code == 0, result.output
    contents = []
    for path in paths:
        with open(path, "rb") as f:
            contents.append(f.read())
    assert contents[0] == contents[1] == contents[2]
    assert {r.x for r in read_records(paths[0])} == {10 ** 4, 10 ** 5}


def test_scan_major_rejects_short_intervals():
    result = invoke("scan-major", "--k", "1", "--theta", "0.7", "--x", "1000")
    assert result.exit_code == 2


def test_unwritable_output_exits_with_1(tmp_path):
    result = invoke("-o", str(tmp_path / "missing" / "out.json"), "wk", "--q", "5", "--k", "3")
    assert result.exit_code == 1
