import filecmp
from pathlib import Path

import pytest

from bootedge.cli import EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_OK, main
from bootedge.config import ConfigError, default_config, load_config, parse_config

ROOT = Path(__file__).resolve().parents[1]

TINY = """\
[experiment]
kind = compare
seed = 3

[population]
name = exp

[statistic]
name = centered_mean

[sampling]
n_grid = 10, 20
replicates = 2
bootstrap_reps = 5000
"""


def test_shipped_configs_parse():
    for path in sorted((ROOT / "configs").glob("*.ini")):
        cfg = load_config(path)
        assert cfg.kind in path.name.split("_")[0]
        assert len(cfg.digest) == 16


@pytest.mark.parametrize("text, line, msg", [
    (TINY + "\n[extra]\nx = 1\n", 16, "unknown section"),
    (TINY.replace("replicates = 2", "replicate = 2"), 13, "unknown key 'replicate'"),
    (TINY.replace("seed = 3", "seed = three"), 3, "bad value for 'seed'"),
    (TINY.replace("seed = 3\n", ""), 1, "seed is mandatory"),
    (TINY.replace("name = centered_mean", "name = centered_mean\nnu = 3"), 10, "nu must lie"),
    (TINY.replace("n_grid = 10, 20", "n_grid = 20, 10"), 12, "strictly increasing"),
    (TINY.replace("kind = compare", "kind = bake"), 2, "kind must be"),
])
def test_config_errors_name_the_line(text, line, msg):
    with pytest.raises(ConfigError, match=rf"t\.ini:{line}: .*{msg}"):
        parse_config(text, "t.ini")


def test_config_validation_rules():
    rates = TINY.replace("kind = compare", "kind = rates")
    with pytest.raises(ConfigError, match="at least 3 grid points"):
        parse_config(rates, "t.ini")
    with pytest.raises(ConfigError, match="n <= 8"):
        parse_config(TINY + "exact = true\n", "t.ini")
    with pytest.raises(ConfigError, match="not 'rates'"):
        parse_config(TINY, "t.ini", kind="rates")
    with pytest.raises(ConfigError, match=r"t\.ini:17: convention"):
        parse_config(TINY + "\n[events]\nconvention = keep_all\n", "t.ini")
    bad_acc = TINY + "\n[acceptance]\nstrictly_decreasing = E4\n"
    with pytest.raises(ConfigError, match="E4 is not among"):
        parse_config(bad_acc, "t.ini")


def test_digest_tracks_results_not_paths():
    a = parse_config(TINY, "a.ini")
    b = parse_config(TINY.replace("seed = 3", "seed = 3\nout = elsewhere"), "b.ini")
    assert a.digest == b.digest
    assert a.with_seed(4).digest != a.digest
    assert a.with_seed(3).digest == a.digest
    assert default_config("rates", 1).digest == default_config("rates", 1).digest


def test_halfline_grid_syntax():
    cfg = parse_config(TINY + "\n[regions]\nhalflines = -1:1:5\n", "t.ini")
    assert cfg.halflines == (-1.0, -0.5, 0.0, 0.5, 1.0)


def write(tmp_path, text):
    p = tmp_path / "t.ini"
    p.write_text(text)
    return str(p)


def test_cli_requires_seed(capsys):
    assert main(["compare"]) == EXIT_CONFIG
    assert "seed" in capsys.readouterr().err


def test_cli_config_errors(tmp_path, capsys):
    assert main(["compare", "--config", str(tmp_path / "missing.ini")]) == EXIT_CONFIG
    assert main(["compare", "--config", write(tmp_path, TINY.replace("exp", "cauchy")), "--out",
                 str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["bake"]) == EXIT_CONFIG
    assert main(["compare", "--seed", "1", "--jobs", "0"]) == EXIT_CONFIG


def test_cli_compare_writes_outputs_and_seed_override(tmp_path):
    cfg = write(tmp_path, TINY)
    out = tmp_path / "o"
    assert main(["compare", "--config", cfg, "--out", str(out), "--seed", "8"]) == EXIT_OK
    text = (out / "compare.csv").read_text()
    assert "# seed 8" in text and "# population exp cramer=yes" in text
    assert (out / "compare_summary.csv").exists() and (out / "compare.gp").exists()


def test_cli_acceptance_failure_exit_code(tmp_path):
    cfg = write(tmp_path, TINY + "\n[acceptance]\nmax_ratio = 0.0001\n")
    assert main(["compare", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_ACCEPTANCE


def test_cli_jobs_do_not_change_bytes(tmp_path):
    cfg = write(tmp_path, TINY)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["compare", "--config", cfg, "--out", str(a), "--jobs", "1"]) == EXIT_OK
    assert main(["compare", "--config", cfg, "--out", str(b), "--jobs", "3"]) == EXIT_OK
    for name in ("compare.csv", "compare_summary.csv"):
        assert filecmp.cmp(a / name, b / name, shallow=False)


def test_cli_oracle_suite(tmp_path, capsys):
    assert main(["oracle", "--seed", "1", "--out", str(tmp_path)]) == EXIT_OK
    report = capsys.readouterr().out
    assert "FAIL" not in report
    assert (tmp_path / "oracle_report.txt").read_text() == report


def test_cli_diagnose_flags_lattice(tmp_path):
    text = "[experiment]\nkind = diagnose\nseed = 5\n[population]\nname = lattice\n" \
           "[sampling]\nn_grid = 30\n[events]\ne5_samples = 2000\n"
    assert main(["diagnose", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")]) == EXIT_OK
    body = (tmp_path / "o" / "diagnose.csv").read_text()
    assert "cramer=no" in body
