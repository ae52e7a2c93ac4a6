import csv
from fractions import Fraction
from pathlib import Path

import pytest

from centerbetti.cli import main, parse_stage_list
from centerbetti.config import ConfigError, config_from_dict, load_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

LAP = """
track = ["e", "u"]
[group]
kind = "abelian"
generators = ["u"]
[matrix]
entries = [[ [["e", "2"], ["u", "-1"], ["u^-1", "-1"]] ]]
[scheme]
type = "inverse_limit"
moduli = [2, 4, 8, 16]
[oracle]
grid = 512
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_stage_syntax():
    assert parse_stage_list("2,4,8") == [2, 4, 8]
    assert parse_stage_list("2..5") == [2, 3, 4, 5]
    assert parse_stage_list("2..64:x2") == [2, 4, 8, 16, 32, 64]
    assert parse_stage_list("1..7:3") == [1, 4, 7]


def test_converge_laplacian(tmp_path, capsys):
    cfg = write(tmp_path, LAP)
    code = main(["converge", "--config", str(cfg), "--out", str(tmp_path / "out"), "--no-plots"])
    out = capsys.readouterr().out
    assert code == 0 and "overall: PASS" in out
    table = rows(tmp_path / "out" / "convergence.csv")
    stages = [r for r in table if r["i"].isdigit()]
    assert [r["stage"] for r in stages] == ["2", "4", "8", "16"]
    for r in stages:
        n = int(r["stage"])
        assert Fraction(r["coeff_exact[u]"]) == Fraction(1, n)
        assert float(r["delta[u]"]) == pytest.approx(1 / n, abs=1e-12)
    for name in ("densities.csv", "determinants.csv", "report.txt"):
        assert (tmp_path / "out" / name).exists()
    assert not list((tmp_path / "out").glob("*.png"))


def test_plots_are_written(tmp_path):
    cfg = write(tmp_path, LAP)
    assert main(["converge", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert {p.name for p in (tmp_path / "o").glob("*.png")} >= {"convergence.png", "densities.png"}


def test_reproducible_runs_are_identical(tmp_path):
    cfg = write(tmp_path, LAP)
    for k in (1, 2):
        assert main(["density", "--config", str(cfg), "--out", str(tmp_path / f"r{k}"), "--reproducible",
                     "--no-plots"]) == 0
    for f in (tmp_path / "r1").iterdir():
        assert f.read_bytes() == (tmp_path / "r2" / f.name).read_bytes()


def test_oracle_subcommand(capsys, tmp_path):
    code = main(["oracle", "--config", str(CONFIGS / "oracle_sector.toml"), "--out", str(tmp_path), "--no-plots"])
    out = capsys.readouterr().out
    assert code == 0
    assert "coefficients = {e: 0.5, t: 0.5}" in out


def test_detbound_prints_certificates(capsys, tmp_path):
    code = main(["detbound", "--config", str(CONFIGS / "det_z.toml"), "--out", str(tmp_path), "--no-plots",
                 "--stages", "8,16"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.count("lndet ≥ 0: PASS") == 2


def test_detbound_flags_the_laplacian_b1_failure(capsys, tmp_path):
    cfg = write(tmp_path, LAP)
    code = main(["detbound", "--config", str(cfg), "--out", str(tmp_path / "d"), "--no-plots", "--stages", "16"])
    out = capsys.readouterr().out
    assert code == 1
    assert "lndet_re[u] >= B1: FAIL" in out
    assert "lndet_re[u] >= B1_corrected: PASS" in out


def test_stage_override_and_tolerance_failure(tmp_path):
    cfg = write(tmp_path, LAP + "[tolerances]\ndelta = 0.01\n")
    assert main(["converge", "--config", str(cfg), "--out", str(tmp_path / "a"), "--no-plots"]) == 1
    assert main(["converge", "--config", str(cfg), "--out", str(tmp_path / "b"), "--no-plots",
                 "--stages", "128,256"]) == 0


def test_conflicting_flags(tmp_path):
    cfg = write(tmp_path, LAP)
    with pytest.raises(SystemExit):
        main(["oracle", "--config", str(cfg), "--no-oracle"])
    with pytest.raises(SystemExit):
        main(["converge", "--config", str(cfg), "--grid", "64", "--no-oracle"])
    with pytest.raises(SystemExit):
        main(["bogus", "--config", str(cfg)])


def test_config_errors_carry_context(tmp_path, capsys):
    bad = LAP.replace('["u", "-1"]', '["w", "-1"]')
    assert main(["converge", "--config", str(write(tmp_path, bad)), "--out", str(tmp_path / "x")]) == 2
    assert "[matrix]" in capsys.readouterr().err
    with pytest.raises(ConfigError, match="increasing"):
        load_config(write(tmp_path, LAP.replace("[2, 4, 8, 16]", "[4, 2]"), "b.toml"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, LAP.replace('"-1"]]', '"-2"]]'), "c.toml"))


def test_folner_caveat_for_non_central_tracking():
    doc = {
        "group": {"kind": "product", "components": [{"kind": "symmetric3"}, {"kind": "abelian", "generators": ["u"]}]},
        "matrix": {"entries": [[[["e", "1"]]]]},
        "scheme": {"type": "folner", "sizes": [2, 4]},
        "track": ["r"],
    }
    assert [w for w, _ in config_from_dict(doc).tracked_classes()] == ["r"]
    doc["track"] = ["u"]
    with pytest.raises(ConfigError, match="C\\(U\\)"):
        config_from_dict(doc).tracked_classes()


def test_sofic_subcommand(tmp_path, capsys):
    code = main(["sofic", "--config", str(CONFIGS / "sofic_cycle.toml"), "--out", str(tmp_path), "--no-plots",
                 "--stages", "16,64"])
    assert code == 0
    assert (tmp_path / "sofic.csv").exists()


def test_output_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CENTERBETTI_OUT", str(tmp_path / "env"))
    cfg = write(tmp_path, LAP)
    assert main(["density", "--config", str(cfg), "--no-plots"]) == 0
    assert (tmp_path / "env" / "densities.csv").exists()
