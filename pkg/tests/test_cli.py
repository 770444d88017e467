import json

import pytest

from fixedstress.cases import CaseId
from fixedstress.cli import ConfigError, main, parse_config


def test_defaults():
    cfg, timing = parse_config(["--case", "1a"])
    assert cfg.case is CaseId.T1a
    assert len(cfg.omegas) == 81
    assert cfg.mesh_n == 16 and cfg.dt == 0.01 and cfg.t_end == 0.5
    assert cfg.stopping.tol_rel == 1e-6 and cfg.stopping.max_iter == 2000
    assert cfg.variations == (0.01, 0.1, 0.2, 0.3, 0.4, 0.49)
    assert cfg.workers == 1 and cfg.out is None and timing is False


def test_variation_filter():
    cfg, _ = parse_config(["--case", "1c", "--variation", "k=1e0mD", "--variation", "1000"])
    assert cfg.variations == (1.0, 1000.0)
    cfg, _ = parse_config(["--case", "1b", "--variation", "nu=0.49"])
    assert cfg.variations == (0.49,)


@pytest.mark.parametrize(
    "argv, match",
    [
        (["--case", "9"], "1a, 1b, 1c, 2"),
        ([], "missing --case"),
        (["--case", "1a", "--omega-step", "0"], "positive"),
        (["--case", "1a", "--omega-step", "-0.1"], "positive"),
        (["--case", "1a", "--mesh-n", "abc"], "malformed"),
        (["--case", "1a", "--mesh-n", "5"], "even"),
        (["--case", "1a", "--variation", "k=1mD"], "varies"),
        (["--case", "1c", "--variation", "k=-1mD"], "positive"),
        (["--case", "1a", "--variation", "nu=0.3mD"], "mD"),
        (["--case", "1a", "--omega-start", "1.3", "--omega-end", "0.5"], "below"),
        (["--case", "1a", "--bogus"], "unrecognized"),
    ],
)
def test_config_errors(argv, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(argv)


def test_file_and_flag_precedence(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("case: 1b\nmesh_n: 8\nomega-step: 0.05\ntiming: true\n")
    cfg, timing = parse_config(["--config", str(path), "--mesh-n", "4"])
    assert cfg.case is CaseId.T1b
    assert cfg.mesh_n == 4  # flag beats file
    assert cfg.omega_step == 0.05  # file beats default
    assert timing is True


def test_json_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"case": "2", "variation": [0.3], "workers": 2}))
    cfg, _ = parse_config(["--config", str(path)])
    assert cfg.case is CaseId.T2 and cfg.variations == (0.3,) and cfg.workers == 2


@pytest.mark.parametrize("text, match", [("case: [1a\n", "cannot parse"), ("- 1\n- 2\n", "mapping"), ("colour: red\n", "unknown")])
def test_malformed_config_file(tmp_path, text, match):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError, match=match):
        parse_config(["--config", str(path)])


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(["--config", str(tmp_path / "nope.yaml")])


def test_main_exit_codes(tmp_path, capsys):
    assert main(["--case", "9"]) == 2
    assert capsys.readouterr().err.startswith("error: config:")

    blocker = tmp_path / "file"
    blocker.write_text("")
    argv = ["--case", "1a", "--mesh-n", "2", "--omega-start", "1", "--omega-end", "1", "--variation", "0.3"]
    assert main(argv + ["--out", str(blocker / "sub")]) == 1
    assert capsys.readouterr().err.startswith("error: io:")

    out = tmp_path / "ok"
    assert main(argv + ["--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "case 1a nu=0.3: omega*=1" in stdout
    assert (out / "case1a_sweep.csv").exists()
