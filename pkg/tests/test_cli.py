"""End-to-end checks of the command line front end.

Everything runs in-process through main(argv) so exit codes and artifact
bytes are observable without spawning interpreters.
"""

import numpy as np
import pytest

from pathcalc import path_from_csv, path_to_csv, ramp_path
from pathcalc.cli import main


def _run(tmp_path, argv, name="out.csv"):
    out = tmp_path / name
    rc = main(argv + ["--out", str(out)])
    assert rc == 0
    return out.read_bytes()


def test_help_exits_zero():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_missing_subcommand_exits_two():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_unparseable_flag_value_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["deriv", "--t", "abc"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# artifact reproducibility

FAST_ARGV = {
    "flow": ["flow", "--path", "ramp:1.0", "--nodes", "33",
             "--direction", "const:1.0", "--substep", "0.03125"],
    "deriv": ["deriv", "--kind", "space", "--functional", "square",
              "--path", "ramp:1.0", "--nodes", "65", "--t", "0.5",
              "--count", "8"],
    "relation": ["relation", "--functional", "square", "--direction", "eval",
                 "--times", "0.5", "--nodes", "129", "--count", "12"],
    "recover-grad": ["recover-grad", "--functional", "square",
                     "--directions", "const:1.0", "--nodes", "129",
                     "--count", "12"],
    "counterexample": ["counterexample", "--t0", "0.5", "--nodes", "257"],
    "ito-check": ["ito-check", "--functional", "exp_eval", "--paths", "2",
                  "--level-min", "4", "--level-max", "6", "--n-exp", "8"],
    "qv": ["qv", "--index", "0", "--level-min", "4", "--level-max", "6",
           "--n-exp", "8"],
    "stratonovich": ["stratonovich", "--integrand", "eval", "--index", "0",
                     "--level-min", "4", "--level-max", "6",
                     "--n-exp", "8"],
    "feynman-kac": ["feynman-kac", "--benchmark", "gauss_square",
                    "--times", "0.25,0.75", "--n-paths", "50",
                    "--n-steps", "8", "--seed", "3"],
    "probe": ["probe", "--functional", "eval", "--samples", "40"],
}


@pytest.mark.parametrize("name", sorted(FAST_ARGV))
def test_rerun_is_byte_identical(tmp_path, name):
    argv = FAST_ARGV[name]
    first = _run(tmp_path, argv, "a.csv")
    second = _run(tmp_path, argv, "b.csv")
    assert first == second
    assert first.endswith(b"\n")


def test_stdout_is_the_default_sink(capsys):
    rc = main(["qv", "--level-min", "4", "--level-max", "5",
               "--n-exp", "8"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "level,qv_T\n" in out
    assert out.startswith("# ")


def test_stamp_adds_a_generated_line(tmp_path):
    argv = ["qv", "--level-min", "4", "--level-max", "4", "--n-exp", "8"]
    plain = _run(tmp_path, argv, "plain.csv")
    assert b"# generated = " not in plain
    out = tmp_path / "stamped.csv"
    assert main(argv + ["--stamp", "--out", str(out)]) == 0
    assert b"# generated = " in out.read_bytes()


# ---------------------------------------------------------------------------
# config files


def test_config_file_matches_flags(tmp_path):
    cfg = tmp_path / "qv.cfg"
    cfg.write_text("# comment line\n\nindex = 1\nlevel_min = 4\n"
                   "level_max = 6\nn_exp = 8\n")
    by_file = _run(tmp_path, ["qv", "--config", str(cfg)], "file.csv")
    by_flags = _run(tmp_path, ["qv", "--index", "1", "--level-min", "4",
                               "--level-max", "6", "--n-exp", "8"],
                    "flags.csv")
    assert by_file == by_flags


def test_cli_flags_override_config(tmp_path):
    cfg = tmp_path / "qv.cfg"
    cfg.write_text("index = 1\nlevel_min = 4\nlevel_max = 6\nn_exp = 8\n")
    mixed = _run(tmp_path, ["qv", "--config", str(cfg), "--index", "2"],
                 "mixed.csv")
    pure = _run(tmp_path, ["qv", "--index", "2", "--level-min", "4",
                           "--level-max", "6", "--n-exp", "8"], "pure.csv")
    assert mixed == pure


def test_unknown_config_key_exits_two(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("index = 1\nturbo = yes\n")
    rc = main(["qv", "--config", str(cfg)])
    assert rc == 2
    assert capsys.readouterr().err.startswith("config-error:")


def test_malformed_config_line_exits_two(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("index 1\n")
    assert main(["qv", "--config", str(cfg)]) == 2
    assert "key = value" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# error channels


def test_domain_error_exits_two(capsys):
    rc = main(["deriv", "--kind", "horizontal", "--t", "0.995"])
    assert rc == 2
    assert capsys.readouterr().err.startswith("config-error:")


def test_unknown_kind_exits_two(capsys):
    assert main(["deriv", "--kind", "banana"]) == 2
    assert capsys.readouterr().err.startswith("config-error:")


def test_ill_conditioned_directions_exit_three(capsys):
    rc = main(["recover-grad", "--path", "ramp:1.0,1.0",
               "--functional", "square", "--t", "0.5",
               "--directions", "const:1.0,1.0;const:1.0,1.0000000001"])
    assert rc == 3
    assert capsys.readouterr().err.startswith("numerical-error:")


def test_out_into_missing_directory_exits_four(tmp_path, capsys):
    rc = main(["qv", "--level-min", "4", "--level-max", "4",
               "--n-exp", "8", "--out", str(tmp_path / "no" / "dir.csv")])
    assert rc == 4
    assert capsys.readouterr().err.startswith("io-error:")


# ---------------------------------------------------------------------------
# artifact schemas


def _lines(raw):
    return raw.decode().splitlines()


def test_flow_artifact_is_a_loadable_path(tmp_path):
    out = tmp_path / "flow.csv"
    rc = main(["flow", "--path", "ramp:1.0", "--nodes", "65",
               "--direction", "const:1.0", "--substep", "0.015625",
               "--out", str(out)])
    assert rc == 0
    lines = _lines(out.read_bytes())
    assert lines[0] == "# direction = const:1.0"
    assert "# interp_mode = linear" in lines
    p = path_from_csv(str(out))
    # constant unit field on the zero-started ramp gives y(t) = t
    ts = np.linspace(0.0, 1.0, 17)
    assert np.allclose(p.eval(ts)[:, 0], ts, atol=1e-12)


def test_csv_path_spec_round_trips(tmp_path):
    src = tmp_path / "ramp.csv"
    path_to_csv(ramp_path(1.0, 1.0, n=129), str(src))
    out = tmp_path / "deriv.csv"
    rc = main(["deriv", "--path", f"csv:{src}", "--kind", "space",
               "--functional", "square", "--t", "0.25", "--count", "8",
               "--out", str(out)])
    assert rc == 0
    lines = _lines(out.read_bytes())
    assert lines[-2] == "verdict,estimate,spread_tail"
    verdict, estimate, _ = lines[-1].split(",")
    assert verdict == "converged"
    assert abs(float(estimate) - 0.5) <= 1e-9


def test_deriv_artifact_schema(tmp_path):
    raw = _run(tmp_path, FAST_ARGV["deriv"])
    lines = _lines(raw)
    head = lines.index("eta,quotient")
    assert any(ln.startswith("# alternations = ") for ln in lines[:head])
    data = lines[head + 1:-2]
    assert len(data) == 8
    for ln in data:
        eta, quot = ln.split(",")
        float(eta), float(quot)
    assert lines[-2] == "verdict,estimate,spread_tail"
    assert lines[-1].split(",")[0] == "converged"


def test_relation_artifact_schema(tmp_path):
    raw = _run(tmp_path, FAST_ARGV["relation"])
    lines = _lines(raw)
    head = [ln for ln in lines if not ln.startswith("#")][0]
    assert head == "t,residual,d_gamma,d_horizontal,grad0,gamma0"
    row = lines[lines.index(head) + 1].split(",")
    assert abs(float(row[1])) <= 1e-4


def test_counterexample_artifact_schema(tmp_path):
    out = tmp_path / "ce.csv"
    ladders = tmp_path / "ladders.csv"
    rc = main(FAST_ARGV["counterexample"]
              + ["--ladders-out", str(ladders), "--out", str(out)])
    assert rc == 0
    lines = _lines(out.read_bytes())
    head = lines.index("t0,path_id,gamma_id,verdict,estimate")
    data = [ln for ln in lines[head + 1:]
            if not ln.startswith("path_id")][:7]
    assert len(data) == 7
    ids = [tuple(ln.split(",")[1:3]) for ln in data]
    assert ("ramp", "horizontal") in ids
    assert ("ramp+0.25", "gamma_star") in ids
    assert "# passed = true" in lines
    # ladder table trails the verdict table in the same file
    assert "path_id,gamma_id,eta,quotient" in lines
    llines = _lines(ladders.read_bytes())
    assert "path_id,gamma_id,eta,quotient" in llines


def test_qv_artifact_dim_two_columns(tmp_path):
    raw = _run(tmp_path, ["qv", "--dim", "2", "--level-min", "4",
                          "--level-max", "5", "--n-exp", "8"])
    lines = _lines(raw)
    assert "level,qv_T_00,qv_T_01,qv_T_10,qv_T_11" in lines


def test_feynman_kac_artifact_schema(tmp_path):
    raw = _run(tmp_path, FAST_ARGV["feynman-kac"])
    lines = _lines(raw)
    head = lines.index("t,f_mc,stderr,f_exact,residual")
    rows = [ln.split(",") for ln in lines[head + 1:]]
    assert [r[0] for r in rows] == ["0.25", "0.75"]
    for r in rows:
        assert float(r[4]) == 0.0  # coded benchmark solves its equation
        assert abs(float(r[1]) - float(r[3])) <= 4 * float(r[2]) + 1e-12


def test_probe_artifact_reports_all_probes(tmp_path):
    raw = _run(tmp_path, FAST_ARGV["probe"])
    lines = _lines(raw)
    head = lines.index("probe,passed,metric,samples")
    rows = [ln.split(",") for ln in lines[head + 1:]]
    assert len(rows) == 3
    assert all(r[1] == "true" for r in rows)


def test_stratonovich_artifact_schema(tmp_path):
    raw = _run(tmp_path, FAST_ARGV["stratonovich"])
    lines = _lines(raw)
    head = lines.index("level,mesh,ito,covariation,value")
    for ln in lines[head + 1:]:
        level, mesh, ito_v, cov, val = ln.split(",")
        assert float(val) == float(ito_v) + 0.5 * float(cov)
