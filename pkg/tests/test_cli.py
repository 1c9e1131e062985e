import numpy as np
import pytest

from delayed_heat.cli import RunConfig, ConfigError, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_density_command_and_byte_identical_rerun(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    code, out, _ = run(capsys, "density", "--model", "stable:0.5", "--t", "0.5,1,2", "--s-max", "10",
                       "--out", str(a))
    assert code == 0
    assert "laplace_oracle: PASS" in out
    code, _, _ = run(capsys, "density", "--model", "stable:0.5", "--t", "0.5,1,2", "--s-max", "10",
                     "--out", str(b))
    assert code == 0
    assert (a / "density.csv").read_bytes() == (b / "density.csv").read_bytes()
    assert (a / "density.csv").read_text().startswith("# config_hash=")


def test_missing_orey_condition_exits_2(tmp_path, capsys):
    p = tmp_path / "nu.csv"
    s = np.geomspace(1e-3, 10, 30)
    p.write_text("s,nu\n" + "".join(f"{float(x)!r},{float(np.exp(-x))!r}\n" for x in s))
    code, _, err = run(capsys, "density", "--model", f"tabulated:{p}", "--p0", "0", "--p-inf", "-3",
                       "--out", str(tmp_path))
    assert code == 2
    assert "A3" in err


def test_datum_touching_boundary_exits_2(tmp_path, capsys):
    code, _, err = run(capsys, "solve", "--fd-only", "--boundary", "constant:1", "--datum", "cosine:0.7,0.5,1",
                       "--out", str(tmp_path))
    assert code == 2
    assert "phi(0)" in err


def test_invalid_boundary_exits_2(tmp_path, capsys):
    p = tmp_path / "knots.csv"
    p.write_text("t,phi\n0,1\n1,2\n2,2\n3,3\n")
    code, _, err = run(capsys, "solve", "--fd-only", "--boundary", f"piecewise:{p}", "--T", "3",
                       "--out", str(tmp_path))
    assert code == 2
    assert "A2" in err


def test_fd_only_skips_monte_carlo(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--fd-only", "--n-paths", "1000", "--n-t", "40", "--dx", "0.05",
                       "--out", str(tmp_path))
    assert code == 0
    assert "representation route: skipped" in out
    assert (tmp_path / "solve_fd.csv").exists()
    assert (tmp_path / "solve_report.json").exists()


def test_config_round_trip_and_dump(tmp_path, capsys):
    cfg = RunConfig(model="relativistic:0.5,1", n_paths=123, t_values=(0.5, 2.0), x_min=-3.5, workers=4)
    assert RunConfig.from_ini(cfg.to_ini()) == cfg
    # workers and the output directory do not change results, so they stay out of the hash
    assert cfg.hash() == RunConfig(model="relativistic:0.5,1", n_paths=123, t_values=(0.5, 2.0),
                                   x_min=-3.5, workers=1, out_dir="elsewhere").hash()
    assert cfg.hash() != RunConfig(model="relativistic:0.5,1", n_paths=124, t_values=(0.5, 2.0),
                                   x_min=-3.5).hash()
    path = tmp_path / "run.cfg"
    path.write_text(cfg.to_ini())
    code, out, _ = run(capsys, "simulate", "--config", str(path), "--seed", "9", "--dump-config")
    assert code == 0
    assert RunConfig.from_ini(out) == cfg.with_overrides(seed=9)


def test_unknown_config_key_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("[mc]\nn_pathz = 3\n")
    code, _, err = run(capsys, "simulate", "--config", str(path))
    assert code == 2
    with pytest.raises(ConfigError):
        RunConfig.from_ini(path.read_text())


def test_simulate_outputs_carry_hash(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--seed", "42", "--n-paths", "200", "--s-mesh", "0.01",
                     "--out", str(tmp_path))
    assert code == 0
    import json
    meta = json.loads((tmp_path / "simulate.json").read_text())
    first = (tmp_path / "simulate.csv").read_text().splitlines()[0]
    assert first == f"# config_hash={meta['config_hash']}"


def test_verify_quick(tmp_path, capsys):
    import json
    code, out, _ = run(capsys, "verify", "--quick", "--out", str(tmp_path))
    assert code == 0
    assert "extremal_sign: PASS" in out
    summary = json.loads((tmp_path / "verify.json").read_text())
    assert "config_hash" in summary
