import math

from fiberdim.cli import main


def run(args):
    return main(args)


def read(path):
    return path.read_bytes()


def test_julia_csv(tmp_path, capsys):
    out = tmp_path / "cloud.csv"
    assert run(["julia", "--seq", "const:50", "--depth", "2", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "word,re,im,log_deriv"
    assert len(lines) == 5
    assert lines[1].startswith("00,1,0,")
    assert "resolution bound" in capsys.readouterr().out


def test_pressure_zero_column(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["pressure", "--seq", "const:50", "--t", "0:0.4:5", "--n", "2:6",
                "-o", str(out)]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    zero_rows = [float(r[2]) for r in rows if float(r[1]) == 0.0]
    assert len(zero_rows) == 5
    assert all(abs(v - math.log(2)) <= 1e-12 for v in zero_rows)


def test_pressure_deterministic_across_workers(tmp_path):
    blobs = []
    for workers in (1, 2, 8):
        out = tmp_path / f"p{workers}.csv"
        assert run(["pressure", "--seq", "periodic:50,60+10i", "--t", "0:0.3:7",
                    "--n", "2:9", "--workers", str(workers), "-o", str(out)]) == 0
        blobs.append(read(out))
    assert blobs[0] == blobs[1] == blobs[2]


def test_perturb_deterministic_across_workers(tmp_path):
    blobs = []
    for workers in (1, 2, 8):
        out = tmp_path / f"k{workers}.csv"
        assert run(["perturb", "--base", "const:50", "--blocks", "2x2",
                    "--x=-0.06:0.06:5", "--t", "0.18", "--window", "2:10",
                    "--workers", str(workers), "-o", str(out)]) == 0
        blobs.append(read(out))
    assert blobs[0] == blobs[1] == blobs[2]


def test_perturb_gap_mode(tmp_path):
    out = tmp_path / "gap.csv"
    assert run(["perturb", "--base", "const:50", "--mode", "gap", "--x=-0.05:0.05:3",
                "--window", "6:10", "--tol", "1e-4", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,h_lower,h_upper,env_lower,env_upper"
    assert len(lines) == 4


def test_dimension_values(tmp_path, capsys):
    out = tmp_path / "roots.csv"
    assert run(["dimension", "--seq", "const:50", "--window", "10:14",
                "--tol", "1e-4", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "which,t_star,uncertainty,n_window"
    lower = float(lines[1].split(",")[1])
    assert math.log(2) / math.log(200 / 3) <= lower <= math.log(2) / math.log(100 / 3)


def test_spherical_metric_flag(tmp_path):
    planar = tmp_path / "planar.csv"
    spherical = tmp_path / "spherical.csv"
    for metric, out in (("planar", planar), ("spherical", spherical)):
        assert run(["pressure", "--seq", "const:50", "--t", "0.2:0.2:1", "--n", "6:6",
                    "--metric", metric, "-o", str(out)]) == 0
    a_planar = float(planar.read_text().splitlines()[1].split(",")[2])
    a_spherical = float(spherical.read_text().splitlines()[1].split(",")[2])
    assert a_planar != a_spherical
    assert abs(a_planar - a_spherical) < 0.2 * 0.7 / 6  # conformal factor is O(1)


def test_dimension_box_out(tmp_path, capsys):
    roots = tmp_path / "roots.csv"
    box = tmp_path / "box.csv"
    assert run(["dimension", "--seq", "const:50", "--window", "8:12", "--tol", "1e-3",
                "--box-check", "--box-depth", "12", "--box-out", str(box),
                "-o", str(roots)]) == 0
    lines = box.read_text().splitlines()
    assert lines[0] == "eps,count"
    assert lines[-1].startswith("# slope=")
    assert "box-check" in capsys.readouterr().out


def test_motion_exit_code(capsys):
    assert run(["motion", "--base", "const:50", "--x", "0.05", "--depth", "10"]) == 0
    assert "pass" in capsys.readouterr().out


def test_verify_small(capsys):
    assert run(["verify", "--seq", "const:50", "--depth", "8"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL]" not in out
    assert "checks passed" in out


def test_usage_errors(capsys):
    assert run(["julia"]) == 2  # missing --seq
    capsys.readouterr()
    assert run(["julia", "--seq", "const:30", "--depth", "2"]) == 2  # modulus too small
    err = capsys.readouterr().err
    assert "grammar" in err
    assert run(["pressure", "--seq", "const:50", "--t", "bad"]) == 2
    capsys.readouterr()
    assert run(["nonsense"]) == 2
    capsys.readouterr()


def test_depth_cap_respects_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("FIBERDIM_DEPTH_LIMIT", "5")
    out = tmp_path / "cloud.csv"
    assert run(["julia", "--seq", "const:50", "--depth", "6", "-o", str(out)]) == 2
    capsys.readouterr()
    assert run(["julia", "--seq", "const:50", "--depth", "5", "-o", str(out)]) == 0
    capsys.readouterr()


def test_config_file_defaults_and_override(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("t=0:0.2:3\nn=2:4\nseq=const:50\n# comment line\n")
    out1 = tmp_path / "a.csv"
    assert run(["pressure", "--config", str(config), "-o", str(out1)]) == 0
    rows = out1.read_text().splitlines()
    assert len(rows) == 1 + 3 * 3

    # explicit flag overrides the config value
    out2 = tmp_path / "b.csv"
    assert run(["pressure", "--config", str(config), "--n", "2:3", "-o", str(out2)]) == 0
    assert len(out2.read_text().splitlines()) == 1 + 2 * 3


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("not a pair\n")
    assert run(["pressure", "--config", str(bad)]) == 2
    capsys.readouterr()
    assert run(["pressure", "--config", str(tmp_path / "missing.cfg")]) == 2
    capsys.readouterr()


def test_stdout_output(capsys):
    assert run(["julia", "--seq", "const:50", "--depth", "1"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("word,re,im,log_deriv")
    assert "resolution bound" in captured.err
