from mortar_rbf.cli import main
from mortar_rbf.experiments import ExperimentKind, parse_config
from mortar_rbf.rbf import KernelFamily


def run_cli(*argv):
    return main(list(argv))


def test_small_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = run_cli("interp-1d", "--levels", "2", "--out", str(out))
    captured = capsys.readouterr()
    assert code == 0
    assert (out / "sweep.csv").is_file()
    assert (out / "report.txt").is_file()
    assert not (out / "field.csv").exists()
    assert "1D interpolation transfer study" in captured.out
    assert f"wrote {out / 'sweep.csv'}" in captured.out


def test_unknown_experiment_is_a_config_error(capsys):
    assert run_cli("warp-drive") == 2
    assert "unknown experiment" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    code = run_cli("interp_1d", "--config", str(tmp_path / "absent.cfg"))
    assert code == 2
    assert "cannot read config file" in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("experiment = interp_1d\ncolor = red\n")
    assert run_cli("interp_1d", "--config", str(path)) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_bad_level_count(capsys):
    assert run_cli("interp_1d", "--levels", "0") == 2
    assert "refinements" in capsys.readouterr().err


def test_too_few_gauss_points_is_a_config_error(tmp_path, capsys):
    code = run_cli(
        "interp_1d", "--levels", "1", "--gauss", "1", "--out", str(tmp_path / "x")
    )
    assert code == 2
    assert "Gauss" in capsys.readouterr().err


def test_oversized_collocation_count(capsys):
    assert run_cli("interp_1d", "--nm", "50") == 2
    assert "n_per_edge" in capsys.readouterr().err


def test_exact_scheme_on_curved_interface_fails_numerically(tmp_path, capsys):
    code = run_cli(
        "poisson_2d", "--scheme", "sb", "--levels", "1", "--out", str(tmp_path / "p")
    )
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


def test_print_config_reflects_overrides(tmp_path, capsys):
    out = tmp_path / "run"
    code = run_cli(
        "interp-1d",
        "--print-config",
        "--nm",
        "4",
        "--kernel",
        "wendland",
        "--levels",
        "2",
        "--out",
        str(out),
    )
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    end = next(i for i, line in enumerate(lines) if line.startswith("out = "))
    config = parse_config("\n".join(lines[: end + 1]))
    assert config.experiment is ExperimentKind.INTERP_1D
    assert config.mortar.layout.n_per_edge == 4
    assert config.mortar.kernel_family is KernelFamily.WENDLAND_C2
    assert config.refinements == 2
    assert config.out == out


def test_config_file_with_flag_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "experiment = scheme_compare\nrefinements = 3\nseed = 5\nkernel = imq\n"
    )
    out = tmp_path / "results"
    code = run_cli(
        "interp-1d",
        "--config",
        str(path),
        "--levels",
        "2",
        "--print-config",
        "--out",
        str(out),
    )
    assert code == 0
    text = (out / "sweep.csv").read_text()
    assert "imq" in text
