import pandas as pd
import pytest

from main import EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main
from mesh_core.vtk_io import read_vtk
from optimizer.records import read_log


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("PRESHAPE_OUTPUT_DIR", "PRESHAPE_LOG_LEVEL", "PRESHAPE_SEED", "PRESHAPE_PRESETS_DIR"):
        monkeypatch.delenv(name, raising=False)


def test_circle_oracles(capsys):
    assert main(["check", "--circle", "--segments", "64", "256", "1024"]) == EXIT_OK
    assert "✅" in capsys.readouterr().out


def test_check_writes_reports(small_config, tmp_path):
    assert main(["check", str(small_config), "--directions", "3"]) == EXIT_OK
    table = pd.read_csv(tmp_path / "out" / "fd_check.csv")
    assert len(table) == 3
    audit_text = (tmp_path / "out" / "audit.txt").read_text(encoding="utf-8")
    assert "mass_defect" in audit_text and "seed: 3" in audit_text


def test_check_detects_negated_derivative(small_config, capsys):
    assert main(["check", str(small_config), "--directions", "3", "--negate-derivative"]) == EXIT_ERROR
    assert "❌" in capsys.readouterr().out


def test_optimize_reports_max_iters(small_config, tmp_path):
    assert main(["optimize", str(small_config)]) == EXIT_NOT_CONVERGED
    out = tmp_path / "out"
    frame = read_log(out / "log.csv")
    assert frame["iter"].tolist() == [0, 1]
    assert (out / "iter_0000.vtk").is_file()
    assert (out / "iter_0001.vtk").is_file()
    assert "density" in read_vtk(out / "final.vtk").cell_data

    assert main(["quality", str(out / "final.vtk"), "--compare", str(out / "iter_0000.vtk")]) == EXIT_OK


def test_output_dir_option(small_config, tmp_path):
    target = tmp_path / "other"
    assert main(["optimize", str(small_config), "--output-dir", str(target)]) == EXIT_NOT_CONVERGED
    assert (target / "log.csv").is_file()


def test_decompose_writes_components(small_config, tmp_path):
    assert main(["decompose", str(small_config)]) == EXIT_OK
    content = read_vtk(tmp_path / "out" / "decomposition.vtk")
    assert {"covector_full", "covector_tangential", "gradient_full"} <= set(content.point_data)
    assert "covector_normal" not in content.point_data


def test_missing_config_is_an_error(tmp_path, capsys):
    assert main(["optimize", str(tmp_path / "missing.json")]) == EXIT_ERROR
    assert "❌" in capsys.readouterr().out


def test_quality_of_missing_mesh(tmp_path):
    assert main(["quality", str(tmp_path / "none.msh")]) == EXIT_ERROR
