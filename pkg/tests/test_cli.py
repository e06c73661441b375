import json
from pathlib import Path

import numpy as np
import pytest

from pflab.cli import main
from pflab.io import load_config, read_eigenvectors, write_eigenvectors

CONFIG_DIR = Path(__file__).parent.parent / "configs"
GOLDEN_DIR = Path(__file__).parent / "data" / "golden_spectrum"


def run(*argv):
    return main([str(a) for a in argv])


def write_config(tmp_path, name="cfg.json", **overrides):
    base = json.loads((CONFIG_DIR / "desk_e010.json").read_text())
    base.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(base))
    return path


def fast_quadrature():
    return {"r_max": 6.0, "n_radial": 32, "n_angular": 16, "sweep_points": 9}


# -- model-check -----------------------------------------------------------------


def test_model_check_passes(capsys):
    assert run("model-check", "--config", CONFIG_DIR / "desk_e010.json") == 0
    out = capsys.readouterr().out
    assert "ok" in out and "c0(" in out


def test_model_check_rejects_scaled_form_factor(tmp_path, capsys):
    cfg = write_config(tmp_path, form_factor={
        "kind": "gaussian", "lambda": 1.0, "amplitude": 0.126987271868})
    assert run("model-check", "--config", cfg) == 1
    assert "NORMALIZATION FAILURE" in capsys.readouterr().out


def test_model_check_massless_warns_without_override(tmp_path, capsys):
    cfg = write_config(tmp_path, dispersion={"kind": "massless"})
    assert run("model-check", "--config", cfg) == 0
    out = capsys.readouterr().out
    assert "VIOLATED" in out and "override" in out


def test_model_check_malformed_config(tmp_path, capsys):
    cfg = write_config(tmp_path, not_a_field=3)
    assert run("model-check", "--config", cfg) == 2
    assert "unknown fields" in capsys.readouterr().err


# -- spectrum ---------------------------------------------------------------------


def test_spectrum_free_theory(tmp_path, capsys):
    assert run("spectrum", "--config", CONFIG_DIR / "desk_e000.json",
               "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "degeneracy  : 2" in out
    data = json.loads((tmp_path / "spectrum.json").read_text())
    assert data["eigenvalues"][0] == pytest.approx(0.08, abs=1e-12)
    assert data["degeneracy"] == 2


def test_spectrum_matches_golden_file(tmp_path):
    assert run("spectrum", "--config", CONFIG_DIR / "desk_e010.json",
               "--out", tmp_path, "--dense") == 0
    got = json.loads((tmp_path / "spectrum.json").read_text())
    want = json.loads((GOLDEN_DIR / "spectrum.json").read_text())
    assert got["degeneracy"] == want["degeneracy"]
    assert np.allclose(got["eigenvalues"], want["eigenvalues"], atol=1e-10)
    got_csv = (tmp_path / "spectrum.csv").read_text().splitlines()
    want_csv = (GOLDEN_DIR / "spectrum.csv").read_text().splitlines()
    assert got_csv[0] == want_csv[0]
    got_row = [float(x) for x in got_csv[1].split(",")]
    want_row = [float(x) for x in want_csv[1].split(",")]
    assert np.allclose(got_row, want_row, atol=1e-10)


def test_spectrum_rejects_oversized_n_eig(tmp_path, capsys):
    assert run("spectrum", "--config", CONFIG_DIR / "desk_e010.json",
               "--out", tmp_path, "--n-eig", 100000) == 2
    assert "dimension" in capsys.readouterr().err


def test_spectrum_massless_requires_override(tmp_path, capsys):
    cfg = write_config(tmp_path, dispersion={"kind": "massless"})
    assert run("spectrum", "--config", cfg, "--out", tmp_path / "o") == 2
    assert run("spectrum", "--config", cfg, "--out", tmp_path / "o",
               "--override-massless") == 0


def test_eigenvector_dump_roundtrip(tmp_path):
    assert run("spectrum", "--config", CONFIG_DIR / "desk_e010.json",
               "--out", tmp_path, "--dump-vectors") == 0
    vecs = read_eigenvectors(tmp_path / "eigenvectors.bin")
    data = json.loads((tmp_path / "spectrum.json").read_text())
    assert vecs.shape == (data["dimension"], len(data["eigenvalues"]))
    gram = vecs.conj().T @ vecs
    assert np.max(np.abs(gram - np.eye(vecs.shape[1]))) < 1e-10


def test_eigenvector_format_is_little_endian_interleaved(tmp_path):
    v = np.array([[1.0 + 2.0j], [3.0 - 4.0j]])
    write_eigenvectors(tmp_path / "v.bin", v)
    raw = (tmp_path / "v.bin").read_bytes()
    assert raw[:16] == (2).to_bytes(8, "little") + (1).to_bytes(8, "little")
    assert np.frombuffer(raw[16:], dtype="<f8").tolist() == [1.0, 2.0, 3.0, -4.0]


# -- sweep ------------------------------------------------------------------------


def test_sweep_free_theory_gap_is_photon_mass(tmp_path, capsys):
    assert run("sweep", "--config", CONFIG_DIR / "desk_e000.json",
               "--out", tmp_path, "--p-grid", "axis=z;from=-0.4;to=0.4;steps=5") == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("px,py,pz,E,degeneracy,cluster_width,gap_above,delta")
    rows = [line.split(",") for line in lines[1:]]

    def row_at(z):
        return min(rows, key=lambda r: abs(float(r[2]) - z))

    assert float(row_at(0.0)[7]) == pytest.approx(1.0, abs=1e-12)
    for z in (0.2, 0.4):
        assert float(row_at(z)[3]) == pytest.approx(float(row_at(-z)[3]), abs=1e-12)
        assert float(row_at(z)[3]) == pytest.approx(0.5 * z * z, abs=5e-12)
        assert float(row_at(z)[7]) > 0.0


def test_sweep_bad_grid_spec(tmp_path, capsys):
    assert run("sweep", "--config", CONFIG_DIR / "desk_e000.json",
               "--out", tmp_path, "--p-grid", "axis=w;from=0;to=1;steps=3") == 2


# -- bounds -----------------------------------------------------------------------


def test_bounds_zero_coupling(tmp_path, capsys):
    cfg = write_config(tmp_path, e=0.0, quadrature=fast_quadrature())
    assert run("bounds", "--config", cfg, "--out", tmp_path / "o") == 0
    report = json.loads((tmp_path / "o" / "bound_report.json").read_text())
    assert report["degeneracy"] == 2
    assert report["a_value"] == pytest.approx(1.0, abs=1e-12)
    assert report["nf_expectation"] == pytest.approx(0.0, abs=1e-18)
    assert (tmp_path / "o" / "bound_summary.txt").exists()


def test_bounds_desk_report(tmp_path, capsys):
    cfg = write_config(tmp_path, quadrature=fast_quadrature())
    assert run("bounds", "--config", cfg, "--out", tmp_path / "o") == 0
    report = json.loads((tmp_path / "o" / "bound_report.json").read_text())
    assert report["degeneracy"] == 2
    assert 0.0 < report["nf_ratio"] < 1.0
    assert report["a_value"] >= report["vacuum_overlap_lower_bound"]
    assert report["gram_deviation"] < 1e-8
    assert report["coupling_threshold"] > 0.1
    out = capsys.readouterr().out
    assert "hypotheses" in out and "degeneracy 2" in out


def test_bounds_spinless_path(tmp_path, capsys):
    cfg = write_config(tmp_path, with_spin=False, e=0.2,
                       quadrature=fast_quadrature())
    assert run("bounds", "--config", cfg, "--out", tmp_path / "o") == 0
    report = json.loads((tmp_path / "o" / "bound_report.json").read_text())
    assert report["spinless"] is True
    assert report["degeneracy"] == 1
    assert report["gap_above"] > 0.0


# -- sectors ----------------------------------------------------------------------


def test_sectors_free_theory(tmp_path):
    assert run("sectors", "--config", CONFIG_DIR / "desk_e000.json",
               "--out", tmp_path) == 0
    report = json.loads((tmp_path / "sector_report.json").read_text())
    assert report["winners"] == [-0.5, 0.5]
    assert report["commutator_max"] < 1e-10
    assert report["degeneracy"] == 2


def test_sectors_interacting(tmp_path):
    cfg = write_config(tmp_path, e=0.2, quadrature=fast_quadrature())
    assert run("sectors", "--config", cfg, "--out", tmp_path / "o") == 0
    report = json.loads((tmp_path / "o" / "sector_report.json").read_text())
    assert report["winners"] == [-0.5, 0.5]
    assert report["hypothesis_gated"] is True
    assert report["ok"] is True


def test_sectors_refuse_non_axial(tmp_path, capsys):
    cfg = write_config(tmp_path, mode_set={
        "kind": "explicit",
        "points": [{"k": [0.3, 0.1, 0.9], "weight": 0.4},
                   {"k": [-0.5, 0.2, 0.1], "weight": 0.3}],
    }, N_max=1, n_max=1)
    assert run("sectors", "--config", cfg, "--out", tmp_path / "o") == 2
    assert "axial" in capsys.readouterr().err


# -- determinism ------------------------------------------------------------------


def _tree_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(Path(root).iterdir())
            if p.name != "manifest.json"}


def test_repeated_runs_are_byte_identical(tmp_path):
    for sub in ("a", "b"):
        assert run("spectrum", "--config", CONFIG_DIR / "desk_e020.json",
                   "--out", tmp_path / sub, "--seed", 42, "--dump-vectors") == 0
    assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")


def test_repeated_sweeps_are_byte_identical(tmp_path):
    for sub in ("a", "b"):
        assert run("sweep", "--config", CONFIG_DIR / "desk_e010.json",
                   "--out", tmp_path / sub, "--seed", 3,
                   "--p-grid", "axis=z;from=0;to=0.4;steps=3") == 0
    assert _tree_bytes(tmp_path / "a") == _tree_bytes(tmp_path / "b")


# -- config round trips -------------------------------------------------------------


def test_config_hash_stable_across_descriptions(tmp_path):
    from pflab.io import config_hash

    cfg_a = load_config(CONFIG_DIR / "desk_e010.json")
    from pflab.io import config_to_dict

    path = tmp_path / "roundtrip.json"
    path.write_text(json.dumps(config_to_dict(cfg_a)))
    cfg_b = load_config(path)
    assert cfg_a == cfg_b
    assert config_hash(cfg_a) == config_hash(cfg_b)


def test_unknown_nested_field_has_path(tmp_path, capsys):
    cfg = write_config(tmp_path, dispersion={"kind": "massive", "m_ph": 1.0,
                                             "mass": 2.0})
    assert run("model-check", "--config", cfg) == 2
    assert "config.dispersion" in capsys.readouterr().err
