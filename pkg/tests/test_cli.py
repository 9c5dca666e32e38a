"""Config validation, pipeline runs, determinism, and exit codes."""

import csv
import hashlib
import json
import os

import numpy as np
import pytest

from modecomb import CalibrationStore
from modecomb.cli import load_config, main, run_scenario, write_demo_config
from modecomb.errors import ConfigError

MIRROR = """\
system:
  mirror:
    freq_lc_hz: 8.0e9
    coupling_vac_hz: 1.588e6
"""

PAIR_MODES = """\
  modes:
    - {index: 0, freq_hz: 3.8245e9, loss_ext_hz: 36.0e3, loss_int_hz: 4.0e3}
    - {index: 1, freq_hz: 3.8375e9, loss_ext_hz: 36.0e3, loss_int_hz: 4.0e3}
"""

COMB_MODES = """\
  modes:
    - {index: 0, freq_hz: 3.8245e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}
    - {index: 1, freq_hz: 3.8375e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}
    - {index: 2, freq_hz: 3.8506e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}
    - {index: 3, freq_hz: 3.8638e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}
"""

SMALL_TWOMODE = """\
pipeline: twomode
output_dir: @OUT@
seed: 11
""" + MIRROR + PAIR_MODES + """\
pumps:
  - {freq_hz: 3.8310e9, epsilon_hz: 15.0e3}
environment:
  temp_k: 0.007
amplifier:
  gain_db: 40.0
  added_photons: 0.15
  sigma_gain_rel: 0.01
  sigma_noise_photons: 0.02
sampling:
  n_samples: 2000
  interval_count: 2
twomode:
  pair: [0, 1]
  detuning_start_hz: -30.0e3
  detuning_stop_hz: 30.0e3
  detuning_count: 3
  histogram_detunings: [1]
"""

SMALL_MULTIMODE = """\
pipeline: multimode
output_dir: @OUT@
seed: 5
""" + MIRROR + COMB_MODES + """\
pumps:
  - {freq_hz: 3.83100e9, epsilon_hz: 30.0e3}
  - {freq_hz: 3.84405e9, epsilon_hz: 30.0e3}
  - {freq_hz: 3.85720e9, epsilon_hz: 30.0e3}
  - {freq_hz: 3.84415e9, epsilon_hz: 30.0e3}
coupling:
  allow_unstable: true
environment:
  temp_k: 0.007
amplifier:
  gain_db: 80.0
  added_photons: 12.0
  sigma_gain_rel: 0.01
  sigma_noise_photons: 0.1
sampling:
  n_samples: 3000
  interval_count: 5
multimode: {}
"""

SMALL_CALIBRATION = """\
pipeline: calibration
output_dir: @OUT@
seed: 3
""" + MIRROR + PAIR_MODES + """\
environment:
  temp_k: 0.007
calibration:
  planck:
    gain_db: 80.0
    added_photons: 0.08
    freq_hz: 3.8245e9
    temp_start_k: 0.01
    temp_stop_k: 4.0
    temp_count: 15
    temp_spacing: geometric
    noise_rel: 0.01
  correlation:
    gain_db: 80.0
    eps_hz: 6.0e3
    pair: [0, 1]
    span_hz: 120.0e3
    count: 21
"""

SMALL_SCATTERING = """\
pipeline: scattering
output_dir: @OUT@
seed: 1
""" + MIRROR + COMB_MODES + """\
pumps:
  - {freq_hz: 3.83100e9, epsilon_hz: 10.0e3}
  - {freq_hz: 3.84405e9, epsilon_hz: 10.0e3}
scattering:
  spacing_start_hz: 12.99e6
  spacing_stop_hz: 13.11e6
  spacing_count: 5
"""


def write_config(tmp_path, template, name="scenario.cfg", out=None):
    path = tmp_path / name
    out_dir = out if out is not None else str(tmp_path / "out")
    path.write_text(template.replace("@OUT@", out_dir))
    return path


def read_report(out_dir):
    with open(os.path.join(out_dir, "report.json")) as fh:
        return json.load(fh)


def test_demo_configs_validate(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for pipeline in ("twomode", "multimode", "calibration", "scattering"):
        assert main(["demo", pipeline]) == 0
        assert main(["validate", f"demo-{pipeline}.cfg"]) == 0


def test_yaml_exponent_floats(tmp_path):
    # values like 8.0e9 must parse as numbers, not strings
    path = tmp_path / "floats.cfg"
    path.write_text("a: 8.0e9\nb: -1e-3\nc: 2.5E+06\n")
    doc, digest = load_config(path)
    assert doc == {"a": 8.0e9, "b": -1e-3, "c": 2.5e6}
    assert len(digest) == 64


def test_twomode_pipeline_run(tmp_path):
    path = write_config(tmp_path, SMALL_TWOMODE)
    report = run_scenario(path)
    out = report.output_dir
    for name in report.files:
        assert os.path.isfile(os.path.join(out, name))
    assert "squeezing_vs_detuning.csv" in report.files
    assert any(n.startswith("histograms_d") for n in report.files)
    with open(os.path.join(out, "squeezing_vs_detuning.csv"), newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:2] == ["detuning_hz", "r_e"]
    assert len(rows) == 1 + 3
    m = report.metrics
    assert len(m["r_e"]) == 3
    assert m["r_p_best"] <= min(m["r_p"]) + 1e-12


def test_multimode_pipeline_run_and_determinism(tmp_path):
    path_a = write_config(tmp_path, SMALL_MULTIMODE, name="a.cfg")
    report_a = run_scenario(path_a)
    digest_first = {}
    for name in report_a.files:
        with open(os.path.join(report_a.output_dir, name), "rb") as fh:
            digest_first[name] = hashlib.sha256(fh.read()).hexdigest()
    # second run into a fresh directory must be byte-identical
    sub = tmp_path / "again"
    sub.mkdir()
    path_b = write_config(sub, SMALL_MULTIMODE, name="a.cfg",
                          out=str(sub / "out"))
    report_b = run_scenario(path_b)
    assert report_a.files == report_b.files
    for name in report_b.files:
        if name == "report.json":
            continue  # report embeds the config path
        with open(os.path.join(report_b.output_dir, name), "rb") as fh:
            assert hashlib.sha256(fh.read()).hexdigest() == digest_first[name], name
    table = json.load(open(os.path.join(report_a.output_dir,
                                        "entanglement_table.json")))
    assert len(table["bipartitions"]) == 7
    assert report_a.metrics["intervals_converged"] == 5


def test_calibration_pipeline_run(tmp_path):
    path = write_config(tmp_path, SMALL_CALIBRATION)
    report = run_scenario(path)
    out = report.output_dir
    store = CalibrationStore.from_json(os.path.join(out, "calibration.json"))
    assert store.gain == pytest.approx(1e8, rel=0.05)
    assert store.added_photons == pytest.approx(0.08, abs=0.02)
    # noiseless correlation branch recovers its parameters almost exactly
    assert report.metrics["correlation"]["eps_hz"] == pytest.approx(6e3, rel=1e-4)
    assert store.eps == pytest.approx(2 * np.pi * 6e3, rel=1e-4)


def test_scattering_pipeline_run(tmp_path):
    path = write_config(tmp_path, SMALL_SCATTERING)
    report = run_scenario(path)
    out = report.output_dir
    assert "scattering_sweep.csv" in report.files
    assert "scattering_matched.csv" in report.files
    n_matches = report.metrics["n_matches"]
    assert len(n_matches) == 5
    # matching is best when the pump comb sits on the nominal spacing
    assert max(n_matches) == n_matches[2]
    with open(os.path.join(out, "scattering_sweep.csv"), newline="") as fh:
        header = next(csv.reader(fh))
    assert header[:3] == ["spacing_hz", "n_matches", "out"]


def test_report_digest_matches_config(tmp_path):
    path = write_config(tmp_path, SMALL_SCATTERING)
    report = run_scenario(path)
    expected = hashlib.sha256(path.read_bytes()).hexdigest()
    assert report.config_digest == expected
    assert read_report(report.output_dir)["config"]["sha256"] == expected


def test_out_root_env_redirects_relative_dirs(tmp_path, monkeypatch):
    root = tmp_path / "rooted"
    monkeypatch.setenv("MODECOMB_OUT_ROOT", str(root))
    path = write_config(tmp_path, SMALL_SCATTERING, out="rel-out")
    report = run_scenario(path)
    assert report.output_dir == str(root / "rel-out")
    assert os.path.isfile(root / "rel-out" / "report.json")


def test_validate_rejects_unknown_mode_index(tmp_path):
    bad = SMALL_TWOMODE.replace("pair: [0, 1]", "pair: [0, 5]")
    path = write_config(tmp_path, bad)
    assert main(["validate", str(path)]) == 2
    with pytest.raises(ConfigError, match="twomode.pair"):
        run_scenario(path)


def test_validate_rejects_unknown_top_level_key(tmp_path):
    path = write_config(tmp_path, SMALL_SCATTERING + "\nbogus: 1\n")
    assert main(["validate", str(path)]) == 2


def test_unstable_pump_needs_override(tmp_path):
    hot = SMALL_TWOMODE.replace("epsilon_hz: 15.0e3", "epsilon_hz: 21.0e3")
    path = write_config(tmp_path, hot)
    with pytest.raises(ConfigError, match="allow_unstable"):
        run_scenario(path)
    assert main(["run", str(path)]) == 2


def test_insufficient_data_exits_three(tmp_path):
    data = tmp_path / "two_rows.csv"
    data.write_text("detuning_hz,c\n-1000.0,5.0\n1000.0,5.0\n")
    cfg = SMALL_CALIBRATION.replace(
        "    span_hz: 120.0e3\n    count: 21\n",
        f"    data_csv: {data}\n",
    )
    # drop the planck branch so the correlation failure decides the exit code
    cfg = cfg[: cfg.index("  planck:")] + cfg[cfg.index("  correlation:") :]
    path = write_config(tmp_path, cfg)
    assert main(["run", str(path)]) == 3


def test_non_finite_data_exits_two(tmp_path):
    data = tmp_path / "nan.csv"
    data.write_text("detuning_hz,c\n-1000.0,nan\n0.0,5.0\n1000.0,5.0\n")
    cfg = SMALL_CALIBRATION.replace(
        "    span_hz: 120.0e3\n    count: 21\n",
        f"    data_csv: {data}\n",
    )
    path = write_config(tmp_path, cfg)
    assert main(["run", str(path)]) == 2


def test_missing_seed_rejected_for_sampling_pipelines(tmp_path):
    cfg = SMALL_TWOMODE.replace("seed: 11\n", "")
    path = write_config(tmp_path, cfg)
    with pytest.raises(ConfigError, match="seed"):
        run_scenario(path)


def test_write_demo_config_rejects_unknown(tmp_path):
    with pytest.raises(ConfigError):
        write_demo_config("nonsense", str(tmp_path))
