"""Config-driven scenario runner.

A scenario is one YAML document describing the mode comb, the pump tones,
the measurement chain and exactly one analysis pipeline.  ``run_scenario``
builds the network, executes the pipeline and writes a deterministic set
of artifacts (``report.json`` plus CSV tables) into the output directory.

Pipelines
---------
``twomode``
    Pump-probe detuning sweep on one mode pair.  Pump-on and pump-off
    records alternate in chopped blocks; each detuning reports the raw
    and pump-referenced squeezing ratios and, for selected detunings,
    background-subtracted 2D quadrature histograms.
``multimode``
    Repeated measurement intervals of the full comb output.  Every
    interval is sampled, de-embedded through the calibrated amplifier,
    reconstructed to the nearest physical covariance and tested against
    every bipartition; the per-interval witness values are combined into
    weighted significances.
``calibration``
    Amplification-chain fits: a thermal-sweep power fit and/or a
    correlation-lineshape fit, persisted as a calibration file that the
    sampling pipelines can load back.
``scattering``
    Scattering magnitude tables as the pump comb spacing is swept
    through the four-wave matching condition.

Reruns with identical config and seed are byte-identical: every random
draw derives from a per-task seed sequence, JSON keys are sorted, floats
are written with ``repr`` and no timestamps appear in any artifact.

Exit codes: 0 success, 2 configuration errors, 3 numerical failures.
The environment variable ``MODECOMB_OUT_ROOT`` relocates relative output
directories without touching the config file.
"""

from __future__ import annotations

import argparse
import cmath
import csv
import hashlib
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from . import calibration as cal
from .coupling_graph import (
    assign_probe_frequencies,
    build_coupling_matrix,
    match_four_wave,
    mode_frequency_shifts,
    pair_couplings,
)
from .entanglement import (
    all_bipartition_reports,
    all_bipartitions,
    entanglement_sigma,
    ppt_min_eigenvalue,
    propagate_errors,
    significance,
)
from .errors import ConfigError, ModecombError, NumericalError, UnstablePumpError
from .gaussian_state import (
    CovarianceMatrix,
    QuadratureSamples,
    amplify,
    deamplify,
    drift_compensation_angle,
    histogram2d_subtracted,
    output_covariance,
    sample,
    squeezing_stats,
    thermal_covariance,
)
from .modesys import MirrorSpec, ModeSpec, ModeSystem, PumpTone
from .reconstruct import reconstruct_physical
from .scattering import export_db_table, scattering_matrices

TWO_PI = 2.0 * math.pi
OUT_ROOT_ENV = "MODECOMB_OUT_ROOT"
PIPELINES = ("twomode", "multimode", "calibration", "scattering")


class _ConfigLoader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats like 8.0e9 and 1e-3."""


_ConfigLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
         |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
         |[-+]?\.[0-9_]+(?:[eE][-+]?[0-9]+)?
         |[-+]?\.(?:inf|Inf|INF)
         |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


# ---------------------------------------------------------------------------
# Config loading and validation.  Every check raises ConfigError with the
# dotted path of the offending field so a bad file is diagnosable without
# reading tracebacks.


def _fail(path, message):
    raise ConfigError(f"config field '{path}': {message}")


def _section(mapping, key, path, required=False):
    value = mapping.get(key)
    if value is None:
        if required:
            _fail(f"{path}.{key}" if path else key, "section is required")
        return {}
    if not isinstance(value, dict):
        _fail(f"{path}.{key}" if path else key, "expected a mapping")
    return value


def _number(mapping, key, path, default=None, required=False, minimum=None,
            positive=False):
    value = mapping.get(key)
    where = f"{path}.{key}" if path else key
    if value is None:
        if required:
            _fail(where, "value is required")
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(where, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        _fail(where, "value must be finite")
    if positive and value <= 0:
        _fail(where, f"value must be positive, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(where, f"value must be >= {minimum}, got {value!r}")
    return value


def _integer(mapping, key, path, default=None, required=False, minimum=None):
    value = mapping.get(key)
    where = f"{path}.{key}" if path else key
    if value is None:
        if required:
            _fail(where, "value is required")
        return default
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(where, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(where, f"value must be >= {minimum}, got {value!r}")
    return int(value)


def _boolean(mapping, key, path, default=False):
    value = mapping.get(key)
    if value is None:
        return default
    if not isinstance(value, bool):
        _fail(f"{path}.{key}" if path else key,
              f"expected true or false, got {value!r}")
    return value


def _string(mapping, key, path, default=None, required=False, choices=None):
    value = mapping.get(key)
    where = f"{path}.{key}" if path else key
    if value is None:
        if required:
            _fail(where, "value is required")
        return default
    if not isinstance(value, str):
        _fail(where, f"expected a string, got {value!r}")
    if choices is not None and value not in choices:
        _fail(where, f"expected one of {sorted(choices)}, got {value!r}")
    return value


def _mode_index(value, where, n_modes):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(where, f"expected a mode index, got {value!r}")
    if value < 0 or value >= n_modes:
        _fail(where, f"mode index {value} does not exist "
                     f"(system defines modes 0..{n_modes - 1})")
    return int(value)


@dataclass
class ScenarioConfig:
    """Validated scenario with resolved physical objects."""

    pipeline: str
    output_dir: str
    seed: Optional[int]
    workers: Optional[int]
    system: ModeSystem
    pumps: list
    pump_eps: Optional[list]
    tolerance: Optional[float]
    allow_unstable: bool
    temperature: float
    amplifier: Optional[cal.CalibrationStore]
    n_samples: int
    interval_count: int
    interval_seconds: float
    drift_phase: bool
    probe_indices: list
    section: dict
    config_path: str
    digest: str


def load_config(path):
    """Raw YAML document of a scenario file."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    try:
        doc = yaml.load(raw, Loader=_ConfigLoader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path!r} is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path!r} must contain a mapping at top level")
    return doc, hashlib.sha256(raw).hexdigest()


def _validate_system(doc):
    system = _section(doc, "system", "", required=True)
    mirror_map = _section(system, "mirror", "system", required=True)
    freq_lc = _number(mirror_map, "freq_lc_hz", "system.mirror", required=True,
                      positive=True)
    g_vac = _number(mirror_map, "coupling_vac_hz", "system.mirror", required=True,
                    positive=True)
    mirror = MirrorSpec.from_hz(freq_lc, g_vac)

    raw_modes = system.get("modes")
    if not isinstance(raw_modes, list) or not raw_modes:
        _fail("system.modes", "expected a non-empty list of mode mappings")
    specs = []
    for pos, entry in enumerate(raw_modes):
        where = f"system.modes[{pos}]"
        if not isinstance(entry, dict):
            _fail(where, "expected a mapping")
        idx = _integer(entry, "index", where, default=pos, minimum=0)
        freq = _number(entry, "freq_hz", where, required=True, positive=True)
        loss_ext = _number(entry, "loss_ext_hz", where, required=True, minimum=0.0)
        loss_int = _number(entry, "loss_int_hz", where, required=True, minimum=0.0)
        specs.append(ModeSpec.from_hz(idx, freq, loss_ext, loss_int))
    indices = sorted(m.index for m in specs)
    if indices != list(range(len(specs))):
        _fail("system.modes", f"mode indices must be 0..{len(specs) - 1} "
                              f"without gaps, got {indices}")
    specs.sort(key=lambda m: m.index)
    return ModeSystem(tuple(specs), mirror)


def _validate_pumps(doc, n_modes):
    raw = doc.get("pumps")
    if raw is None:
        return [], None
    if not isinstance(raw, list):
        _fail("pumps", "expected a list of pump mappings")
    pumps = []
    eps_values = []
    for pos, entry in enumerate(raw):
        where = f"pumps[{pos}]"
        if not isinstance(entry, dict):
            _fail(where, "expected a mapping")
        freq = _number(entry, "freq_hz", where, required=True, positive=True)
        flux = _number(entry, "flux_phi0", where, default=0.0, minimum=0.0)
        theta = _number(entry, "theta_rad", where, default=0.0)
        if flux >= 0.5:
            _fail(f"{where}.flux_phi0", "flux amplitude must stay below half "
                                        "a flux quantum")
        pumps.append(PumpTone.from_hz(freq, phi_ac=flux, theta=theta))
        eps_values.append(_number(entry, "epsilon_hz", where, positive=True))
    given = [e is not None for e in eps_values]
    if any(given) and not all(given):
        pos = given.index(False)
        _fail(f"pumps[{pos}].epsilon_hz",
              "explicit coupling strengths must be given on all pumps or none")
    pump_eps = [TWO_PI * e for e in eps_values] if all(given) and pumps else None
    return pumps, pump_eps


def _validate_amplifier(doc):
    amp_map = doc.get("amplifier")
    if amp_map is None:
        return None
    if not isinstance(amp_map, dict):
        _fail("amplifier", "expected a mapping")
    path = _string(amp_map, "calibration_json", "amplifier")
    if path is not None:
        extra = sorted(set(amp_map) - {"calibration_json"})
        if extra:
            _fail("amplifier", f"calibration_json replaces inline values; "
                               f"remove {extra}")
        try:
            return cal.CalibrationStore.from_json(path)
        except (OSError, ValueError, TypeError, KeyError) as exc:
            _fail("amplifier.calibration_json",
                  f"cannot load calibration from {path!r}: {exc}")
    gain_db = _number(amp_map, "gain_db", "amplifier")
    gain_lin = _number(amp_map, "gain_linear", "amplifier", positive=True)
    if (gain_db is None) == (gain_lin is None):
        _fail("amplifier", "give exactly one of gain_db or gain_linear")
    gain = 10.0 ** (gain_db / 10.0) if gain_db is not None else gain_lin
    if gain < 1.0:
        _fail("amplifier", f"power gain must be >= 1, got {gain!r}")
    added = _number(amp_map, "added_photons", "amplifier", required=True,
                    minimum=0.0)
    sigma_gain_rel = _number(amp_map, "sigma_gain_rel", "amplifier",
                             default=0.0, minimum=0.0)
    sigma_noise = _number(amp_map, "sigma_noise_photons", "amplifier",
                          default=0.0, minimum=0.0)
    cov_gn = _number(amp_map, "cov_gain_noise", "amplifier", default=0.0)
    return cal.CalibrationStore(
        gain=gain,
        added_photons=added,
        sigma_gain=sigma_gain_rel * gain,
        sigma_noise=sigma_noise,
        cov_gain_noise=cov_gn,
    )


def _validate_twomode(doc, n_modes):
    sec = _section(doc, "twomode", "")
    raw_pair = sec.get("pair", [0, 1])
    if not isinstance(raw_pair, list) or len(raw_pair) != 2:
        _fail("twomode.pair", f"expected a list of two mode indices, got {raw_pair!r}")
    pair = tuple(_mode_index(v, f"twomode.pair[{i}]", n_modes)
                 for i, v in enumerate(raw_pair))
    if pair[0] == pair[1]:
        _fail("twomode.pair", "the two mode indices must differ")
    start = _number(sec, "detuning_start_hz", "twomode", default=-40.0e3)
    stop = _number(sec, "detuning_stop_hz", "twomode", default=40.0e3)
    count = _integer(sec, "detuning_count", "twomode", default=9, minimum=1)
    chop_hz = _number(sec, "chop_hz", "twomode", default=2.0, positive=True)
    bin_width = _number(sec, "histogram_bin", "twomode", default=0.25,
                        positive=True)
    span = _number(sec, "histogram_span", "twomode", default=6.0, positive=True)
    raw_hist = sec.get("histogram_detunings", [count // 2])
    if not isinstance(raw_hist, list):
        _fail("twomode.histogram_detunings", "expected a list of sweep indices")
    hist_idx = []
    for i, v in enumerate(raw_hist):
        where = f"twomode.histogram_detunings[{i}]"
        if isinstance(v, bool) or not isinstance(v, int):
            _fail(where, f"expected an integer sweep index, got {v!r}")
        if v < 0 or v >= count:
            _fail(where, f"sweep index {v} outside 0..{count - 1}")
        hist_idx.append(v)
    return {
        "pair": pair,
        "detunings": np.linspace(start, stop, count),
        "chop_hz": chop_hz,
        "bin_width": bin_width,
        "span": span,
        "histogram_detunings": sorted(set(hist_idx)),
    }


def _validate_calibration(doc, n_modes, seed):
    sec = _section(doc, "calibration", "")
    planck = _section(sec, "planck", "calibration")
    corr = _section(sec, "correlation", "calibration")
    if not planck and not corr:
        _fail("calibration", "give a planck and/or a correlation subsection")
    out = {}
    needs_seed = False
    if planck:
        where = "calibration.planck"
        data_csv = _string(planck, "data_csv", where)
        freq = _number(planck, "freq_hz", where, required=True, positive=True)
        entry = {
            "freq_hz": freq,
            "bandwidth_hz": _number(planck, "bandwidth_hz", where, default=1.0,
                                    positive=True),
        }
        if data_csv is not None:
            entry["data_csv"] = data_csv
        else:
            entry["gain_db"] = _number(planck, "gain_db", where, required=True)
            entry["added_photons"] = _number(planck, "added_photons", where,
                                             required=True, minimum=0.0)
            entry["temp_start_k"] = _number(planck, "temp_start_k", where,
                                            default=0.01, positive=True)
            entry["temp_stop_k"] = _number(planck, "temp_stop_k", where,
                                           default=4.0, positive=True)
            entry["temp_count"] = _integer(planck, "temp_count", where,
                                           default=20, minimum=3)
            entry["temp_spacing"] = _string(planck, "temp_spacing", where,
                                            default="geometric",
                                            choices=("geometric", "linear"))
            entry["noise_rel"] = _number(planck, "noise_rel", where,
                                         default=0.01, minimum=0.0)
            needs_seed = needs_seed or entry["noise_rel"] > 0
        out["planck"] = entry
    if corr:
        where = "calibration.correlation"
        data_csv = _string(corr, "data_csv", where)
        raw_pair = corr.get("pair", [0, 1])
        if not isinstance(raw_pair, list) or len(raw_pair) != 2:
            _fail(f"{where}.pair", "expected a list of two mode indices")
        pair = tuple(_mode_index(v, f"{where}.pair[{i}]", n_modes)
                     for i, v in enumerate(raw_pair))
        if pair[0] == pair[1]:
            _fail(f"{where}.pair", "the two mode indices must differ")
        entry = {
            "pair": pair,
            "gain_db": _number(corr, "gain_db", where, required=True),
            "eps_hz": _number(corr, "eps_hz", where, required=True,
                              positive=True),
        }
        if data_csv is not None:
            entry["data_csv"] = data_csv
        else:
            entry["span_hz"] = _number(corr, "span_hz", where, default=120.0e3,
                                       positive=True)
            entry["count"] = _integer(corr, "count", where, default=41,
                                      minimum=5)
            entry["noise_rel"] = _number(corr, "noise_rel", where, default=0.0,
                                         minimum=0.0)
            needs_seed = needs_seed or entry["noise_rel"] > 0
        out["correlation"] = entry
    if needs_seed and seed is None:
        _fail("seed", "a seed is required when calibration data is "
                      "synthesized with noise")
    return out


def _validate_scattering(doc, n_modes, n_pumps):
    sec = _section(doc, "scattering", "")
    if n_pumps < 2:
        _fail("pumps", "the scattering sweep rescales the pump comb and "
                       "needs at least two pumps")
    start = _number(sec, "spacing_start_hz", "scattering", positive=True)
    stop = _number(sec, "spacing_stop_hz", "scattering", positive=True)
    if (start is None) != (stop is None):
        _fail("scattering", "give both spacing_start_hz and spacing_stop_hz "
                            "or neither")
    count = _integer(sec, "spacing_count", "scattering", default=25, minimum=1)
    ref_out = _integer(sec, "ref_out", "scattering", default=0, minimum=0)
    ref_in = _integer(sec, "ref_in", "scattering", default=0, minimum=0)
    for name, val in (("ref_out", ref_out), ("ref_in", ref_in)):
        if val >= 2 * n_modes:
            _fail(f"scattering.{name}",
                  f"scattering index {val} outside 0..{2 * n_modes - 1}")
    tol = _number(sec, "tolerance_hz", "scattering", positive=True)
    return {
        "spacing_start_hz": start,
        "spacing_stop_hz": stop,
        "spacing_count": count,
        "reference": (ref_out, ref_in),
        "tolerance_hz": tol,
    }


def validate_config(doc, config_path="<config>", digest=""):
    """Check a raw scenario document and resolve it to a ScenarioConfig."""
    known = {"pipeline", "output_dir", "seed", "workers", "system", "pumps",
             "coupling", "environment", "amplifier", "sampling", "probes",
             "twomode", "multimode", "calibration", "scattering"}
    unknown = sorted(set(doc) - known)
    if unknown:
        _fail(unknown[0], "unknown top-level section")

    pipeline = _string(doc, "pipeline", "", required=True, choices=PIPELINES)
    for other in PIPELINES:
        if other != pipeline and other in doc and doc[other]:
            _fail(other, f"pipeline is {pipeline!r}; remove the {other!r} "
                         f"section or switch pipeline (exactly one runs)")
    output_dir = _string(doc, "output_dir", "", required=True)
    seed = _integer(doc, "seed", "", minimum=0)
    workers = _integer(doc, "workers", "", minimum=1)

    system = _validate_system(doc)
    n_modes = len(system.modes)
    pumps, pump_eps = _validate_pumps(doc, n_modes)

    coupling = _section(doc, "coupling", "")
    tol_hz = _number(coupling, "tolerance_hz", "coupling", positive=True)
    allow_unstable = _boolean(coupling, "allow_unstable", "coupling")

    environment = _section(doc, "environment", "")
    temperature = _number(environment, "temp_k", "environment", default=0.0,
                          minimum=0.0)

    amplifier = _validate_amplifier(doc)

    sampling = _section(doc, "sampling", "")
    n_samples = _integer(sampling, "n_samples", "sampling", default=100000,
                         minimum=2)
    interval_count = _integer(sampling, "interval_count", "sampling",
                              default=75, minimum=1)
    interval_seconds = _number(sampling, "interval_seconds", "sampling",
                               default=2.0, positive=True)
    drift_phase = _boolean(sampling, "drift_phase", "sampling")

    probes = _section(doc, "probes", "")
    raw_idx = probes.get("mode_indices")
    if raw_idx is None:
        probe_indices = list(range(n_modes))
    else:
        if not isinstance(raw_idx, list) or not raw_idx:
            _fail("probes.mode_indices", "expected a non-empty list of mode indices")
        probe_indices = [_mode_index(v, f"probes.mode_indices[{i}]", n_modes)
                         for i, v in enumerate(raw_idx)]
        if len(set(probe_indices)) != len(probe_indices):
            _fail("probes.mode_indices", "mode indices must be unique")
        probe_indices = sorted(probe_indices)

    if pipeline in ("twomode", "multimode"):
        if seed is None:
            _fail("seed", f"the {pipeline} pipeline samples quadrature records "
                          f"and needs a seed for reproducibility")
        if not pumps:
            _fail("pumps", f"the {pipeline} pipeline needs at least one pump")
        if amplifier is None:
            _fail("amplifier", f"the {pipeline} pipeline emulates the "
                               f"measurement chain and needs an amplifier")

    if pipeline == "twomode":
        section = _validate_twomode(doc, n_modes)
    elif pipeline == "multimode":
        _section(doc, "multimode", "")  # allowed, no keys yet
        if len(probe_indices) < 2:
            _fail("probes.mode_indices", "multimode analysis needs at least "
                                         "two modes")
        section = {}
    elif pipeline == "calibration":
        section = _validate_calibration(doc, n_modes, seed)
    else:
        section = _validate_scattering(doc, n_modes, len(pumps))

    out_root = os.environ.get(OUT_ROOT_ENV)
    if out_root and not os.path.isabs(output_dir):
        output_dir = os.path.join(out_root, output_dir)

    return ScenarioConfig(
        pipeline=pipeline,
        output_dir=output_dir,
        seed=seed,
        workers=workers,
        system=system,
        pumps=pumps,
        pump_eps=pump_eps,
        tolerance=None if tol_hz is None else TWO_PI * tol_hz,
        allow_unstable=allow_unstable,
        temperature=temperature,
        amplifier=amplifier,
        n_samples=n_samples,
        interval_count=interval_count,
        interval_seconds=interval_seconds,
        drift_phase=drift_phase,
        probe_indices=probe_indices,
        section=section,
        config_path=config_path,
        digest=digest,
    )


# ---------------------------------------------------------------------------
# Shared pipeline plumbing


@dataclass
class RunReport:
    """Artifact manifest and headline numbers of one pipeline run."""

    pipeline: str
    config_path: str
    config_digest: str
    output_dir: str
    files: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "pipeline": self.pipeline,
            "config": {"path": self.config_path, "sha256": self.config_digest},
            "files": sorted(self.files),
            "metrics": self.metrics,
        }


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    return obj


def _check_finite(obj, where="metrics"):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{where}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{where}[{i}]")
    elif isinstance(obj, float) and not math.isfinite(obj):
        raise NumericalError(f"non-finite value in {where}")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(_jsonify(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _couplings_for(scfg, pumps=None, tolerance=None):
    """Four-wave matches and complex pair couplings for the configured comb.

    Explicit per-pump strengths (epsilon_hz) override the microscopic
    flux-drive chain; multiple pumps matching one pair add coherently.
    """
    modes = scfg.system.modes
    pumps = scfg.pumps if pumps is None else pumps
    tol = scfg.tolerance if tolerance is None else tolerance
    matches = match_four_wave(modes, pumps, tolerance=tol)
    if scfg.pump_eps is not None:
        couplings = {}
        for mt in matches:
            key = (mt.mode_j, mt.mode_k)
            eps = scfg.pump_eps[mt.pump_index] * cmath.exp(
                -2j * pumps[mt.pump_index].theta)
            couplings[key] = couplings.get(key, 0.0) + eps
    else:
        couplings = pair_couplings(modes, pumps, scfg.system.mirror, matches)
    return matches, couplings


def _network(scfg, couplings, probe_omegas=None):
    """Quadrature-basis scattering pair of the configured network."""
    modes = scfg.system.modes
    gamma_ext = np.array([m.gamma_ext for m in modes])
    gamma_int = np.array([m.gamma_int for m in modes])
    cm = build_coupling_matrix(modes, probe_omegas=probe_omegas,
                               couplings=couplings)
    try:
        pair = scattering_matrices(cm, gamma_ext, gamma_int,
                                   allow_unstable=scfg.allow_unstable)
    except UnstablePumpError as exc:
        raise ConfigError(
            f"{exc}; set 'coupling: {{allow_unstable: true}}' to run the "
            f"network above threshold anyway") from exc
    return pair.to_quadrature()


def _output_state(scfg, couplings, probe_omegas=None):
    pair = _network(scfg, couplings, probe_omegas=probe_omegas)
    v_th = thermal_covariance(scfg.system.modes, scfg.temperature)
    return output_covariance(pair, v_th, v_loss=v_th)


def _pool_map(fn, items, workers):
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _resolve_workers(scfg, n_units):
    if scfg.workers is not None:
        return max(1, min(scfg.workers, n_units))
    return max(1, min(os.cpu_count() or 1, n_units, 8))


# ---------------------------------------------------------------------------
# twomode pipeline


def _combo_ratios(v_on, v_off, pair):
    """Model squeezing ratios from exact measured-domain covariances.

    Mirrors squeezing_stats on infinite statistics: the common
    drift-compensation rotation is applied before forming the I_j +- I_k
    combinations and the single-mode pump-off reference.
    """
    j, k = pair
    angles = np.zeros(v_on.n_modes)
    angles[j] = angles[k] = drift_compensation_angle(v_on, pair)
    a = v_on.rotate(angles).v
    off = v_off.rotate(angles).v
    plus = a[2 * j, 2 * j] + a[2 * k, 2 * k] + 2 * a[2 * j, 2 * k]
    minus = a[2 * j, 2 * j] + a[2 * k, 2 * k] - 2 * a[2 * j, 2 * k]
    low, high = sorted((plus, minus))
    ref = (off[2 * j, 2 * j] + off[2 * k, 2 * k]) / 2.0
    return math.sqrt(high / low), math.sqrt(low / ref)


def _run_twomode(scfg, out_dir):
    sec = scfg.section
    pair = sec["pair"]
    modes = scfg.system.modes
    n = len(modes)
    _, couplings = _couplings_for(scfg)
    if (min(pair), max(pair)) not in couplings:
        raise ConfigError(
            f"config field 'twomode.pair': no pump couples modes "
            f"{pair[0]} and {pair[1]}; check the pump frequencies")
    shifts = mode_frequency_shifts(n, couplings)
    dressed = np.array([m.omega for m in modes]) - shifts
    amp = scfg.amplifier.amplifier(n)
    v_th = thermal_covariance(modes, scfg.temperature)

    blocks = max(2, 2 * int(round(sec["chop_hz"] * scfg.interval_seconds / 2.0)))
    detunings = sec["detunings"]

    def one_detuning(d_idx):
        delta = TWO_PI * detunings[d_idx]
        probe = dressed.copy()
        probe[pair[0]] += delta
        probe[pair[1]] -= delta
        net_on = _network(scfg, couplings, probe_omegas=probe)
        net_off = _network(scfg, {}, probe_omegas=probe)
        v_on = amplify(output_covariance(net_on, v_th, v_loss=v_th), amp)
        v_off = amplify(output_covariance(net_off, v_th, v_loss=v_th), amp)
        on_parts, off_parts = [], []
        for i in range(scfg.interval_count):
            if scfg.drift_phase:
                phi = float(np.random.default_rng(
                    [scfg.seed, 1, d_idx, i]).uniform(0.0, TWO_PI))
            else:
                phi = 0.0
            for b in range(blocks):
                state = "on" if b % 2 == 0 else "off"
                smp = sample(v_on if state == "on" else v_off, scfg.n_samples,
                             [scfg.seed, 0, d_idx, i, b], pump_state=state)
                if phi:
                    smp = smp.rotate(np.full(n, phi))
                (on_parts if state == "on" else off_parts).append(smp.data)
        on = QuadratureSamples(n, np.vstack(on_parts), "on")
        off = QuadratureSamples(n, np.vstack(off_parts), "off")
        r_e, r_p = squeezing_stats(on, off, pair, rotate=True)
        r_e_model, r_p_model = _combo_ratios(v_on, v_off, pair)
        hists = None
        if d_idx in sec["histogram_detunings"]:
            hists = histogram2d_subtracted(on, off, pair,
                                           bin_width=sec["bin_width"],
                                           span=sec["span"])
        return {"r_e": r_e, "r_p": r_p, "r_e_model": r_e_model,
                "r_p_model": r_p_model, "hists": hists,
                "v_on": v_on, "v_off": v_off}

    workers = _resolve_workers(scfg, len(detunings))
    rows = _pool_map(one_detuning, list(range(len(detunings))), workers)

    files = []
    sweep_path = os.path.join(out_dir, "squeezing_vs_detuning.csv")
    with open(sweep_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["detuning_hz", "r_e", "r_p", "r_e_model", "r_p_model"])
        for d, row in zip(detunings, rows):
            w.writerow([repr(float(d))] + [repr(float(row[key]))
                       for key in ("r_e", "r_p", "r_e_model", "r_p_model")])
    files.append("squeezing_vs_detuning.csv")

    for d_idx in sec["histogram_detunings"]:
        name = f"histograms_d{d_idx:02d}.csv"
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["axes", "row", "col", "x_low", "y_low",
                        "count_on", "count_off", "difference"])
            for axes in sorted(rows[d_idx]["hists"]):
                edges, h_on, h_off = rows[d_idx]["hists"][axes]
                for r in range(h_on.shape[0]):
                    for c in range(h_on.shape[1]):
                        w.writerow([axes, r, c,
                                    repr(float(edges[r])), repr(float(edges[c])),
                                    repr(float(h_on[r, c])),
                                    repr(float(h_off[r, c])),
                                    repr(float(h_on[r, c] - h_off[r, c]))])
        files.append(name)

    mid = len(detunings) // 2
    for name, v in (("covariance_on_model.csv", rows[mid]["v_on"]),
                    ("covariance_off_model.csv", rows[mid]["v_off"])):
        v.to_csv(os.path.join(out_dir, name))
        files.append(name)

    r_p = [row["r_p"] for row in rows]
    best = int(np.argmin(r_p))
    metrics = {
        "detunings_hz": [float(d) for d in detunings],
        "r_e": [row["r_e"] for row in rows],
        "r_p": r_p,
        "r_e_model": [row["r_e_model"] for row in rows],
        "r_p_model": [row["r_p_model"] for row in rows],
        "r_p_best": r_p[best],
        "r_p_best_detuning_hz": float(detunings[best]),
        "samples_per_block": scfg.n_samples,
        "blocks_per_interval": blocks,
        "interval_count": scfg.interval_count,
    }
    return metrics, files


# ---------------------------------------------------------------------------
# multimode pipeline


def _run_multimode(scfg, out_dir):
    idx = scfg.probe_indices
    n_sub = len(idx)
    _, couplings = _couplings_for(scfg)
    if not couplings:
        raise ConfigError("config field 'pumps': no pump matches any mode "
                          "pair; the multimode pipeline needs a coupled comb")
    v_out_full = _output_state(scfg, couplings)
    v_out = v_out_full.submatrix(idx)
    amp = scfg.amplifier.amplifier(n_sub)
    v_model = amplify(v_out, amp)

    def one_interval(i):
        smp = sample(v_model, scfg.n_samples, [scfg.seed, 0, i], pump_state="on")
        if scfg.drift_phase:
            phi = float(np.random.default_rng(
                [scfg.seed, 1, i]).uniform(0.0, TWO_PI))
            smp = smp.rotate(np.full(n_sub, phi))
        v_hat, sem = smp.covariance_with_sem()
        sigma = propagate_errors(v_hat, amp, sem=sem)
        # interval objectives only feed averages, so a loose bisection
        # width keeps the per-interval cost bounded
        rec = reconstruct_physical(deamplify(v_hat, amp), sigma=sigma,
                                   t_width=1e-3, max_iter=30000)
        # h, g live in the decorrelated frame; the element-wise sigma map is
        # kept in the lab frame, a second-order mismatch for small angles
        reports = all_bipartition_reports(rec.v)
        for rep in reports:
            rep.sigma = entanglement_sigma(sigma, rep.h, rep.g)
        return {
            "values": {rep.bipartition.label: rep.value for rep in reports},
            "sigmas": {rep.bipartition.label: rep.sigma for rep in reports},
            "objective": rec.objective,
            "converged": rec.converged,
            "v_hat": v_hat.v,
            "v_rec": rec.v.v,
        }

    workers = _resolve_workers(scfg, scfg.interval_count)
    rows = _pool_map(one_interval, list(range(scfg.interval_count)), workers)

    labels = [bp.label for bp in all_bipartitions(n_sub)]
    v_rec_mean = CovarianceMatrix(
        n_sub, np.mean([row["v_rec"] for row in rows], axis=0))
    v_hat_mean = CovarianceMatrix(
        n_sub, np.mean([row["v_hat"] for row in rows], axis=0))

    table = {"n_intervals": scfg.interval_count, "bipartitions": []}
    sig_w = {}
    for label, bp in zip(labels, all_bipartitions(n_sub)):
        values = [row["values"][label] for row in rows]
        sigmas = [row["sigmas"][label] for row in rows]
        sig_w[label] = significance(values, sigmas)
        table["bipartitions"].append({
            "label": label,
            "svl_mean": float(np.mean(values)),
            "weighted_significance": sig_w[label],
            "ppt_lambda_mean_state": ppt_min_eigenvalue(v_rec_mean, bp),
            "values": values,
            "sigmas": sigmas,
        })

    files = []
    _write_json(os.path.join(out_dir, "entanglement_table.json"), table)
    files.append("entanglement_table.json")
    for name, v in (("covariance_output_model.csv", v_out),
                    ("covariance_measured_model.csv", v_model),
                    ("covariance_measured_mean.csv", v_hat_mean),
                    ("covariance_reconstructed_mean.csv", v_rec_mean)):
        v.to_csv(os.path.join(out_dir, name))
        files.append(name)

    objectives = [row["objective"] for row in rows]
    metrics = {
        "mode_indices": list(idx),
        "weighted_significance": sig_w,
        "max_weighted_significance": max(sig_w.values()),
        "ppt_lambda_mean_state": {
            bp.label: ppt_min_eigenvalue(v_rec_mean, bp)
            for bp in all_bipartitions(n_sub)
        },
        "reconstruction_objective_mean": float(np.mean(objectives)),
        "reconstruction_objective_max": float(np.max(objectives)),
        "intervals_converged": int(sum(row["converged"] for row in rows)),
        "interval_count": scfg.interval_count,
        "n_samples": scfg.n_samples,
    }
    return metrics, files


# ---------------------------------------------------------------------------
# calibration pipeline


def _run_calibration(scfg, out_dir):
    sec = scfg.section
    modes = scfg.system.modes
    files = []
    metrics = {}
    planck_fit = None
    corr_fit = None

    if "planck" in sec:
        p = sec["planck"]
        freq = TWO_PI * p["freq_hz"]
        bandwidth = TWO_PI * p["bandwidth_hz"]
        if "data_csv" in p:
            try:
                data = np.loadtxt(p["data_csv"], delimiter=",", skiprows=1,
                                  ndmin=2)
            except (OSError, ValueError) as exc:
                raise ConfigError(
                    f"config field 'calibration.planck.data_csv': cannot "
                    f"load {p['data_csv']!r}: {exc}") from exc
            temps, powers = data[:, 0], data[:, 1]
            if not np.all(np.isfinite(data)):
                raise ConfigError(
                    "config field 'calibration.planck.data_csv': file "
                    f"{p['data_csv']!r} contains non-finite values")
            sigma = None
        else:
            if p["temp_spacing"] == "geometric":
                temps = np.geomspace(p["temp_start_k"], p["temp_stop_k"],
                                     p["temp_count"])
            else:
                temps = np.linspace(p["temp_start_k"], p["temp_stop_k"],
                                    p["temp_count"])
            gain = 10.0 ** (p["gain_db"] / 10.0)
            powers = cal.planck_power(temps, gain, p["added_photons"], freq,
                                      bandwidth=bandwidth)
            sigma = None
            if p["noise_rel"] > 0:
                rng = np.random.default_rng([scfg.seed, 0])
                powers = powers * (1.0 + p["noise_rel"] *
                                   rng.standard_normal(temps.size))
                sigma = p["noise_rel"] * np.abs(powers)
        planck_fit = cal.planck_fit(temps, powers, freq, bandwidth=bandwidth,
                                    sigma=sigma, absolute_sigma=sigma is not None)
        model = cal.planck_power(temps, planck_fit.gain,
                                 planck_fit.added_photons, freq,
                                 bandwidth=bandwidth)
        path = os.path.join(out_dir, "planck_fit.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["temp_k", "power", "power_model"])
            for t, pw, pm in zip(temps, powers, model):
                w.writerow([repr(float(t)), repr(float(pw)), repr(float(pm))])
        files.append("planck_fit.csv")
        metrics["planck"] = {
            "gain": planck_fit.gain,
            "gain_db": 10.0 * math.log10(planck_fit.gain),
            "added_photons": planck_fit.added_photons,
            "sigma_gain": planck_fit.sigma_gain,
            "sigma_noise": planck_fit.sigma_noise,
            "residual_rms": float(np.sqrt(np.mean(planck_fit.residuals ** 2))),
        }

    if "correlation" in sec:
        c = sec["correlation"]
        pair_modes = [modes[c["pair"][0]], modes[c["pair"][1]]]
        gain = 10.0 ** (c["gain_db"] / 10.0)
        eps = TWO_PI * c["eps_hz"]
        if "data_csv" in c:
            try:
                data = np.loadtxt(c["data_csv"], delimiter=",", skiprows=1,
                                  ndmin=2)
            except (OSError, ValueError) as exc:
                raise ConfigError(
                    f"config field 'calibration.correlation.data_csv': cannot "
                    f"load {c['data_csv']!r}: {exc}") from exc
            if not np.all(np.isfinite(data)):
                raise ConfigError(
                    "config field 'calibration.correlation.data_csv': file "
                    f"{c['data_csv']!r} contains non-finite values")
            deltas, c_meas = TWO_PI * data[:, 0], data[:, 1]
        else:
            deltas = TWO_PI * np.linspace(-c["span_hz"] / 2.0,
                                          c["span_hz"] / 2.0, c["count"])
            c_meas = cal.c_lineshape(deltas, gain, eps, pair_modes,
                                     scfg.temperature)
            if c["noise_rel"] > 0:
                rng = np.random.default_rng([scfg.seed, 1])
                c_meas = c_meas * (1.0 + c["noise_rel"] *
                                   rng.standard_normal(deltas.size))
        corr_fit = cal.fit_gain_from_correlations(
            deltas, c_meas, pair_modes, scfg.temperature, p0=(gain, eps))
        model = cal.c_lineshape(deltas, corr_fit.gain, corr_fit.eps,
                                pair_modes, scfg.temperature)
        path = os.path.join(out_dir, "correlation_fit.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["detuning_hz", "c", "c_model"])
            for d, cm, cmod in zip(deltas / TWO_PI, c_meas, model):
                w.writerow([repr(float(d)), repr(float(cm)), repr(float(cmod))])
        files.append("correlation_fit.csv")
        metrics["correlation"] = {
            "gain": corr_fit.gain,
            "gain_db": 10.0 * math.log10(corr_fit.gain),
            "eps_hz": corr_fit.eps / TWO_PI,
            "sigma_gain": corr_fit.sigma_gain,
            "sigma_eps_hz": corr_fit.sigma_eps / TWO_PI,
            "residual_rms": float(np.sqrt(np.mean(corr_fit.residuals ** 2))),
        }

    meta = {"source": "fit"}
    if planck_fit is not None:
        store = cal.CalibrationStore(
            gain=planck_fit.gain,
            added_photons=planck_fit.added_photons,
            sigma_gain=planck_fit.sigma_gain,
            sigma_noise=planck_fit.sigma_noise,
            cov_gain_noise=planck_fit.cov_gain_noise,
            eps=None if corr_fit is None else corr_fit.eps,
            sigma_eps=None if corr_fit is None else corr_fit.sigma_eps,
            meta=meta,
        )
    else:
        meta["added_photons"] = "not fitted; correlation lineshape only"
        store = cal.CalibrationStore(
            gain=corr_fit.gain,
            added_photons=0.0,
            sigma_gain=corr_fit.sigma_gain,
            eps=corr_fit.eps,
            sigma_eps=corr_fit.sigma_eps,
            meta=meta,
        )
    store.to_json(os.path.join(out_dir, "calibration.json"))
    files.append("calibration.json")
    metrics["calibration_file"] = "calibration.json"
    return metrics, files


# ---------------------------------------------------------------------------
# scattering pipeline


def _run_scattering(scfg, out_dir):
    sec = scfg.section
    modes = scfg.system.modes
    n = len(modes)
    pump_freqs = np.array([p.omega_p for p in scfg.pumps]) / TWO_PI
    center = float(np.mean(pump_freqs))
    offsets = pump_freqs - center
    nominal = float(np.mean(np.diff(np.sort(pump_freqs))))
    if nominal <= 0:
        raise ConfigError("config field 'pumps': pump frequencies must be "
                          "distinct for a spacing sweep")

    start = sec["spacing_start_hz"]
    stop = sec["spacing_stop_hz"]
    if start is None:
        start, stop = nominal - 60.0e3, nominal + 60.0e3
    spacings = np.linspace(start, stop, sec["spacing_count"])
    tol = None if sec["tolerance_hz"] is None else TWO_PI * sec["tolerance_hz"]

    def comb_at(spacing):
        scale = spacing / nominal
        return [
            PumpTone(TWO_PI * (center + off * scale), phi_ac=p.phi_ac,
                     theta=p.theta)
            for off, p in zip(offsets, scfg.pumps)
        ]

    def one_spacing(s_idx):
        pumps = comb_at(spacings[s_idx])
        matches, couplings = _couplings_for(scfg, pumps=pumps, tolerance=tol)
        probes, _ = assign_probe_frequencies(modes, matches, couplings)
        pair = _network(scfg, couplings, probe_omegas=probes)
        return len(matches), pair.s

    workers = _resolve_workers(scfg, len(spacings))
    results = _pool_map(one_spacing, list(range(len(spacings))), workers)

    labels = [f"b{j}" for j in range(n)] + [f"bdag{j}" for j in range(n)]
    files = []
    sweep_path = os.path.join(out_dir, "scattering_sweep.csv")
    with open(sweep_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["spacing_hz", "n_matches", "out", "in", "mag_db",
                    "phase_rad"])
        for s, (n_match, s_mat) in zip(spacings, results):
            for r in range(2 * n):
                for c in range(2 * n):
                    mag = abs(s_mat[r, c])
                    w.writerow([repr(float(s)), n_match, labels[r], labels[c],
                                repr(20.0 * math.log10(max(mag, 1e-300))),
                                repr(float(np.angle(s_mat[r, c])))])
    files.append("scattering_sweep.csv")

    nominal_idx = int(np.argmin(np.abs(spacings - nominal)))
    pumps = comb_at(spacings[nominal_idx])
    matches, couplings = _couplings_for(scfg, pumps=pumps, tolerance=tol)
    probes, _ = assign_probe_frequencies(modes, matches, couplings)
    cm = build_coupling_matrix(modes, probe_omegas=probes, couplings=couplings)
    gamma_ext = np.array([m.gamma_ext for m in modes])
    gamma_int = np.array([m.gamma_int for m in modes])
    try:
        ladder = scattering_matrices(cm, gamma_ext, gamma_int,
                                     allow_unstable=scfg.allow_unstable)
    except UnstablePumpError as exc:
        raise ConfigError(
            f"{exc}; set 'coupling: {{allow_unstable: true}}' to run the "
            f"network above threshold anyway") from exc
    export_db_table(ladder, os.path.join(out_dir, "scattering_matched.csv"),
                    reference=sec["reference"])
    files.append("scattering_matched.csv")

    gains_db = [20.0 * math.log10(max(np.abs(np.diagonal(s_mat)).max(), 1e-300))
                for _, s_mat in results]
    metrics = {
        "nominal_spacing_hz": nominal,
        "spacings_hz": [float(s) for s in spacings],
        "n_matches": [int(m) for m, _ in results],
        "max_reflection_gain_db": [float(g) for g in gains_db],
        "n_matches_nominal": int(results[nominal_idx][0]),
        "peak_gain_db": float(np.max(gains_db)),
    }
    return metrics, files


# ---------------------------------------------------------------------------
# Entry points


_RUNNERS = {
    "twomode": _run_twomode,
    "multimode": _run_multimode,
    "calibration": _run_calibration,
    "scattering": _run_scattering,
}


def run_scenario(config_path):
    """Execute the scenario described by a config file.

    Returns the RunReport on success; raises ConfigError for description
    problems and NumericalError when a fit or solve fails.
    """
    doc, digest = load_config(config_path)
    scfg = validate_config(doc, config_path=str(config_path), digest=digest)
    os.makedirs(scfg.output_dir, exist_ok=True)
    metrics, files = _RUNNERS[scfg.pipeline](scfg, scfg.output_dir)
    metrics = _jsonify(metrics)
    _check_finite(metrics)
    report = RunReport(
        pipeline=scfg.pipeline,
        config_path=str(config_path),
        config_digest=digest,
        output_dir=scfg.output_dir,
        files=sorted(files) + ["report.json"],
        metrics=metrics,
    )
    _write_json(os.path.join(scfg.output_dir, "report.json"), report.to_dict())
    for name in report.files:
        if not os.path.isfile(os.path.join(scfg.output_dir, name)):
            raise NumericalError(f"pipeline did not produce {name}")
    return report


# ---------------------------------------------------------------------------
# Ready-made demo scenarios


_DEMO_COMMON = """\
# Measurement chain: phase-insensitive amplification with calibrated
# uncertainties (sigma_gain_rel is the relative gain error).
amplifier:
  gain_db: 80.0
  added_photons: 12.0
  sigma_gain_rel: 0.01
  sigma_noise_photons: 0.1
"""

_DEMO_CONFIGS = {
    "twomode": """\
# Two-mode squeezing sweep: one pump at the pair's sum-frequency midpoint,
# probe detuned symmetrically, chopped on/off sampling.
pipeline: twomode
output_dir: out-twomode
seed: 11

system:
  mirror:
    freq_lc_hz: 8.0e9
    coupling_vac_hz: 1.588e6
  modes:
    - {index: 0, freq_hz: 3.8245e9, loss_ext_hz: 36.0e3, loss_int_hz: 4.0e3}
    - {index: 1, freq_hz: 3.8375e9, loss_ext_hz: 36.0e3, loss_int_hz: 4.0e3}

# One pump centered between the two modes; epsilon_hz pins the coupling
# strength directly instead of deriving it from the flux drive.
pumps:
  - {freq_hz: 3.8310e9, epsilon_hz: 15.0e3, theta_rad: 0.0}

environment:
  temp_k: 0.007

# Quiet preamplifier-backed chain: low added noise makes the squeezing
# dip visible in the single-mode-referenced ratio.
amplifier:
  gain_db: 40.0
  added_photons: 0.15
  sigma_gain_rel: 0.01
  sigma_noise_photons: 0.02

sampling:
  n_samples: 20000        # per chopped block
  interval_count: 10
  interval_seconds: 2.0
  drift_phase: false

twomode:
  pair: [0, 1]
  detuning_start_hz: -40.0e3
  detuning_stop_hz: 40.0e3
  detuning_count: 9
  chop_hz: 2.0
  histogram_detunings: [4]   # indices into the detuning sweep
  histogram_bin: 0.25
  histogram_span: 6.0
""",
    "multimode": """\
# Four-mode comb driven by four pumps, each matched to one mode pair.
# Every interval is sampled, de-embedded, reconstructed to the closest
# physical covariance and tested against all seven bipartitions.
pipeline: multimode
output_dir: out-multimode
seed: 7

system:
  mirror:
    freq_lc_hz: 8.0e9
    coupling_vac_hz: 1.588e6
  modes:
    - {index: 0, freq_hz: 3.8245e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}
    - {index: 1, freq_hz: 3.8375e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}
    - {index: 2, freq_hz: 3.8506e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}
    - {index: 3, freq_hz: 3.8638e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}

# Slightly uneven mode spacing separates the pair resonances, so each of
# the four pumps addresses exactly one pair: (0,1), (1,2), (2,3), (0,3).
pumps:
  - {freq_hz: 3.83100e9, epsilon_hz: 30.0e3}
  - {freq_hz: 3.84405e9, epsilon_hz: 30.0e3}
  - {freq_hz: 3.85720e9, epsilon_hz: 30.0e3}
  - {freq_hz: 3.84415e9, epsilon_hz: 30.0e3}

coupling:
  allow_unstable: true   # |eps| exceeds the pairwise threshold here

environment:
  temp_k: 0.007

""" + _DEMO_COMMON + """
sampling:
  n_samples: 100000
  interval_count: 75
  interval_seconds: 2.0
  drift_phase: false

multimode: {}
""",
    "calibration": """\
# Amplification-chain calibration on synthetic data: thermal-sweep power
# fit plus a two-mode correlation lineshape fit; results are persisted to
# calibration.json for the sampling pipelines.
pipeline: calibration
output_dir: out-calibration
seed: 3

system:
  mirror:
    freq_lc_hz: 8.0e9
    coupling_vac_hz: 1.588e6
  modes:
    - {index: 0, freq_hz: 3.8245e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}
    - {index: 1, freq_hz: 3.8375e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}

environment:
  temp_k: 0.007

calibration:
  planck:
    gain_db: 80.0          # ground truth for the synthetic sweep
    added_photons: 0.08
    freq_hz: 3.8245e9
    temp_start_k: 0.01
    temp_stop_k: 4.0
    temp_count: 20
    temp_spacing: geometric
    noise_rel: 0.01
  correlation:
    gain_db: 80.0
    eps_hz: 6.0e3
    pair: [0, 1]
    span_hz: 120.0e3
    count: 41
    noise_rel: 0.0
""",
    "scattering": """\
# Scattering response against pump comb spacing: the comb is rescaled
# about its center and the full |S| table recorded at each spacing.
pipeline: scattering
output_dir: out-scattering
seed: 1

system:
  mirror:
    freq_lc_hz: 8.0e9
    coupling_vac_hz: 1.588e6
  modes:
    - {index: 0, freq_hz: 3.8245e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}
    - {index: 1, freq_hz: 3.8375e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}
    - {index: 2, freq_hz: 3.8505e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}
    - {index: 3, freq_hz: 3.8635e9, loss_ext_hz: 20.0e3, loss_int_hz: 20.0e3}

pumps:
  - {freq_hz: 3.8310e9, epsilon_hz: 10.0e3}
  - {freq_hz: 3.8440e9, epsilon_hz: 10.0e3}
  - {freq_hz: 3.8570e9, epsilon_hz: 10.0e3}

scattering:
  spacing_start_hz: 12.94e6
  spacing_stop_hz: 13.06e6
  spacing_count: 25
  ref_out: 0
  ref_in: 0
""",
}


def write_demo_config(pipeline, directory="."):
    """Write the ready-made config for a pipeline; returns its path."""
    if pipeline not in _DEMO_CONFIGS:
        raise ConfigError(f"no demo scenario for pipeline {pipeline!r}; "
                          f"choose from {sorted(_DEMO_CONFIGS)}")
    path = os.path.join(directory, f"demo-{pipeline}.cfg")
    with open(path, "w") as fh:
        fh.write(_DEMO_CONFIGS[pipeline])
    return path


# ---------------------------------------------------------------------------
# Command line interface


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="modecomb",
        description="Pump-comb network simulation and entanglement analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config", help="path to the scenario YAML file")

    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config", help="path to the scenario YAML file")

    p_demo = sub.add_parser("demo", help="write a ready-made scenario config")
    p_demo.add_argument("pipeline", choices=sorted(_DEMO_CONFIGS),
                        help="which pipeline to demonstrate")
    p_demo.add_argument("--dir", default=".",
                        help="directory for the config file (default: .)")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            report = run_scenario(args.config)
            print(f"{report.pipeline}: wrote {len(report.files)} files "
                  f"to {report.output_dir}")
            return 0
        if args.command == "validate":
            doc, digest = load_config(args.config)
            scfg = validate_config(doc, config_path=args.config, digest=digest)
            print(f"ok: pipeline={scfg.pipeline} modes={len(scfg.system.modes)} "
                  f"pumps={len(scfg.pumps)} output_dir={scfg.output_dir}")
            return 0
        path = write_demo_config(args.pipeline, args.dir)
        print(f"wrote {path}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except ModecombError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
