"""Measurement-chain calibration: gain, added noise, and their uncertainties.

Three independent handles on the chain calibration, in the order they are
usually taken:

* Planck thermometry: output power of a matched load swept in temperature
  fits the chain power gain and the system noise in one pass.
* Pumped cross-correlations: the vacuum two-mode correlation amplitude
  C(delta) has a known lineshape; its amplified magnitude fits (G, eps).
* Pump-off covariance: with the pump off the resonator emits pure thermal
  noise, pinning the amplifier added-photon number given the gain.

A calibrated AmplifierModel then de-embeds measured covariances, and a
temperature sweep of the partial-transposition eigenvalue locates the
separability crossing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.constants import hbar as _HBAR
from scipy.constants import k as _KB
from scipy.optimize import brentq, curve_fit

from .coupling_graph import build_coupling_matrix
from .errors import (
    DimensionMismatchError,
    FitDivergedError,
    InsufficientDataError,
    MissingFitCovarianceError,
    NegativeNoiseError,
)
from .gaussian_state import (
    AmplifierModel,
    CovarianceMatrix,
    amplify,
    bose_occupation,
    correlation_quantity,
    deamplify,
    output_covariance,
    thermal_covariance,
)
from .modesys import ModeSpec
from .scattering import scattering_matrices


# ---------------------------------------------------------------------------
# Planck thermometry


@dataclass
class PlanckFitResult:
    """Planck-spectroscopy fit: chain gain, added photons, fit covariance."""

    gain: float
    added_photons: float
    sigma_gain: float
    sigma_noise: float
    cov_gain_noise: float
    residuals: np.ndarray

    def amplifier(self, n_modes):
        return AmplifierModel.uniform(
            n_modes,
            self.gain,
            self.added_photons,
            sigma_gain=self.sigma_gain,
            sigma_noise=self.sigma_noise,
            cov_gain_noise=self.cov_gain_noise,
        )


@dataclass
class CorrelationFitResult:
    """Correlation-lineshape fit: chain gain, pair coupling, fit covariance."""

    gain: float
    eps: float
    sigma_gain: float
    sigma_eps: float
    cov_gain_eps: float
    residuals: np.ndarray


def planck_power(temperature, gain, added_photons, frequency, bandwidth=1.0):
    """Chain output power of a matched thermal load at ``temperature``.

    P = G h f B [ coth(h f / 2 kB T) / 2 + (2 n + 1) / 2 ],

    symmetrized-quadrature convention: the load contributes (2 n_th + 1)/2
    photons-per-mode-equivalents and the chain adds (2 n + 1)/2 on top.
    The T -> 0 intercept is G h f B (1 + (2 n + 1)) / 2 and the high-T slope
    is G kB B, which is what makes the pair (G, n) identifiable.
    """
    scalar = np.isscalar(temperature)
    temperature = np.atleast_1d(np.asarray(temperature, dtype=float))
    hf = _HBAR * 2.0 * np.pi * frequency
    # coth(hf / 2 kB T), safely 1 at T = 0 where the ratio diverges
    ratio = np.full(temperature.shape, np.inf)
    np.divide(hf, 2.0 * _KB * temperature, out=ratio, where=temperature > 0.0)
    coth = 1.0 / np.tanh(ratio)
    power = gain * hf * bandwidth * 0.5 * (coth + (2.0 * added_photons + 1.0))
    return float(power[0]) if scalar else power


def planck_fit(
    temperatures, powers, frequency, bandwidth=1.0, p0=None, sigma=None, absolute_sigma=False
):
    """Fit (gain, added photons) to a power-vs-temperature sweep.

    Returns (gain, added_photons, sigma_gain, sigma_noise, cov_gain_noise).
    Uncertainties come from the fit covariance; the model is linear in
    (G, G(2n+1)) so the Levenberg-Marquardt loop converges from crude
    starting values.  For multiplicative power noise pass per-point
    ``sigma`` (same shape as ``powers``) so the low-temperature points keep
    their full leverage on the added-noise intercept.
    """
    temperatures = np.asarray(temperatures, dtype=float)
    powers = np.asarray(powers, dtype=float)
    if temperatures.shape != powers.shape or temperatures.ndim != 1:
        raise DimensionMismatchError("temperatures and powers must be matching 1-d arrays")
    if temperatures.size < 3:
        raise InsufficientDataError("need at least three sweep points to fit two parameters")

    hf = _HBAR * 2.0 * np.pi * frequency
    if p0 is None:
        # slope -> G kB B; intercept -> G hf B (2 + 2n) / 2
        slope, intercept = np.polyfit(temperatures, powers, 1)
        g0 = max(slope / (_KB * bandwidth), 1.0)
        n0 = max(intercept / (g0 * hf * bandwidth) - 1.0, 0.0)
        p0 = (g0, n0)

    def model(t, gain, noise):
        return planck_power(t, gain, noise, frequency, bandwidth)

    try:
        popt, pcov = curve_fit(
            model,
            temperatures,
            powers,
            p0=p0,
            sigma=sigma,
            absolute_sigma=absolute_sigma,
            maxfev=20000,
        )
    except RuntimeError as exc:
        raise FitDivergedError(f"Planck fit did not converge: {exc}") from exc
    if not np.all(np.isfinite(pcov)):
        raise MissingFitCovarianceError(
            "Planck fit covariance is singular; sweep does not constrain both parameters"
        )
    gain, noise = popt
    sig = np.sqrt(np.diag(pcov))
    residuals = powers - model(temperatures, gain, noise)
    return PlanckFitResult(
        gain=float(gain),
        added_photons=float(noise),
        sigma_gain=float(sig[0]),
        sigma_noise=float(sig[1]),
        cov_gain_noise=float(pcov[0, 1]),
        residuals=residuals,
    )


# ---------------------------------------------------------------------------
# Pumped-correlation lineshape


def c_lineshape(deltas, gain, eps, modes, temperature):
    """Amplified two-mode correlation amplitude C versus probe detuning.

    Full forward model: thermal input at ``temperature`` on both the signal
    and internal-loss ports, one pump coupling the pair, amplification by
    ``gain`` on both modes, then the cross-block correlation quantity.
    Probing the pair symmetrically at +-delta from the (shifted) resonances
    keeps the pump frame consistent: Delta_1 = delta + i g1/2 and
    Delta_2 = -delta + i g2/2.
    """
    deltas = np.asarray(deltas, dtype=float)
    if len(modes) != 2:
        raise DimensionMismatchError("the correlation lineshape is a two-mode model")
    out = np.empty(deltas.shape, dtype=float)
    omegas = np.array([m.omega for m in modes])
    gamma_ext = np.array([m.gamma_ext for m in modes])
    gamma_int = np.array([m.gamma_int for m in modes])
    v_th = thermal_covariance(modes, temperature)
    amp = AmplifierModel.uniform(2, max(gain, 1.0), 0.0)
    shift = 2.0 * abs(eps)
    for i, d in enumerate(deltas.ravel()):
        probe = omegas - shift + np.array([d, -d])
        cm = build_coupling_matrix(modes, probe_omegas=probe, couplings={(0, 1): eps})
        pair = scattering_matrices(cm, gamma_ext, gamma_int).to_quadrature()
        v = output_covariance(pair, v_th, v_loss=v_th)
        # the amplifier's added noise is diagonal, so it drops out of C
        out.ravel()[i] = correlation_quantity(amplify(v, amp))
    return out


def fit_gain_from_correlations(deltas, c_measured, modes, temperature, p0=None):
    """Fit (gain, eps) to a measured correlation lineshape.

    ``temperature`` is the assumed effective input temperature; it is held
    fixed, not fitted.  ``eps`` is bounded below the parametric instability
    at sqrt(gamma_tot_1 gamma_tot_2) / 2.
    """
    deltas = np.asarray(deltas, dtype=float)
    c_measured = np.asarray(c_measured, dtype=float)
    if deltas.shape != c_measured.shape or deltas.ndim != 1:
        raise DimensionMismatchError("deltas and c_measured must be matching 1-d arrays")
    if deltas.size < 3:
        raise InsufficientDataError("need at least three detuning points")

    eps_max = 0.999 * np.sqrt(modes[0].gamma_tot * modes[1].gamma_tot) / 2.0

    def model(d, gain, eps):
        return c_lineshape(d, gain, eps, modes, temperature)

    if p0 is None:
        # scale start: peak height against a mid-range eps at unit gain
        e0 = 0.5 * eps_max
        c0 = c_lineshape(np.zeros(1), 1.0, e0, modes, temperature)[0]
        g0 = max(float(np.max(c_measured)) / c0, 1.0)
        p0 = (g0, e0)

    try:
        popt, pcov = curve_fit(
            model,
            deltas,
            c_measured,
            p0=p0,
            bounds=([1.0, 0.0], [np.inf, eps_max]),
            maxfev=20000,
        )
    except RuntimeError as exc:
        raise FitDivergedError(f"correlation-lineshape fit did not converge: {exc}") from exc
    if not np.all(np.isfinite(pcov)):
        raise MissingFitCovarianceError("correlation fit covariance is singular")
    gain, eps = popt
    sig = np.sqrt(np.diag(pcov))
    return CorrelationFitResult(
        gain=float(gain),
        eps=float(eps),
        sigma_gain=float(sig[0]),
        sigma_eps=float(sig[1]),
        cov_gain_eps=float(pcov[0, 1]),
        residuals=c_measured - model(deltas, gain, eps),
    )


# ---------------------------------------------------------------------------
# Pump-off added noise


def added_noise_from_pump_off(v_off, gain, modes, temperature):
    """Amplifier added photons from a pump-off covariance measurement.

    With the pump off the de-embedded state is thermal at the fridge
    temperature, so each measured diagonal reads
    V_meas_ii = G (2 n_th + 1) + (G - 1)(2 n + 1); solve for n and average
    across quadratures.  Raises NegativeNoiseError when the inversion lands
    below zero, which indicates an inconsistent gain or temperature.
    """
    v = v_off.v if isinstance(v_off, CovarianceMatrix) else np.asarray(v_off, float)
    n_modes = v.shape[0] // 2
    if len(modes) != n_modes:
        raise DimensionMismatchError("mode list does not match the covariance size")
    if gain <= 1.0:
        raise ValueError("chain gain must exceed unity to solve for added noise")
    omegas = [m.omega if isinstance(m, ModeSpec) else float(m) for m in modes]
    est = []
    for j, omega in enumerate(omegas):
        therm = 2.0 * bose_occupation(omega, temperature) + 1.0
        for q in (2 * j, 2 * j + 1):
            est.append(((v[q, q] - gain * therm) / (gain - 1.0) - 1.0) / 2.0)
    n = float(np.mean(est))
    if n < 0.0:
        raise NegativeNoiseError(
            f"pump-off inversion gives negative added noise ({n:.3g}); "
            "gain or temperature calibration is inconsistent"
        )
    return n


# ---------------------------------------------------------------------------
# Temperature sweep of the two-mode entanglement


def ppt_temperature_sweep(v_meas_on, v_off, deltas, c_measured, modes, temperatures):
    """Partial-transposition eigenvalue versus assumed input temperature.

    At each temperature T the chain calibration is redone under that
    assumption: (G, eps) refit to the measured correlation lineshape
    ``(deltas, c_measured)``, the added noise re-derived from the pump-off
    covariance ``v_off``, the pump-on covariance de-embedded, and the
    minimum PPT eigenvalue recorded.  Hotter assumed inputs explain the
    same data with less gain, so the de-embedded state grows noisier and
    the eigenvalue rises.

    Returns (lambdas, crossing) where ``crossing`` is the temperature at
    which the eigenvalue changes sign (None when it never does).
    """
    v_on = (
        v_meas_on if isinstance(v_meas_on, CovarianceMatrix) else CovarianceMatrix(
            np.asarray(v_meas_on, float).shape[0] // 2, np.asarray(v_meas_on, float)
        )
    )
    if v_on.n_modes != 2:
        raise DimensionMismatchError("the sweep is defined for two-mode states")
    temperatures = np.asarray(temperatures, dtype=float)
    if temperatures.size < 2:
        raise InsufficientDataError("need at least two sweep temperatures")
    if np.any(np.diff(temperatures) <= 0.0):
        raise ValueError("sweep temperatures must be strictly increasing")

    from .entanglement import ppt_min_eigenvalue  # local import avoids a cycle

    warm = {"p0": None}

    def lam_at(t):
        fit = fit_gain_from_correlations(
            deltas, c_measured, modes, t, p0=warm["p0"]
        )
        warm["p0"] = (fit.gain, fit.eps)
        added = added_noise_from_pump_off(v_off, fit.gain, modes, t)
        amp = AmplifierModel.uniform(2, fit.gain, added)
        return ppt_min_eigenvalue(deamplify(v_on, amp), [1])

    lambdas = np.array([lam_at(t) for t in temperatures])

    crossing = None
    flips = np.nonzero(np.diff(np.sign(lambdas)))[0]
    if flips.size:
        i = int(flips[0])
        crossing = float(brentq(lam_at, temperatures[i], temperatures[i + 1], xtol=1e-7))
    return lambdas, crossing


# ---------------------------------------------------------------------------
# Persistence


@dataclass
class CalibrationStore:
    """Serializable bundle of chain-calibration results."""

    gain: float
    added_photons: float
    sigma_gain: float = 0.0
    sigma_noise: float = 0.0
    cov_gain_noise: float = 0.0
    eps: Optional[float] = None
    sigma_eps: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def amplifier(self, n_modes):
        return AmplifierModel.uniform(
            n_modes,
            self.gain,
            self.added_photons,
            sigma_gain=self.sigma_gain,
            sigma_noise=self.sigma_noise,
            cov_gain_noise=self.cov_gain_noise,
        )

    def to_json(self, path):
        payload = {
            "gain": self.gain,
            "added_photons": self.added_photons,
            "sigma_gain": self.sigma_gain,
            "sigma_noise": self.sigma_noise,
            "cov_gain_noise": self.cov_gain_noise,
            "eps": self.eps,
            "sigma_eps": self.sigma_eps,
            "meta": self.meta,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            payload = json.load(fh)
        return cls(**payload)
