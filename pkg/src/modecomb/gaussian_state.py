"""Gaussian states, the amplification chain, and quadrature statistics.

Covariance matrices use the interleaved quadrature basis (I_1, Q_1, ...) with
I = b + b^dag, so the vacuum covariance is the identity and a thermal mode has
variance 2 n_bar + 1. Physicality means V + i Omega >= 0, which also implies
V >= 0 for real symmetric V.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar as _HBAR
from scipy.constants import k as _KB

from .bases import min_physicality_eigenvalue, mode_rotation
from .errors import (
    DimensionMismatchError,
    EmptySamplesError,
    GainBelowUnityError,
    NotPSDError,
    ZeroVarianceError,
)

SYMMETRY_RTOL = 1e-12


def bose_occupation(omega, temperature):
    """Mean thermal occupation of a mode at angular frequency omega (rad/s)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if temperature == 0:
        return np.zeros_like(omega)
    x = _HBAR * omega / (_KB * temperature)
    return 1.0 / np.expm1(x)


@dataclass
class CovarianceMatrix:
    """Real symmetric quadrature covariance matrix, interleaved basis."""

    n_modes: int
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if v.shape != (2 * self.n_modes, 2 * self.n_modes):
            raise DimensionMismatchError(
                f"covariance must be {2 * self.n_modes} x {2 * self.n_modes}, got {v.shape}"
            )
        scale = max(1.0, float(np.max(np.abs(v))) if v.size else 1.0)
        if np.max(np.abs(v - v.T)) > SYMMETRY_RTOL * scale:
            raise DimensionMismatchError("covariance matrix is not symmetric")
        self.v = (v + v.T) / 2.0

    @classmethod
    def vacuum(cls, n_modes):
        return cls(n_modes, np.eye(2 * n_modes))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.v)[0])

    def min_physicality_eigenvalue(self):
        """Smallest eigenvalue of V + i Omega."""
        return min_physicality_eigenvalue(self.v)

    def is_positive(self, tol=1e-10):
        return self.min_eigenvalue() >= -tol

    def is_physical(self, tol=1e-9):
        return self.min_physicality_eigenvalue() >= -tol

    def submatrix(self, mode_positions):
        """Covariance of a subset of modes, keeping the given order."""
        idx = []
        for p in mode_positions:
            if not 0 <= p < self.n_modes:
                raise DimensionMismatchError(f"mode position {p} out of range")
            idx += [2 * p, 2 * p + 1]
        return CovarianceMatrix(len(mode_positions), self.v[np.ix_(idx, idx)])

    def rotate(self, angles):
        """Apply per-mode quadrature rotations (drift compensation, decorrelation)."""
        r = mode_rotation(angles)
        if r.shape != self.v.shape:
            raise DimensionMismatchError("need one rotation angle per mode")
        return CovarianceMatrix(self.n_modes, r @ self.v @ r.T)

    def to_csv(self, path):
        labels = []
        for j in range(self.n_modes):
            labels += [f"I{j}", f"Q{j}"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row"] + labels)
            for i, lab in enumerate(labels):
                writer.writerow([lab] + [repr(float(x)) for x in self.v[i]])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        data = np.array([[float(x) for x in row[1:]] for row in rows[1:]])
        if data.shape[0] % 2:
            raise DimensionMismatchError("covariance CSV must have an even dimension")
        return cls(data.shape[0] // 2, data)


def thermal_covariance(modes, temperature):
    """Thermal state of uncoupled modes: V = diag(2 n_bar_j + 1).

    ``modes`` may be ModeSpec objects or angular frequencies (rad/s).
    Temperature 0 returns the vacuum.
    """
    omegas = np.array([getattr(m, "omega", m) for m in modes], dtype=float)
    n_bar = bose_occupation(omegas, temperature)
    diag = np.repeat(2.0 * n_bar + 1.0, 2)
    return CovarianceMatrix(len(omegas), np.diag(diag))


def two_mode_squeezed_covariance(r, phase=0.0):
    """Ideal two-mode squeezed vacuum with squeezing parameter r.

    At phase 0 the cross block is diag(sinh 2r, -sinh 2r), i.e. I quadratures
    correlated, Q quadratures anticorrelated.
    """
    c, s = np.cosh(2.0 * r), np.sinh(2.0 * r)
    cp, sp = np.cos(2.0 * phase), np.sin(2.0 * phase)
    cross = s * np.array([[cp, sp], [sp, -cp]])
    v = np.eye(4) * c
    v[:2, 2:] = cross
    v[2:, :2] = cross.T
    return CovarianceMatrix(2, v)


def output_covariance(pair, v_in, v_loss=None):
    """Propagate input and loss-port covariances through a scattering pair.

    ``pair`` must already be in the quadrature basis; ``v_loss`` defaults to
    ``v_in`` (both ports thermalized identically).
    """
    if pair.basis != "quadrature":
        raise DimensionMismatchError(
            "scattering pair must be converted with to_quadrature() first"
        )
    if v_loss is None:
        v_loss = v_in
    if v_in.n_modes != pair.n_modes or v_loss.n_modes != pair.n_modes:
        raise DimensionMismatchError("covariance and scattering mode counts differ")
    v = pair.s @ v_in.v @ pair.s.T + pair.s_loss @ v_loss.v @ pair.s_loss.T
    return CovarianceMatrix(pair.n_modes, v)


@dataclass
class AmplifierModel:
    """Phase-insensitive amplification chain, one gain per mode.

    The measured covariance is T V T + N with T = diag(sqrt(G_i)) per
    quadrature and N = diag((G_i - 1)(2 n_i + 1) + (G_Ii - 1)(2 n_Ii + 1)).
    Fit uncertainties ride along for error propagation.
    """

    n_modes: int
    gain: np.ndarray
    added_photons: np.ndarray
    idler_gain: np.ndarray = None
    idler_photons: np.ndarray = None
    sigma_gain: np.ndarray = None
    sigma_noise: np.ndarray = None
    cov_gain_noise: np.ndarray = None

    def __post_init__(self):
        n = self.n_modes
        self.gain = np.asarray(self.gain, dtype=float)
        self.added_photons = np.asarray(self.added_photons, dtype=float)
        if self.idler_gain is None:
            self.idler_gain = np.ones(n)
        if self.idler_photons is None:
            self.idler_photons = np.zeros(n)
        # fit uncertainties may legitimately be absent (None); keep the marker
        names = ["gain", "added_photons", "idler_gain", "idler_photons"]
        names += [
            name
            for name in ("sigma_gain", "sigma_noise", "cov_gain_noise")
            if getattr(self, name) is not None
        ]
        for name in names:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise DimensionMismatchError(f"{name} must have shape ({n},)")
            setattr(self, name, arr)
        if np.any(self.gain < 1.0) or np.any(self.idler_gain < 1.0):
            raise GainBelowUnityError("power gains below unity are not supported")
        if np.any(self.added_photons < 0) or np.any(self.idler_photons < 0):
            raise ValueError("added photon numbers must be non-negative")
        if self.sigma_gain is not None and np.any(self.sigma_gain < 0):
            raise ValueError("fit standard errors must be non-negative")
        if self.sigma_noise is not None and np.any(self.sigma_noise < 0):
            raise ValueError("fit standard errors must be non-negative")
        if self.has_fit_uncertainties():
            # per-mode 2x2 fit covariance [[sG^2, c], [c, sn^2]] must stay PSD
            bad = np.abs(self.cov_gain_noise) > self.sigma_gain * self.sigma_noise + 1e-300
            if np.any(bad):
                raise ValueError("cov_gain_noise exceeds sigma_gain * sigma_noise")

    def has_fit_uncertainties(self):
        return (
            self.sigma_gain is not None
            and self.sigma_noise is not None
            and self.cov_gain_noise is not None
        )

    @classmethod
    def uniform(cls, n_modes, gain, added_photons, **kwargs):
        arrays = {
            key: np.full(n_modes, float(val))
            for key, val in kwargs.items()
            if val is not None
        }
        return cls(
            n_modes,
            np.full(n_modes, float(gain)),
            np.full(n_modes, float(added_photons)),
            **arrays,
        )

    def t_diagonal(self):
        return np.repeat(np.sqrt(self.gain), 2)

    def n_diagonal(self):
        per_mode = (self.gain - 1.0) * (2.0 * self.added_photons + 1.0) + (
            self.idler_gain - 1.0
        ) * (2.0 * self.idler_photons + 1.0)
        return np.repeat(per_mode, 2)


def amplify(v, amp):
    """Measured-domain covariance T V T + N."""
    if v.n_modes != amp.n_modes:
        raise DimensionMismatchError("amplifier and covariance mode counts differ")
    t = amp.t_diagonal()
    return CovarianceMatrix(v.n_modes, t[:, None] * v.v * t[None, :] + np.diag(amp.n_diagonal()))


def deamplify(v, amp):
    """Exact algebraic inverse of amplify."""
    if v.n_modes != amp.n_modes:
        raise DimensionMismatchError("amplifier and covariance mode counts differ")
    t = amp.t_diagonal()
    return CovarianceMatrix(v.n_modes, (v.v - np.diag(amp.n_diagonal())) / t[:, None] / t[None, :])


def correlation_quantity(v):
    """Root-sum-square of the four cross-mode covariance elements (two modes).

    For an ideal two-mode squeezed state this equals sqrt(2) sinh(2r), and it
    is invariant under local quadrature rotations, so it identifies r
    independently of the squeezing axis.
    """
    if v.n_modes != 2:
        raise DimensionMismatchError("correlation quantity is defined for mode pairs")
    cross = v.v[:2, 2:]
    return float(np.sqrt(np.sum(cross**2)))


@dataclass
class QuadratureSamples:
    """Rows of simulated quadrature records, interleaved columns."""

    n_modes: int
    data: np.ndarray
    pump_state: str = "on"
    seed: int = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] != 2 * self.n_modes:
            raise DimensionMismatchError("samples must have 2 N columns")
        if self.pump_state not in ("on", "off"):
            raise ValueError("pump_state must be 'on' or 'off'")

    @property
    def n_samples(self):
        return self.data.shape[0]

    def covariance(self):
        if self.n_samples < 2:
            raise EmptySamplesError("need at least two samples for a covariance")
        return CovarianceMatrix(self.n_modes, np.cov(self.data, rowvar=False, ddof=1))

    def covariance_with_sem(self):
        """Sample covariance and the per-element standard error.

        Gaussian moment formula: Var(V_ij) ~= (V_ii V_jj + V_ij^2) / (n - 1).
        """
        cm = self.covariance()
        d = np.diag(cm.v)
        sem = np.sqrt((np.outer(d, d) + cm.v**2) / (self.n_samples - 1.0))
        return cm, sem

    def rotate(self, angles):
        r = mode_rotation(angles)
        return QuadratureSamples(self.n_modes, self.data @ r.T, self.pump_state, self.seed)

    def to_csv(self, path):
        labels = []
        for j in range(self.n_modes):
            labels += [f"I{j}", f"Q{j}"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(labels)
            for row in self.data:
                writer.writerow([repr(float(x)) for x in row])


def sample(v, n_samples, seed, pump_state="on"):
    """Draw multivariate-normal quadrature records from a covariance matrix.

    Uses the symmetric eigendecomposition square root; eigenvalues in
    (-1e-10, 0) are clipped to zero, anything lower raises NotPSDError.
    Identical seeds give identical samples.
    """
    if n_samples <= 0:
        raise EmptySamplesError("n_samples must be positive")
    evals, evecs = np.linalg.eigh(v.v)
    if evals[0] < -1e-10:
        raise NotPSDError(f"covariance eigenvalue {evals[0]:.3e} below -1e-10")
    root = evecs @ np.diag(np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((int(n_samples), 2 * v.n_modes)) @ root
    return QuadratureSamples(v.n_modes, data, pump_state, None if seed is None else seed)


def drift_compensation_angle(source, pair):
    """Common rotation angle maximizing the <I_j I_k> correlation of a pair.

    The rotated correlator is harmonic in 2 alpha, so the maximizer is
    alpha = atan2(b, a) / 2 with a = <I_j I_k> - <Q_j Q_k> and
    b = <I_j Q_k> + <Q_j I_k>.
    """
    v = source.covariance().v if isinstance(source, QuadratureSamples) else source.v
    j, k = pair
    a = v[2 * j, 2 * k] - v[2 * j + 1, 2 * k + 1]
    b = v[2 * j, 2 * k + 1] + v[2 * j + 1, 2 * k]
    return 0.5 * np.arctan2(b, a)


def squeezing_stats(on, off, pair, rotate=True, off_reference="single_mode"):
    """Squeezing ratios of a mode pair from pump-on and pump-off samples.

    R_e is the ratio of the larger to the smaller standard deviation of the
    two combinations I_j +- I_k (pump on). R_p compares the squeezed
    combination against the pump-off reference:

    * ``single_mode``: reference is the rms single-mode pump-off amplitude,
      so an ideal two-mode squeezed state over vacuum gives sqrt(2) e^-r;
    * ``difference``: reference is the same +- combination evaluated on the
      pump-off samples, so identical on/off data gives exactly 1.

    When ``rotate`` is set, the drift-compensation rotation that maximizes
    the pump-on <I_j I_k> correlator is applied to both data sets first.
    """
    if on.n_samples == 0 or off.n_samples == 0:
        raise EmptySamplesError("need pump-on and pump-off samples")
    if off_reference not in ("single_mode", "difference"):
        raise ValueError("off_reference must be 'single_mode' or 'difference'")
    j, k = pair
    if rotate:
        angles = np.zeros(on.n_modes)
        alpha = drift_compensation_angle(on, pair)
        angles[j] = alpha
        angles[k] = alpha
        on = on.rotate(angles)
        off = off.rotate(angles)
    i_on_j, i_on_k = on.data[:, 2 * j], on.data[:, 2 * k]
    i_off_j, i_off_k = off.data[:, 2 * j], off.data[:, 2 * k]
    combos_on = np.var([i_on_j + i_on_k, i_on_j - i_on_k], axis=1, ddof=1)
    low = int(np.argmin(combos_on))
    if combos_on[low] <= 0:
        raise ZeroVarianceError("squeezed combination has zero sample variance")
    r_e = float(np.sqrt(combos_on.max() / combos_on[low]))
    if off_reference == "single_mode":
        ref = (np.var(i_off_j, ddof=1) + np.var(i_off_k, ddof=1)) / 2.0
    else:
        combos_off = np.var([i_off_j + i_off_k, i_off_j - i_off_k], axis=1, ddof=1)
        ref = combos_off[low]
    if ref <= 0:
        raise ZeroVarianceError("pump-off reference has zero variance")
    r_p = float(np.sqrt(combos_on[low] / ref))
    return r_e, r_p


def histogram2d_subtracted(on, off, pair, bin_width=0.25, span=6.0):
    """Binned pump-on, pump-off, and subtracted counts for a mode pair.

    Returns a dict keyed by axis pair label ("I+I-", "Q+Q-", "I+Q-") with
    (edges, counts_on, counts_off) entries; the subtraction is counts_on -
    counts_off per bin. ``span`` is the half range, bins are uniform.
    """
    j, k = pair
    n_bins = max(1, int(round(2.0 * span / bin_width)))
    edges = np.linspace(-span, span, n_bins + 1)
    axes = {
        "I+I-": (2 * j, 2 * k),
        "Q+Q-": (2 * j + 1, 2 * k + 1),
        "I+Q-": (2 * j, 2 * k + 1),
    }
    out = {}
    for label, (a, b) in axes.items():
        h_on, _, _ = np.histogram2d(on.data[:, a], on.data[:, b], bins=[edges, edges])
        h_off, _, _ = np.histogram2d(off.data[:, a], off.data[:, b], bins=[edges, edges])
        out[label] = (edges, h_on, h_off)
    return out
