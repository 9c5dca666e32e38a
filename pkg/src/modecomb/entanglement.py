"""Entanglement certification on Gaussian covariance matrices.

Two complementary criteria operating on 2N x 2N quadrature covariance
data (I1, Q1, I2, Q2, ... ordering, vacuum = identity):

* partial transposition: minimum eigenvalue of Lambda V Lambda + i Omega,
  negative iff the state is NPT across the transposed cut;
* a biquadratic witness E(h, g) built from second moments, whose negativity
  across every bipartition certifies genuine multipartite entanglement.

The witness optimum over (h, g) with ||h||^2 + ||g||^2 = 2 is found exactly
by an eigenvalue construction, after an optional passive rotation that
removes I-Q cross correlations from the measured frame.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .bases import symplectic_form
from .errors import (
    DimensionMismatchError,
    MissingFitCovarianceError,
    OptimizerFailureError,
    PhysicalityWarning,
    ZeroVarianceError,
)
from .gaussian_state import CovarianceMatrix, deamplify

# fraction of the in-block Frobenius norm that may remain in the I-Q cross
# block after decorrelation before the witness result is flagged
IQ_RESIDUAL_LIMIT = 0.05


@dataclass(frozen=True)
class Bipartition:
    """A two-set split of mode indices; part_a always holds mode 0."""

    part_a: tuple
    part_b: tuple
    n_modes: int

    def __post_init__(self):
        a, b = set(self.part_a), set(self.part_b)
        if not a or not b:
            raise ValueError("both parts of a bipartition must be non-empty")
        if a & b:
            raise ValueError("bipartition parts overlap")
        if a | b != set(range(self.n_modes)):
            raise ValueError("bipartition does not cover all modes")
        if 0 not in a:
            raise ValueError("canonical form requires mode 0 in part_a")
        object.__setattr__(self, "part_a", tuple(sorted(a)))
        object.__setattr__(self, "part_b", tuple(sorted(b)))

    @classmethod
    def from_set(cls, indices, n_modes):
        """Build the canonical bipartition whose one side is ``indices``."""
        chosen = set(int(i) for i in indices)
        rest = set(range(n_modes)) - chosen
        if 0 in chosen:
            return cls(tuple(sorted(chosen)), tuple(sorted(rest)), n_modes)
        return cls(tuple(sorted(rest)), tuple(sorted(chosen)), n_modes)

    @property
    def label(self):
        fmt = lambda part: "".join(str(i) for i in part)
        return f"{fmt(self.part_a)}|{fmt(self.part_b)}"

    def indicator(self, part):
        out = np.zeros(self.n_modes)
        out[list(part)] = 1.0
        return out


def all_bipartitions(n_modes):
    """All 2^(N-1) - 1 bipartitions in canonical order."""
    if n_modes < 2:
        raise ValueError("need at least two modes to bipartition")
    others = list(range(1, n_modes))
    parts = []
    # subsets of {1..N-1} joined to mode 0, excluding the full set
    for mask in range(2 ** len(others) - 1):
        side_a = [0] + [m for k, m in enumerate(others) if mask >> k & 1]
        parts.append(Bipartition.from_set(side_a, n_modes))
    parts.sort(key=lambda bp: (len(bp.part_a), bp.part_a))
    return parts


def ppt_min_eigenvalue(v: CovarianceMatrix, transpose_modes) -> float:
    """Minimum eigenvalue of Lambda V Lambda + i Omega.

    ``transpose_modes`` is either a Bipartition (part_b is transposed) or an
    iterable of mode indices.  Values below zero witness NPT entanglement;
    for a physical separable state the minimum stays >= 0.
    """
    if isinstance(transpose_modes, Bipartition):
        modes = transpose_modes.part_b
    else:
        modes = tuple(int(i) for i in transpose_modes)
    n = v.n_modes
    if any(m < 0 or m >= n for m in modes):
        raise DimensionMismatchError("transpose set references unknown modes")
    lam = np.ones(2 * n)
    for m in modes:
        lam[2 * m + 1] = -1.0  # momentum flip on the transposed modes
    vt = lam[:, None] * v.v * lam[None, :]
    h = vt.astype(complex) + 1j * symplectic_form(n)
    return float(np.linalg.eigvalsh(h)[0])


# ---------------------------------------------------------------------------
# Passive decorrelation of the I-Q sector


def _iq_objective(v, angles):
    c = np.cos(angles)
    s = np.sin(angles)
    # per-mode rotation acting on interleaved quadratures
    r = np.zeros((2 * len(angles), 2 * len(angles)))
    r[0::2, 0::2] = np.diag(c)
    r[0::2, 1::2] = np.diag(s)
    r[1::2, 0::2] = -np.diag(s)
    r[1::2, 1::2] = np.diag(c)
    w = r @ v @ r.T
    return float(np.sum(w[0::2, 1::2] ** 2)), w


def own_iq_angles(v: CovarianceMatrix) -> np.ndarray:
    """Per-mode angles zeroing each mode's own <IQ> covariance."""
    a = v.v[0::2, 0::2].diagonal()
    b = v.v[1::2, 1::2].diagonal()
    c = v.v[0::2, 1::2].diagonal()
    return 0.5 * np.arctan2(2.0 * c, a - b)


def decorrelate_iq(v: CovarianceMatrix):
    """Find per-mode rotation angles minimising the I-Q cross block.

    Zeroing each mode's own <IQ> moment pins its angle only modulo pi/2
    (and not at all for isotropic modes), so the remaining freedom is used
    to suppress inter-mode I-Q correlations as well.  Deterministic: a
    discrete scan over pi/2 shifts seeds a quasi-Newton polish.

    Returns (rotated CovarianceMatrix, angles, residual) where residual is
    ||IQ block|| / max(||II block||, ||QQ block||) after rotation.
    """
    n = v.n_modes
    base = own_iq_angles(v)

    candidates = [np.zeros(n), base]
    if n <= 6:
        # all pi/2 shifts of the own-zeroing solution stay own-decorrelated
        shifts = np.array([0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi])
        scored = []
        for combo in product(range(4), repeat=n):
            ang = base + shifts[list(combo)]
            scored.append((_iq_objective(v.v, ang)[0], ang))
        scored.sort(key=lambda t: t[0])
        candidates.extend(ang for _, ang in scored[:4])
    else:
        for k in range(8):
            candidates.append(base + k * np.pi / 8.0)

    best_f, best_ang = np.inf, base
    for start in candidates:
        res = minimize(
            lambda ang: _iq_objective(v.v, ang)[0],
            start,
            method="BFGS",
            options={"gtol": 1e-12, "maxiter": 400},
        )
        if res.fun < best_f:
            best_f, best_ang = float(res.fun), np.asarray(res.x)

    best_ang = np.mod(best_ang + np.pi, 2.0 * np.pi) - np.pi
    _, w = _iq_objective(v.v, best_ang)
    in_block = max(
        np.linalg.norm(w[0::2, 0::2]), np.linalg.norm(w[1::2, 1::2]), 1e-300
    )
    residual = float(np.linalg.norm(w[0::2, 1::2]) / in_block)
    return CovarianceMatrix(n, w), best_ang, residual


# ---------------------------------------------------------------------------
# Multipartite witness


@dataclass
class EntanglementReport:
    """Witness value and optimisers for one bipartition."""

    bipartition: Bipartition
    value: float
    h: np.ndarray
    g: np.ndarray
    angles: Optional[np.ndarray] = None
    iq_residual: Optional[float] = None
    sigma: Optional[float] = None
    flags: list = field(default_factory=list)

    @property
    def significance(self):
        if self.sigma is None or self.sigma == 0.0:
            return None
        return self.value / self.sigma

    def to_dict(self):
        out = {
            "bipartition": self.bipartition.label,
            "value": self.value,
            "h": [float(x) for x in self.h],
            "g": [float(x) for x in self.g],
            "flags": list(self.flags),
        }
        if self.angles is not None:
            out["angles"] = [float(x) for x in self.angles]
        if self.iq_residual is not None:
            out["iq_residual"] = float(self.iq_residual)
        if self.sigma is not None:
            out["sigma"] = float(self.sigma)
            out["significance"] = self.significance
        return out


def svl_value(v: CovarianceMatrix, bipartition: Bipartition, h, g) -> float:
    """Witness E(h, g) = h^T V_II h + g^T V_QQ g - 2|<h,g>_A| - 2|<h,g>_B|."""
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    if h.shape != (v.n_modes,) or g.shape != (v.n_modes,):
        raise DimensionMismatchError("h and g must each have one entry per mode")
    vii = v.v[0::2, 0::2]
    vqq = v.v[1::2, 1::2]
    ta = sum(h[i] * g[i] for i in bipartition.part_a)
    tb = sum(h[i] * g[i] for i in bipartition.part_b)
    return float(h @ vii @ h + g @ vqq @ g - 2.0 * abs(ta) - 2.0 * abs(tb))


def svl_test(
    v: CovarianceMatrix,
    bipartition: Bipartition,
    decorrelate: bool = True,
) -> EntanglementReport:
    """Global minimum of the witness over ||h||^2 + ||g||^2 = 2.

    Splitting by the signs (sA, sB) of the two partition overlaps turns the
    constrained problem into four symmetric eigenproblems

        Q(s) = [[V_II, -S], [-S, V_QQ]],   S = diag(sA on A, sB on B),

    whose smallest doubled eigenvalue over the four sign patterns is the
    exact optimum.  E < 0 certifies entanglement across the bipartition.
    """
    if bipartition.n_modes != v.n_modes:
        raise DimensionMismatchError("bipartition and covariance sizes differ")

    angles = None
    residual = None
    flags = []
    if decorrelate:
        v, angles, residual = decorrelate_iq(v)
        if residual > IQ_RESIDUAL_LIMIT:
            flags.append("iq_residual_above_limit")

    n = v.n_modes
    vii = v.v[0::2, 0::2]
    vqq = v.v[1::2, 1::2]
    pa = bipartition.indicator(bipartition.part_a)
    pb = bipartition.indicator(bipartition.part_b)

    best = None
    for sa, sb in product((1.0, -1.0), repeat=2):
        s = np.diag(sa * pa + sb * pb)
        q = np.block([[vii, -s], [-s, vqq]])
        w, vecs = np.linalg.eigh(q)
        if best is None or w[0] < best[0]:
            best = (w[0], vecs[:, 0])

    lam, vec = best
    x = np.sqrt(2.0) * vec  # ||h||^2 + ||g||^2 = 2
    h, g = x[:n], x[n:]
    value = svl_value(v, bipartition, h, g)
    # the evaluator re-derives the overlap signs, so it must agree exactly
    if abs(value - 2.0 * lam) > 1e-8 * (1.0 + abs(value)):
        raise OptimizerFailureError(
            "witness evaluator disagrees with eigenvalue optimum"
        )
    return EntanglementReport(
        bipartition=bipartition,
        value=value,
        h=h,
        g=g,
        angles=angles,
        iq_residual=residual,
        flags=flags,
    )


def all_bipartition_reports(v: CovarianceMatrix, decorrelate: bool = True):
    """Witness reports for every bipartition, in one common rotated frame."""
    angles = None
    residual = None
    if decorrelate:
        v, angles, residual = decorrelate_iq(v)
    reports = []
    for bp in all_bipartitions(v.n_modes):
        rep = svl_test(v, bp, decorrelate=False)
        rep.angles = angles
        rep.iq_residual = residual
        if residual is not None and residual > IQ_RESIDUAL_LIMIT:
            rep.flags.append("iq_residual_above_limit")
        reports.append(rep)
    return reports


# ---------------------------------------------------------------------------
# Error propagation through the amplification chain


def propagate_errors(v_meas: CovarianceMatrix, amp, sem=None) -> np.ndarray:
    """Per-element uncertainty of the de-embedded covariance.

    ``v_meas`` is the measured (amplified) covariance, ``amp`` the calibrated
    AmplifierModel carrying fit uncertainties, ``sem`` the statistical
    standard errors of the measured elements (same shape, amplified units).
    Four contributions per element: gain-fit leverage, added-noise fit
    (diagonal), de-embedded statistical error, and the gain/noise fit
    covariance cross term (diagonal); returned as a symmetric 2N x 2N array.
    """
    if amp.sigma_gain is None or amp.sigma_noise is None:
        raise MissingFitCovarianceError(
            "amplifier model carries no fit uncertainties"
        )
    n = v_meas.n_modes
    if amp.n_modes != n:
        raise DimensionMismatchError("amplifier and covariance mode counts differ")
    if sem is None:
        sem = np.zeros((2 * n, 2 * n))
    sem = np.asarray(sem, dtype=float)
    if sem.shape != (2 * n, 2 * n):
        raise DimensionMismatchError("sem must match the covariance shape")
    sem = 0.5 * (sem + sem.T)

    cov_gn = amp.cov_gain_noise
    if cov_gn is None:
        cov_gn = np.zeros(n)
    v_de = deamplify(v_meas, amp).v
    vm = v_meas.v

    var = np.zeros((2 * n, 2 * n))
    clamped = False
    for a in range(2 * n):
        for b in range(2 * n):
            i, j = a // 2, b // 2
            diag = 1.0 if a == b else 0.0
            gi, gj = amp.gain[i], amp.gain[j]
            term_a = (1.0 + diag) * (
                (vm[a, b] / (2.0 * np.sqrt(gi**3 * gj)) * amp.sigma_gain[i]) ** 2
                + (vm[a, b] / (2.0 * np.sqrt(gj**3 * gi)) * amp.sigma_gain[j]) ** 2
            ) + 2.0 * diag * (
                (2.0 * amp.added_photons[i] + 1.0) * amp.sigma_gain[i] / gi
            ) ** 2
            term_b = diag * (2.0 * amp.sigma_noise[i]) ** 2
            term_c = sem[a, b] ** 2 / (gi * gj)
            term_corr = (
                diag
                * 4.0
                * (v_de[a, a] - (2.0 * amp.added_photons[i] + 1.0))
                / gi
                * cov_gn[i]
            )
            total = term_a + term_b + term_c + term_corr
            if total < 0.0:
                clamped = True
                total = 0.0
            var[a, b] = total
    if clamped:
        warnings.warn(
            "negative propagated variance clamped to zero",
            PhysicalityWarning,
            stacklevel=2,
        )
    return np.sqrt(var)


def entanglement_sigma(sigma_matrix, h, g) -> float:
    """Uncertainty of the witness value from per-element sigmas.

    Linear propagation of E through its quadratic forms: the II block
    couples via h_i h_j, the QQ block via g_i g_j.
    """
    sigma_matrix = np.asarray(sigma_matrix, dtype=float)
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    n = h.size
    if sigma_matrix.shape != (2 * n, 2 * n) or g.size != n:
        raise DimensionMismatchError("sigma matrix does not match h and g")
    sii = sigma_matrix[0::2, 0::2]
    sqq = sigma_matrix[1::2, 1::2]
    hh = np.outer(h, h)
    gg = np.outer(g, g)
    return float(np.sqrt(np.sum(sii**2 * hh**2) + np.sum(sqq**2 * gg**2)))


def significance(values: Sequence[float], sigmas: Sequence[float]) -> float:
    """Inverse-variance weighted significance of repeated witness values.

    Returns weighted mean / weighted standard error; more negative means a
    stronger violation.  Two intervals with equal (E, sigma) give sqrt(2)
    times the single-interval ratio.
    """
    values = np.asarray(values, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    if values.size == 0 or values.shape != sigmas.shape:
        raise DimensionMismatchError("values and sigmas must match and be non-empty")
    if np.any(sigmas <= 0.0):
        raise ZeroVarianceError("all witness sigmas must be positive")
    weights = 1.0 / sigmas**2
    return float(np.sum(values * weights) / np.sqrt(np.sum(weights)))
