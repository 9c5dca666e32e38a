"""Input-output scattering from the mode-coupling matrix.

With M the coupling matrix and K, K_int the port coupling matrices
(sqrt of loss rates, duplicated over both ladder blocks),

    S      = i K M^-1 K      - 1        (measured port in -> out)
    S_loss = i K M^-1 K_int             (internal loss port -> out)

satisfy S J S^dag + S_loss J S_loss^dag = J with J = diag(1_N, -1_N); this
holds for any invertible M of the Bogoliubov form, so output states computed
from these matrices are automatically physical.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .bases import quadrature_transform
from .errors import (
    DimensionMismatchError,
    SingularMatrixError,
    UnstablePumpError,
)

# relative singular-value cutoff below which M is treated as singular
SINGULARITY_RTOL = 1e-12


@dataclass
class ScatteringPair:
    """Scattering matrix and its loss-port companion in a common basis."""

    s: np.ndarray
    s_loss: np.ndarray
    n_modes: int
    basis: str = "ladder"

    def to_quadrature(self, imag_tol=1e-9):
        """Return the pair transformed to the interleaved quadrature basis."""
        if self.basis == "quadrature":
            return self
        return ScatteringPair(
            quadrature_transform(self.s, imag_tol),
            quadrature_transform(self.s_loss, imag_tol),
            self.n_modes,
            "quadrature",
        )


def scattering_matrices(cm, gamma_ext, gamma_int, allow_unstable=False):
    """Build (S, S_loss) in the ladder basis from a coupling matrix.

    Parameters
    ----------
    cm : CouplingMatrix
    gamma_ext, gamma_int : array-like
        Angular loss rates per mode (rad/s). Must be consistent with the
        linewidths baked into the coupling-matrix diagonal.
    allow_unstable : bool
        By default any matched pair with |eps_jk| >= sqrt(g_j g_k)/2 (the
        divergence threshold of the isolated-pair gain) is refused. Pass
        True to study operation beyond threshold; the algebraic identities
        still hold wherever M is invertible.
    """
    n = cm.n_modes
    gamma_ext = np.asarray(gamma_ext, dtype=float)
    gamma_int = np.asarray(gamma_int, dtype=float)
    if gamma_ext.shape != (n,) or gamma_int.shape != (n,):
        raise DimensionMismatchError("loss arrays must have one entry per mode")
    if np.any(gamma_ext < 0) or np.any(gamma_int < 0):
        raise ValueError("loss rates must be non-negative")
    gamma_tot = gamma_ext + gamma_int
    diag_imag = np.imag(cm.probe_detunings)
    if np.any(np.abs(diag_imag - gamma_tot / 2.0) > 1e-6 * np.maximum(gamma_tot, 1.0)):
        raise DimensionMismatchError(
            "loss rates disagree with the coupling-matrix linewidths"
        )

    if not allow_unstable:
        for (j, k), eps in cm.couplings.items():
            threshold = np.sqrt(gamma_tot[j] * gamma_tot[k]) / 2.0
            if abs(eps) >= threshold:
                raise UnstablePumpError(
                    f"|eps| = {abs(eps):.4e} rad/s on pair ({j}, {k}) reaches the "
                    f"instability threshold {threshold:.4e} rad/s; pass "
                    "allow_unstable=True to evaluate anyway"
                )

    sv = np.linalg.svd(cm.m, compute_uv=False)
    if sv[-1] <= SINGULARITY_RTOL * sv[0]:
        raise SingularMatrixError(
            f"coupling matrix singular (sigma_min/sigma_max = {sv[-1] / sv[0]:.2e})"
        )

    k_ext = np.diag(np.sqrt(np.concatenate([gamma_ext, gamma_ext])))
    k_int = np.diag(np.sqrt(np.concatenate([gamma_int, gamma_int])))
    m_inv = np.linalg.inv(cm.m)
    s = 1j * k_ext @ m_inv @ k_ext - np.eye(2 * n)
    s_loss = 1j * k_ext @ m_inv @ k_int
    return ScatteringPair(s, s_loss, n, "ladder")


def pseudo_unitarity_residual(pair):
    """Max-abs deviation from S J S^dag + S_loss J S_loss^dag = J (ladder basis)."""
    if pair.basis != "ladder":
        raise DimensionMismatchError("pseudo-unitarity is defined on the ladder basis")
    n = pair.n_modes
    j = np.diag(np.concatenate([np.ones(n), -np.ones(n)]))
    lhs = pair.s @ j @ pair.s.conj().T + pair.s_loss @ j @ pair.s_loss.conj().T
    return float(np.max(np.abs(lhs - j)))


def symplectic_residual(s_quadrature):
    """Max-abs deviation from S_IQ Omega S_IQ^T = Omega (lossless quadrature form)."""
    from .bases import symplectic_form

    n = s_quadrature.shape[0] // 2
    omega = symplectic_form(n)
    return float(np.max(np.abs(s_quadrature @ omega @ s_quadrature.T - omega)))


def export_db_table(pair, path, reference=(0, 0)):
    """Write |S| in dB (relative to an explicit reference element) plus phase.

    The reference element and its absolute magnitude appear in every row so
    the table stays self-describing.
    """
    n = pair.n_modes
    labels = [f"b{j}" for j in range(n)] + [f"bdag{j}" for j in range(n)]
    r_out, r_in = reference
    ref_abs = abs(pair.s[r_out, r_in])
    if ref_abs == 0.0:
        raise ValueError("reference element has zero magnitude")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["out", "in", "mag_db", "phase_rad", "ref_out", "ref_in", "ref_abs"]
        )
        for i in range(2 * n):
            for j in range(2 * n):
                mag = abs(pair.s[i, j])
                db = 20.0 * np.log10(mag / ref_abs) if mag > 0 else -np.inf
                writer.writerow(
                    [
                        labels[i],
                        labels[j],
                        repr(float(db)),
                        repr(float(np.angle(pair.s[i, j]))),
                        labels[r_out],
                        labels[r_in],
                        repr(float(ref_abs)),
                    ]
                )
