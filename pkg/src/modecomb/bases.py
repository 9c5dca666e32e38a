"""Basis conventions and transformations.

Two bases are used throughout:

* ladder order ``(b_1 .. b_N, b_1^dag .. b_N^dag)`` for mode-coupling and
  scattering matrices (complex entries),
* interleaved quadrature order ``(I_1, Q_1, .., I_N, Q_N)`` with
  ``I = b + b^dag`` and ``Q = -i (b - b^dag)`` for covariance matrices
  (real entries, vacuum variance 1).
"""

import numpy as np

from .errors import DimensionMismatchError, NonPhysicalInputError


def symplectic_form(n_modes):
    """Interleaved-basis symplectic form, a direct sum of [[0, 1], [-1, 0]] blocks."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for j in range(n_modes):
        omega[2 * j, 2 * j + 1] = 1.0
        omega[2 * j + 1, 2 * j] = -1.0
    return omega


def ladder_to_quadrature_map(n_modes):
    """Matrix U with x = U b for x interleaved quadratures, b ladder order.

    U U^dag = 2 I, so the inverse map is U^dag / 2.
    """
    u = np.zeros((2 * n_modes, 2 * n_modes), dtype=complex)
    for j in range(n_modes):
        u[2 * j, j] = 1.0
        u[2 * j, n_modes + j] = 1.0
        u[2 * j + 1, j] = -1.0j
        u[2 * j + 1, n_modes + j] = 1.0j
    return u


def quadrature_transform(s_ladder, imag_tol=1e-9):
    """Convert a ladder-basis linear transformation to the quadrature basis.

    The result of U S U^dag / 2 must be real for a physical (Bogoliubov
    paired) transformation; a larger imaginary residue raises.
    """
    s_ladder = np.asarray(s_ladder, dtype=complex)
    if s_ladder.ndim != 2 or s_ladder.shape[0] != s_ladder.shape[1] or s_ladder.shape[0] % 2:
        raise DimensionMismatchError("ladder matrix must be square with even dimension")
    n = s_ladder.shape[0] // 2
    u = ladder_to_quadrature_map(n)
    s_q = u @ s_ladder @ u.conj().T / 2.0
    residue = np.max(np.abs(s_q.imag)) if s_q.size else 0.0
    if residue > imag_tol:
        raise NonPhysicalInputError(
            f"quadrature transform has imaginary residue {residue:.3e} > {imag_tol:.1e}; "
            "the ladder matrix does not pair b with b^dag consistently"
        )
    return s_q.real


def interleave_permutation(n_modes):
    """Permutation P with x_block = P x_interleaved, block order (all I, all Q)."""
    p = np.zeros((2 * n_modes, 2 * n_modes))
    for j in range(n_modes):
        p[j, 2 * j] = 1.0
        p[n_modes + j, 2 * j + 1] = 1.0
    return p


def mode_rotation(angles):
    """Direct sum of per-mode quadrature rotations, interleaved basis.

    Each mode rotates as I' = cos(a) I + sin(a) Q, Q' = -sin(a) I + cos(a) Q.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    r = np.zeros((2 * angles.size, 2 * angles.size))
    for j, a in enumerate(angles):
        c, s = np.cos(a), np.sin(a)
        r[2 * j, 2 * j] = c
        r[2 * j, 2 * j + 1] = s
        r[2 * j + 1, 2 * j] = -s
        r[2 * j + 1, 2 * j + 1] = c
    return r


def min_physicality_eigenvalue(v):
    """Smallest eigenvalue of V + i Omega; >= 0 (up to tolerance) for physical V."""
    v = np.asarray(v, dtype=float)
    n = v.shape[0] // 2
    h = v.astype(complex) + 1j * symplectic_form(n)
    return float(np.linalg.eigvalsh(h)[0])
