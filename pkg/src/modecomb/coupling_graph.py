"""Four-wave-mixing match enumeration and the mode-coupling matrix.

A pump tone at w_p couples the pair (j, k) when 2 w_p ~= w_j + w_k within a
tolerance set by the mode linewidths. The coupled Langevin equations in the
frequency domain read -i M b_vec = K b_in with

    M = [[A, B], [-conj(B), -conj(A)]],

A diagonal with A_jj = Delta_j = Omega_j - w_j + shift_j + i gamma_tot_j / 2
and B symmetric with B_jk = -eps_jk on matched pairs. Mode positions (not
ModeSpec.index labels) index all matrices here.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import modesys
from .errors import DimensionMismatchError

STRUCTURE_TOL = 1e-12


def _mode_list(modes):
    """Accept either a ModeSystem or a plain sequence of ModeSpec."""
    if isinstance(modes, modesys.ModeSystem):
        return modes.modes
    return tuple(modes)


@dataclass(frozen=True)
class FourWaveMatch:
    """One pump tone resonant with one mode pair.

    ``mode_j <= mode_k`` always; ``mode_j == mode_k`` is degenerate
    (single-mode) squeezing. ``mismatch`` is 2 w_p - w_j - w_k in rad/s.
    """

    pump_index: int
    mode_j: int
    mode_k: int
    mismatch: float


def default_tolerance(modes):
    """Half the smallest total linewidth, the resolvable-match scale."""
    return min(m.gamma_tot for m in _mode_list(modes)) / 2.0


def match_four_wave(modes, pumps, tolerance=None):
    """Enumerate pump/pair combinations satisfying the four-wave condition.

    Returns matches sorted by (pump_index, mode_j, mode_k). Widening the
    tolerance can only add matches, never remove one.
    """
    modes = _mode_list(modes)
    if tolerance is None:
        tolerance = default_tolerance(modes)
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    w = [m.omega for m in modes]
    out = []
    for p, pump in enumerate(pumps):
        for j in range(len(modes)):
            for k in range(j, len(modes)):
                mismatch = 2.0 * pump.omega_p - w[j] - w[k]
                if abs(mismatch) <= tolerance:
                    out.append(FourWaveMatch(p, j, k, mismatch))
    return out


def pump_mode_indices(modes, pumps, tolerance=None):
    """Positions of modes sitting on a pump tone (excluded from probing by default)."""
    modes = _mode_list(modes)
    if tolerance is None:
        tolerance = default_tolerance(modes)
    hits = set()
    for pump in pumps:
        for j, m in enumerate(modes):
            if abs(m.omega - pump.omega_p) <= tolerance:
                hits.add(j)
    return hits


def pair_couplings(modes, pumps, mirror, matches):
    """Complex coupling eps_jk per matched pair from the microscopic chain.

    Multiple pumps matching the same pair add coherently.
    """
    modes = _mode_list(modes)
    g_tilde, _ = modesys.effective_couplings(mirror, modes)
    couplings = {}
    for match in matches:
        pump = pumps[match.pump_index]
        d = modesys.pump_amplitude(mirror, pump)
        eps = modesys.parametric_coupling(
            d, g_tilde[match.mode_j], g_tilde[match.mode_k], pump.theta
        )
        key = (match.mode_j, match.mode_k)
        couplings[key] = couplings.get(key, 0.0) + eps
    return couplings


def mode_frequency_shifts(n_modes, couplings):
    """Pump-induced static shift per mode: 2 * sum of |eps| over its matches.

    For the uniform four-mode comb (two matches per mode) this reduces to the
    idealized 4 |eps| shift.
    """
    shifts = np.zeros(n_modes)
    for (j, k), eps in couplings.items():
        shifts[j] += 2.0 * abs(eps)
        if k != j:
            shifts[k] += 2.0 * abs(eps)
    return shifts


@dataclass
class CouplingMatrix:
    """Frequency-domain mode-coupling matrix in the ladder basis.

    Attributes
    ----------
    n_modes : int
    m : ndarray
        Complex (2N, 2N) matrix with the Bogoliubov block structure.
    probe_detunings : ndarray
        Complex Delta_j per mode; the imaginary part is gamma_tot_j / 2.
    couplings : dict
        (j, k) -> complex eps_jk actually placed in the B block.
    """

    n_modes: int
    m: np.ndarray
    probe_detunings: np.ndarray
    couplings: dict = field(default_factory=dict)

    def a_block(self):
        return self.m[: self.n_modes, : self.n_modes]

    def b_block(self):
        return self.m[: self.n_modes, self.n_modes :]

    def structure_residual(self):
        """Max deviation from the [[A, B], [-conj(B), -conj(A)]] structure."""
        n = self.n_modes
        a, b = self.a_block(), self.b_block()
        res = max(
            np.max(np.abs(self.m[n:, :n] + np.conj(b))),
            np.max(np.abs(self.m[n:, n:] + np.conj(a))),
            np.max(np.abs(b - b.T)),
            np.max(np.abs(a - np.diag(np.diag(a)))),
        )
        return float(res)

    def to_csv(self, path):
        """Write the matrix with real/imag parts in interleaved columns."""
        n = self.n_modes
        labels = [f"b{j}" for j in range(n)] + [f"bdag{j}" for j in range(n)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["row"]
            for lab in labels:
                header += [f"re({lab})", f"im({lab})"]
            writer.writerow(header)
            for i, lab in enumerate(labels):
                row = [lab]
                for j in range(2 * n):
                    row += [repr(float(self.m[i, j].real)), repr(float(self.m[i, j].imag))]
                writer.writerow(row)


def build_coupling_matrix(
    modes,
    pumps=None,
    mirror=None,
    probe_omegas=None,
    matches=None,
    couplings=None,
    tolerance=None,
):
    """Assemble the coupling matrix for a probed mode set.

    Parameters
    ----------
    modes : sequence of ModeSpec
    pumps : sequence of PumpTone, optional
        Needed unless ``couplings`` is given directly.
    mirror : MirrorSpec, optional
        Needed to derive couplings from pump fluxes.
    probe_omegas : array-like, optional
        Absolute measurement frequencies Omega_j (rad/s). ``None`` means
        each mode is probed on its shifted resonance, so Delta_j reduces to
        i gamma_tot_j / 2 exactly.
    matches : list of FourWaveMatch, optional
        Recomputed from (modes, pumps) when omitted.
    couplings : dict, optional
        (j, k) -> complex eps_jk, overriding the microscopic chain. Keys
        must be canonical (j <= k).
    """
    if isinstance(modes, modesys.ModeSystem):
        if mirror is None:
            mirror = modes.mirror
        modes = modes.modes
    n = len(modes)
    if couplings is None:
        if pumps is None or mirror is None:
            raise DimensionMismatchError(
                "either explicit couplings or (pumps, mirror) must be provided"
            )
        if matches is None:
            matches = match_four_wave(modes, pumps, tolerance)
        couplings = pair_couplings(modes, pumps, mirror, matches)
    else:
        for j, k in couplings:
            if not (0 <= j <= k < n):
                raise DimensionMismatchError(f"coupling key ({j}, {k}) not canonical for {n} modes")

    shifts = mode_frequency_shifts(n, couplings)
    gamma_tot = np.array([m.gamma_tot for m in modes])
    if probe_omegas is None:
        detunings = 0.5j * gamma_tot
    else:
        probe_omegas = np.asarray(probe_omegas, dtype=float)
        if probe_omegas.shape != (n,):
            raise DimensionMismatchError("probe_omegas must have one entry per mode")
        omegas = np.array([m.omega for m in modes])
        detunings = (probe_omegas - omegas + shifts) + 0.5j * gamma_tot

    a = np.diag(detunings.astype(complex))
    b = np.zeros((n, n), dtype=complex)
    for (j, k), eps in couplings.items():
        b[j, k] = -eps
        b[k, j] = -eps
    m = np.block([[a, b], [-np.conj(b), -np.conj(a)]])
    return CouplingMatrix(n, m, detunings, dict(couplings))


def assign_probe_frequencies(modes, matches, couplings=None, anchor=0):
    """Probe frequencies satisfying the frame condition Omega_j + Omega_k = 2 w_p.

    Breadth-first propagation from the anchor mode (probed on its shifted
    resonance) through the match graph. Modes without a path keep their own
    resonance. Edges that close a cycle may be inconsistent; their residual
    circulation (rad/s) is returned instead of being silently absorbed.

    Returns
    -------
    omegas : ndarray
        Assigned probe frequencies (rad/s).
    residuals : dict
        match position -> frame residual for edges not in the BFS tree.
    """
    modes = _mode_list(modes)
    n = len(modes)
    shifts = mode_frequency_shifts(n, couplings) if couplings else np.zeros(n)
    dressed = np.array([m.omega for m in modes]) - shifts
    omegas = dressed.copy()
    # pump frequency per edge; degenerate matches pin the mode on the pump
    assigned = {anchor}
    edges = [(i, mt) for i, mt in enumerate(matches)]
    frontier = True
    tree = set()
    while frontier:
        frontier = False
        for i, mt in edges:
            if i in tree:
                continue
            two_wp = mt.mismatch + modes[mt.mode_j].omega + modes[mt.mode_k].omega
            if mt.mode_j == mt.mode_k:
                continue
            for a, b in ((mt.mode_j, mt.mode_k), (mt.mode_k, mt.mode_j)):
                if a in assigned and b not in assigned:
                    omegas[b] = two_wp - omegas[a]
                    assigned.add(b)
                    tree.add(i)
                    frontier = True
                    break
    residuals = {}
    for i, mt in edges:
        if i in tree or mt.mode_j == mt.mode_k:
            continue
        if mt.mode_j in assigned and mt.mode_k in assigned:
            two_wp = mt.mismatch + modes[mt.mode_j].omega + modes[mt.mode_k].omega
            res = two_wp - omegas[mt.mode_j] - omegas[mt.mode_k]
            if abs(res) > 1e-6:
                residuals[i] = float(res)
    return omegas, residuals
