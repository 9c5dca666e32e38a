"""PPT and optimized-witness entanglement tests with error propagation."""

import numpy as np
import pytest
from scipy.optimize import minimize

from modecomb import (
    AmplifierModel,
    Bipartition,
    CovarianceMatrix,
    DimensionMismatchError,
    MissingFitCovarianceError,
    ModeSpec,
    PhysicalityWarning,
    all_bipartition_reports,
    all_bipartitions,
    build_coupling_matrix,
    decorrelate_iq,
    entanglement_sigma,
    output_covariance,
    ppt_min_eigenvalue,
    propagate_errors,
    scattering_matrices,
    significance,
    svl_test,
    svl_value,
    two_mode_squeezed_covariance,
)
from modecomb.bases import mode_rotation

TWO_PI = 2.0 * np.pi

# ring-comb output state used in several tests: four modes, four pumped pairs
COMB_EXPECTED_E = {
    "0|123": -0.547390288,
    "01|23": -0.409852575,
    "02|13": -0.750000000,
    "03|12": -0.409852575,
    "012|3": -0.547390288,
    "013|2": -0.547390288,
    "023|1": -0.547390288,
}


def comb_output(eps_hz=30e3, loss_hz=20e3):
    modes = [ModeSpec.from_hz(j, 3.82e9 + j * 13e6, loss_hz, loss_hz) for j in range(4)]
    eps = TWO_PI * eps_hz
    coup = {(0, 1): eps, (1, 2): eps, (2, 3): eps, (0, 3): eps}
    cm = build_coupling_matrix(modes, couplings=coup)
    g = np.full(4, TWO_PI * loss_hz)
    pair = scattering_matrices(cm, g, g, allow_unstable=True).to_quadrature()
    return output_covariance(pair, CovarianceMatrix.vacuum(4))


def random_physical_state(rng, n_modes):
    """Thermal core conjugated by layers of rotations and diagonal squeezers."""
    v = np.diag(np.repeat(2.0 * rng.uniform(0.0, 1.0, n_modes) + 1.0, 2))
    for _ in range(2):
        z = np.exp(rng.uniform(-0.5, 0.5, n_modes))
        d = np.diag(np.column_stack([z, 1.0 / z]).ravel())
        rot = mode_rotation(rng.uniform(0.0, np.pi, n_modes))
        s = rot @ d
        v = s @ v @ s.T
    return CovarianceMatrix(n_modes, v)


def test_all_bipartitions_counts_and_labels():
    for n, count in ((2, 1), (3, 3), (4, 7), (5, 15), (6, 31)):
        parts = all_bipartitions(n)
        assert len(parts) == count
        labels = [bp.label for bp in parts]
        assert len(set(labels)) == count
        assert all(0 in bp.part_a for bp in parts)
    assert {bp.label for bp in all_bipartitions(4)} == set(COMB_EXPECTED_E)


def test_bipartition_validation():
    with pytest.raises(ValueError):
        Bipartition((0, 1), (1, 2), 3)
    with pytest.raises(ValueError):
        Bipartition((0,), (1,), 3)
    with pytest.raises(ValueError):
        Bipartition((1,), (0, 2), 3)
    bp = Bipartition.from_set([2], 3)
    assert bp.part_a == (0, 1) and bp.part_b == (2,)


def test_ppt_of_two_mode_squeezed_state():
    for r in (0.2, 0.7, 1.1):
        v = two_mode_squeezed_covariance(r)
        lam = ppt_min_eigenvalue(v, [1])
        assert lam == pytest.approx(np.exp(-2.0 * r) - 1.0, abs=1e-12)
    assert ppt_min_eigenvalue(CovarianceMatrix.vacuum(2), [1]) == pytest.approx(
        0.0, abs=1e-12
    )
    bp = Bipartition((0,), (1,), 2)
    v = two_mode_squeezed_covariance(0.7)
    assert ppt_min_eigenvalue(v, bp) == pytest.approx(
        ppt_min_eigenvalue(v, [1]), abs=1e-14
    )
    with pytest.raises(DimensionMismatchError):
        ppt_min_eigenvalue(v, [2])


def test_ppt_separable_states_stay_positive():
    rng = np.random.default_rng(21)
    for _ in range(20):
        # product of independent single-mode states is separable
        blocks = []
        for _ in range(2):
            z = np.exp(rng.uniform(-0.8, 0.8))
            nb = rng.uniform(0.0, 2.0)
            blocks.append((2.0 * nb + 1.0) * np.diag([z, 1.0 / z]))
        v = CovarianceMatrix(2, np.block([
            [blocks[0], np.zeros((2, 2))],
            [np.zeros((2, 2)), blocks[1]],
        ]))
        assert ppt_min_eigenvalue(v, [1]) >= -1e-12


def test_svl_two_mode_squeezed_closed_form():
    bp = Bipartition((0,), (1,), 2)
    for r in (0.3, 0.8):
        v = two_mode_squeezed_covariance(r)
        rep = svl_test(v, bp)
        # the optimized witness equals twice the PPT eigenvalue here
        assert rep.value == pytest.approx(2.0 * (np.exp(-2.0 * r) - 1.0), abs=1e-10)
        assert rep.value < 0.0
        assert np.dot(rep.h, rep.h) + np.dot(rep.g, rep.g) == pytest.approx(
            2.0, rel=1e-12
        )


def test_svl_separable_state_nonnegative():
    rng = np.random.default_rng(8)
    bp = Bipartition((0,), (1,), 2)
    for _ in range(20):
        diag = 2.0 * rng.uniform(0.0, 1.5, 2) + 1.0
        v = CovarianceMatrix(2, np.diag(np.repeat(diag, 2)))
        assert svl_test(v, bp).value >= -1e-12


def test_svl_matches_numeric_multistart():
    """The four-eigenproblem optimum agrees with direct numeric minimization."""
    rng = np.random.default_rng(14)
    for _ in range(3):
        v = random_physical_state(rng, 3)
        bp = Bipartition((0, 2), (1,), 3)
        rep = svl_test(v, bp, decorrelate=False)

        def objective(x):
            x = np.sqrt(2.0) * x / np.linalg.norm(x)
            return svl_value(v, bp, x[:3], x[3:])

        best = np.inf
        for _ in range(24):
            x0 = rng.normal(size=6)
            res = minimize(objective, x0, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
            best = min(best, res.fun)
        assert rep.value <= best + 1e-9
        assert rep.value == pytest.approx(best, abs=1e-6)


def test_svl_shift_law_and_normalization():
    rng = np.random.default_rng(3)
    v = random_physical_state(rng, 3)
    bp = Bipartition((0,), (1, 2), 3)
    base = svl_test(v, bp, decorrelate=False)
    t = 0.37
    shifted = CovarianceMatrix(3, v.v + t * np.eye(6))
    rep = svl_test(shifted, bp, decorrelate=False)
    # adding t to every variance shifts the optimum by exactly 2t
    assert rep.value == pytest.approx(base.value + 2.0 * t, abs=1e-10)


def test_decorrelate_iq_restores_clean_frame():
    v = two_mode_squeezed_covariance(0.7)
    rotated = v.rotate([0.3, -0.5])
    clean, angles, residual = decorrelate_iq(rotated)
    # quasi-Newton polish with numeric gradients bottoms out around 1e-8
    assert residual < 1e-7
    bp = Bipartition((0,), (1,), 2)
    assert svl_test(rotated, bp).value == pytest.approx(
        svl_test(v, bp).value, abs=1e-7
    )


def test_comb_witness_and_ppt_frozen_values():
    v = comb_output()
    reports = {rep.bipartition.label: rep for rep in all_bipartition_reports(v)}
    assert set(reports) == set(COMB_EXPECTED_E)
    for label, expected in COMB_EXPECTED_E.items():
        assert reports[label].value == pytest.approx(expected, abs=2e-9), label
        bp = reports[label].bipartition
        lam = ppt_min_eigenvalue(v, bp)
        # for this state every bipartition satisfies E = 2 lambda
        assert lam == pytest.approx(expected / 2.0, abs=2e-9), label


def test_propagate_errors_zero_case():
    v = two_mode_squeezed_covariance(0.5)
    amp = AmplifierModel.uniform(
        2, 100.0, 0.2, sigma_gain=0.0, sigma_noise=0.0, cov_gain_noise=0.0
    )
    meas = CovarianceMatrix(2, 100.0 * v.v + np.diag(amp.n_diagonal()))
    sig = propagate_errors(meas, amp, sem=None)
    assert np.max(np.abs(sig)) == 0.0
    bare = AmplifierModel.uniform(2, 100.0, 0.2)
    with pytest.raises(MissingFitCovarianceError):
        propagate_errors(meas, bare)


def test_propagate_errors_statistical_term():
    amp = AmplifierModel.uniform(
        2, 100.0, 0.2, sigma_gain=0.0, sigma_noise=0.0, cov_gain_noise=0.0
    )
    meas = CovarianceMatrix(2, 100.0 * np.eye(4) + np.diag(amp.n_diagonal()))
    sem = np.full((4, 4), 2.0)
    sig = propagate_errors(meas, amp, sem=sem)
    # with zero fit errors only the de-embedded statistical term survives
    assert sig == pytest.approx(np.full((4, 4), 2.0 / 100.0), rel=1e-12)


def test_propagate_errors_clamps_negative_variance():
    amp = AmplifierModel.uniform(
        1, 100.0, 10.0, sigma_gain=5.0, sigma_noise=1.0, cov_gain_noise=5.0
    )
    meas = CovarianceMatrix(1, np.eye(2))
    with pytest.warns(PhysicalityWarning):
        sig = propagate_errors(meas, amp)
    assert np.all(sig >= 0.0)


def test_entanglement_sigma_formula():
    rng = np.random.default_rng(30)
    s = np.abs(rng.normal(size=(4, 4)))
    s = (s + s.T) / 2.0
    h = np.array([0.9, -0.3])
    g = np.array([0.2, 1.1])
    sii, sqq = s[0::2, 0::2], s[1::2, 1::2]
    expected = np.sqrt(
        np.sum(sii**2 * np.outer(h, h) ** 2) + np.sum(sqq**2 * np.outer(g, g) ** 2)
    )
    assert entanglement_sigma(s, h, g) == pytest.approx(expected, rel=1e-12)


def test_significance_weighting():
    single = significance([-1.0], [0.5])
    assert single == pytest.approx(-2.0, rel=1e-12)
    double = significance([-1.0, -1.0], [0.5, 0.5])
    assert double == pytest.approx(-2.0 * np.sqrt(2.0), rel=1e-12)
