import logging
import math

import numpy as np
import pytest

from dynamics.kernel import laguerre_rule
from dynamics.quantum import (
    decoherence_landmarks,
    decoherence_report,
    decoherence_time,
    evolve_density,
    gamma_equivalence_check,
    offdiagonal_modulus,
    project_density,
    purity,
    random_density_matrix,
    schroedinger_defect,
    schroedinger_phase,
    schur_multiplier,
)
from models import DensityMatrix, PhysicalConstants
from reports import read_density_matrix
from units import parse_energy


def test_density_matrix_validation():
    with pytest.raises(ValueError, match="Hermitian"):
        DensityMatrix(energies=[0.0, 1.0], coeffs=[[0.5, 0.2], [0.1, 0.5]])
    with pytest.raises(ValueError, match="trace"):
        DensityMatrix(energies=[0.0, 1.0], coeffs=[[0.6, 0.0], [0.0, 0.6]])
    with pytest.raises(ValueError, match="positive semidefinite"):
        DensityMatrix(energies=[0.0, 1.0], coeffs=[[0.5, 0.9], [0.9, 0.5]])
    with pytest.raises(ValueError):
        DensityMatrix(energies=[0.0], coeffs=[[0.5, 0.5], [0.5, 0.5]])


# ---------------------------------------------------------------------------
# evolution
# ---------------------------------------------------------------------------

def test_step_zero_is_identity(qubit, natural):
    np.testing.assert_array_equal(evolve_density(qubit, 0, natural).coeffs, qubit.coeffs)


def test_single_step_factor(natural):
    factor = schur_multiplier([1.0, 0.0], 1, natural)
    assert factor[0, 1] == pytest.approx((1 - 1j) / 2, abs=1e-15)
    assert factor[1, 0] == pytest.approx((1 + 1j) / 2, abs=1e-15)


def test_diagonal_and_degenerate_entries_do_not_move(natural):
    energies = [0.5, 0.5, 2.0]
    coeffs = np.array([[0.4, 0.2, 0.1], [0.2, 0.4, 0.05], [0.1, 0.05, 0.2]])
    dm = DensityMatrix(energies=energies, coeffs=coeffs)
    out = evolve_density(dm, 37, natural).coeffs
    np.testing.assert_array_equal(np.diag(out), np.diag(coeffs))
    assert out[0, 1] == coeffs[0, 1]
    assert abs(out[0, 2]) < abs(coeffs[0, 2])


def test_negative_steps_rejected(qubit, natural):
    with pytest.raises(ValueError):
        evolve_density(qubit, -1, natural)


@pytest.mark.parametrize("n", [1, 10, 100, 1000])
def test_trace_and_hermiticity_preserved(dm_file, natural, n):
    dm = read_density_matrix(str(dm_file))
    out = evolve_density(dm, n, natural).coeffs
    assert abs(np.trace(out) - 1.0) <= 1e-12
    assert np.max(np.abs(out - out.conj().T)) <= 1e-12


def test_multiplier_is_positive_semidefinite(rng, natural):
    energies = rng.uniform(0.0, 3.0, size=6)
    for n in (1, 4, 25):
        factor = schur_multiplier(energies, n, natural)
        assert np.linalg.eigvalsh(factor).min() >= -1e-12


def test_multiplier_semigroup(rng, natural):
    energies = rng.uniform(-1.0, 1.0, size=5)
    np.testing.assert_allclose(
        schur_multiplier(energies, 7, natural),
        schur_multiplier(energies, 3, natural) * schur_multiplier(energies, 4, natural),
        rtol=1e-13,
    )


def test_purity_never_increases(rng, natural):
    dm = random_density_matrix(rng.uniform(0.0, 1.0, size=4), rng)
    values = [purity(evolve_density(dm, n, natural)) for n in range(0, 60, 3)]
    assert all(b <= a + 1e-14 for a, b in zip(values, values[1:]))
    assert values[-1] < values[0]


@pytest.mark.parametrize("seed", range(100))
def test_random_state_properties(natural, seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 9))
    n1, n2 = (int(v) for v in rng.integers(1, 51, size=2))
    dm = random_density_matrix(rng.uniform(0.0, 3.0, size=d), rng)
    out = evolve_density(dm, n1 + n2, natural)

    assert abs(np.trace(out.coeffs) - 1.0) <= 1e-12
    assert np.max(np.abs(out.coeffs - out.coeffs.conj().T)) <= 1e-12
    assert np.linalg.eigvalsh(out.coeffs).min() >= -1e-12
    assert np.linalg.eigvalsh(schur_multiplier(dm.energies, n1 + n2, natural)).min() >= -1e-12
    np.testing.assert_allclose(evolve_density(evolve_density(dm, n1, natural), n2, natural).coeffs,
                               out.coeffs, rtol=1e-12, atol=1e-15)
    assert purity(dm) > purity(evolve_density(dm, n1, natural)) > purity(out)
    assert gamma_equivalence_check(dm, n1 + n2, natural) <= 1e-8


def test_continuum_limit_recovers_unitary_phase():
    errors = []
    for tau in (0.1, 0.01, 0.001):
        constants = PhysicalConstants(hbar=1.0, tau=tau)
        n = round(1.0 / tau)
        factor = schur_multiplier([2.0, 0.0], n, constants)[0, 1]
        errors.append(abs(factor - np.exp(-2j)))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-2


def test_random_density_matrix_is_valid(rng):
    dm = random_density_matrix([0.0, 1.0, 2.0], rng, rank=1)
    assert purity(dm) == pytest.approx(1.0, rel=1e-12)


# ---------------------------------------------------------------------------
# decoherence time
# ---------------------------------------------------------------------------

def test_degenerate_levels_never_decohere(natural):
    assert decoherence_time(0.0, natural) == math.inf
    assert offdiagonal_modulus(50, 0.0, natural) == 1.0


def test_decoherence_time_natural_units(natural):
    assert decoherence_time(1.0, natural) == pytest.approx(2.0 / math.log(2.0), rel=1e-15)


def test_modulus_decays_as_exponential_in_steps(natural):
    for delta in (0.3, 1.0, 4.0):
        t_d = decoherence_time(delta, natural)
        for n in (1, 5, 40):
            expected = math.exp(-n * natural.tau / t_d)
            assert offdiagonal_modulus(n, delta, natural) == pytest.approx(expected, rel=1e-13)


def test_seven_millielectronvolt_gap_outlives_the_universe(si_planck):
    t_d = decoherence_time(parse_energy("7meV"), si_planck)
    assert t_d == pytest.approx(3.275e17, rel=1e-3)
    marks = decoherence_landmarks(t_d)
    assert marks["t_d_years"] == pytest.approx(1.0378e10, rel=1e-3)
    assert marks["exceeds_1e10_years"]
    assert not marks["order_1e-23_s"]


def test_macroscopic_gap_decoheres_almost_instantly(si_planck):
    t_d = decoherence_time(1e20 * parse_energy("7meV"), si_planck)
    assert t_d == pytest.approx(3.275e-23, rel=1e-3)
    marks = decoherence_landmarks(t_d)
    assert marks["order_1e-23_s"]
    assert not marks["exceeds_1e10_years"]


def test_decoherence_report(dm_file, natural):
    dm = read_density_matrix(str(dm_file))
    report = decoherence_report(dm, [0, 5, 50], natural)
    assert [(p.alpha, p.beta) for p in report.pairs] == [(0, 1), (0, 2), (1, 2)]
    first = report.pairs[0]
    assert first.delta_e == 0.25
    assert first.moduli[0] == pytest.approx(abs(0.1 + 0.1j), rel=1e-15)
    assert first.moduli[2] == pytest.approx(abs(0.1 + 0.1j) * offdiagonal_modulus(50, 0.25, natural), rel=1e-14)
    assert report.pairs[1].moduli == (0.0, 0.0, 0.0)
    df = report.to_frame()
    assert list(df.columns) == ["alpha", "beta", "delta_e", "t_d", "n", "modulus"]
    assert len(df) == 9


# ---------------------------------------------------------------------------
# equivalence with the gamma transform
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 5, 10, 20])
def test_equivalence_on_qubit(qubit, natural, n):
    assert gamma_equivalence_check(qubit, n, natural) <= 1e-8


def test_equivalence_trivial_for_diagonal_matrix(natural):
    dm = DensityMatrix(energies=[0.0, 1.0, 3.0], coeffs=np.diag([0.2, 0.3, 0.5]))
    assert gamma_equivalence_check(dm, 9, natural) == 0.0


def test_equivalence_on_random_matrix(rng, natural):
    dm = random_density_matrix(rng.uniform(0.0, 1.0, size=4), rng)
    assert gamma_equivalence_check(dm, 5, natural, threads=3) <= 1e-8


def test_equivalence_with_prebuilt_rule(qubit, natural):
    assert gamma_equivalence_check(qubit, 4, natural, rule=laguerre_rule(4, nodes=64)) <= 1e-8
    with pytest.raises(ValueError):
        gamma_equivalence_check(qubit, 4, natural, rule=laguerre_rule(3))


# ---------------------------------------------------------------------------
# phase consistency
# ---------------------------------------------------------------------------

def test_phase_equation_has_no_unimodular_solution(natural):
    for n in (1, 3, 10):
        phase = schroedinger_phase(n, 1.0, natural)
        assert phase.real == pytest.approx(n * math.pi / 4, rel=1e-14)
        assert phase.imag == pytest.approx(0.5 * n * math.log(2.0), rel=1e-14)
        assert schroedinger_defect(n, 1.0, natural) > 0


def test_phase_defect_vanishes_for_degenerate_levels(natural):
    assert schroedinger_defect(4, 0.0, natural) == 0.0


def test_phase_defect_grid(natural):
    gaps = np.linspace(0.0, 4.75, 20)
    for delta in gaps:
        defects = [schroedinger_defect(n, delta, natural) for n in range(1, 21)]
        if delta == 0.0:
            assert defects == [0.0] * 20
            continue
        expected = [0.5 * n * math.log1p(delta ** 2) for n in range(1, 21)]
        np.testing.assert_allclose(defects, expected, rtol=1e-14)
        assert defects[0] > 0
        assert all(b > a for a, b in zip(defects, defects[1:]))


def test_phase_equation_needs_a_step(natural):
    with pytest.raises(ValueError):
        schroedinger_phase(0, 1.0, natural)


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

def test_projection_clips_negative_eigenvalues(caplog):
    with caplog.at_level(logging.WARNING, logger="dynamics.quantum"):
        dm = project_density([0.0, 1.0], [[1.2, 0.0], [0.0, -0.2]])
    np.testing.assert_allclose(dm.coeffs.real, [[1.0, 0.0], [0.0, 0.0]], atol=1e-15)
    assert "projected" in caplog.text


def test_projection_of_valid_matrix_is_silent(qubit, caplog):
    with caplog.at_level(logging.WARNING, logger="dynamics.quantum"):
        dm = project_density(qubit.energies, qubit.coeffs)
    np.testing.assert_allclose(dm.coeffs, qubit.coeffs, atol=1e-14)
    assert caplog.text == ""


def test_projection_needs_a_positive_part():
    with pytest.raises(ValueError):
        project_density([0.0, 1.0], [[-1.0, 0.0], [0.0, -1.0]])
