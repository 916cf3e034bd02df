import math

import numpy as np
import pytest
from scipy import stats

from dynamics.classical import (
    continuous_trajectory,
    evolve_observable,
    free_particle_moments,
    model_by_name,
    parse_observable,
    quadrature_moments,
    scaled_sho_moments,
    sho_moments,
)
from errors import StiffnessFailure
from models import CustomField, FreeParticle, GammaKernel, HarmonicOscillator, PhaseState


@pytest.fixture
def pair():
    return PhaseState(x=[0.0, 0.0], p=[1.0, 2.0], masses=[1.0, 1.0])


def test_phase_state_validation():
    with pytest.raises(ValueError):
        PhaseState(x=[1.0, 2.0], p=[1.0], masses=[1.0, 1.0])
    with pytest.raises(ValueError):
        PhaseState(x=[1.0], p=[1.0], masses=[0.0])


# ---------------------------------------------------------------------------
# free particle
# ---------------------------------------------------------------------------

def test_free_step_zero_is_initial_point():
    state = PhaseState(x=[0.3, -1.0], p=[1.5, 0.2], masses=[2.0, 0.5])
    report = free_particle_moments(state, GammaKernel(1, 0.4), 5)
    np.testing.assert_array_equal(report.mean_x[0], state.x)
    np.testing.assert_array_equal(report.mean_p[0], state.p)
    np.testing.assert_allclose(report.var_x[0], 0.0, atol=1e-15)
    np.testing.assert_allclose(report.cov_x[0], 0.0, atol=1e-15)


def test_free_variance_is_diffusive():
    state = PhaseState(x=[0.0, 1.0], p=[1.0, 2.0], masses=[1.0, 3.0])
    tau = 0.5
    report = free_particle_moments(state, GammaKernel(1, tau), 10)
    n = report.steps
    diffusion = state.p ** 2 * tau / state.masses ** 2
    np.testing.assert_allclose(report.var_x, np.outer(n * tau, diffusion), rtol=1e-12, atol=1e-14)
    for i in range(2):
        slope = stats.linregress(n, report.var_x[:, i]).slope
        assert slope == pytest.approx(state.p[i] ** 2 * tau ** 2 / state.masses[i] ** 2, rel=1e-12)


def test_free_cross_covariance(pair):
    report = free_particle_moments(pair, GammaKernel(1, 1.0), 3)
    assert report.cov_x[3, 0, 1] == pytest.approx(6.0, rel=1e-14)


def test_free_cross_covariance_matches_quadrature(pair):
    closed = free_particle_moments(pair, GammaKernel(1, 1.0), 3)
    numeric = quadrature_moments(FreeParticle(), pair, GammaKernel(1, 1.0), 3)
    np.testing.assert_allclose(numeric.cov_x, closed.cov_x, rtol=1e-9, atol=1e-9)


def test_free_energy_is_conserved(pair):
    report = free_particle_moments(pair, GammaKernel(1, 0.3), 100)
    np.testing.assert_array_equal(report.energy, np.full(101, 2.5))


def test_free_momentum_observable_is_constant(pair):
    values = evolve_observable(FreeParticle(), pair, lambda x, p: p[:, 1], GammaKernel(1, 0.7), 12)
    np.testing.assert_allclose(values, 2.0, rtol=1e-12)


# ---------------------------------------------------------------------------
# harmonic oscillator
# ---------------------------------------------------------------------------

def test_sho_step_zero_is_initial_point():
    state = PhaseState.unit_mass([0.8, -0.3], [-0.5, 1.2])
    report = sho_moments(state, GammaKernel(1, 0.4), 3)
    np.testing.assert_allclose(report.mean_x[0], state.x, rtol=1e-14)
    np.testing.assert_allclose(report.mean_p[0], state.p, rtol=1e-14)
    np.testing.assert_allclose(report.xx[0], np.outer(state.x, state.x), atol=1e-14)
    np.testing.assert_allclose(report.pp[0], np.outer(state.p, state.p), atol=1e-14)
    np.testing.assert_allclose(report.var_x[0], 0.0, atol=1e-14)


def test_sho_single_step_from_rest():
    report = sho_moments(PhaseState.unit_mass([1.0], [0.0]), GammaKernel(1, 1.0), 1)
    assert report.mean_x[1, 0] == pytest.approx(0.5, rel=1e-13)


@pytest.mark.parametrize("x, p", [(1.0, 0.5), (-0.4, -2.0), (0.0, 1.0), (3.0, -0.1)])
def test_sho_energy_and_damped_mean(x, p):
    tau = 0.35
    report = sho_moments(PhaseState.unit_mass([x], [p]), GammaKernel(1, tau), 100)
    r2 = x * x + p * p
    n = report.steps
    np.testing.assert_allclose(report.xx[:, 0, 0] + report.pp[:, 0, 0], r2, rtol=1e-12)
    np.testing.assert_allclose(report.energy, 0.5 * r2, rtol=1e-12)
    np.testing.assert_allclose(report.mean_x[:, 0] ** 2 + report.mean_p[:, 0] ** 2,
                               r2 * (1 + tau ** 2) ** (-n.astype(float)), rtol=1e-12)
    assert np.all(report.var_x >= -1e-12)
    assert np.all(report.var_p >= -1e-12)


def test_sho_zero_amplitude_stays_zero():
    report = sho_moments(PhaseState.unit_mass([0.0, 1.0], [0.0, 0.0]), GammaKernel(1, 0.2), 4)
    np.testing.assert_array_equal(report.mean_x[:, 0], 0.0)
    np.testing.assert_array_equal(report.xx[:, 0, 0], 0.0)


def test_sho_needs_unit_masses():
    with pytest.raises(ValueError):
        sho_moments(PhaseState(x=[1.0], p=[0.0], masses=[2.0]), GammaKernel(1, 0.1), 2)


def test_sho_closed_form_matches_quadrature():
    state = PhaseState.unit_mass([0.7, -0.2], [0.4, 1.1])
    kernel = GammaKernel(1, 0.3)
    closed = sho_moments(state, kernel, 50)
    numeric = quadrature_moments(HarmonicOscillator(), state, kernel, 50)
    for name in ("mean_x", "mean_p", "xx", "pp", "energy"):
        a, b = getattr(numeric, name), getattr(closed, name)
        assert np.max(np.abs(a - b)) <= 1e-7 * np.max(np.abs(b)), name


def test_sho_position_observable_matches_closed_form():
    state = PhaseState.unit_mass([0.6], [-0.9])
    kernel = GammaKernel(1, 0.3)
    values = evolve_observable(HarmonicOscillator(), state, lambda x, p: x[:, 0], kernel, 50)
    closed = sho_moments(state, kernel, 50).mean_x[:, 0]
    assert np.max(np.abs(values - closed)) <= 1e-8


def test_sho_energy_observable_is_constant():
    state = PhaseState.unit_mass([0.6, 1.0], [-0.9, 0.2])
    f = parse_observable("H", HarmonicOscillator(), state)
    values = evolve_observable(HarmonicOscillator(), state, f, GammaKernel(1, 0.5), 100)
    np.testing.assert_allclose(values, 0.5 * (0.36 + 1.0 + 0.81 + 0.04), rtol=1e-9)


def test_sho_continuum_limit():
    state = PhaseState.unit_mass([0.5], [0.8])
    r, theta = math.hypot(0.5, 0.8), math.atan2(0.5, 0.8)
    errors = []
    for tau in (0.1, 0.01, 0.001):
        n = round(1.0 / tau)
        mean = sho_moments(state, GammaKernel(1, tau), n).mean_x[n, 0]
        errors.append(abs(mean - r * math.sin(1.0 + theta)))
    assert errors[0] > errors[1] > errors[2]


def test_scaled_oscillator_conserves_energy():
    state = PhaseState(x=[0.5, -1.0], p=[1.0, 0.3], masses=[2.0, 0.5])
    omega = 3.0
    report = scaled_sho_moments(state, omega, GammaKernel(1, 0.05), 40)
    energy = np.sum(state.p ** 2 / (2 * state.masses) + 0.5 * state.masses * omega ** 2 * state.x ** 2)
    np.testing.assert_allclose(report.energy, energy, rtol=1e-12)
    np.testing.assert_allclose(report.mean_x[0], state.x, rtol=1e-12)
    np.testing.assert_allclose(report.mean_p[0], state.p, rtol=1e-12)


def test_moment_frame_layout():
    report = free_particle_moments(PhaseState.unit_mass([0.0, 1.0], [1.0, 1.0]), GammaKernel(1, 1.0), 2)
    df = report.to_frame()
    assert list(df.columns) == ["n", "i", "j", "moment_name", "value"]
    assert df["n"].is_monotonic_increasing
    energy = df[df["moment_name"] == "energy"]
    assert energy[["i", "j"]].eq(-1).all().all()
    assert len(energy) == 3


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

def test_free_trajectory_is_exact():
    state = PhaseState(x=[1.0], p=[2.0], masses=[4.0])
    x, p = continuous_trajectory(FreeParticle(), state, 10.0)(np.array([0.0, 3.0]))
    np.testing.assert_array_equal(x[:, 0], [1.0, 2.5])
    np.testing.assert_array_equal(p[:, 0], [2.0, 2.0])


def test_oscillator_trajectory_matches_integration():
    state = PhaseState.unit_mass([0.3], [-1.1])
    field = CustomField(lambda y: np.array([y[1], -y[0]]))
    t = np.linspace(0.0, 15.0, 31)
    exact_x, exact_p = continuous_trajectory(HarmonicOscillator(), state, 15.0)(t)
    num_x, num_p = continuous_trajectory(field, state, 15.0)(t)
    np.testing.assert_allclose(num_x, exact_x, atol=1e-8)
    np.testing.assert_allclose(num_p, exact_p, atol=1e-8)
    r, theta = math.hypot(0.3, -1.1), math.atan2(0.3, -1.1)
    np.testing.assert_allclose(exact_x[:, 0], r * np.sin(t + theta), atol=1e-14)


def test_custom_decay_field():
    field = CustomField(lambda y: np.array([-y[0], 0.0]))
    traj = continuous_trajectory(field, PhaseState.unit_mass([2.0], [0.0]), 5.0)
    t = np.linspace(0.0, 5.0, 11)
    x, _ = traj(t)
    np.testing.assert_allclose(x[:, 0], 2.0 * np.exp(-t), rtol=1e-8)


def test_trajectory_rejects_times_outside_range():
    field = CustomField(lambda y: np.array([-y[0], 0.0]))
    traj = continuous_trajectory(field, PhaseState.unit_mass([1.0], [0.0]), 1.0)
    with pytest.raises(ValueError):
        traj(np.array([2.0]))


def test_blow_up_reports_stiffness_failure():
    field = CustomField(lambda y: np.array([y[0] ** 2, 0.0]))
    with pytest.raises(StiffnessFailure):
        continuous_trajectory(field, PhaseState.unit_mass([1.0], [0.0]), 2.0)


def test_custom_field_observable():
    field = CustomField(lambda y: np.array([-y[0], 0.0]), name="decay")
    values = evolve_observable(field, PhaseState.unit_mass([1.0], [0.0]), lambda x, p: x[:, 0],
                               GammaKernel(1, 0.5), 4)
    # transform of e^{-t} at step n is (1 + tau)^-n
    np.testing.assert_allclose(values, 1.5 ** -np.arange(5.0), rtol=1e-7)


def test_monte_carlo_observable():
    state = PhaseState.unit_mass([0.0], [1.0])
    values = evolve_observable(FreeParticle(), state, lambda x, p: x[:, 0], GammaKernel(1, 0.5), 4,
                               method="monte-carlo", samples=20000, seed=8)
    n = np.arange(1, 5)
    stderr = 0.5 * np.sqrt(n) / math.sqrt(20000)
    assert np.all(np.abs(values[1:] - 0.5 * n) <= 5 * stderr)


# ---------------------------------------------------------------------------
# observable parser
# ---------------------------------------------------------------------------

def test_parse_observable_products():
    state = PhaseState.unit_mass([2.0, 3.0], [5.0, 7.0])
    model = model_by_name("free")
    x, p = state.x[None, :], state.p[None, :]
    assert parse_observable("x0*x1", model, state)(x, p)[0] == 6.0
    assert parse_observable("p1^2", model, state)(x, p)[0] == 49.0
    assert parse_observable("x1 * p0", model, state)(x, p)[0] == 15.0
    assert parse_observable("H", model, state)(x, p)[0] == pytest.approx(37.0)


@pytest.mark.parametrize("expr", ["y0", "x", "x0**2", "x5"])
def test_parse_observable_rejects_bad_input(expr):
    with pytest.raises(ValueError):
        parse_observable(expr, FreeParticle(), PhaseState.unit_mass([1.0, 2.0], [0.0, 0.0]))


def test_unknown_model_name():
    with pytest.raises(ValueError):
        model_by_name("pendulum")
