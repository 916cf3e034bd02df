"""Discrete-time classical mechanics for deterministic initial data.

A single phase-space point evolves, after n steps, into a spread whose moments are
gamma transforms of the continuous trajectory. Free particles and unit oscillators
have closed forms; anything else goes through `evolve_observable`.
"""
import logging
import math
import re
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from config import Config
from dynamics.kernel import transform_monte_carlo, transform_quadrature
from errors import StiffnessFailure
from extensions import parallel_map
from models import (
    FreeParticle,
    GammaKernel,
    HamiltonianModel,
    HarmonicOscillator,
    MomentReport,
    PhaseState,
    TimeSignal,
    Trajectory,
)

logger = logging.getLogger(__name__)

Observable = Callable[[np.ndarray, np.ndarray], np.ndarray]


def trajectory_horizon(N: int, tau: float) -> float:
    """Continuous time the N-step transform can reach with non-negligible weight."""
    return tau * (N + 12.0 * math.sqrt(N) + 60.0)


def free_particle_moments(state: PhaseState, kernel: GammaKernel, N: int) -> MomentReport:
    if N < 0:
        raise ValueError("Step count N must be non-negative.")
    tau = kernel.tau
    n = np.arange(N + 1, dtype=float)
    v = state.p / state.masses
    mean_x = state.x[None, :] + n[:, None] * tau * v[None, :]
    mean_p = np.broadcast_to(state.p, mean_x.shape).copy()
    # diffusive spread: Cov(x_i, x_j) = n tau^2 v_i v_j
    xx = mean_x[:, :, None] * mean_x[:, None, :] + (n * tau ** 2)[:, None, None] * np.outer(v, v)[None]
    pp = np.broadcast_to(np.outer(state.p, state.p), xx.shape).copy()
    energy = np.full(N + 1, float(FreeParticle().energy(state.x, state.p, state.masses)))
    return MomentReport(tau=tau, mean_x=mean_x, mean_p=mean_p, xx=xx, pp=pp, energy=energy)


def sho_moments(state: PhaseState, kernel: GammaKernel, N: int) -> MomentReport:
    """Closed-form moments for unit-mass, unit-frequency oscillators.

    Continuous motion is x = r sin(t + theta), p = r cos(t + theta) with
    theta = atan2(x, p), which fixes the quadrant in every case.
    """
    if N < 0:
        raise ValueError("Step count N must be non-negative.")
    if not np.allclose(state.masses, 1.0):
        raise ValueError("sho_moments needs unit masses; use scaled_sho_moments for general m, omega.")
    tau = kernel.tau
    r = np.hypot(state.x, state.p)
    theta = np.arctan2(state.x, state.p)
    if np.any(r == 0):
        logger.debug("Zero-amplitude oscillator(s) at %s; their moments stay zero", np.flatnonzero(r == 0))

    n = np.arange(N + 1, dtype=float)[:, None]
    phi = math.atan(tau)
    phi2 = math.atan(2.0 * tau)
    damp1 = np.exp(-0.5 * n * math.log1p(tau ** 2))
    damp2 = np.exp(-0.5 * n * math.log1p(4.0 * tau ** 2))

    mean_x = r * damp1 * np.sin(n * phi + theta)
    mean_p = r * damp1 * np.cos(n * phi + theta)

    rr = 0.5 * np.outer(r, r)[None]
    diff = np.cos(theta[:, None] - theta[None, :])[None]
    osc = damp2[:, :, None] * np.cos(n[:, :, None] * phi2 + theta[None, :, None] + theta[None, None, :])
    xx = rr * (diff - osc)
    pp = rr * (diff + osc)
    energy = 0.5 * (np.trace(xx, axis1=1, axis2=2) + np.trace(pp, axis1=1, axis2=2))
    return MomentReport(tau=tau, mean_x=mean_x, mean_p=mean_p, xx=xx, pp=pp, energy=energy)


def scaled_sho_moments(state: PhaseState, omega: float, kernel: GammaKernel, N: int) -> MomentReport:
    """Oscillators with masses m_i and one common frequency omega, by rescaling to unit form."""
    if not omega > 0:
        raise ValueError("Frequency omega must be positive.")
    s = np.sqrt(state.masses * omega)
    inner = sho_moments(PhaseState.unit_mass(state.x * s, state.p / s), GammaKernel(kernel.n, omega * kernel.tau), N)
    ss = np.outer(s, s)[None]
    return MomentReport(
        tau=kernel.tau,
        mean_x=inner.mean_x / s,
        mean_p=inner.mean_p * s,
        xx=inner.xx / ss,
        pp=inner.pp * ss,
        energy=omega * inner.energy,
    )


def continuous_trajectory(model: HamiltonianModel, state: PhaseState, t_max: float,
                          tolerance: float | None = None) -> Trajectory:
    if not t_max > 0:
        raise ValueError("Trajectory length t_max must be positive.")
    tol = Config.ODE_RTOL if tolerance is None else tolerance
    l = state.dof
    x0, p0, m = state.x[:, None], state.p[:, None], state.masses[:, None]

    if isinstance(model, FreeParticle):
        def exact(t):
            return np.vstack([x0 + p0 / m * t[None, :], np.broadcast_to(p0, (l, t.size))])
        return Trajectory(evaluator=exact, dof=l, t_max=math.inf, rtol=0.0)

    if isinstance(model, HarmonicOscillator):
        if not np.allclose(state.masses, 1.0):
            raise ValueError("The harmonic oscillator model uses unit masses.")

        def exact(t):
            c, s = np.cos(t)[None, :], np.sin(t)[None, :]
            return np.vstack([x0 * c + p0 * s, p0 * c - x0 * s])
        return Trajectory(evaluator=exact, dof=l, t_max=math.inf, rtol=0.0)

    sol = solve_ivp(
        lambda t, y: model.rhs(y, state.masses),
        (0.0, t_max),
        state.as_vector(),
        method=Config.ODE_METHOD,
        dense_output=True,
        rtol=tol,
        atol=tol * 1e-3,
    )
    if sol.status != 0:
        raise StiffnessFailure(f"{model.name}: integrator stopped at t={sol.t[-1]:.6g}: {sol.message}")
    logger.debug("%s: %d accepted steps up to t=%g", model.name, sol.t.size - 1, t_max)
    return Trajectory(evaluator=sol.sol, dof=l, t_max=t_max, rtol=tol, step_times=sol.t)


def trajectory_signal(trajectory: Trajectory, f: Observable, label: str = "") -> TimeSignal:
    """f evaluated straight along the trajectory at whatever times the transform asks for."""
    return TimeSignal(
        lambda t: f(*trajectory(t)),
        kind="ode" if math.isfinite(trajectory.t_max) else "closed-form",
        label=label,
        support=trajectory.t_max,
    )


def evolve_observable(model: HamiltonianModel, state: PhaseState, f: Observable, kernel: GammaKernel,
                      N: int, method: str = "quadrature", samples: int | None = None, seed: int = 0,
                      tolerance: float | None = None, threads: int | None = None) -> np.ndarray:
    """Values <f>_dt at n = 0..N; n = 0 is f at the initial point."""
    if N < 0:
        raise ValueError("Step count N must be non-negative.")
    trajectory = continuous_trajectory(model, state, trajectory_horizon(N, kernel.tau), tolerance)
    signal = trajectory_signal(trajectory, f)
    initial = float(np.asarray(f(state.x[None, :], state.p[None, :])).ravel()[0])

    def one(n):
        k = kernel.with_n(n)
        if method == "quadrature":
            return transform_quadrature(signal, k).value
        if method == "monte-carlo":
            return transform_monte_carlo(signal, k, samples, seed=[seed, n])[0]
        raise ValueError(f"Unknown method {method!r}.")

    return np.array([initial] + parallel_map(one, range(1, N + 1), threads))


def quadrature_moments(model: HamiltonianModel, state: PhaseState, kernel: GammaKernel, N: int,
                       tolerance: float | None = None) -> MomentReport:
    """Full MomentReport assembled from evolve_observable, one observable per moment."""
    l = state.dof

    def run(f):
        return evolve_observable(model, state, f, kernel, N, tolerance=tolerance)

    mean_x = np.column_stack([run(lambda x, p, i=i: x[:, i]) for i in range(l)])
    mean_p = np.column_stack([run(lambda x, p, i=i: p[:, i]) for i in range(l)])
    xx = np.empty((N + 1, l, l))
    pp = np.empty((N + 1, l, l))
    for i in range(l):
        for j in range(i, l):
            xx[:, i, j] = xx[:, j, i] = run(lambda x, p, i=i, j=j: x[:, i] * x[:, j])
            pp[:, i, j] = pp[:, j, i] = run(lambda x, p, i=i, j=j: p[:, i] * p[:, j])
    energy = run(lambda x, p: model.energy(x, p, state.masses))
    return MomentReport(tau=kernel.tau, mean_x=mean_x, mean_p=mean_p, xx=xx, pp=pp, energy=energy)


_FACTOR = re.compile(r"^([xp])(\d+)(?:\^(\d+))?$")


def parse_observable(expr: str, model: HamiltonianModel, state: PhaseState) -> Observable:
    """'x0', 'p1^2', 'x0*x1', or 'H' (model energy); indices count from 0."""
    text = expr.replace(" ", "")
    if text == "H":
        return lambda x, p: model.energy(x, p, state.masses)
    factors = []
    for part in text.split("*"):
        m = _FACTOR.match(part)
        if not m:
            raise ValueError(f"Cannot read observable factor {part!r} in {expr!r}.")
        kind, index, power = m.group(1), int(m.group(2)), int(m.group(3) or 1)
        if index >= state.dof:
            raise ValueError(f"Observable {expr!r} refers to degree of freedom {index}, state has {state.dof}.")
        factors.append((kind, index, power))

    def f(x, p):
        out = np.ones(x.shape[0])
        for kind, index, power in factors:
            out = out * (x if kind == "x" else p)[:, index] ** power
        return out

    return f


MODELS = {"free": FreeParticle, "sho": HarmonicOscillator}


def model_by_name(name: str) -> HamiltonianModel:
    if name not in MODELS:
        raise ValueError(f"Unknown model {name!r}; choose one of {', '.join(MODELS)}.")
    return MODELS[name]()
