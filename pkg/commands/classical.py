import click
import numpy as np
import pandas as pd

from commands import grp_classical, parse_vector, pass_session, run_options
from dynamics.classical import (
    evolve_observable,
    free_particle_moments,
    model_by_name,
    parse_observable,
    scaled_sho_moments,
    sho_moments,
)
from models import GammaKernel, PhaseState


def _state(x, p, masses) -> PhaseState:
    xs, ps = parse_vector(x), parse_vector(p)
    ms = parse_vector(masses) if masses else [1.0] * len(xs)
    return PhaseState(x=xs, p=ps, masses=ms)


def state_options(f):
    f = click.option("--masses", default=None, help="Comma-separated masses (all 1 if omitted).")(f)
    f = click.option("--p", "p", required=True, help="Comma-separated initial momenta.")(f)
    f = click.option("--x", "x", required=True, help="Comma-separated initial positions.")(f)
    return f


def kernel_options(f):
    f = click.option("--steps", "N", type=click.IntRange(0), default=20, show_default=True, help="Largest n.")(f)
    f = click.option("--tau", type=click.FloatRange(0.0, min_open=True), default=1.0, show_default=True)(f)
    return f


@grp_classical.command("free")
@state_options
@kernel_options
@run_options
@pass_session
def free_cmd(session, x, p, masses, tau, N):
    """Closed-form moments of free particles."""
    state = _state(x, p, masses)
    report = free_particle_moments(state, GammaKernel(1, tau), N)
    session.emit("classical free", {"x": x, "p": p, "masses": masses, "tau": tau, "steps": N}, report.to_frame())


@grp_classical.command("sho")
@state_options
@kernel_options
@click.option("--omega", type=click.FloatRange(0.0, min_open=True), default=1.0, show_default=True)
@run_options
@pass_session
def sho_cmd(session, x, p, masses, tau, N, omega):
    """Closed-form moments of harmonic oscillators sharing one frequency."""
    state = _state(x, p, masses)
    kernel = GammaKernel(1, tau)
    if omega == 1.0 and np.allclose(state.masses, 1.0):
        report = sho_moments(state, kernel, N)
    else:
        report = scaled_sho_moments(state, omega, kernel, N)
    session.emit("classical sho", {
        "x": x, "p": p, "masses": masses, "tau": tau, "steps": N, "omega": omega,
    }, report.to_frame())


@grp_classical.command("observable")
@click.option("--model", "model_name", type=click.Choice(["free", "sho"]), required=True)
@click.option("--observable", "expr", required=True, help="e.g. 'x0', 'p1^2', 'x0*x1' or 'H'.")
@state_options
@kernel_options
@click.option("--method", type=click.Choice(["quadrature", "monte-carlo"]), default="quadrature", show_default=True)
@click.option("--samples", type=click.IntRange(2), default=None)
@run_options
@pass_session
def observable_cmd(session, model_name, expr, x, p, masses, tau, N, method, samples):
    """Gamma transform of an observable along the continuous trajectory."""
    model = model_by_name(model_name)
    state = _state(x, p, masses)
    f = parse_observable(expr, model, state)
    values = evolve_observable(model, state, f, GammaKernel(1, tau), N, method=method, samples=samples,
                               seed=session.seed, threads=session.threads)
    df = pd.DataFrame({"n": np.arange(N + 1), "value": values})
    session.emit("classical observable", {
        "model": model_name, "observable": expr, "x": x, "p": p, "masses": masses,
        "tau": tau, "steps": N, "method": method, "samples": samples,
    }, df)
