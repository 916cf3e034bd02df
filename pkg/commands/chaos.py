import click
import numpy as np
import pandas as pd

from commands import grp_chaos, pass_session, run_options
from dynamics.nonlinear import (
    ct_distance,
    ct_lyapunov,
    dt_distance_series,
    envelope_fit,
    exponential_map_sequence,
    power_law_map,
)
from models import GammaKernel, SensitivityModel


def model_options(f):
    f = click.option("--c", "c", type=float, default=1.0, show_default=True, help="Growth rate c > 0.")(f)
    f = click.option("--a", "a", type=float, default=0.5, show_default=True, help="Initial value, |a| < 1.")(f)
    return f


def _summary(fit, **extra):
    parts = [f"exponent={fit.exponent!r}", f"residual={fit.residual!r}",
             f"window={fit.window[0]!r}:{fit.window[1]!r}"]
    parts += [f"{k}={v!r}" for k, v in extra.items()]
    click.echo(" ".join(parts), err=True)


@grp_chaos.command("ct")
@model_options
@click.option("--t-max", type=click.FloatRange(0.0, min_open=True), default=20.0, show_default=True)
@click.option("--points", type=click.IntRange(4), default=2001, show_default=True)
@run_options
@pass_session
def ct_cmd(session, a, c, t_max, points):
    """Continuous-time separation and its Lyapunov fit."""
    model = SensitivityModel(a, c)
    fit = ct_lyapunov(model, t_max, points)
    t = np.linspace(0.0, t_max, points)
    df = pd.DataFrame({
        "t": t,
        "distance": ct_distance(model, t),
        "fitted_line": np.exp(fit.intercept + fit.exponent * t),
    })
    _summary(fit)
    session.emit("chaos ct", {"a": a, "c": c, "t_max": t_max, "points": points}, df)


@grp_chaos.command("dt")
@model_options
@click.option("--tau", type=click.FloatRange(0.0, min_open=True), default=0.1, show_default=True)
@click.option("--n-max", type=click.IntRange(2), default=200, show_default=True)
@run_options
@pass_session
def dt_cmd(session, a, c, tau, n_max):
    """Discrete-time separation d_dt(n), its bound and Lyapunov fit."""
    model = SensitivityModel(a, c)
    n = np.arange(1, n_max + 1)
    distance = dt_distance_series(model, tau, n_max, session.threads)
    fit = envelope_fit(n * tau, distance)
    df = pd.DataFrame({
        "n": n,
        "t": n * tau,
        "distance": distance,
        "fitted_line": np.exp(fit.intercept + fit.exponent * n * tau),
    })
    _summary(fit, bound=model.bound(tau))
    session.emit("chaos dt", {"a": a, "c": c, "tau": tau, "n_max": n_max}, df)


@grp_chaos.command("maps")
@click.option("--kind", type=click.Choice(["power", "exponential"]), required=True)
@click.option("--alpha", type=float, default=0.5, show_default=True, help="Power-law exponent (> -1).")
@click.option("--b-rate", type=float, default=0.5, show_default=True, help="Continuous exponential rate.")
@click.option("--amplitude", type=float, default=1.0, show_default=True)
@click.option("--tau", type=click.FloatRange(0.0, min_open=True), default=1.0, show_default=True)
@click.option("--n-max", type=click.IntRange(1), default=20, show_default=True)
@run_options
@pass_session
def maps_cmd(session, kind, alpha, b_rate, amplitude, tau, n_max):
    """Discrete images of t^alpha and e^{bt}."""
    kernel = GammaKernel(n_max, tau)
    n = np.arange(1, n_max + 1)
    if kind == "power":
        values = power_law_map(alpha, kernel)
        df = pd.DataFrame({"n": n, "value": values, "ratio": values / (n * tau) ** alpha})
        params = {"kind": kind, "alpha": alpha, "tau": tau, "n_max": n_max}
    else:
        seq = exponential_map_sequence(b_rate, kernel, amplitude)
        df = pd.DataFrame({"n": seq["n"], "closed_form": seq["closed_form"], "quadrature": seq["quadrature"]})
        click.echo(f"rate={seq['rate']!r} b_rate={b_rate!r}", err=True)
        params = {"kind": kind, "b_rate": b_rate, "amplitude": amplitude, "tau": tau, "n_max": n_max}
    session.emit("chaos maps", params, df)
