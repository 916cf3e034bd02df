"""Sensitivity to initial conditions in continuous and discrete time.

The continuous model x_ct(a, t) = cos(b e^{ct}), cos b = a, separates neighbouring
trajectories like e^{ct}. Its n-step counterpart is the gamma transform of the same
integrand, which stays below 2/(b c tau sqrt(1 - a^2)) for every n.
"""
import cmath
import logging
import math

import numpy as np
from scipy import integrate, linalg, special

from config import Config
from dynamics.kernel import exponential_signal, laguerre_rule, transform_quadrature
from errors import DivergentTransform, FitUnstable, QuadratureNotConverged
from extensions import parallel_map
from models import GammaKernel, LyapunovEstimate, SensitivityModel, TimeSignal

logger = logging.getLogger(__name__)

DEFAULT_CT_POINTS = 2001


def _scalar(out):
    return out if np.ndim(out) else float(out)


def ct_position(model: SensitivityModel, t):
    t = np.asarray(t, dtype=float)
    return _scalar(np.cos(model.b * np.exp(model.c * t)))


def ct_distance(model: SensitivityModel, t):
    """|dx_ct/da| = e^{ct} |sin(b e^{ct})| / sqrt(1 - a^2)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("Time t must be non-negative.")
    growth = np.exp(model.c * t)
    return _scalar(model.amplitude * np.abs(np.sin(model.b * growth)) * growth)


def position_signal(model: SensitivityModel) -> TimeSignal:
    return TimeSignal(
        lambda t: np.cos(model.b * np.exp(model.c * t)),
        kind="sensitivity-position",
        label=f"cos({model.b:.6g} e^({model.c:g} t))",
        growth_rate=0.0,
    )


def separation_signal(model: SensitivityModel) -> TimeSignal:
    """Signed integrand e^{ct} sin(b e^{ct}); its transform times (1 - a^2)^(-1/2) is dx_dt/da."""
    def evaluate(t):
        growth = np.exp(model.c * t)
        return growth * np.sin(model.b * growth)

    return TimeSignal(evaluate, kind="sensitivity-separation",
                      label=f"e^({model.c:g} t) sin({model.b:.6g} e^({model.c:g} t))",
                      growth_rate=model.c)


def _check_rate(model: SensitivityModel, kernel: GammaKernel) -> float:
    s = model.c * kernel.tau
    if s >= 1.0:
        raise DivergentTransform(f"c*tau = {s:g}; the discrete transform needs c*tau < 1.")
    return s


def _rotated_integral(n: int, b: float, s: float, power: int) -> complex:
    """i e^{ib} * integral_0^inf g_n(u(b + iy)) (b + iy)^power e^{-y} dy with u(v) = log(v/b)/s.

    This is integral_b^inf g_n(u(v)) v^power e^{iv} dv with the path turned onto the
    vertical line Re v = b, where the oscillation becomes plain exponential decay.
    The integrand is scaled by its peak magnitude, so large n underflows to 0 cleanly.
    """
    log_norm = special.gammaln(n)

    def log_value(y):
        v = complex(b, y)
        u = cmath.log(v / b) / s
        if n > 1:
            if u == 0:
                return None
            log_weight = (n - 1) * cmath.log(u) - u - log_norm
        else:
            log_weight = -u
        return log_weight - y + power * cmath.log(v)

    # |integrand| peaks near y log(y/b) = n - 1
    peak = max(1.0, (n - 1) / max(math.log(max(n - 1, 2) / b), 1.0))
    edges = [0.0, 0.25 * peak, peak, 2.0 * peak, 4.0 * peak + 50.0, math.inf]
    panels = list(zip(edges[:-1], edges[1:]))

    samples = [log_value(y) for y in np.linspace(0.0, edges[-2], 2001)[1:]]
    shift = max(z.real for z in samples if z is not None)

    def value(y):
        z = log_value(y)
        return 0j if z is None else cmath.exp(z - shift)

    scale = sum(integrate.quad(lambda y: abs(value(y)), lo, hi, limit=200)[0] for lo, hi in panels)
    if scale == 0.0:
        return 0j
    tol = max(Config.QUAD_RTOL * scale / 50, np.finfo(float).tiny)
    real = imag = error = 0.0
    for lo, hi in panels:
        re, re_err = integrate.quad(lambda y: value(y).real, lo, hi, epsabs=tol, epsrel=0.0, limit=400)
        im, im_err = integrate.quad(lambda y: value(y).imag, lo, hi, epsabs=tol, epsrel=0.0, limit=400)
        real += re
        imag += im
        error += re_err + im_err
    if error > 500.0 * tol:
        raise QuadratureNotConverged(f"Rotated contour for n={n} reached relative error {error / scale:.3g}.")
    if shift < -745.0:
        logger.debug("n=%d: rotated contour magnitude e^%.4g underflows", n, shift)
        return 0j
    return 1j * cmath.exp(1j * b + shift) * complex(real, imag)


def _direct(signal: TimeSignal, kernel: GammaKernel):
    """Node ladder with a purely relative stopping rule, or None when it does not settle."""
    rule = laguerre_rule(kernel.n, atol=0.0)
    try:
        return transform_quadrature(signal, kernel, rule, fallback=False).value
    except QuadratureNotConverged:
        logger.debug("n=%d: node ladder did not settle, using the rotated contour", kernel.n)
        return None


def dt_position(model: SensitivityModel, kernel: GammaKernel) -> float:
    """Gamma transform of cos(b e^{ct}) at step kernel.n."""
    s = _check_rate(model, kernel)
    value = _direct(position_signal(model), kernel)
    if value is None:
        value = _rotated_integral(kernel.n, model.b, s, power=-1).real / s
    return float(value)


def dt_separation(model: SensitivityModel, kernel: GammaKernel) -> float:
    """Signed dx_dt/da at step kernel.n."""
    s = _check_rate(model, kernel)
    value = _direct(separation_signal(model), kernel)
    if value is None:
        value = _rotated_integral(kernel.n, model.b, s, power=0).imag / (model.b * s)
    return model.amplitude * float(value)


def dt_distance(model: SensitivityModel, kernel: GammaKernel) -> float:
    return abs(dt_separation(model, kernel))


def envelope_fit(times, distances) -> LyapunovEstimate:
    """Least-squares line through the running maximum of log distance over the last half of the window."""
    t = np.asarray(times, dtype=float)
    with np.errstate(divide="ignore"):
        envelope = np.maximum.accumulate(np.log(np.asarray(distances, dtype=float)))
    half = t.size // 2
    tw, ew = t[half:], envelope[half:]
    if tw.size < 2:
        raise FitUnstable(f"Fit window holds {tw.size} point(s); need at least 2.")
    if not np.all(np.isfinite(ew)):
        raise FitUnstable("Distance vanished throughout the start of the window; log fit undefined.")

    design = np.column_stack([tw, np.ones_like(tw)])
    (slope, intercept), *_ = linalg.lstsq(design, ew)
    residual = float(np.sqrt(np.mean((ew - design @ np.array([slope, intercept])) ** 2)))
    estimate = LyapunovEstimate(
        exponent=float(slope),
        intercept=float(intercept),
        window=(float(tw[0]), float(tw[-1])),
        residual=residual,
        points=int(tw.size),
    )
    if residual > Config.FIT_RESIDUAL_MAX:
        raise FitUnstable(f"Log-linear fit residual {residual:.3g} exceeds {Config.FIT_RESIDUAL_MAX:g}.")
    return estimate


def ct_lyapunov(model: SensitivityModel, t_max: float, points: int = DEFAULT_CT_POINTS) -> LyapunovEstimate:
    if model.c * t_max < 10.0:
        raise ValueError(f"c*t_max = {model.c * t_max:g}; the fit needs at least 10.")
    t = np.linspace(0.0, t_max, points)
    return envelope_fit(t, ct_distance(model, t))


def dt_distance_series(model: SensitivityModel, tau: float, n_max: int, threads: int | None = None) -> np.ndarray:
    """d_dt(n) for n = 1..n_max."""
    kernel = GammaKernel(1, tau)
    return np.array(parallel_map(lambda n: dt_distance(model, kernel.with_n(n)), range(1, n_max + 1), threads))


def dt_lyapunov(model: SensitivityModel, kernel: GammaKernel, n_max: int,
                threads: int | None = None) -> LyapunovEstimate:
    if n_max * kernel.tau * model.c < 10.0:
        raise ValueError(f"n_max*tau*c = {n_max * kernel.tau * model.c:g}; the fit needs at least 10.")
    _check_rate(model, kernel)
    n = np.arange(1, n_max + 1)
    return envelope_fit(n * kernel.tau, dt_distance_series(model, kernel.tau, n_max, threads))


def power_law_map(alpha: float, kernel: GammaKernel) -> np.ndarray:
    """Transform of t^alpha at n = 1..kernel.n: tau^alpha Gamma(n + alpha) / Gamma(n)."""
    if not alpha > -1:
        raise ValueError(f"Exponent alpha must exceed -1, got {alpha!r}.")
    n = np.arange(1, kernel.n + 1, dtype=float)
    return kernel.tau ** alpha * special.poch(n, alpha)


def exponential_map(b_rate: float, kernel: GammaKernel) -> float:
    """Discrete rate c with transform(e^{bt})(n) = e^{c tau n}: c = -log(1 - b tau)/tau."""
    x = b_rate * kernel.tau
    if x >= 1.0:
        raise DivergentTransform(f"b*tau = {x:g}; the exponential transform needs b*tau < 1.")
    return -math.log1p(-x) / kernel.tau


def exponential_map_sequence(b_rate: float, kernel: GammaKernel, amplitude: float = 1.0) -> dict:
    """Closed form a e^{c tau n} next to the quadrature transform of a e^{bt}, n = 1..kernel.n."""
    c = exponential_map(b_rate, kernel)
    signal = exponential_signal(b_rate, amplitude)
    n = np.arange(1, kernel.n + 1)
    return {
        "n": n,
        "closed_form": amplitude * np.exp(c * kernel.tau * n),
        "quadrature": np.array([transform_quadrature(signal, kernel.with_n(int(k))).value for k in n]),
        "rate": c,
    }
