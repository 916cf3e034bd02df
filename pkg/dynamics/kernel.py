"""Gamma kernel relating n-step discrete evolution to the continuous-time history.

The n-step value of an observable is

    F_dt(n) = 1/(n-1)! * integral_0^inf u^(n-1) e^(-u) F_ct(tau*u) du,

i.e. the expectation of F_ct at an internal time t = tau*U with U ~ Gamma(n, 1).
Everything here works with the *normalized* weight, so rule weights sum to 1 and
(n-1)! never appears outside log-gamma.
"""
import cmath
import logging
import math
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy import integrate, linalg, special
from scipy.interpolate import make_interp_spline

from config import Config
from errors import (
    BackwardOnly,
    DivergentTransform,
    GridUnderResolved,
    QuadratureNotConverged,
)
from extensions import parallel_map
from models import (
    GammaKernel,
    GridSpec,
    NegativityProbe,
    QuadratureRule,
    StepScheme,
    TimeSignal,
    TransformResult,
)

logger = logging.getLogger(__name__)

MAX_PROBE_POINTS = 1 << 22


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------

def log_gamma_density(kernel: GammaKernel, xi, xi0: float = 0.0):
    x = (np.asarray(xi, dtype=float) - xi0) / kernel.tau
    with np.errstate(divide="ignore", invalid="ignore"):
        out = special.xlogy(kernel.n - 1, x) - x - special.gammaln(kernel.n) - math.log(kernel.tau)
    out = np.where(x > 0, out, -np.inf)
    return out if out.ndim else float(out)


def gamma_density(kernel: GammaKernel, xi, xi0: float = 0.0):
    """g_n(xi): gamma density of shape n and scale tau starting at xi0; zero for xi <= xi0."""
    out = np.exp(log_gamma_density(kernel, xi, xi0))
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# quadrature rules
# ---------------------------------------------------------------------------

def default_node_count(n: int) -> int:
    return max(Config.MIN_NODES, math.ceil(4 * math.sqrt(n)))


@lru_cache(maxsize=512)
def _golub_welsch(alpha: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    # Jacobi matrix of the monic generalized Laguerre recurrence; weights come from the
    # first eigenvector components, which already carry mu_0 = 1 (normalized weight)
    k = np.arange(m, dtype=float)
    diag = 2.0 * k + alpha + 1.0
    j = np.arange(1, m, dtype=float)
    off = np.sqrt(j * (j + alpha))
    nodes, vecs = linalg.eigh_tridiagonal(diag, off)
    weights = vecs[0, :] ** 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def laguerre_rule(n: int, nodes: int | None = None, rtol: float | None = None,
                  atol: float | None = None) -> QuadratureRule:
    """Generalized Gauss-Laguerre rule (parameter n-1) for the normalized gamma weight."""
    if n < 1:
        raise ValueError(f"Rule needs n >= 1, got {n}.")
    m = nodes or default_node_count(n)
    u, w = _golub_welsch(float(n - 1), int(m))
    return QuadratureRule(
        n=n,
        nodes=u,
        weights=w,
        rtol=Config.QUAD_RTOL if rtol is None else rtol,
        atol=Config.QUAD_ATOL if atol is None else atol,
    )


def _target(value, rule: QuadratureRule) -> float:
    return max(rule.rtol * abs(value), rule.atol)


def _apply_rule(signal: TimeSignal, kernel: GammaKernel, rule: QuadratureRule):
    if signal.frequency:
        rotated = _apply_rotated_rule(signal, kernel, rule)
        if rotated is not None:
            return rotated
    t = kernel.tau * rule.nodes
    w = rule.weights
    inside = t <= signal.support
    if not np.all(inside):
        if np.any(w[~inside] > Config.WEIGHT_FLOOR):
            raise ValueError(
                f"Signal {signal.label or signal.kind!r} is defined up to t={signal.support:g}, "
                f"but the n={kernel.n} kernel still has weight beyond it."
            )
        t, w = t[inside], w[inside]
    total = np.sum(w * signal(t))
    return complex(total) if signal.is_complex else float(total)


def _apply_rotated_rule(signal: TimeSignal, kernel: GammaKernel, rule: QuadratureRule) -> complex | None:
    """Rule applied along u = zeta r, zeta = 1/(1 - i w tau); None if the terms overflow.

    On that ray e^{-u} e^{i w tau u} = e^{-r}, so the sum is zeta^n times a rule sum of
    terms no larger than their weights, and |I| ~ (1 + (w tau)^2)^(-n/2) keeps full relative accuracy.
    """
    shift = 1.0 - 1j * signal.frequency * kernel.tau
    zeta = 1.0 / shift
    keep = rule.weights > Config.WEIGHT_FLOOR
    r = rule.nodes[keep]
    with np.errstate(over="ignore", invalid="ignore"):
        terms = np.exp(np.log(rule.weights[keep]) + (1.0 - zeta) * r) * signal.evaluator(kernel.tau * zeta * r)
    if not np.all(np.isfinite(terms)):
        logger.debug("n=%d: rotated terms overflow, summing on the real line", kernel.n)
        return None
    return cmath.exp(-kernel.n * cmath.log(shift)) * complex(np.sum(terms))


# ---------------------------------------------------------------------------
# growth screening
# ---------------------------------------------------------------------------

def screen_horizon(n: int) -> float:
    """u beyond which the gamma weight is negligible: n + 10 sqrt(n) + 50."""
    return n + 10.0 * math.sqrt(n) + 50.0


def _log_integrand(signal: TimeSignal, kernel: GammaKernel, u: np.ndarray) -> np.ndarray:
    values = signal(kernel.tau * u)
    if not np.all(np.isfinite(values)):
        return np.full(u.shape, np.inf)
    with np.errstate(divide="ignore"):
        return special.xlogy(kernel.n - 1, u) - u + np.log(np.abs(values))


def check_growth(signal: TimeSignal, kernel: GammaKernel) -> None:
    """Raise DivergentTransform when the transform integral cannot converge."""
    g = signal.growth_rate
    if g is not None:
        if g * kernel.tau >= 1.0:
            raise DivergentTransform(
                f"Signal grows at rate {g:g} but the transform needs rate*tau < 1 (tau={kernel.tau:g})."
            )
        return

    u_star = screen_horizon(kernel.n)
    near = u_star * np.linspace(1.0, 1.1, 16)
    far = 2.0 * u_star * np.linspace(1.0, 1.1, 16)
    if kernel.tau * far[-1] > signal.support:
        logger.debug("Growth screen skipped: signal support ends at t=%g", signal.support)
        return
    near_max = np.max(_log_integrand(signal, kernel, near))
    if near_max == np.inf or np.max(_log_integrand(signal, kernel, far)) > near_max:
        raise DivergentTransform(
            f"Integrand of {signal.label or signal.kind!r} is still increasing at u={u_star:.4g}; "
            "suspected super-exponential growth."
        )


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def transform_quadrature(signal: TimeSignal, kernel: GammaKernel, rule: QuadratureRule | None = None,
                         fallback: bool = True) -> TransformResult:
    """Gamma transform of a continuous-time signal.

    Starts from `rule` (default node count max(32, ceil(4 sqrt n))) and doubles the node
    count until two successive rules agree within max(rtol*|I|, atol). If the ladder reaches
    Config.MAX_NODES without agreement, the integral is redone with adaptive panels in the
    standardized variable u = n + sqrt(n)*s (disable with fallback=False).
    """
    check_growth(signal, kernel)
    rule = rule or laguerre_rule(kernel.n)
    if rule.n != kernel.n:
        raise ValueError(f"Rule was built for n={rule.n}, kernel has n={kernel.n}.")

    m = rule.node_count
    previous = _apply_rule(signal, kernel, rule)
    while 2 * m <= max(Config.MAX_NODES, 2 * rule.node_count):
        m *= 2
        current = _apply_rule(signal, kernel, laguerre_rule(kernel.n, m, rule.rtol, rule.atol))
        err = abs(current - previous)
        if err <= _target(current, rule):
            return TransformResult(value=current, error=err, nodes=m, method="gauss-laguerre")
        logger.debug("n=%d: %d vs %d nodes differ by %.3g; doubling", kernel.n, m // 2, m, err)
        previous = current

    if not fallback:
        raise QuadratureNotConverged(
            f"Gauss-Laguerre ladder up to {m} nodes did not converge for n={kernel.n}."
        )
    logger.info("n=%d: node ladder exhausted at %d nodes, switching to adaptive panels", kernel.n, m)
    return _adaptive_transform(signal, kernel, rule)


def _adaptive_transform(signal: TimeSignal, kernel: GammaKernel, rule: QuadratureRule) -> TransformResult:
    n, tau = kernel.n, kernel.tau
    root_n = math.sqrt(n)
    u_hi = screen_horizon(n)
    if signal.growth_rate and signal.growth_rate > 0:
        u_hi /= 1.0 - signal.growth_rate * tau
    u_hi = min(u_hi, signal.support / tau)

    # unit-width panels in s, where u = n + sqrt(n) s
    s = np.arange(math.floor(-n / root_n), math.ceil((u_hi - n) / root_n) + 1)
    edges = np.unique(np.clip(n + root_n * s, 0.0, u_hi))
    log_norm = special.gammaln(n)

    def weight(u):
        return math.exp(special.xlogy(n - 1, u) - u - log_norm)

    def part(u, take):
        return weight(u) * take(signal(np.array([tau * u]))[0])

    parts = [lambda v: v.real] + ([lambda v: v.imag] if signal.is_complex else [])
    panel_tol = rule.atol / max(len(edges) - 1, 1)
    sums, errs, sizes = [], [], []
    for take in parts:
        vals = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, err = integrate.quad(part, lo, hi, args=(take,), epsabs=panel_tol,
                                      epsrel=1e-2 * rule.rtol, limit=200)
            vals.append(val)
            errs.append(err)
        sums.append(math.fsum(vals))
        sizes.append(math.fsum(abs(v) for v in vals))

    # mass left beyond u_hi, weighted by the signal there
    tail = special.gammaincc(n, u_hi) * abs(signal(np.array([tau * u_hi]))[0])
    error = math.fsum(errs) + tail
    value = complex(sums[0], sums[1]) if signal.is_complex else sums[0]
    # cancellation between panels limits accuracy to rtol times the panel magnitudes
    target = max(_target(value, rule), rule.rtol * math.fsum(sizes))
    if error > 10.0 * target:
        raise QuadratureNotConverged(
            f"Adaptive panels for n={n} reached error {error:.3g}, target {target:.3g}."
        )
    return TransformResult(value=value, error=error, nodes=0, method="adaptive-panels")


def transform_monte_carlo(signal: TimeSignal, kernel: GammaKernel, samples: int | None = None,
                          seed=None) -> tuple[complex | float, float]:
    """Sample mean of F_ct(tau*U), U ~ Gamma(n); returns (estimate, standard error)."""
    check_growth(signal, kernel)
    samples = samples or Config.MC_SAMPLES
    if samples < 2:
        raise ValueError("Monte Carlo needs at least two samples.")
    rng = np.random.default_rng(seed)
    t = sample_internal_time(kernel, rng, size=samples)
    if np.any(t > signal.support):
        raise ValueError(f"Sampled internal time beyond the signal support t={signal.support:g}.")
    values = signal(t)
    estimate = values.mean()
    if signal.is_complex:
        spread = values.real.var(ddof=1) + values.imag.var(ddof=1)
        estimate = complex(estimate)
    else:
        spread = values.var(ddof=1)
        estimate = float(estimate)
    return estimate, math.sqrt(spread / samples)


def transform_series(signal: TimeSignal, tau: float, steps, method: str = "quadrature",
                     samples: int | None = None, seed: int = 0, threads: int | None = None) -> pd.DataFrame:
    """Transform over several n; one row per n, columns n, value, imag, error."""

    def one(n):
        kernel = GammaKernel(n, tau)
        if method == "quadrature":
            res = transform_quadrature(signal, kernel)
            value, error = res.value, res.error
        elif method == "monte-carlo":
            # seed per n so rows do not depend on evaluation order
            value, error = transform_monte_carlo(signal, kernel, samples, seed=[seed, n])
        else:
            raise ValueError(f"Unknown transform method {method!r}.")
        return n, complex(value).real, complex(value).imag, error

    rows = parallel_map(one, list(steps), threads)
    df = pd.DataFrame(rows, columns=["n", "value", "imag", "error"])
    if not signal.is_complex:
        df = df.drop(columns="imag")
    return df


# ---------------------------------------------------------------------------
# internal time
# ---------------------------------------------------------------------------

def sample_internal_time(kernel: GammaKernel, rng: np.random.Generator, size=None):
    """tau * Gamma(n, 1): sum of n exponentials up to n = 16, numpy's rejection sampler above."""
    if kernel.n <= Config.EXPONENTIAL_SUM_MAX_N:
        shape = () if size is None else tuple(np.atleast_1d(size))
        draws = rng.standard_exponential(size=shape + (kernel.n,)).sum(axis=-1)
    else:
        draws = rng.standard_gamma(kernel.n, size=size)
    draws = kernel.tau * draws
    return float(draws) if size is None else draws


def internal_time_walk(kernel: GammaKernel, rng: np.random.Generator) -> np.ndarray:
    """Internal times after steps 1..n; each step adds an independent tau*Exp(1)."""
    return kernel.tau * np.cumsum(rng.standard_exponential(kernel.n))


# ---------------------------------------------------------------------------
# built-in signals
# ---------------------------------------------------------------------------

def constant_signal(value: float = 1.0) -> TimeSignal:
    return TimeSignal(lambda t: np.full(t.shape, value), label=f"const {value:g}", growth_rate=0.0)


def polynomial_signal(k: int) -> TimeSignal:
    return TimeSignal(lambda t: t ** k, label=f"poly {k}", growth_rate=0.0)


def cosine_signal(omega: float = 1.0, phase: float = 0.0) -> TimeSignal:
    return TimeSignal(lambda t: np.cos(omega * t + phase), label=f"cos {omega:g}", growth_rate=0.0)


def sine_signal(omega: float = 1.0, phase: float = 0.0) -> TimeSignal:
    return TimeSignal(lambda t: np.sin(omega * t + phase), label=f"sin {omega:g}", growth_rate=0.0)


def oscillation_signal(omega: float) -> TimeSignal:
    """e^{i omega t}; its transform is (1 - i omega tau)^(-n)."""
    return TimeSignal(lambda t: np.exp(1j * omega * t), label=f"expi {omega:g}",
                      growth_rate=0.0, is_complex=True, frequency=omega)


def exponential_signal(rate: float, amplitude: float = 1.0) -> TimeSignal:
    return TimeSignal(lambda t: amplitude * np.exp(rate * t), label=f"exp {rate:g}",
                      growth_rate=max(rate, 0.0))


def tabulated_signal(t, values, order: int = 1) -> TimeSignal:
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.size != values.size or t.size <= order:
        raise ValueError(f"Tabulated signal needs more than {order} matching (t, F) samples.")
    if t[0] > 0 or np.any(np.diff(t) <= 0):
        raise ValueError("Tabulated times must start at t <= 0 and increase strictly.")
    spline = make_interp_spline(t, values, k=order)
    return TimeSignal(spline, kind="tabulated", label=f"table[{t.size}]",
                      growth_rate=0.0, support=float(t[-1]))


def read_tabulated_signal(filepath: str, order: int = 1) -> TimeSignal:
    df = pd.read_csv(filepath)
    df.columns = df.columns.astype(str).str.strip().str.lower()
    if "t" not in df.columns or "f" not in df.columns:
        raise ValueError("Signal table must contain 't' and 'F' columns.")
    df = df[["t", "f"]].apply(pd.to_numeric, errors="coerce").dropna().sort_values("t")
    return tabulated_signal(df["t"].to_numpy(), df["f"].to_numpy(), order=order)


# ---------------------------------------------------------------------------
# step schemes
# ---------------------------------------------------------------------------

def _require_beta(scheme: StepScheme) -> None:
    if scheme.beta <= 0:
        raise BackwardOnly(
            "alpha = 1 is the forward-difference scheme; its kernel needs beta > 0."
        )


def scheme_delta_coefficient(scheme: StepScheme, n: int) -> float:
    """(-alpha/beta)^n: weight of the singular delta term; negative for odd n when alpha > 0."""
    _require_beta(scheme)
    return (-scheme.alpha / scheme.beta) ** n + 0.0


def scheme_density_decomposition(scheme: StepScheme, kernel: GammaKernel) -> tuple[float, list[tuple[float, int]]]:
    """Delta weight plus mixture weights C_j of gamma densities of shape j and scale beta*tau.

    C_j = beta^-n * binom(n, j) * (-alpha)^(n-j); zero weights (alpha = 0) are dropped so the
    backward scheme yields the single term (1, n).
    """
    _require_beta(scheme)
    n, a, b = kernel.n, scheme.alpha, scheme.beta
    terms = []
    for j in range(1, n + 1):
        if a == 0.0 and j < n:
            continue
        log_mag = (
            special.gammaln(n + 1) - special.gammaln(j + 1) - special.gammaln(n - j + 1)
            - n * math.log(b) + (special.xlogy(n - j, a) if n > j else 0.0)
        )
        sign = -1.0 if (n - j) % 2 else 1.0
        terms.append((sign * math.exp(log_mag), j))
    return scheme_delta_coefficient(scheme, n), terms


def scheme_regular_density(scheme: StepScheme, kernel: GammaKernel, xi, xi0: float = 0.0):
    """Regular part sum_j C_j h_j(xi) of the decomposed n-step density."""
    _, terms = scheme_density_decomposition(scheme, kernel)
    scale = scheme.beta * kernel.tau
    xi = np.asarray(xi, dtype=float)
    total = np.zeros(xi.shape)
    for weight, j in terms:
        total = total + weight * gamma_density(GammaKernel(j, scale), xi, xi0)
    return total


def evolution_symbol(scheme: StepScheme, tau: float, k):
    """Fourier symbol of one step with L = -d/dxi (transform convention f^(k) = int f e^{-ik xi})."""
    k = np.asarray(k, dtype=float)
    return (1.0 - 1j * scheme.alpha * tau * k) / (1.0 + 1j * scheme.beta * tau * k)


def arrow_of_time(scheme: StepScheme) -> dict:
    """Which evolution directions keep T_n bounded as |n| grows."""
    half = 0.5
    return {
        "alpha": scheme.alpha,
        "forward_bounded": scheme.alpha <= half,
        "backward_bounded": scheme.alpha >= half,
        "unitary": scheme.alpha == half,
        "positivity_preserving": scheme.alpha == 0.0,
    }


def default_probe_grid(kernel: GammaKernel, sigma: float) -> GridSpec:
    length = 20.0 * sigma + kernel.mean + 12.0 * math.sqrt(kernel.variance) + 40.0 * kernel.tau
    points = 1 << max(int(math.ceil(math.log2(4.0 * length / sigma))), 1)
    if points > MAX_PROBE_POINTS:
        raise GridUnderResolved(
            f"Resolving sigma={sigma:g} over length {length:g} needs {points} points (limit {MAX_PROBE_POINTS})."
        )
    return GridSpec(length=length, points=points)


def advection_negativity_probe(scheme: StepScheme, kernel: GammaKernel, sigma: float,
                               grid: GridSpec | None = None) -> NegativityProbe:
    """Apply T_n spectrally to a Gaussian of width sigma on a periodic grid; report its minimum."""
    _require_beta(scheme)
    if not sigma > 0:
        raise ValueError("Initial width sigma must be positive.")
    grid = grid or default_probe_grid(kernel, sigma)
    dx = grid.spacing
    if sigma < 4.0 * dx:
        raise GridUnderResolved(f"sigma={sigma:g} is below 4 grid spacings ({4 * dx:g}).")
    drift = kernel.mean
    if grid.length < drift + 20.0 * sigma:
        raise GridUnderResolved(
            f"Grid length {grid.length:g} cannot hold drift {drift:g} plus 20 sigma."
        )

    xi = np.arange(grid.points) * dx
    xi0 = probe_origin(sigma)
    start = np.exp(-0.5 * ((xi - xi0) / sigma) ** 2) / (math.sqrt(2.0 * math.pi) * sigma)
    k = 2.0 * np.pi * np.fft.fftfreq(grid.points, d=dx)
    symbol = evolution_symbol(scheme, kernel.tau, k) ** kernel.n
    profile = np.fft.ifft(np.fft.fft(start) * symbol).real
    return NegativityProbe(minimum=float(profile.min()), peak=float(profile.max()), xi=xi, profile=profile)


def probe_origin(sigma: float) -> float:
    """Centre of the initial Gaussian used by advection_negativity_probe."""
    return 10.0 * sigma
