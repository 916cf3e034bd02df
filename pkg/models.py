import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
import pandas as pd

from config import PRESETS
from errors import ConfigError


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaKernel:
    n: int
    tau: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"Step count n must be a positive integer, got {self.n!r}.")
        if not self.tau > 0:
            raise ValueError(f"Time quantum tau must be positive, got {self.tau!r}.")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def mean(self) -> float:
        return self.n * self.tau

    @property
    def variance(self) -> float:
        return self.n * self.tau ** 2

    def with_n(self, n: int) -> "GammaKernel":
        return GammaKernel(n, self.tau)


@dataclass(frozen=True)
class StepScheme:
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"Scheme weight alpha must lie in [0, 1], got {self.alpha!r}.")

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss rule for the *normalized* weight u^(n-1) e^(-u) / (n-1)!; weights sum to 1."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    rtol: float = 1e-10
    atol: float = 1e-13
    normalized: bool = True

    @property
    def node_count(self) -> int:
        return int(self.nodes.size)


@dataclass(frozen=True, eq=False)
class TimeSignal:
    """A continuous-time history F_ct(t), evaluated on numpy arrays of t >= 0.

    growth_rate: declared g with |F(t)| <= C exp(g t); None means undeclared (screened).
    support: largest t at which the signal may be evaluated (tabulated / ODE-driven).
    frequency: set for F(t) = e^{i w t}; the evaluator then also accepts complex t and the
        transform is summed along the ray on which the oscillation turns into decay.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    kind: str = "closed-form"
    label: str = ""
    growth_rate: Optional[float] = None
    support: float = math.inf
    is_complex: bool = False
    frequency: Optional[float] = None

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        values = np.asarray(self.evaluator(t))
        if values.shape != t.shape:
            values = np.broadcast_to(values, t.shape)
        return values.astype(complex if self.is_complex else float)


@dataclass(frozen=True)
class TransformResult:
    value: complex | float
    error: float
    nodes: int
    method: str


@dataclass(frozen=True)
class GridSpec:
    length: float
    points: int

    def __post_init__(self):
        if self.points < 2 or self.points & (self.points - 1):
            raise ValueError(f"Grid size must be a power of two, got {self.points}.")
        if not self.length > 0:
            raise ValueError("Grid length must be positive.")

    @property
    def spacing(self) -> float:
        return self.length / self.points


@dataclass(frozen=True, eq=False)
class NegativityProbe:
    minimum: float
    peak: float
    xi: np.ndarray
    profile: np.ndarray


# ---------------------------------------------------------------------------
# classical
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhaseState:
    x: np.ndarray
    p: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if x.ndim != 1 or x.size < 1:
            raise ValueError("Phase state needs at least one coordinate.")
        if not (x.shape == p.shape == m.shape):
            raise ValueError(
                f"Coordinates, momenta and masses must share length; got {x.size}, {p.size}, {m.size}."
            )
        if np.any(m <= 0):
            raise ValueError("Masses must be positive.")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "masses", m)

    @classmethod
    def unit_mass(cls, x, p) -> "PhaseState":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(x=x, p=p, masses=np.ones_like(x))

    @property
    def dof(self) -> int:
        return int(self.x.size)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])


class HamiltonianModel:
    """Generator of continuous-time phase-space motion."""

    name = "model"

    def energy(self, x: np.ndarray, p: np.ndarray, masses: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def rhs(self, y: np.ndarray, masses: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class FreeParticle(HamiltonianModel):
    name = "free"

    def energy(self, x, p, masses):
        return np.sum(p ** 2 / (2.0 * masses), axis=-1)

    def rhs(self, y, masses):
        l = masses.size
        return np.concatenate([y[l:] / masses, np.zeros(l)])


class HarmonicOscillator(HamiltonianModel):
    """Unit mass and unit frequency for every degree of freedom."""

    name = "sho"

    def energy(self, x, p, masses):
        return 0.5 * np.sum(p ** 2 + x ** 2, axis=-1)

    def rhs(self, y, masses):
        l = masses.size
        return np.concatenate([y[l:], -y[:l]])


@dataclass(eq=False)
class CustomField(HamiltonianModel):
    """First-order system dy/dt = vector_field(y) on y = (x_1..x_l, p_1..p_l)."""

    vector_field: Callable[[np.ndarray], np.ndarray]
    energy_fn: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    name: str = "custom"

    def energy(self, x, p, masses):
        if self.energy_fn is None:
            raise ValueError("This custom field has no energy function.")
        return self.energy_fn(x, p)

    def rhs(self, y, masses):
        return np.asarray(self.vector_field(y), dtype=float)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Dense continuous solution; calling it returns (x, p) with shape (len(t), l)."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    dof: int
    t_max: float
    rtol: float
    step_times: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __call__(self, t) -> tuple[np.ndarray, np.ndarray]:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0) or np.any(t > self.t_max * (1 + 1e-12)):
            raise ValueError(f"Trajectory evaluated outside [0, {self.t_max}].")
        y = np.asarray(self.evaluator(t))  # (2l, len(t))
        return y[: self.dof].T, y[self.dof:].T


@dataclass(frozen=True, eq=False)
class MomentReport:
    """First and second phase-space moments for steps n = 0..N.

    Arrays are indexed [n, i] or [n, i, j]; xx and pp hold <x_i x_j> and <p_i p_j>
    (their diagonals are <x_i^2> and <p_i^2>).
    """

    tau: float
    mean_x: np.ndarray
    mean_p: np.ndarray
    xx: np.ndarray
    pp: np.ndarray
    energy: np.ndarray

    @property
    def steps(self) -> np.ndarray:
        return np.arange(self.mean_x.shape[0])

    @property
    def var_x(self) -> np.ndarray:
        return np.diagonal(self.xx, axis1=1, axis2=2) - self.mean_x ** 2

    @property
    def var_p(self) -> np.ndarray:
        return np.diagonal(self.pp, axis1=1, axis2=2) - self.mean_p ** 2

    @property
    def cov_x(self) -> np.ndarray:
        return self.xx - self.mean_x[:, :, None] * self.mean_x[:, None, :]

    @property
    def cov_p(self) -> np.ndarray:
        return self.pp - self.mean_p[:, :, None] * self.mean_p[:, None, :]

    def to_frame(self) -> pd.DataFrame:
        """Long table (n, i, j, moment_name, value) ordered by (n, i, j)."""
        rows = []
        N, l = self.mean_x.shape
        cov_x, cov_p = self.cov_x, self.cov_p
        for n in range(N):
            for i in range(l):
                rows.append((n, i, i, "mean_x", self.mean_x[n, i]))
                rows.append((n, i, i, "mean_p", self.mean_p[n, i]))
                for j in range(i, l):
                    rows.append((n, i, j, "xx", self.xx[n, i, j]))
                    rows.append((n, i, j, "pp", self.pp[n, i, j]))
                    rows.append((n, i, j, "cov_x", cov_x[n, i, j]))
                    rows.append((n, i, j, "cov_p", cov_p[n, i, j]))
            rows.append((n, -1, -1, "energy", self.energy[n]))
        df = pd.DataFrame(rows, columns=["n", "i", "j", "moment_name", "value"])
        return df.sort_values(["n", "i", "j"], kind="stable").reset_index(drop=True)


# ---------------------------------------------------------------------------
# quantum
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensityMatrix:
    energies: np.ndarray
    coeffs: np.ndarray

    HERMITIAN_TOL = 1e-12
    TRACE_TOL = 1e-12
    PSD_TOL = 1e-10

    def __post_init__(self):
        e = np.atleast_1d(np.asarray(self.energies, dtype=float))
        a = np.asarray(self.coeffs, dtype=complex)
        d = e.size
        if a.shape != (d, d):
            raise ValueError(f"Coefficient matrix must be {d}x{d}, got {a.shape}.")
        if np.max(np.abs(a - a.conj().T)) > self.HERMITIAN_TOL:
            raise ValueError("Density matrix is not Hermitian.")
        if abs(np.trace(a) - 1.0) > self.TRACE_TOL:
            raise ValueError(f"Density matrix trace is {np.trace(a).real:.15g}, not 1.")
        if np.linalg.eigvalsh(a).min() < -self.PSD_TOL:
            raise ValueError("Density matrix is not positive semidefinite.")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "coeffs", a)

    @property
    def dim(self) -> int:
        return int(self.energies.size)


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float
    tau: float
    name: str = "custom"

    def __post_init__(self):
        if not (self.hbar > 0 and self.tau > 0):
            raise ValueError("hbar and tau must both be positive.")

    @classmethod
    def preset(cls, name: str, tau: Optional[float] = None) -> "PhysicalConstants":
        if name not in PRESETS:
            raise ConfigError(f"Unknown preset {name!r}; choose one of {', '.join(PRESETS)}.")
        values = PRESETS[name]
        return cls(hbar=values["hbar"], tau=values["tau"] if tau is None else tau, name=name)

    def dimensionless_gap(self, delta_e):
        return self.tau * np.asarray(delta_e, dtype=float) / self.hbar


@dataclass(frozen=True)
class DecoherencePair:
    alpha: int
    beta: int
    delta_e: float
    t_d: float
    moduli: tuple


@dataclass(frozen=True)
class DecoherenceReport:
    steps: tuple
    pairs: tuple

    def to_frame(self) -> pd.DataFrame:
        rows = [
            (p.alpha, p.beta, p.delta_e, p.t_d, n, m)
            for p in self.pairs
            for n, m in zip(self.steps, p.moduli)
        ]
        return pd.DataFrame(rows, columns=["alpha", "beta", "delta_e", "t_d", "n", "modulus"])


# ---------------------------------------------------------------------------
# nonlinear
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SensitivityModel:
    """x_ct(a, t) = cos(b e^{ct}) with cos b = a on the principal branch."""

    a: float
    c: float

    def __post_init__(self):
        if not abs(self.a) < 1:
            raise ValueError(f"Initial value a must satisfy |a| < 1, got {self.a!r}.")
        if not self.c > 0:
            raise ValueError(f"Growth rate c must be positive, got {self.c!r}.")

    @property
    def b(self) -> float:
        return math.acos(self.a)

    @property
    def amplitude(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.a ** 2)

    def bound(self, tau: float) -> float:
        return 2.0 * self.amplitude / (self.b * self.c * tau)


@dataclass(frozen=True)
class LyapunovEstimate:
    exponent: float
    intercept: float
    window: tuple
    residual: float
    points: int


# ---------------------------------------------------------------------------
# cli
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict
    seed: int
    preset: str
    output_format: str = "csv"
    output_path: Optional[str] = None

    def echo(self) -> dict:
        return {
            "command": self.command,
            "params": {k: _plain(v) for k, v in sorted(self.params.items())},
            "seed": self.seed,
            "preset": self.preset,
            "format": self.output_format,
            "output": self.output_path,
        }


@dataclass(frozen=True, eq=False)
class ReportEnvelope:
    """meta never feeds into the payload bytes; data is a DataFrame (table) or a dict (tree)."""

    meta: dict
    data: Any


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v
