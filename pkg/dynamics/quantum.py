"""Discrete-time density-matrix evolution in the energy eigenbasis.

The backward-difference von Neumann step acts entrywise: element (alpha, beta) picks up
[1 + i tau (e_alpha - e_beta)/hbar]^(-n). Diagonal and degenerate entries never move;
all other coherences decay, which is the decoherence this module quantifies.
"""
import logging
import math

import numpy as np

from dynamics.kernel import oscillation_signal, transform_quadrature
from extensions import parallel_map
from models import (
    DecoherencePair,
    DecoherenceReport,
    DensityMatrix,
    GammaKernel,
    PhysicalConstants,
    QuadratureRule,
)
from units import JULIAN_YEAR

logger = logging.getLogger(__name__)

TEN_BILLION_YEARS = 1e10 * JULIAN_YEAR


def _gaps(energies: np.ndarray, constants: PhysicalConstants) -> np.ndarray:
    e = np.asarray(energies, dtype=float)
    return constants.dimensionless_gap(e[:, None] - e[None, :])


def schur_multiplier(energies, n: int, constants: PhysicalConstants) -> np.ndarray:
    """Factor matrix [1 + i x_ab]^(-n), x_ab = tau (e_a - e_b)/hbar, in polar form."""
    if n < 0:
        raise ValueError("Backward evolution (n < 0) is not supported.")
    x = _gaps(energies, constants)
    if n == 0:
        return np.ones(x.shape, dtype=complex)
    return np.exp(-n * (0.5 * np.log1p(x ** 2) + 1j * np.arctan(x)))


def evolve_density(dm: DensityMatrix, n: int, constants: PhysicalConstants) -> DensityMatrix:
    return DensityMatrix(energies=dm.energies, coeffs=dm.coeffs * schur_multiplier(dm.energies, n, constants))


def decoherence_time(delta_e: float, constants: PhysicalConstants) -> float:
    """T_d = 2 tau / log(1 + (delta_e tau / hbar)^2); infinite for degenerate levels."""
    x = abs(float(constants.dimensionless_gap(delta_e)))
    if x == 0.0:
        return math.inf
    return 2.0 * constants.tau / math.log1p(x * x)


def offdiagonal_modulus(n: int, delta_e: float, constants: PhysicalConstants) -> float:
    if n < 0:
        raise ValueError("n must be non-negative.")
    x = float(constants.dimensionless_gap(delta_e))
    return math.exp(-0.5 * n * math.log1p(x * x))


def decoherence_landmarks(t_d: float) -> dict:
    """Compare T_d with the 10^10-year and 10^-23-second reference scales."""
    return {
        "t_d_years": t_d / JULIAN_YEAR,
        "exceeds_1e10_years": bool(t_d > TEN_BILLION_YEARS),
        "order_1e-23_s": bool(1e-23 <= t_d < 1e-22),
    }


def decoherence_report(dm: DensityMatrix, steps, constants: PhysicalConstants) -> DecoherenceReport:
    steps = tuple(int(n) for n in steps)
    pairs = []
    for a in range(dm.dim):
        for b in range(a + 1, dm.dim):
            delta = abs(dm.energies[a] - dm.energies[b])
            size = abs(dm.coeffs[a, b])
            pairs.append(DecoherencePair(
                alpha=a,
                beta=b,
                delta_e=float(delta),
                t_d=decoherence_time(delta, constants),
                moduli=tuple(size * offdiagonal_modulus(n, delta, constants) for n in steps),
            ))
    return DecoherenceReport(steps=steps, pairs=tuple(pairs))


def purity(dm: DensityMatrix) -> float:
    return float(np.sum(np.abs(dm.coeffs) ** 2))


def gamma_equivalence_check(dm: DensityMatrix, n: int, constants: PhysicalConstants,
                            rule: QuadratureRule | None = None, threads: int | None = None) -> float:
    """Largest entrywise gap between evolve_density and the gamma transform of the continuous
    evolution a_ab exp(-i (e_a - e_b) t / hbar)."""
    direct = evolve_density(dm, n, constants).coeffs
    if n == 0:
        return float(np.max(np.abs(direct - dm.coeffs)))
    kernel = GammaKernel(n, constants.tau)
    if rule is not None and rule.n != n:
        raise ValueError(f"Rule was built for n={rule.n}, not n={n}.")

    omegas = (dm.energies[:, None] - dm.energies[None, :]) / constants.hbar
    upper = [(a, b) for a in range(dm.dim) for b in range(a + 1, dm.dim) if dm.coeffs[a, b] != 0]
    distinct = sorted({float(omegas[a, b]) for a, b in upper})

    def factor(omega):
        if omega == 0.0:
            return 1.0 + 0j
        return transform_quadrature(oscillation_signal(-omega), kernel, rule).value

    factors = dict(zip(distinct, parallel_map(factor, distinct, threads)))
    via_transform = np.diag(np.diag(dm.coeffs)).astype(complex)
    for a, b in upper:
        value = dm.coeffs[a, b] * factors[float(omegas[a, b])]
        via_transform[a, b] = value
        via_transform[b, a] = np.conj(value)
    return float(np.max(np.abs(via_transform - direct)))


def schroedinger_phase(n: int, delta_e: float, constants: PhysicalConstants) -> complex:
    """Right-hand side n arctan(x) + i (n/2) log(1 + x^2) of the phase-consistency equation
    Theta(n, a) - Theta(n, b) for unimodular f(n, a); x = tau delta_e / hbar."""
    if n < 1:
        raise ValueError("The phase equation is stated for n >= 1.")
    x = float(constants.dimensionless_gap(delta_e))
    return complex(n * math.atan(x), 0.5 * n * math.log1p(x * x))


def schroedinger_defect(n: int, delta_e: float, constants: PhysicalConstants) -> float:
    """Imaginary part of the phase equation; positive means no unimodular solution exists."""
    return schroedinger_phase(n, delta_e, constants).imag


def project_density(energies, coeffs, tolerance: float = 1e-12) -> DensityMatrix:
    """Nearest positive semidefinite, unit-trace matrix by eigenvalue clipping."""
    a = np.asarray(coeffs, dtype=complex)
    h = 0.5 * (a + a.conj().T)
    values, vectors = np.linalg.eigh(h)
    clipped = np.clip(values, 0.0, None)
    total = clipped.sum()
    if total <= 0:
        raise ValueError("Matrix has no positive part; cannot project to a density matrix.")
    projected = (vectors * (clipped / total)) @ vectors.conj().T
    projected = 0.5 * (projected + projected.conj().T)
    change = float(np.max(np.abs(projected - a)))
    if change > tolerance:
        logger.warning("Input density matrix projected to PSD unit trace (max entry change %.3g)", change)
    return DensityMatrix(energies=energies, coeffs=projected)


def random_density_matrix(energies, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Wishart-distributed density matrix with the given spectrum labels."""
    d = np.asarray(energies).size
    k = rank or d
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return DensityMatrix(energies=energies, coeffs=0.5 * (rho + rho.conj().T))
