"""Uplink power-scaling laws and downlink energy efficiency.

The transmit power is scaled down with the array sizes while the uplink
rate converges to a finite limit (perfect CSI: 1/(M + kMN^2); estimated
CSI: 1/(sqrt(M)(1+kN^2)), generalized by an exponent alpha). Energy
efficiency divides capacity by the average consumed power including the
circuit model M*rho + zeta.

Variance notation: the per-entry channel variances enter the section's
formulas directly (beta_d for the direct link, beta_r for the per-entry
cascade product), and k = beta_r / beta_d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, PhaseState, complex_gaussian
from .config import SystemConfig


@dataclass(frozen=True)
class PowerScalingConfig:
    """Energy budget and scaling family for the uplink power laws.

    alpha generalizes the estimated-CSI law to E_u/(M^alpha (1+kN^2)^(2
    alpha)); the rate converges to a positive limit only for alpha <= 1/2
    and collapses to zero beyond it, so larger values are permitted purely
    to demonstrate the collapse.
    """

    E_u: float
    k: float
    csi_mode: str = "perfect"
    alpha: float = 0.5

    def __post_init__(self) -> None:
        if self.E_u <= 0:
            raise ValueError("E_u must be positive")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.csi_mode not in ("perfect", "imperfect"):
            raise ValueError(f"unknown csi_mode: {self.csi_mode!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")


def scaled_power(ps: PowerScalingConfig, M: int, N: int) -> float:
    """Transmit power under the scaling law for an (M, N) system."""
    if ps.csi_mode == "perfect":
        return ps.E_u / (M + ps.k * M * N**2)
    return ps.E_u / (M**ps.alpha * (1.0 + ps.k * N**2) ** (2.0 * ps.alpha))


def rate_uplink_perfect(
    real: ChannelRealization,
    phases: PhaseState,
    p_u: float,
    config: SystemConfig,
) -> float:
    """Uplink rate of the matched (MRC) detector with perfect CSI.

    The detector and the signal model use the phase-noise-free channel
    h = h_d + H_R e^{j theta}; phase noise is zero-mean and does not change
    the reflected power, so it drops out of the rate expression.
    """
    if real.N == 0:
        h = real.h_d
    else:
        h = real.h_d + real.H_R @ np.exp(1j * phases.theta)
    n2 = float(np.sum(np.abs(h) ** 2))
    if n2 == 0.0:
        return 0.0
    gain = n2 * n2  # |h^H h|^2
    den = (
        config.kappa_u * p_u * gain
        + n2 * (config.sigma2_b + p_u * config.kappa_b * (1.0 + config.kappa_u))
    )
    return math.log2(1.0 + p_u * gain / den)


def effective_prior_variance(config: SystemConfig, k: float, N: int) -> float:
    """Aggregate channel variance beta = (1 + k N^2) beta_d of the MRC model."""
    return (1.0 + k * N**2) * config.beta_d


def estimation_error_variance(beta: float, p_u: float) -> float:
    """Per-entry error variance beta / (p_u beta + 1) of the imported model."""
    return beta / (p_u * beta + 1.0)


def draw_estimated_channel(
    rng: np.random.Generator, M: int, beta: float, p_u: float
) -> np.ndarray:
    """Sample the estimated channel, per-entry variance p_u beta^2/(p_u beta+1)."""
    return complex_gaussian(rng, (M,), p_u * beta**2 / (p_u * beta + 1.0))


def rate_uplink_imperfect(
    h_prime: np.ndarray,
    est_var: float,
    p_u: float,
    config: SystemConfig,
) -> float:
    """Uplink MRC rate with an estimated channel and known error variance.

    h_prime is the estimated channel vector itself (its aggregate model is
    drawn via draw_estimated_channel, not produced by the pilot estimator).
    """
    n2 = float(np.sum(np.abs(np.asarray(h_prime)) ** 2))
    if n2 == 0.0:
        return 0.0
    gain = n2 * n2
    den = (
        (1.0 + config.kappa_u) * p_u * n2 * est_var
        + config.kappa_u * p_u * gain
        + n2 * (config.sigma2_b + p_u * config.kappa_b * (1.0 + config.kappa_u))
    )
    return math.log2(1.0 + p_u * gain / den)


def rate_limits(ps: PowerScalingConfig, config: SystemConfig) -> float:
    """Asymptotic uplink rate under the scaling law as M, N grow."""
    b = config.beta_d
    if ps.csi_mode == "perfect":
        s = ps.E_u * b
    else:
        s = ps.E_u**2 * b**2
    return math.log2(1.0 + s / (config.kappa_u * s + config.sigma2_b))


# ---------------------------------------------------------------------------
# energy efficiency


@dataclass(frozen=True)
class EnergyConfig:
    """Circuit-power model and pilot overhead for the energy analysis."""

    rho: float = 0.0
    zeta: float = 0.5e-6
    tau_pilot: int = 0

    def __post_init__(self) -> None:
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        if self.zeta < 0:
            raise ValueError("zeta must be >= 0")
        if self.tau_pilot < 0:
            raise ValueError("tau_pilot must be >= 0")


def _check_budget(e: EnergyConfig, config: SystemConfig) -> None:
    if e.tau_pilot + config.tau_u + config.tau_d > config.tau:
        raise ValueError("pilot and data slots exceed the coherence block")
    if config.tau_u + config.tau_d == 0:
        raise ValueError("no transmission slots allocated")


def average_power(e: EnergyConfig, config: SystemConfig) -> tuple[float, float]:
    """(downlink, uplink) average power in Joule per channel use."""
    _check_budget(e, config)
    circuit = config.M * e.rho + e.zeta
    shared = e.tau_pilot * config.p_u / config.tau + circuit
    frac_d = config.tau_d / (config.tau_u + config.tau_d)
    frac_u = config.tau_u / (config.tau_u + config.tau_d)
    down = frac_d * shared + config.tau_d * config.p_b / config.tau
    up = frac_u * shared + config.tau_u * config.p_u / config.tau
    return down, up


def total_energy(e: EnergyConfig, config: SystemConfig) -> float:
    """Energy consumed per coherence block, transmit plus circuit."""
    return (
        config.tau_d * config.p_b
        + (e.tau_pilot + config.tau_u) * config.p_u
        + config.tau * (config.M * e.rho + e.zeta)
    )


def energy_efficiency_downlink(
    C_d: float, e: EnergyConfig, config: SystemConfig
) -> float:
    """Downlink capacity per downlink average power (bits/Joule)."""
    _check_budget(e, config)
    down, _ = average_power(e, config)
    if down <= 0.0:
        raise ValueError("average downlink power must be positive")
    return C_d / down


def ee_bounds(e: EnergyConfig, config: SystemConfig) -> tuple[float, float, float]:
    """(lower, upper, finite_M_upper) on the maximal energy efficiency.

    Valid for rho = 0 with transmit power terms neglected; the denominator
    is tau*zeta/(tau_u + tau_d). kappa_u = 0 gives an unbounded upper limit.
    """
    _check_budget(e, config)
    if e.zeta <= 0:
        raise ValueError("static circuit power must be positive")
    kb, ku = config.kappa_b, config.kappa_u
    den = config.tau * e.zeta / (config.tau_u + config.tau_d)
    if kb + ku == 0.0:
        return math.inf, math.inf, math.inf
    lower = math.log2(1.0 + 1.0 / (kb + ku * (1.0 + kb))) / den
    upper = math.inf if ku == 0.0 else math.log2(1.0 + 1.0 / ku) / den
    finite = math.log2(1.0 + config.M / (kb + ku * (config.M + kb))) / den
    return lower, upper, finite
