"""Capacity upper bounds and their high-power / large-array limits.

The instantaneous bounds are evaluated through the rank-one-update identity
h^H X^-1 h = x / (1 + kappa_u * x) with x = h^H X_tilde^-1 h and X_tilde the
diagonal part of the noise shaping matrix, which avoids forming or solving
the full matrix and stays stable for extreme powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beamforming import gdm_optimize
from .channel import ChannelRealization, sample_channels
from .config import SystemConfig


@dataclass(frozen=True)
class CapacityReport:
    """Ergodic capacity estimates (bits/channel-use) with context bounds."""

    c_uplink: float
    c_downlink: float
    se_uplink: float
    se_downlink: float
    bounds_power: tuple[float, float]
    bounds_dimension: tuple[float, float]
    trials: int


def _quadratic_gain(h_hat: np.ndarray, kappa: float, noise_over_power: float) -> float:
    """x = h^H X_tilde^-1 h for the diagonal shaping X_tilde."""
    pw = np.abs(np.asarray(h_hat)) ** 2
    return float(np.sum(pw / (kappa * pw + noise_over_power)))


def capacity_downlink_upper(h_hat: np.ndarray, config: SystemConfig) -> float:
    """(tau_d/tau) * log2(1 + h_hat^H D^-1 h_hat)."""
    kappa = (1.0 + config.kappa_u) * config.kappa_b
    x = _quadratic_gain(h_hat, kappa, config.sigma2_u / config.p_b)
    return (config.tau_d / config.tau) * math.log2(1.0 + x / (1.0 + config.kappa_u * x))


def capacity_uplink_upper(h_hat: np.ndarray, config: SystemConfig) -> float:
    """(tau_u/tau) * log2(1 + h_hat^H U^-1 h_hat)."""
    kappa = (1.0 + config.kappa_u) * config.kappa_b
    x = _quadratic_gain(h_hat, kappa, config.sigma2_b / config.p_u)
    return (config.tau_u / config.tau) * math.log2(1.0 + x / (1.0 + config.kappa_u * x))


def asymptotic_bounds_power(config: SystemConfig) -> tuple[float, float]:
    """Capacity limits for transmit power growing without bound.

    Raises:
        ValueError: If both distortion coefficients are zero (the capacity
            is then unbounded in power).
    """
    kb, ku = config.kappa_b, config.kappa_u
    if kb + ku == 0.0:
        raise ValueError("capacity is unbounded in power without impairments")
    pre = config.tau_d / config.tau
    lower = pre * math.log2(1.0 + 1.0 / (kb + ku * (1.0 + kb)))
    upper = pre * math.log2(1.0 + config.M / (kb + ku * (config.M + kb)))
    return lower, upper


def asymptotic_bounds_dimension(config: SystemConfig) -> tuple[float, float]:
    """Capacity limits for array sizes growing without bound.

    Raises:
        ValueError: If kappa_u is zero (the upper limit is then unbounded
            in the antenna count).
    """
    if config.kappa_u == 0.0:
        raise ValueError("capacity is unbounded in array size without user distortion")
    kb, ku = config.kappa_b, config.kappa_u
    pre = config.tau_d / config.tau
    lower = pre * math.log2(1.0 + 1.0 / (kb + ku * (1.0 + kb)))
    upper = pre * math.log2(1.0 + 1.0 / ku)
    return lower, upper


def _phases_for_policy(
    policy: str, real: ChannelRealization, config: SystemConfig
) -> np.ndarray:
    if policy == "zero":
        return np.zeros(real.N)
    if policy == "gdm":
        return gdm_optimize(real, config).theta_opt
    raise ValueError(f"unknown phase policy: {policy!r}")


def ergodic_capacity_mc(
    config: SystemConfig,
    phase_policy: str = "zero",
    trials: int = 1000,
    rng: np.random.Generator | None = None,
    mode: str = "composite",
) -> CapacityReport:
    """Sample mean of the capacity bounds over fresh channel realizations.

    The phase vector is chosen per realization by the policy ("zero" or
    "gdm") and the bounds are evaluated on the phase-noise-free effective
    channel. Bounds that do not exist for the configuration (no
    impairments) are reported as (0, inf) instead of raising.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    sum_d = sum_u = sq_d = sq_u = 0.0
    for _ in range(trials):
        real = sample_channels(config, rng, mode=mode)
        theta = _phases_for_policy(phase_policy, real, config)
        h_hat = real.h_d if real.N == 0 else real.h_d + real.H_R @ np.exp(1j * theta)
        cd = capacity_downlink_upper(h_hat, config)
        cu = capacity_uplink_upper(h_hat, config)
        sum_d += cd
        sum_u += cu
        sq_d += cd * cd
        sq_u += cu * cu
    mean_d = sum_d / trials
    mean_u = sum_u / trials
    if trials > 1:
        se_d = math.sqrt(max(sq_d - trials * mean_d**2, 0.0) / (trials - 1) / trials)
        se_u = math.sqrt(max(sq_u - trials * mean_u**2, 0.0) / (trials - 1) / trials)
    else:
        se_d = se_u = 0.0
    try:
        bp = asymptotic_bounds_power(config)
    except ValueError:
        bp = (0.0, math.inf)
    try:
        bd = asymptotic_bounds_dimension(config)
    except ValueError:
        bd = (0.0, math.inf)
    return CapacityReport(
        c_uplink=mean_u,
        c_downlink=mean_d,
        se_uplink=se_u,
        se_downlink=se_d,
        bounds_power=bp,
        bounds_dimension=bd,
        trials=trials,
    )
