"""System configuration and transceiver-quality helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class SystemConfig:
    """Static parameters of one IRS-assisted uplink/downlink system.

    Attributes:
        M: Number of base-station antennas.
        N: Number of reflecting elements (0 disables the surface).
        K: Number of single-antenna users.
        beta_d: Per-entry variance of the direct channel (C_D = beta_d * I).
        beta_r: Per-entry variance scale of the cascade channel; each cascade
            column has per-entry variance beta_r, so the composite BS-side
            vector has per-entry variance N * beta_r.
        kappa_b: Distortion proportionality coefficient at the BS.
        kappa_u: Distortion proportionality coefficient at the user.
        p_u: Uplink transmit power (linear, Joule per channel use).
        p_b: Downlink transmit power (linear, Joule per channel use).
        sigma2_b: AWGN variance at the BS.
        sigma2_u: AWGN variance at the user.
        tau: Coherence-block length in channel uses.
        tau1, tau2, tau3: Pilot slots of the three training phases.
        tau_u, tau_d: Uplink / downlink data slots.
    """

    M: int = 10
    N: int = 25
    K: int = 1
    beta_d: float = 1.0
    beta_r: float = 1.0
    kappa_b: float = 0.0
    kappa_u: float = 0.0
    p_u: float = 1.0
    p_b: float = 1.0
    sigma2_b: float = 1.0
    sigma2_u: float = 1.0
    tau: int = 1000
    tau1: int = 1
    tau2: int = 25
    tau3: int = 0
    tau_u: int = 0
    tau_d: int = 974

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.N < 0:
            raise ValueError("N must be >= 0")
        for name in ("beta_d", "beta_r", "sigma2_b", "sigma2_u"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("kappa_b", "kappa_u", "p_u", "p_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        slots = ("tau", "tau1", "tau2", "tau3", "tau_u", "tau_d")
        for name in slots:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        used = self.tau1 + self.tau2 + self.tau3 + self.tau_u + self.tau_d
        if used > self.tau:
            raise ValueError(
                f"slot allocations exceed the coherence block: {used} > {self.tau}"
            )
        if self.tau2 < self.N:
            raise ValueError(
                f"tau2 must be >= N for a full-rank pilot schedule ({self.tau2} < {self.N})"
            )

    def with_updates(self, **kwargs) -> "SystemConfig":
        """Return a copy with the given fields replaced (re-validated)."""
        return replace(self, **kwargs)

    @property
    def v_u_uplink(self) -> float:
        """Variance of the user-side distortion at full uplink power."""
        return self.kappa_u * self.p_u

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


def evm_of(kappa: float) -> float:
    """Error vector magnitude for a distortion coefficient.

    EVM is the square root of the ratio of distortion power to signal power.
    LTE-grade transceivers fall in roughly [0.08, 0.175].

    Args:
        kappa: Nonnegative distortion proportionality coefficient.

    Returns:
        sqrt(kappa).

    Raises:
        ValueError: If kappa is negative.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    return math.sqrt(kappa)


def db_to_linear(db: float) -> float:
    """Convert a dB value to linear scale."""
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    """Convert a positive linear value to dB."""
    if x <= 0:
        raise ValueError("linear value must be > 0")
    return 10.0 * math.log10(x)
