"""Monte Carlo simulator for IRS-assisted MISO links with hardware impairments.

The package models a multi-antenna base station serving single-antenna users
through a direct link plus an intelligent reflecting surface (IRS), with
transceiver distortion noise at both ends and phase noise at the surface.
It provides LMMSE pilot-based channel estimation with closed-form MSEs,
impairment-aware beamforming, capacity and power-scaling limits, an energy
efficiency model, and a deterministic seeded experiment runner with a CLI.
"""

__version__ = "0.1.0"

from .config import SystemConfig, evm_of
from .channel import (
    ChannelRealization,
    ImpairmentDraw,
    PhaseNoiseModel,
    PhaseState,
    overall_channel,
    sample_channels,
    sample_phase_noise,
    simulate_downlink_rx,
    simulate_uplink_rx,
)

__all__ = [
    "SystemConfig",
    "evm_of",
    "ChannelRealization",
    "ImpairmentDraw",
    "PhaseNoiseModel",
    "PhaseState",
    "overall_channel",
    "sample_channels",
    "sample_phase_noise",
    "simulate_downlink_rx",
    "simulate_uplink_rx",
    "__version__",
]
