"""Channel sampling, IRS phase states, and received-signal synthesis.

The physical model is

    h = h_d + G * diag(exp(j(theta + delta_theta))) * h_r
      = h_d + H_R * v,

with additive transceiver distortion noise at both link ends whose power is
proportional to the instantaneous signal power, plus AWGN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig

TWO_PI = 2.0 * math.pi


def complex_gaussian(rng: np.random.Generator, shape, var: float) -> np.ndarray:
    """Draw circularly symmetric complex Gaussians with the given variance.

    Real and imaginary parts are i.i.d. N(0, var / 2).
    """
    if var < 0:
        raise ValueError("variance must be >= 0")
    scale = math.sqrt(var / 2.0)
    re = rng.normal(0.0, 1.0, shape)
    im = rng.normal(0.0, 1.0, shape)
    return scale * (re + 1j * im)


@dataclass(frozen=True)
class PhaseNoiseModel:
    """Distribution of the per-element IRS phase error.

    kind is one of "none", "uniform" (on [-half_width, half_width]) or
    "von_mises" (zero-centered with the given concentration). All supported
    models are symmetric about zero, so the phase error has zero mean
    direction.
    """

    kind: str = "none"
    half_width: float = math.pi / 6.0
    concentration: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("none", "uniform", "von_mises"):
            raise ValueError(f"unknown phase-noise model: {self.kind!r}")
        if not 0.0 <= self.half_width <= math.pi:
            raise ValueError("half_width must lie in [0, pi]")
        if self.concentration < 0:
            raise ValueError("concentration must be >= 0")


NO_PHASE_NOISE = PhaseNoiseModel(kind="none")


def sample_phase_noise(
    N: int, model: PhaseNoiseModel, rng: np.random.Generator
) -> np.ndarray:
    """Draw i.i.d. phase errors for N reflecting elements.

    Returns:
        Length-N array of radians in [-pi, pi].
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    if model.kind == "none" or N == 0:
        return np.zeros(N)
    if model.kind == "uniform":
        return rng.uniform(-model.half_width, model.half_width, N)
    return rng.vonmises(0.0, model.concentration, N)


@dataclass(frozen=True)
class PhaseState:
    """IRS phase configuration plus one phase-noise realization.

    theta holds the commanded phase shifts wrapped to [0, 2*pi); delta_theta
    holds the unknown phase errors in [-pi, pi]; v is the resulting
    unit-modulus response exp(j(theta + delta_theta)).
    """

    theta: np.ndarray
    delta_theta: np.ndarray
    noise_model: PhaseNoiseModel = NO_PHASE_NOISE
    v: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        theta = np.mod(np.asarray(self.theta, dtype=float), TWO_PI)
        delta = np.asarray(self.delta_theta, dtype=float)
        if theta.shape != delta.shape or theta.ndim != 1:
            raise ValueError("theta and delta_theta must be 1-D with equal length")
        if delta.size and (np.max(np.abs(delta)) > math.pi + 1e-12):
            raise ValueError("delta_theta entries must lie in [-pi, pi]")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "delta_theta", delta)
        object.__setattr__(self, "v", np.exp(1j * (theta + delta)))

    @property
    def n_elements(self) -> int:
        return self.theta.size


def make_phase_state(
    theta: np.ndarray,
    model: PhaseNoiseModel = NO_PHASE_NOISE,
    rng: np.random.Generator | None = None,
) -> PhaseState:
    """Build a PhaseState by drawing phase noise from the given model."""
    theta = np.asarray(theta, dtype=float)
    if model.kind != "none" and rng is None:
        raise ValueError("rng required when the phase-noise model is stochastic")
    delta = sample_phase_noise(theta.size, model, rng or np.random.default_rng())
    return PhaseState(theta=theta, delta_theta=delta, noise_model=model)


def zero_phase_state(N: int) -> PhaseState:
    """All-zero phases with no phase noise."""
    return PhaseState(theta=np.zeros(N), delta_theta=np.zeros(N))


@dataclass(frozen=True)
class ChannelRealization:
    """One block-fading draw of the direct and cascade channels.

    h_d is the M-vector direct channel, G the M x N BS-IRS matrix, h_r the
    N-vector IRS-user channel, H_R = G * diag(h_r) the cascade matrix whose
    column n is the channel through element n, and h_c = G * h_r = H_R * 1
    the composite cascade vector.
    """

    h_d: np.ndarray
    G: np.ndarray
    h_r: np.ndarray
    H_R: np.ndarray
    h_c: np.ndarray

    @property
    def M(self) -> int:
        return self.h_d.size

    @property
    def N(self) -> int:
        return self.h_r.size


def sample_channels(
    config: SystemConfig, rng: np.random.Generator, mode: str = "composite"
) -> ChannelRealization:
    """Draw one channel realization.

    Modes:
        "composite": G and h_r are entrywise i.i.d. complex Gaussian with
            per-entry variances beta_g = beta_h = sqrt(beta_r), so each
            cascade column has per-entry variance beta_r and the composite
            vector h_c has per-entry variance N * beta_r.
        "direct_cascade": the cascade columns H_R[:, n] are drawn i.i.d.
            complex Gaussian with per-entry variance beta_r directly (h_r is
            fixed to ones and G = H_R), which makes h_c exactly Gaussian with
            per-entry variance N * beta_r.

    Either mode reproduces the same second-order statistics; they differ in
    the higher-order distribution of the cascade entries.
    """
    M, N = config.M, config.N
    h_d = complex_gaussian(rng, M, config.beta_d)
    if mode == "composite":
        beta_side = math.sqrt(config.beta_r)
        G = complex_gaussian(rng, (M, N), beta_side)
        h_r = complex_gaussian(rng, N, beta_side)
        H_R = G * h_r[np.newaxis, :]
        h_c = H_R.sum(axis=1)
    elif mode == "direct_cascade":
        H_R = complex_gaussian(rng, (M, N), config.beta_r)
        h_r = np.ones(N, dtype=complex)
        G = H_R
        h_c = H_R.sum(axis=1)
    else:
        raise ValueError(f"unknown sampling mode: {mode!r}")
    return ChannelRealization(h_d=h_d, G=G, h_r=h_r, H_R=H_R, h_c=h_c)


def overall_channel(real: ChannelRealization, phases: PhaseState) -> np.ndarray:
    """Effective BS-side channel h_d + H_R * v for the given phase state."""
    if phases.n_elements != real.N:
        raise ValueError("phase state does not match the number of elements")
    if real.N == 0:
        return real.h_d.copy()
    return real.h_d + real.H_R @ phases.v


@dataclass(frozen=True)
class ImpairmentDraw:
    """One realization of distortion noise and AWGN for a single channel use.

    v_u is the variance of the user-side distortion eta_u; Upsilon_B is the
    covariance of the BS-side distortion eta_b. Both scale with the
    instantaneous signal power, so a silent transmitter produces zero
    distortion.
    """

    eta_u: complex
    eta_b: np.ndarray
    awgn: np.ndarray | complex
    v_u: float
    Upsilon_B: np.ndarray


def draw_uplink_impairments(
    x: complex,
    h_hat: np.ndarray,
    config: SystemConfig,
    rng: np.random.Generator,
) -> ImpairmentDraw:
    """Draw uplink distortion and AWGN conditioned on the channel.

    The user distortion has variance v_u = kappa_u * |x|^2 and the BS
    distortion covariance is the per-realization (conditional) model
    Upsilon_B = kappa_b * (|x|^2 + v_u) * diag(h_hat h_hat^H).
    """
    M = h_hat.size
    sig_pow = abs(x) ** 2
    v_u = config.kappa_u * sig_pow
    diag_pow = config.kappa_b * (sig_pow + v_u) * np.abs(h_hat) ** 2
    eta_u = complex(complex_gaussian(rng, (), v_u)) if v_u > 0 else 0.0 + 0.0j
    eta_b = complex_gaussian(rng, M, 1.0) * np.sqrt(diag_pow)
    awgn = complex_gaussian(rng, M, config.sigma2_b)
    return ImpairmentDraw(
        eta_u=eta_u,
        eta_b=eta_b,
        awgn=awgn,
        v_u=v_u,
        Upsilon_B=np.diag(diag_pow).astype(complex),
    )


def draw_downlink_impairments(
    x: np.ndarray,
    h_hat: np.ndarray,
    config: SystemConfig,
    rng: np.random.Generator,
) -> ImpairmentDraw:
    """Draw downlink distortion and AWGN conditioned on the transmit vector.

    The BS distortion covariance is Upsilon_B = kappa_b * diag(x x^H); the
    user distortion variance is
    v_u = kappa_u * (|h_hat^H x|^2 + h_hat^H Upsilon_B h_hat).
    """
    diag_pow = config.kappa_b * np.abs(x) ** 2
    v_u = float(
        config.kappa_u
        * (abs(np.vdot(h_hat, x)) ** 2 + np.sum(diag_pow * np.abs(h_hat) ** 2))
    )
    eta_b = complex_gaussian(rng, x.size, 1.0) * np.sqrt(diag_pow)
    eta_u = complex(complex_gaussian(rng, (), v_u)) if v_u > 0 else 0.0 + 0.0j
    awgn = complex(complex_gaussian(rng, (), config.sigma2_u))
    return ImpairmentDraw(
        eta_u=eta_u,
        eta_b=eta_b,
        awgn=awgn,
        v_u=v_u,
        Upsilon_B=np.diag(diag_pow).astype(complex),
    )


def simulate_uplink_rx(
    x: complex,
    real: ChannelRealization,
    phases: PhaseState,
    config: SystemConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Received BS vector y = h*(x + eta_u) + eta_b + n for one channel use."""
    h = overall_channel(real, phases)
    imp = draw_uplink_impairments(x, h, config, rng)
    return h * (x + imp.eta_u) + imp.eta_b + imp.awgn


def simulate_downlink_rx(
    x: np.ndarray,
    real: ChannelRealization,
    phases: PhaseState,
    config: SystemConfig,
    rng: np.random.Generator,
) -> complex:
    """Received user scalar y = h^H (x + eta_b) + eta_u + n."""
    h = overall_channel(real, phases)
    imp = draw_downlink_impairments(x, h, config, rng)
    return complex(np.vdot(h, x + imp.eta_b) + imp.eta_u + imp.awgn)
