"""Transmit/receive beamforming and reflect-phase optimization.

With distortion noise, the receive-SNR-optimal beamformers are regularized
matched filters built from two noise shaping matrices U (uplink) and D
(downlink). The reflect phases are optimized by gradient ascent with
backtracking line search on an unconstrained surrogate objective that is
equivalent to maximizing the downlink SNR over the phase vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization
from .config import SystemConfig


@dataclass(frozen=True)
class NoiseShapingMatrices:
    """Effective-noise covariance shapes entering the optimal beamformers.

    D = D_tilde + kappa_u * h_hat h_hat^H exactly; U swaps the downlink
    noise-to-power ratio sigma_u^2/p_b for the uplink sigma_b^2/p_u.
    """

    U: np.ndarray
    D: np.ndarray
    D_tilde: np.ndarray


def noise_shaping_matrices(h_hat: np.ndarray, config: SystemConfig) -> NoiseShapingMatrices:
    """Build U, D and the rank-one-free D_tilde for a channel estimate.

    Raises:
        ValueError: If either transmit power is zero.
    """
    if config.p_u <= 0 or config.p_b <= 0:
        raise ValueError("beamforming requires positive transmit powers")
    h_hat = np.asarray(h_hat, dtype=complex)
    kappa = (1.0 + config.kappa_u) * config.kappa_b
    outer = np.outer(h_hat, h_hat.conj())
    diag = np.diag(np.abs(h_hat) ** 2)
    eye = np.eye(h_hat.size)
    U = kappa * diag + config.kappa_u * outer + (config.sigma2_b / config.p_u) * eye
    D = kappa * diag + config.kappa_u * outer + (config.sigma2_u / config.p_b) * eye
    D_tilde = kappa * diag + (config.sigma2_u / config.p_b) * eye
    return NoiseShapingMatrices(U=U, D=D, D_tilde=D_tilde)


def optimal_beamformers(
    h_hat: np.ndarray, mats: NoiseShapingMatrices
) -> tuple[np.ndarray, np.ndarray]:
    """Receive combiner and transmit beamformer maximizing the SNR.

    Both are regularized matched filters, w = X^-1 h_hat normalized to unit
    norm, with X = U for receive and X = D for transmit.
    """
    h_hat = np.asarray(h_hat, dtype=complex)
    w_rx = np.linalg.solve(mats.U, h_hat)
    w_rx = w_rx / np.linalg.norm(w_rx)
    w_tx = np.linalg.solve(mats.D, h_hat)
    w_tx = w_tx / np.linalg.norm(w_tx)
    return w_rx, w_tx


def snr_downlink(w: np.ndarray, h_hat: np.ndarray, config: SystemConfig) -> float:
    """Downlink receive SNR of beamformer w: |h_hat^H w|^2 / (w^H D w)."""
    mats = noise_shaping_matrices(h_hat, config)
    num = np.abs(np.vdot(h_hat, w)) ** 2
    den = np.vdot(w, mats.D @ w).real
    return float(num / den)


# ---------------------------------------------------------------------------
# reflect-phase objective


def _effective_channel(theta: np.ndarray, real: ChannelRealization) -> np.ndarray:
    if real.N == 0:
        return real.h_d.copy()
    return real.h_d + real.H_R @ np.exp(1j * np.asarray(theta, dtype=float))


def objective_p4(
    theta: np.ndarray, real: ChannelRealization, config: SystemConfig
) -> float:
    """Phase objective sum_i |u_i|^2 / (kappa |u_i|^2 + sigma_u^2/p_b).

    u = h_d + H_R e^{j theta} is the phase-noise-free effective channel and
    kappa = (1 + kappa_u) * kappa_b. Maximizing this is equivalent to
    maximizing the downlink SNR achieved by the matched transmit beamformer.
    """
    u = _effective_channel(theta, real)
    kappa = (1.0 + config.kappa_u) * config.kappa_b
    c = config.sigma2_u / config.p_b
    pw = np.abs(u) ** 2
    return float(np.sum(pw / (kappa * pw + c)))


def gradient_p4(
    theta: np.ndarray, real: ChannelRealization, config: SystemConfig
) -> np.ndarray:
    """Gradient of objective_p4 in the phase vector."""
    theta = np.asarray(theta, dtype=float)
    u = _effective_channel(theta, real)
    kappa = (1.0 + config.kappa_u) * config.kappa_b
    c = config.sigma2_u / config.p_b
    den = kappa * np.abs(u) ** 2 + c
    r = real.H_R.T @ (u.conj() / den**2)
    return 2.0 * c * np.real(1j * np.exp(1j * theta) * r)


def align_to_strongest_antenna(real: ChannelRealization) -> np.ndarray:
    """Initial phases matching each element to the strongest direct entry.

    theta_n = arg(h_d,i*) - arg(H_R[i*, n]) with i* the index of the largest
    |h_d| entry; this is the exact optimum for a single-antenna receiver.
    """
    if real.N == 0:
        return np.zeros(0)
    i_star = int(np.argmax(np.abs(real.h_d)))
    return np.angle(real.h_d[i_star]) - np.angle(real.H_R[i_star, :])


@dataclass(frozen=True)
class GdmOptions:
    """Gradient-ascent controls: stop tolerance and Armijo line search."""

    tolerance: float = 1e-8
    max_iters: int = 500
    armijo_slope: float = 0.3
    shrink: float = 0.5
    initial_step: float = 1.0
    min_step: float = 1e-14


@dataclass(frozen=True)
class BeamformingSolution:
    """Optimized phases with the matching shaped matched-filter beamformers."""

    w_tx: np.ndarray
    w_rx: np.ndarray
    theta_opt: np.ndarray
    objective_trace: tuple[tuple[int, float], ...]
    iterations: int
    converged: bool = True


def gdm_optimize(
    real: ChannelRealization,
    config: SystemConfig,
    opts: GdmOptions = GdmOptions(),
) -> BeamformingSolution:
    """Gradient ascent with backtracking line search on the phase objective.

    Starts from the strongest-antenna alignment, accepts only steps passing
    the Armijo condition (so the objective trace is non-decreasing), and
    stops when the relative improvement drops below opts.tolerance. If
    max_iters is exhausted the best iterate so far is returned with
    converged=False.
    """
    theta = align_to_strongest_antenna(real)
    f = objective_p4(theta, real, config)
    trace = [(0, f)]
    converged = real.N == 0
    accepted_steps = 0

    if real.N > 0:
        for it in range(1, opts.max_iters + 1):
            g = gradient_p4(theta, real, config)
            gnorm2 = float(g @ g)
            if not np.isfinite(gnorm2) or gnorm2 == 0.0:
                converged = True
                break
            step = opts.initial_step
            accepted = False
            while step >= opts.min_step:
                cand = theta + step * g
                f_cand = objective_p4(cand, real, config)
                if f_cand >= f + opts.armijo_slope * step * gnorm2:
                    accepted = True
                    break
                step *= opts.shrink
            if not accepted:
                converged = True  # no ascent direction left at float precision
                break
            improvement = f_cand - f
            theta, f = cand, f_cand
            accepted_steps += 1
            trace.append((accepted_steps, f))
            if improvement <= opts.tolerance * max(abs(f), 1e-300):
                converged = True
                break

    h_hat = _effective_channel(theta, real)
    mats = noise_shaping_matrices(h_hat, config)
    w_rx, w_tx = optimal_beamformers(h_hat, mats)
    return BeamformingSolution(
        w_tx=w_tx,
        w_rx=w_rx,
        theta_opt=theta,
        objective_trace=tuple(trace),
        iterations=accepted_steps,
        converged=converged,
    )
