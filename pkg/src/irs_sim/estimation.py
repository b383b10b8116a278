"""Three-phase LMMSE channel estimation under transceiver distortion.

Phase I estimates the direct channel with the surface off. Phase II switches
all elements on, drives them through a DFT schedule, and estimates the
cascade matrix of the (first) user after cancelling the estimated direct
contribution. Phase III estimates the remaining users' cascade channels
through per-element ratio variables, activating at most M elements per slot.

Closed-form MSEs and their high-power floors are provided next to Monte
Carlo counterparts that simulate the full received-signal chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import complex_gaussian
from .config import SystemConfig


# ---------------------------------------------------------------------------
# pilot construction


def dft_pilot_matrix(N: int, tau2: int) -> np.ndarray:
    """First N rows of the tau2-point DFT matrix (unit-modulus entries).

    Rows are mutually orthogonal with Phi @ Phi^H = tau2 * I, which requires
    tau2 >= N.

    Raises:
        ValueError: If tau2 < N or N < 1.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if tau2 < N:
        raise ValueError(f"tau2 must be >= N ({tau2} < {N})")
    n = np.arange(N)[:, np.newaxis]
    t = np.arange(tau2)[np.newaxis, :]
    return np.exp(-2j * math.pi * n * t / tau2)


def orthogonal_user_pilots(K: int, tau1: int, p_u: float) -> np.ndarray:
    """K orthogonal constant-modulus pilot rows with row energy tau1 * p_u."""
    if tau1 < K:
        raise ValueError(f"tau1 must be >= K ({tau1} < {K})")
    return math.sqrt(p_u) * dft_pilot_matrix(K, tau1)


@dataclass(frozen=True)
class Phase3Slot:
    """One phase-III slot: `user` transmits while `elements` are switched on."""

    user: int
    elements: np.ndarray


@dataclass(frozen=True)
class PilotPlan:
    """Pilot allocation across the three training phases."""

    tau1: int
    tau2: int
    tau3: int
    pilot_power: float
    pilots_phase1: np.ndarray
    Phi_II: np.ndarray
    phase3_schedule: tuple[Phase3Slot, ...] = field(default_factory=tuple)


def make_pilot_plan(config: SystemConfig) -> PilotPlan:
    """Default plan: DFT user pilots, DFT element schedule, M-sized on-sets.

    Phase III allocates ceil(N / M) slots to each of the K - 1 non-reference
    users; the on-sets partition {0, ..., N-1} with at most M active elements
    per slot, and the active elements keep zero phase shifts.
    """
    pilots = orthogonal_user_pilots(config.K, max(config.tau1, 1), config.p_u)
    phi = dft_pilot_matrix(config.N, config.tau2) if config.N else np.zeros((0, config.tau2))
    schedule = []
    if config.N:
        blocks = [
            np.arange(start, min(start + config.M, config.N))
            for start in range(0, config.N, config.M)
        ]
        for user in range(1, config.K):
            for block in blocks:
                schedule.append(Phase3Slot(user=user, elements=block))
    return PilotPlan(
        tau1=config.tau1,
        tau2=config.tau2,
        tau3=len(schedule),
        pilot_power=config.p_u,
        pilots_phase1=pilots,
        Phi_II=phi,
        phase3_schedule=tuple(schedule),
    )


# ---------------------------------------------------------------------------
# effective noise variances

def _v_u(config: SystemConfig) -> float:
    return config.kappa_u * config.p_u


def _v_b_direct(config: SystemConfig) -> float:
    """Per-antenna BS distortion variance with all elements off."""
    return config.kappa_b * (config.p_u + _v_u(config)) * config.beta_d


def _v_b_reflect(config: SystemConfig, reflect_power: float | None = None) -> float:
    """Per-antenna BS distortion variance with elements on.

    reflect_power defaults to the full-surface mean power N * beta_r.
    """
    if reflect_power is None:
        reflect_power = config.N * config.beta_r
    return config.kappa_b * (config.p_u + _v_u(config)) * (config.beta_d + reflect_power)


# ---------------------------------------------------------------------------
# phase I (single user)


def epsilon_I_closed(config: SystemConfig, tau1: int | None = None) -> float:
    """Closed-form phase-I MSE (sum over the M antennas)."""
    t1 = config.tau1 if tau1 is None else tau1
    b = config.beta_d
    d = b * (t1 * config.p_u + _v_u(config)) + _v_b_direct(config) + config.sigma2_b
    return config.M * b - t1 * config.p_u * config.M * b * b / d


def estimate_direct_single(
    Y_I: np.ndarray, pilots: np.ndarray, config: SystemConfig
) -> tuple[np.ndarray, float]:
    """LMMSE direct-channel estimate from the phase-I observation block.

    Args:
        Y_I: M x tau1 received block.
        pilots: Length-tau1 pilot symbols with per-symbol power p_u.
        config: System parameters.

    Returns:
        (h_d_hat, epsilon_I): the M-vector estimate and the closed-form MSE.
        Zero pilot energy returns the prior mean (zeros) with the prior MSE.
    """
    pilots = np.asarray(pilots)
    tau1 = pilots.size
    energy = float(np.sum(np.abs(pilots) ** 2))
    if energy == 0.0:
        return np.zeros(config.M, dtype=complex), config.M * config.beta_d
    b = config.beta_d
    d = b * (tau1 * config.p_u + _v_u(config)) + _v_b_direct(config) + config.sigma2_b
    h_hat = b * (Y_I @ pilots.conj()) / d
    return h_hat, epsilon_I_closed(config, tau1)


# ---------------------------------------------------------------------------
# phase II (single user, full surface)


def cascade_prior_covariance(config: SystemConfig) -> np.ndarray:
    """Column covariance scale of the cascade matrix: C_R_dot = M*beta_r*I."""
    return config.M * config.beta_r * np.eye(config.N)


def psi_II_matrix(
    config: SystemConfig, Phi: np.ndarray, epsilon_I: float
) -> np.ndarray:
    """Covariance of the effective phase-II noise across pilot slots."""
    tau2 = Phi.shape[1]
    v_u = _v_u(config)
    c_dot = cascade_prior_covariance(config)
    diag_part = v_u * np.real(np.einsum("nt,nm,mt->t", Phi.conj(), c_dot, Phi))
    scalar = (
        v_u * config.M * config.beta_d
        + config.M * _v_b_reflect(config)
        + tau2 * config.p_u * epsilon_I
        + config.M * config.sigma2_b
    )
    return np.diag(diag_part) + scalar * np.eye(tau2)


def estimate_cascade_single(
    Y_II_tilde: np.ndarray,
    plan: PilotPlan,
    epsilon_I: float,
    config: SystemConfig,
) -> tuple[np.ndarray, float]:
    """LMMSE cascade-matrix estimate after direct-channel cancellation.

    Args:
        Y_II_tilde: M x tau2 block with the estimated direct contribution
            already subtracted.
        plan: Pilot plan providing the element schedule Phi_II.
        epsilon_I: Phase-I MSE propagated into the noise covariance.
        config: System parameters.

    Returns:
        (H_hat, epsilon_II) with epsilon_II evaluated from the trace formula.
    """
    Phi = plan.Phi_II
    c_dot = cascade_prior_covariance(config)
    A = config.p_u * (Phi.conj().T @ c_dot @ Phi) + psi_II_matrix(
        config, Phi, epsilon_I
    )
    W = np.linalg.solve(A, Phi.conj().T @ c_dot)  # tau2 x N
    H_hat = math.sqrt(config.p_u) * (Y_II_tilde @ W)
    eps = np.trace(c_dot).real - config.p_u * np.sum(
        (c_dot @ Phi) * W.T
    ).real
    return H_hat, float(eps)


def psi_II_scalar(config: SystemConfig, epsilon_I: float, tau2: int) -> float:
    """Woodbury-simplified inverse scale of Psi_II for a DFT schedule."""
    v_u = _v_u(config)
    denom = (
        v_u * (config.beta_d + config.N * config.beta_r)
        + _v_b_reflect(config)
        + tau2 * config.p_u * epsilon_I / config.M
        + config.sigma2_b
    )
    return (1.0 / config.M) / denom


def epsilon_II_closed(
    config: SystemConfig, epsilon_I: float | None = None, tau2: int | None = None
) -> float:
    """Closed-form phase-II MSE (sum over all M*N entries), DFT schedule."""
    t2 = config.tau2 if tau2 is None else tau2
    eps1 = epsilon_I_closed(config) if epsilon_I is None else epsilon_I
    psi = psi_II_scalar(config, eps1, t2)
    return (
        config.M
        * config.N
        * config.beta_r
        / (1.0 + config.p_u * psi * t2 * config.M * config.beta_r)
    )


# ---------------------------------------------------------------------------
# phases I and III for multiple users


def epsilon_I_multi_closed(config: SystemConfig, tau1: int | None = None) -> float:
    """Closed-form phase-I MSE summed over all K users and M antennas.

    The BS distortion power scales with the K simultaneous pilot streams,
    v_b = K * kappa_b * (p_u + v_u) * beta_d, which makes the estimator the
    exact LMMSE when tau1 = K.
    """
    t1 = config.tau1 if tau1 is None else tau1
    b = config.beta_d
    v_b = config.K * _v_b_direct(config)
    d = b * t1 * (config.p_u + _v_u(config)) + v_b + config.sigma2_b
    return config.K * (config.M * b - t1 * config.p_u * config.M * b * b / d)


def estimate_direct_multi(
    Y_I: np.ndarray, pilots: np.ndarray, config: SystemConfig
) -> tuple[np.ndarray, float]:
    """LMMSE direct-channel estimates for all K users at once.

    Args:
        Y_I: M x tau1 received block.
        pilots: K x tau1 matrix of mutually orthogonal pilot rows with row
            energy tau1 * p_u.

    Returns:
        (h_d_hats, epsilon_I): M x K matrix of per-user estimates and the
        closed-form total MSE.

    Raises:
        ValueError: If the pilot rows are not orthogonal with the required
            energy.
    """
    pilots = np.asarray(pilots)
    K, tau1 = pilots.shape
    gram = pilots @ pilots.conj().T
    target = tau1 * config.p_u * np.eye(K)
    if not np.allclose(gram, target, rtol=1e-8, atol=1e-8 * tau1 * config.p_u):
        raise ValueError("pilot rows must be orthogonal with row energy tau1*p_u")
    b = config.beta_d
    v_b = config.K * _v_b_direct(config)
    d = b * tau1 * (config.p_u + _v_u(config)) + v_b + config.sigma2_b
    h_hats = b * (Y_I @ pilots.conj().T) / d
    return h_hats, epsilon_I_multi_closed(config, tau1)


def estimate_lambda_multi(
    y_slot: np.ndarray,
    slot: Phase3Slot,
    H_hat_user1: np.ndarray,
    h_d_hats: np.ndarray | None,
    config: SystemConfig,
    prior_scale: float = 1.0,
) -> tuple[np.ndarray, float]:
    """LMMSE estimate of the ratio variables for one phase-III slot.

    The slot's user transmits the constant pilot sqrt(p_u) while the slot's
    elements reflect with zero phase shift, so the observation is
    y = sqrt(p_u) * G1 * lambda + z with G1 the reference user's cascade
    columns restricted to the active set. The estimated direct contribution
    of the transmitting user is cancelled here when h_d_hats is given.

    Args:
        y_slot: Received M-vector of the slot (before direct cancellation
            when h_d_hats is provided, after it otherwise).
        slot: Active user and element set (at most M elements).
        H_hat_user1: M x N phase-II estimate of the reference user.
        h_d_hats: M x K phase-I estimates, or None if already cancelled.
        config: System parameters.
        prior_scale: c in the ratio-variable prior C = c * I.

    Returns:
        (lambda_hat, epsilon_III) for the slot.
    """
    elements = np.asarray(slot.elements)
    if elements.size > config.M:
        raise ValueError("a slot may activate at most M elements")
    G1 = H_hat_user1[:, elements]
    y = np.asarray(y_slot, dtype=complex)
    if h_d_hats is not None:
        y = y - math.sqrt(config.p_u) * h_d_hats[:, slot.user]
    v_u = _v_u(config)
    v_b = _v_b_reflect(config, reflect_power=prior_scale * elements.size * config.beta_r)
    eps1 = epsilon_I_multi_closed(config)
    C = prior_scale * np.eye(elements.size)
    GCGH = G1 @ C @ G1.conj().T
    psi_scalar = (
        v_b + config.sigma2_b + (config.p_u + v_u) * eps1 / (config.K * config.M)
    )
    B = config.p_u * GCGH + v_u * GCGH + psi_scalar * np.eye(config.M)
    lam_hat = math.sqrt(config.p_u) * (C @ G1.conj().T @ np.linalg.solve(B, y))
    eps3 = np.trace(C).real - config.p_u * np.trace(
        C @ G1.conj().T @ np.linalg.solve(B, G1 @ C)
    ).real
    return lam_hat, float(eps3)


# ---------------------------------------------------------------------------
# error floors


def kappa_sum(config: SystemConfig) -> float:
    """Combined distortion coefficient kappa_u + kappa_b + kappa_u*kappa_b."""
    return config.kappa_u + config.kappa_b + config.kappa_u * config.kappa_b


def error_floors(config: SystemConfig) -> tuple[float, float]:
    """High-power MSE floors (per entry) of phases I and II.

    mu_I bounds epsilon_I / M and mu_II bounds epsilon_II / (M*N) as the
    pilot power grows; both vanish without impairments.
    """
    ks = kappa_sum(config)
    b_d, b_r = config.beta_d, config.beta_r
    mu1 = b_d - config.tau1 * b_d / (config.tau1 + ks)
    denom = (
        ks * (b_d + config.N * b_r) + config.tau2 * mu1 + config.tau2 * b_r
    )
    mu2 = b_r - config.tau2 * b_r * b_r / denom
    return mu1, mu2


# ---------------------------------------------------------------------------
# Monte Carlo samplers (vectorized over trials)
#
# Each factory returns trial_fn(rng, n) -> (n,) per-trial per-entry squared
# errors, suitable for runner.run_chunked. The received-signal synthesis
# matches channel.simulate_uplink_rx draw for draw in distribution; phase
# noise is disabled during training.


def _conditional_bs_distortion(
    config: SystemConfig, h_power: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """BS distortion draws with per-antenna power kappa_b*(p+v_u)*|h|^2."""
    scale = config.kappa_b * (config.p_u + _v_u(config))
    return complex_gaussian(rng, h_power.shape, 1.0) * np.sqrt(scale * h_power)


def make_direct_mse_sampler(
    config: SystemConfig, method: str = "auto"
) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Per-trial per-entry squared error of the phase-I estimator.

    method "physical" synthesizes the full M x tau1 pilot block; "sufficient"
    draws the matched-filter statistic Y_I @ pilots^H directly, which is an
    exact reduction because the estimator depends on the block only through
    that statistic. "auto" picks "physical" for small blocks.
    """
    if method == "auto":
        method = "physical" if config.M * config.tau1 <= 4096 else "sufficient"
    tau1 = config.tau1
    p_u, b = config.p_u, config.beta_d
    v_u = _v_u(config)
    d = b * (tau1 * p_u + v_u) + _v_b_direct(config) + config.sigma2_b
    a = math.sqrt(p_u) * np.ones(tau1)

    def physical(rng: np.random.Generator, n: int) -> np.ndarray:
        h_d = complex_gaussian(rng, (n, config.M), b)
        eta_u = complex_gaussian(rng, (n, 1, tau1), v_u)
        sig = h_d[:, :, np.newaxis] * (a[np.newaxis, np.newaxis, :] + eta_u)
        pow_grid = np.broadcast_to(
            (np.abs(h_d) ** 2)[:, :, np.newaxis], sig.shape
        )
        eta_b = _conditional_bs_distortion(config, pow_grid, rng)
        noise = complex_gaussian(rng, sig.shape, config.sigma2_b)
        Y = sig + eta_b + noise
        h_hat = b * (Y @ a.conj()) / d
        return np.sum(np.abs(h_hat - h_d) ** 2, axis=1) / config.M

    def sufficient(rng: np.random.Generator, n: int) -> np.ndarray:
        h_d = complex_gaussian(rng, (n, config.M), b)
        g_u = complex_gaussian(rng, (n, 1), v_u * tau1 * p_u)
        z_var = tau1 * p_u * (
            config.kappa_b * (p_u + v_u) * np.abs(h_d) ** 2 + config.sigma2_b
        )
        z = complex_gaussian(rng, (n, config.M), 1.0) * np.sqrt(z_var)
        s = h_d * (tau1 * p_u + g_u) + z
        h_hat = b * s / d
        return np.sum(np.abs(h_hat - h_d) ** 2, axis=1) / config.M

    return physical if method == "physical" else sufficient


def make_cascade_mse_sampler(
    config: SystemConfig, mode: str = "composite"
) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Per-trial per-entry squared error of the full phase I + II chain.

    Each trial draws fresh channels, runs the phase-I estimator through its
    sufficient statistic, synthesizes the phase-II block physically (per-slot
    user and BS distortion conditioned on the instantaneous channel), cancels
    the estimated direct contribution, and applies the cascade estimator.
    """
    M, N, tau2 = config.M, config.N, config.tau2
    p_u, b_d, b_r = config.p_u, config.beta_d, config.beta_r
    v_u = _v_u(config)
    sqrt_p = math.sqrt(p_u)
    Phi = dft_pilot_matrix(N, tau2)
    eps1 = epsilon_I_closed(config)
    c_dot = cascade_prior_covariance(config)
    A = p_u * (Phi.conj().T @ c_dot @ Phi) + psi_II_matrix(config, Phi, eps1)
    W = np.linalg.solve(A, Phi.conj().T @ c_dot)  # tau2 x N
    d1 = b_d * (config.tau1 * p_u + v_u) + _v_b_direct(config) + config.sigma2_b
    bs_scale = config.kappa_b * (p_u + v_u)

    def trial_fn(rng: np.random.Generator, n: int) -> np.ndarray:
        h_d = complex_gaussian(rng, (n, M), b_d)
        # phase I via the exact matched-filter statistic
        g_u = complex_gaussian(rng, (n, 1), v_u * config.tau1 * p_u)
        z_var = config.tau1 * p_u * (bs_scale * np.abs(h_d) ** 2 + config.sigma2_b)
        z = complex_gaussian(rng, (n, M), 1.0) * np.sqrt(z_var)
        h_d_hat = b_d * (h_d * (config.tau1 * p_u + g_u) + z) / d1
        # cascade channels
        if mode == "composite":
            side = math.sqrt(b_r)
            G = complex_gaussian(rng, (n, M, N), side)
            h_r = complex_gaussian(rng, (n, 1, N), side)
            H_R = G * h_r
        else:
            H_R = complex_gaussian(rng, (n, M, N), b_r)
        # phase II received block, slot channels h(t) = h_d + H_R Phi[:, t]
        H_slot = h_d[:, :, np.newaxis] + H_R @ Phi
        eta_u = complex_gaussian(rng, (n, 1, tau2), v_u)
        eta_b = complex_gaussian(rng, H_slot.shape, 1.0) * np.sqrt(
            bs_scale * np.abs(H_slot) ** 2
        )
        noise = complex_gaussian(rng, H_slot.shape, config.sigma2_b)
        Y = H_slot * (sqrt_p + eta_u) + eta_b + noise
        Y_tilde = Y - sqrt_p * h_d_hat[:, :, np.newaxis]
        H_hat = sqrt_p * (Y_tilde @ W)
        return np.sum(np.abs(H_hat - H_R) ** 2, axis=(1, 2)) / (M * N)

    return trial_fn


def make_multi_direct_mse_sampler(
    config: SystemConfig,
) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Per-trial per-entry squared error of the multi-user phase-I estimator.

    All K users transmit orthogonal pilot rows simultaneously; the reported
    value is the squared error averaged over all K*M channel entries.
    """
    K, M, tau1 = config.K, config.M, config.tau1
    p_u, b = config.p_u, config.beta_d
    v_u = _v_u(config)
    pilots = orthogonal_user_pilots(K, tau1, p_u)
    d = b * tau1 * (p_u + v_u) + K * _v_b_direct(config) + config.sigma2_b
    bs_scale = config.kappa_b * (p_u + v_u)

    def trial_fn(rng: np.random.Generator, n: int) -> np.ndarray:
        h = complex_gaussian(rng, (n, M, K), b)
        eta_u = complex_gaussian(rng, (n, K, tau1), v_u)
        sig = np.einsum("nmk,kt->nmt", h, pilots) + np.einsum(
            "nmk,nkt->nmt", h, eta_u
        )
        h_pow = np.sum(np.abs(h) ** 2, axis=2)  # distortion sees all users
        eta_b = complex_gaussian(rng, sig.shape, 1.0) * np.sqrt(
            bs_scale * h_pow[:, :, np.newaxis]
        )
        noise = complex_gaussian(rng, sig.shape, config.sigma2_b)
        Y = sig + eta_b + noise
        h_hats = b * np.einsum("nmt,kt->nmk", Y, pilots.conj()) / d
        return np.sum(np.abs(h_hats - h) ** 2, axis=(1, 2)) / (K * M)

    return trial_fn


def make_lambda_mse_sampler(
    config: SystemConfig,
    G1: np.ndarray,
    prior_scale: float = 1.0,
) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Per-trial squared error of the phase-III estimator for a fixed slot.

    Conditions on the reference cascade columns G1 (one slot's active set)
    and draws the ratio variables from their prior, the transmitting user's
    residual direct error from the phase-I MSE, and the distortion terms from
    the statistical model underlying Psi_III.
    """
    M, size = G1.shape
    p_u = config.p_u
    v_u = _v_u(config)
    sqrt_p = math.sqrt(p_u)
    eps1 = epsilon_I_multi_closed(config)
    v_b = _v_b_reflect(config, reflect_power=prior_scale * size * config.beta_r)
    C = prior_scale * np.eye(size)
    GCGH = G1 @ C @ G1.conj().T
    psi_scalar = v_b + config.sigma2_b + (p_u + v_u) * eps1 / (config.K * config.M)
    B = p_u * GCGH + v_u * GCGH + psi_scalar * np.eye(M)
    E = sqrt_p * (C @ G1.conj().T @ np.linalg.inv(B))  # size x M

    def trial_fn(rng: np.random.Generator, n: int) -> np.ndarray:
        lam = complex_gaussian(rng, (n, size), prior_scale)
        eta_u = complex_gaussian(rng, (n, 1), v_u)
        d_res = complex_gaussian(rng, (n, M), eps1 / (config.K * config.M))
        eta_b = complex_gaussian(rng, (n, M), v_b)
        noise = complex_gaussian(rng, (n, M), config.sigma2_b)
        y = (sqrt_p + eta_u) * (lam @ G1.T + d_res) + eta_b + noise
        lam_hat = y @ E.T
        return np.sum(np.abs(lam_hat - lam) ** 2, axis=1)

    return trial_fn
