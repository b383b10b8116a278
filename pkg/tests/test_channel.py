"""Channel sampling, phase states, and received-signal model tests.

Monte Carlo oracles here check sampled moments against the model's stated
covariances at the tolerances used throughout the package (2-3%).
"""

import math

import numpy as np
import pytest

from irs_sim.channel import (
    ChannelRealization,
    PhaseNoiseModel,
    PhaseState,
    complex_gaussian,
    draw_downlink_impairments,
    draw_uplink_impairments,
    make_phase_state,
    overall_channel,
    sample_channels,
    sample_phase_noise,
    simulate_downlink_rx,
    simulate_uplink_rx,
    zero_phase_state,
)
from irs_sim.config import SystemConfig


def test_complex_gaussian_moments():
    rng = np.random.default_rng(7)
    z = complex_gaussian(rng, 200_000, 3.0)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(3.0, rel=0.02)
    # Circular symmetry: the pseudo-variance E[z^2] vanishes.
    assert abs(np.mean(z**2)) < 0.05


def test_sample_channels_no_irs_degenerate():
    cfg = SystemConfig(M=4, N=0, tau2=0, tau_d=100, tau=200)
    real = sample_channels(cfg, np.random.default_rng(0))
    assert real.G.shape == (4, 0)
    assert real.h_r.shape == (0,)
    assert real.h_c.shape == (4,)
    np.testing.assert_allclose(real.h_c, 0.0)
    for mode in ("composite", "direct_cascade"):
        real2 = sample_channels(cfg, np.random.default_rng(1), mode=mode)
        assert real2.N == 0


def test_sample_channels_variance_oracle_composite():
    cfg = SystemConfig(M=10, N=25, beta_d=2.0, beta_r=0.5)
    rng = np.random.default_rng(11)
    draws = 100_000
    # Accumulate per-entry second moments across draws.
    hd_pow = 0.0
    hc_pow = 0.0
    chunk = 10_000
    for _ in range(draws // chunk):
        hd = complex_gaussian(rng, (chunk, cfg.M), cfg.beta_d)
        hd_pow += np.mean(np.abs(hd) ** 2) * chunk
        side = math.sqrt(cfg.beta_r)
        G = complex_gaussian(rng, (chunk, cfg.M, cfg.N), side)
        hr = complex_gaussian(rng, (chunk, 1, cfg.N), side)
        hc = (G * hr).sum(axis=2)
        hc_pow += np.mean(np.abs(hc) ** 2) * chunk
    assert hd_pow / draws == pytest.approx(cfg.beta_d, rel=0.02)
    assert hc_pow / draws == pytest.approx(cfg.N * cfg.beta_r, rel=0.03)


def test_sample_channels_variance_oracle_direct_cascade():
    cfg = SystemConfig(M=10, N=25, beta_r=0.5)
    rng = np.random.default_rng(12)
    pow_sum = 0.0
    draws = 20_000
    for _ in range(draws):
        real = sample_channels(cfg, rng, mode="direct_cascade")
        pow_sum += np.mean(np.abs(real.h_c) ** 2)
    assert pow_sum / draws == pytest.approx(cfg.N * cfg.beta_r, rel=0.03)


def test_cascade_matrix_identities():
    cfg = SystemConfig(M=6, N=9, tau2=9)
    for mode in ("composite", "direct_cascade"):
        real = sample_channels(cfg, np.random.default_rng(3), mode=mode)
        for n in range(cfg.N):
            np.testing.assert_array_equal(real.H_R[:, n], real.G[:, n] * real.h_r[n])
        np.testing.assert_allclose(
            real.h_c, real.H_R @ np.ones(cfg.N), rtol=1e-12, atol=1e-12
        )


def test_sample_channels_unknown_mode():
    with pytest.raises(ValueError):
        sample_channels(SystemConfig(), np.random.default_rng(0), mode="rician")


def test_phase_noise_none_is_zero():
    out = sample_phase_noise(16, PhaseNoiseModel(kind="none"), np.random.default_rng(0))
    np.testing.assert_array_equal(out, np.zeros(16))


def test_phase_noise_uniform_zero_mean_direction():
    rng = np.random.default_rng(21)
    model = PhaseNoiseModel(kind="uniform", half_width=math.pi / 6)
    draws = sample_phase_noise(100_000, model, rng)
    mean_dir = np.mean(np.exp(1j * draws))
    assert abs(np.angle(mean_dir)) < 0.01


def test_phase_noise_uniform_circular_moment():
    # For uniform phase error on [-d, d], E[exp(j*dtheta)] = sin(d)/d.
    rng = np.random.default_rng(22)
    d = 0.8
    model = PhaseNoiseModel(kind="uniform", half_width=d)
    draws = sample_phase_noise(100_000, model, rng)
    assert np.mean(np.exp(1j * draws)).real == pytest.approx(
        math.sin(d) / d, rel=0.01
    )


def test_phase_noise_von_mises_symmetric():
    rng = np.random.default_rng(23)
    model = PhaseNoiseModel(kind="von_mises", concentration=4.0)
    draws = sample_phase_noise(100_000, model, rng)
    assert np.all(np.abs(draws) <= math.pi)
    assert abs(np.angle(np.mean(np.exp(1j * draws)))) < 0.01


def test_phase_noise_model_validation():
    with pytest.raises(ValueError):
        PhaseNoiseModel(kind="uniform", half_width=math.pi + 0.1)
    with pytest.raises(ValueError):
        PhaseNoiseModel(kind="laplace")
    with pytest.raises(ValueError):
        PhaseNoiseModel(kind="von_mises", concentration=-1.0)


def test_phase_state_unit_modulus_and_wrap():
    rng = np.random.default_rng(5)
    theta = rng.uniform(-10, 10, 40)
    state = PhaseState(theta=theta, delta_theta=np.zeros(40))
    assert np.all(state.theta >= 0) and np.all(state.theta < 2 * math.pi)
    np.testing.assert_allclose(np.abs(state.v), 1.0, atol=1e-12)
    state2 = make_phase_state(
        theta, PhaseNoiseModel(kind="uniform", half_width=0.3), rng
    )
    np.testing.assert_allclose(np.abs(state2.v), 1.0, atol=1e-12)
    assert np.all(np.abs(state2.delta_theta) <= 0.3)


def test_overall_channel_trivials():
    cfg = SystemConfig(M=5, N=0, tau2=0)
    real = sample_channels(cfg, np.random.default_rng(9))
    np.testing.assert_array_equal(overall_channel(real, zero_phase_state(0)), real.h_d)

    cfg = SystemConfig(M=5, N=8, tau2=8)
    real = sample_channels(cfg, np.random.default_rng(10))
    h = overall_channel(real, zero_phase_state(8))
    np.testing.assert_allclose(h, real.h_d + real.G @ real.h_r, rtol=1e-12)


def test_overall_channel_dual_formulation():
    cfg = SystemConfig(M=5, N=8, tau2=8)
    rng = np.random.default_rng(13)
    real = sample_channels(cfg, rng)
    theta = rng.uniform(0, 2 * math.pi, 8)
    delta = rng.uniform(-math.pi, math.pi, 8)
    state = PhaseState(theta=theta, delta_theta=delta)
    via_cascade = overall_channel(real, state)
    via_g = real.h_d + real.G @ (np.exp(1j * (state.theta + delta)) * real.h_r)
    np.testing.assert_allclose(via_cascade, via_g, rtol=1e-12, atol=1e-12)


def test_overall_channel_dimension_mismatch():
    cfg = SystemConfig(M=5, N=8, tau2=8)
    real = sample_channels(cfg, np.random.default_rng(0))
    with pytest.raises(ValueError):
        overall_channel(real, zero_phase_state(7))


def test_uplink_rx_ideal_hardware_noiseless():
    cfg = SystemConfig(M=4, N=3, tau2=3, kappa_b=0.0, kappa_u=0.0, sigma2_b=1e-30)
    rng = np.random.default_rng(31)
    real = sample_channels(cfg, rng)
    state = zero_phase_state(3)
    x = math.sqrt(cfg.p_u)
    y = simulate_uplink_rx(x, real, state, cfg, rng)
    h = overall_channel(real, state)
    np.testing.assert_allclose(y, h * x, rtol=1e-10, atol=1e-14)


def test_uplink_rx_silent_user_is_noise_only():
    cfg = SystemConfig(M=4, N=2, tau2=2, kappa_b=0.1, kappa_u=0.1, sigma2_b=2.0)
    rng = np.random.default_rng(32)
    real = sample_channels(cfg, rng)
    state = zero_phase_state(2)
    pow_sum = 0.0
    n_draws = 10_000
    for _ in range(n_draws):
        y = simulate_uplink_rx(0.0, real, state, cfg, rng)
        pow_sum += np.mean(np.abs(y) ** 2)
    # Distortion scales with signal power, so x = 0 leaves AWGN only.
    assert pow_sum / n_draws == pytest.approx(cfg.sigma2_b, rel=0.05)


def test_uplink_rx_covariance_oracle():
    cfg = SystemConfig(
        M=4, N=4, tau2=4, kappa_b=0.05, kappa_u=0.02, p_u=2.0, sigma2_b=0.5
    )
    rng = np.random.default_rng(33)
    real = sample_channels(cfg, rng)
    state = zero_phase_state(4)
    h = overall_channel(real, state)
    x = math.sqrt(cfg.p_u)
    n_draws = 100_000
    resid = np.empty((n_draws, cfg.M), dtype=complex)
    for t in range(n_draws):
        resid[t] = simulate_uplink_rx(x, real, state, cfg, rng) - h * x
    sample_cov = resid.T @ resid.conj() / n_draws
    v_u = cfg.kappa_u * cfg.p_u
    upsilon = cfg.kappa_b * (cfg.p_u + v_u) * np.diag(np.abs(h) ** 2)
    model_cov = v_u * np.outer(h, h.conj()) + upsilon + cfg.sigma2_b * np.eye(cfg.M)
    err = np.linalg.norm(sample_cov - model_cov) / np.linalg.norm(model_cov)
    assert err < 0.03


def test_uplink_impairment_draw_invariants():
    cfg = SystemConfig(M=5, N=2, tau2=2, kappa_b=0.01, kappa_u=0.0025, p_u=3.0)
    rng = np.random.default_rng(34)
    real = sample_channels(cfg, rng)
    h = overall_channel(real, zero_phase_state(2))
    imp = draw_uplink_impairments(math.sqrt(cfg.p_u), h, cfg, rng)
    assert imp.v_u == pytest.approx(cfg.kappa_u * cfg.p_u, rel=1e-12)
    np.testing.assert_allclose(imp.Upsilon_B, imp.Upsilon_B.conj().T)
    assert np.all(np.linalg.eigvalsh(imp.Upsilon_B) >= -1e-15)


def test_downlink_rx_ideal_hardware():
    cfg = SystemConfig(M=4, N=2, tau2=2, sigma2_u=1e-30)
    rng = np.random.default_rng(35)
    real = sample_channels(cfg, rng)
    state = zero_phase_state(2)
    x = complex_gaussian(rng, 4, cfg.p_b / 4)
    y = simulate_downlink_rx(x, real, state, cfg, rng)
    h = overall_channel(real, state)
    assert y == pytest.approx(complex(np.vdot(h, x)), rel=1e-10, abs=1e-14)


def test_downlink_rx_moment_oracle_single_antenna():
    cfg = SystemConfig(
        M=1, N=0, tau2=0, kappa_b=0.05, kappa_u=0.02, p_b=2.0, sigma2_u=0.25
    )
    rng = np.random.default_rng(36)
    real = sample_channels(cfg, rng)
    state = zero_phase_state(0)
    h = overall_channel(real, state)
    x = np.array([math.sqrt(cfg.p_b)], dtype=complex)
    n_draws = 100_000
    err_pow = 0.0
    for _ in range(n_draws):
        y = simulate_downlink_rx(x, real, state, cfg, rng)
        err_pow += abs(y - complex(np.vdot(h, x))) ** 2
    v_u = cfg.kappa_u * (
        abs(np.vdot(h, x)) ** 2 + cfg.kappa_b * cfg.p_b * abs(h[0]) ** 2
    )
    model = cfg.kappa_b * cfg.p_b * abs(h[0]) ** 2 + v_u + cfg.sigma2_u
    assert err_pow / n_draws == pytest.approx(model, rel=0.03)


def test_downlink_rx_silent_bs():
    cfg = SystemConfig(M=3, N=0, tau2=0, kappa_b=0.2, kappa_u=0.2, sigma2_u=0.5)
    rng = np.random.default_rng(37)
    real = sample_channels(cfg, rng)
    state = zero_phase_state(0)
    x = np.zeros(3, dtype=complex)
    pow_sum = 0.0
    n_draws = 20_000
    for _ in range(n_draws):
        pow_sum += abs(simulate_downlink_rx(x, real, state, cfg, rng)) ** 2
    assert pow_sum / n_draws == pytest.approx(cfg.sigma2_u, rel=0.05)


def test_downlink_impairment_draw_psd():
    cfg = SystemConfig(M=4, N=0, tau2=0, kappa_b=0.01, kappa_u=0.01)
    rng = np.random.default_rng(38)
    real = sample_channels(cfg, rng)
    h = overall_channel(real, zero_phase_state(0))
    x = complex_gaussian(rng, 4, cfg.p_b / 4)
    imp = draw_downlink_impairments(x, h, cfg, rng)
    assert imp.v_u >= 0
    assert np.all(np.linalg.eigvalsh(imp.Upsilon_B) >= -1e-15)


def test_single_element_reflected_power_neutrality():
    """Phase noise does not change the reflected power when N = 1.

    For a single element the reflected-path power |H_R v|^2 is independent of
    the phase, so the mean overall-channel power under phase noise is
    predicted exactly from the noiseless realization and the circular moment
    E[cos(dtheta)] = sin(d)/d of the uniform error.
    """
    cfg = SystemConfig(M=6, N=1, tau2=1)
    rng = np.random.default_rng(39)
    real = sample_channels(cfg, rng)
    theta = np.array([1.1])
    d = math.pi / 6
    model = PhaseNoiseModel(kind="uniform", half_width=d)
    n_draws = 100_000
    acc = 0.0
    col = real.H_R[:, 0]
    for _ in range(n_draws):
        state = make_phase_state(theta, model, rng)
        acc += np.sum(np.abs(overall_channel(real, state)) ** 2)
    mean_power = acc / n_draws
    cross = np.vdot(real.h_d, col * np.exp(1j * theta[0]))
    predicted = (
        np.sum(np.abs(real.h_d) ** 2)
        + np.sum(np.abs(col) ** 2)
        + 2.0 * (math.sin(d) / d) * cross.real
    )
    assert mean_power == pytest.approx(predicted, rel=0.03)


def test_realization_dataclass_shape_properties():
    real = ChannelRealization(
        h_d=np.zeros(3, complex),
        G=np.zeros((3, 2), complex),
        h_r=np.zeros(2, complex),
        H_R=np.zeros((3, 2), complex),
        h_c=np.zeros(3, complex),
    )
    assert real.M == 3 and real.N == 2
