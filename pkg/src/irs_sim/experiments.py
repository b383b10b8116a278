"""Seeded, deterministic experiment catalog behind the CLI.

Each experiment sweeps one axis and fills a ResultTable with empirical
Monte Carlo columns (mean plus standard error) and closed-form reference
columns where one exists. All randomness flows through the chunked runner
with a fixed stream key per table cell, so the output depends only on
(spec, seed) and is bitwise reproducible at any worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .beamforming import gdm_optimize
from .capacity import asymptotic_bounds_dimension, asymptotic_bounds_power, capacity_downlink_upper
from .channel import PhaseState, overall_channel, sample_channels, zero_phase_state
from .config import SystemConfig, db_to_linear
from .estimation import (
    epsilon_I_closed,
    epsilon_II_closed,
    error_floors,
    make_cascade_mse_sampler,
    make_direct_mse_sampler,
)
from .power_energy import (
    EnergyConfig,
    PowerScalingConfig,
    average_power,
    ee_bounds,
    rate_uplink_perfect,
)
from .report import ResultTable
from .runner import run_chunked

EVM_SET_MSE = (0.0, 0.01, 0.05, 0.10)
EVM_SET_FLOORS = (0.01, 0.05, 0.10)
EE_SPLITS = (0.0, 0.002, 0.01, 0.02)


def _tag(x: float) -> str:
    return "%g" % x


@dataclass(frozen=True)
class SweepAxis:
    """One named sweep variable with strictly increasing values."""

    variable: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully determined experiment: catalog name, configs, sweep, trials, seed."""

    name: str
    config: SystemConfig
    sweep: SweepAxis
    trials: int
    seed: int
    energy: EnergyConfig | None = None
    scaling: PowerScalingConfig | None = None

    def __post_init__(self) -> None:
        if self.name not in _CATALOG:
            raise ValueError(
                f"unknown experiment {self.name!r}; known: {', '.join(_CATALOG)}"
            )
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        axis = _CATALOG[self.name].axis
        if self.sweep.variable != axis:
            raise ValueError(
                f"experiment {self.name!r} sweeps {axis!r}, got {self.sweep.variable!r}"
            )


def config_hash(spec: ExperimentSpec) -> str:
    """Stable short hash of every field that influences the output."""
    payload = {
        "name": spec.name,
        "config": {f: getattr(spec.config, f) for f in SystemConfig.field_names()},
        "sweep": {"variable": spec.sweep.variable, "values": list(spec.sweep.values)},
        "trials": spec.trials,
        "seed": spec.seed,
        "energy": None if spec.energy is None else asdict(spec.energy),
        "scaling": None if spec.scaling is None else asdict(spec.scaling),
    }
    text = json.dumps(payload, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# builders


def _int_values(spec: ExperimentSpec) -> list[int]:
    vals = []
    for v in spec.sweep.values:
        if v != int(v):
            raise ValueError(f"sweep variable {spec.sweep.variable!r} takes integers, got {v}")
        vals.append(int(v))
    return vals


def _mse_sweep(spec: ExperimentSpec, workers: int | None, kind: str) -> ResultTable:
    table = ResultTable(name=spec.name)
    table.add(spec.sweep.variable, spec.sweep.values)
    key = 0
    for evm in EVM_SET_MSE:
        kappa = evm**2
        means, ses, closed = [], [], []
        for snr_db in spec.sweep.values:
            cfg = spec.config.with_updates(
                kappa_b=kappa,
                kappa_u=kappa,
                p_u=db_to_linear(snr_db) * spec.config.sigma2_b,
            )
            if kind == "direct":
                sampler = make_direct_mse_sampler(cfg)
                ref = epsilon_I_closed(cfg) / cfg.M
            else:
                sampler = make_cascade_mse_sampler(cfg)
                ref = epsilon_II_closed(cfg) / (cfg.M * cfg.N)
            res = run_chunked(
                sampler, spec.trials, spec.seed, stream_key=key, workers=workers
            )
            key += 1
            means.append(res.mean[0])
            ses.append(res.se[0])
            closed.append(ref)
        tag = _tag(evm)
        table.add_mc(f"mse_emp_evm{tag}", means, ses)
        table.add(f"mse_closed_evm{tag}", closed)
    return table


def _fig2(spec: ExperimentSpec, workers: int | None) -> ResultTable:
    return _mse_sweep(spec, workers, "direct")


def _fig3(spec: ExperimentSpec, workers: int | None) -> ResultTable:
    return _mse_sweep(spec, workers, "cascade")


def _fig4(spec: ExperimentSpec, workers: int | None) -> ResultTable:
    lengths = _int_values(spec)
    configs = [
        spec.config.with_updates(
            tau=2 * L + 10, tau1=L, tau2=L, tau3=0, tau_u=0, tau_d=10
        )
        for L in lengths
    ]
    table = ResultTable(name=spec.name)
    table.add(spec.sweep.variable, lengths)
    d_mean, d_se, c_mean, c_se, d_ref, c_ref = ([] for _ in range(6))
    for key, cfg in enumerate(configs):
        res_d = run_chunked(
            make_direct_mse_sampler(cfg), spec.trials, spec.seed,
            stream_key=2 * key, workers=workers,
        )
        res_c = run_chunked(
            make_cascade_mse_sampler(cfg), spec.trials, spec.seed,
            stream_key=2 * key + 1, workers=workers,
        )
        d_mean.append(res_d.mean[0])
        d_se.append(res_d.se[0])
        c_mean.append(res_c.mean[0])
        c_se.append(res_c.se[0])
        d_ref.append(epsilon_I_closed(cfg) / cfg.M)
        c_ref.append(epsilon_II_closed(cfg) / (cfg.M * cfg.N))
    table.add_mc("direct_emp", d_mean, d_se)
    table.add("direct_closed", d_ref)
    table.add_mc("cascade_emp", c_mean, c_se)
    table.add("cascade_closed", c_ref)
    return table


def _fig5(spec: ExperimentSpec, workers: int | None) -> ResultTable:
    ns = _int_values(spec)
    table = ResultTable(name=spec.name)
    table.add(spec.sweep.variable, ns)
    # tau2 stays fixed across rows: floors compare IRS sizes on one pilot budget
    for evm in EVM_SET_FLOORS:
        kappa = evm**2
        floors = []
        for n in ns:
            cfg = spec.config.with_updates(N=n, kappa_b=kappa, kappa_u=kappa)
            floors.append(error_floors(cfg)[1])
        table.add(f"floor_cascade_evm{_tag(evm)}", floors)
    return table


def _capacity_trial_fn(cfg: SystemConfig, policies: tuple[str, ...], paired_gain: bool):
    n_out = len(policies) + (1 if paired_gain else 0)

    def trial(rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.empty((n, n_out))
        for i in range(n):
            real = sample_channels(cfg, rng)
            vals = []
            for policy in policies:
                if policy == "zero":
                    phases = zero_phase_state(cfg.N)
                else:
                    theta = gdm_optimize(real, cfg).theta_opt
                    phases = PhaseState(theta=theta, delta_theta=np.zeros(cfg.N))
                h = overall_channel(real, phases)
                vals.append(capacity_downlink_upper(h, cfg))
            if paired_gain:
                vals.append(vals[-1] - vals[0])
            out[i] = vals
        return out

    return trial


def _capacity_sweep(
    spec: ExperimentSpec,
    workers: int | None,
    row_config,
    policies: tuple[str, ...],
    paired_gain: bool = False,
) -> tuple[ResultTable, list[SystemConfig]]:
    values = spec.sweep.values
    configs = [row_config(v) for v in values]
    table = ResultTable(name=spec.name)
    table.add(spec.sweep.variable, values)
    results = []
    for key, cfg in enumerate(configs):
        trial = _capacity_trial_fn(cfg, policies, paired_gain)
        results.append(
            run_chunked(trial, spec.trials, spec.seed, stream_key=key, workers=workers)
        )
    for j, policy in enumerate(policies):
        table.add_mc(
            f"se_{policy}", [r.mean[j] for r in results], [r.se[j] for r in results]
        )
    if paired_gain:
        j = len(policies)
        table.add_mc("se_gain", [r.mean[j] for r in results], [r.se[j] for r in results])
    return table, configs


def _fig6(spec: ExperimentSpec, workers: int | None) -> ResultTable:
    _int_values(spec)
    row = lambda v: spec.config.with_updates(N=int(v), tau2=int(v))
    table, _ = _capacity_sweep(spec, workers, row, ("zero", "gdm"), paired_gain=True)
    return table


def _fig7(spec: ExperimentSpec, workers: int | None) -> ResultTable:
    row = lambda v: spec.config.with_updates(p_b=db_to_linear(v) * spec.config.sigma2_u)
    table, configs = _capacity_sweep(spec, workers, row, ("zero", "gdm"))
    bounds = [asymptotic_bounds_power(cfg) for cfg in configs]
    table.add("bound_power_lower", [b[0] for b in bounds])
    table.add("bound_power_upper", [b[1] for b in bounds])
    return table


def _fig8(spec: ExperimentSpec, workers: int | None) -> ResultTable:
    _int_values(spec)
    row = lambda v: spec.config.with_updates(M=int(v))
    table, configs = _capacity_sweep(spec, workers, row, ("gdm",))
    bounds = [asymptotic_bounds_power(cfg) for cfg in configs]
    table.add("bound_power_lower", [b[0] for b in bounds])
    table.add("bound_power_upper", [b[1] for b in bounds])
    return table


def _fig9(spec: ExperimentSpec, workers: int | None) -> ResultTable:
    _int_values(spec)
    row = lambda v: spec.config.with_updates(N=int(v), tau2=int(v))
    table, configs = _capacity_sweep(spec, workers, row, ("zero",))
    table.add("bound_dimension_upper", [asymptotic_bounds_dimension(c)[1] for c in configs])
    return table


def _fig10(spec: ExperimentSpec, workers: int | None) -> ResultTable:
    base = spec.config
    variants = (
        ("irs", base),
        ("miso", base.with_updates(N=0, tau2=0)),
        ("siso", base.with_updates(M=1, N=0, tau2=0)),
    )
    table = ResultTable(name=spec.name)
    table.add(spec.sweep.variable, spec.sweep.values)
    for vi, (label, cfg) in enumerate(variants):
        means, ses = [], []
        for ri, p_db in enumerate(spec.sweep.values):
            p_u = db_to_linear(p_db) * cfg.sigma2_b
            phases = zero_phase_state(cfg.N)

            def trial(rng: np.random.Generator, n: int, cfg=cfg, p_u=p_u, phases=phases):
                out = np.empty(n)
                for i in range(n):
                    real = sample_channels(cfg, rng)
                    out[i] = rate_uplink_perfect(real, phases, p_u, cfg)
                return out

            res = run_chunked(
                trial, spec.trials, spec.seed,
                stream_key=vi * 1000 + ri, workers=workers,
            )
            means.append(res.mean[0])
            ses.append(res.se[0])
        table.add_mc(f"rate_{label}", means, ses)
    ceiling = (
        math.inf
        if base.kappa_u == 0.0
        else math.log2(1.0 + 1.0 / base.kappa_u)
    )
    table.add("rate_ceiling", [ceiling] * len(spec.sweep.values))
    return table


def _fig11(spec: ExperimentSpec, workers: int | None) -> ResultTable:
    ms = _int_values(spec)
    energy = spec.energy if spec.energy is not None else EnergyConfig()
    total = energy.rho + energy.zeta
    if total <= 0:
        raise ValueError("energy budget rho + zeta must be positive")
    table = ResultTable(name=spec.name)
    table.add(spec.sweep.variable, ms)
    for si, split in enumerate(EE_SPLITS):
        e = EnergyConfig(rho=total * split, zeta=total * (1.0 - split), tau_pilot=0)
        emp, emp_se, closed = [], [], []
        for mi, m in enumerate(ms):
            cfg = spec.config.with_updates(M=m)
            down, _ = average_power(e, cfg.with_updates(p_b=0.0))

            def trial(rng: np.random.Generator, n: int, cfg=cfg) -> np.ndarray:
                out = np.empty(n)
                for i in range(n):
                    real = sample_channels(cfg, rng)
                    h = overall_channel(real, zero_phase_state(cfg.N))
                    out[i] = capacity_downlink_upper(h, cfg)
                return out

            res = run_chunked(
                trial, spec.trials, spec.seed,
                stream_key=si * 1000 + mi, workers=workers,
            )
            emp.append(res.mean[0] / down)
            emp_se.append(res.se[0] / down)
            kb, ku = cfg.kappa_b, cfg.kappa_u
            sat = (cfg.tau_d / cfg.tau) * math.log2(1.0 + m / (kb + ku * (m + kb)))
            closed.append(sat / down)
        tag = _tag(split)
        table.add_mc(f"ee_emp_split{tag}", emp, emp_se)
        table.add(f"ee_closed_split{tag}", closed)
    _, upper, _ = ee_bounds(
        EnergyConfig(rho=0.0, zeta=total, tau_pilot=0), spec.config
    )
    table.add("ee_upper_bound", [upper] * len(ms))
    return table


# ---------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class _CatalogEntry:
    builder: object
    axis: str
    description: str
    default_factory: object


def _default_fig2() -> ExperimentSpec:
    return ExperimentSpec(
        name="fig2_direct_mse",
        config=SystemConfig(M=10, N=25, tau=1000, tau1=1, tau2=25, tau_u=0, tau_d=974),
        sweep=SweepAxis("snr_db", tuple(range(-10, 41, 5))),
        trials=100_000,
        seed=1,
    )


def _default_fig3() -> ExperimentSpec:
    return ExperimentSpec(
        name="fig3_cascade_mse",
        config=SystemConfig(M=10, N=25, tau=2000, tau1=1000, tau2=25, tau_u=0, tau_d=975),
        sweep=SweepAxis("snr_db", tuple(range(-10, 41, 5))),
        trials=100_000,
        seed=1,
    )


def _default_fig4() -> ExperimentSpec:
    return ExperimentSpec(
        name="fig4_pilot_length",
        config=SystemConfig(
            M=10, N=25, kappa_b=0.05**2, kappa_u=0.05**2, p_u=10.0,
            tau=1000, tau1=1, tau2=25, tau_u=0, tau_d=974,
        ),
        sweep=SweepAxis("pilot_length", (25, 50, 100, 200, 400, 800, 1600)),
        trials=20_000,
        seed=1,
    )


def _default_fig5() -> ExperimentSpec:
    return ExperimentSpec(
        name="fig5_floor_vs_N",
        config=SystemConfig(
            M=10, N=10, tau=1000, tau1=1, tau2=200, tau_u=0, tau_d=700
        ),
        sweep=SweepAxis("n_elements", tuple(range(10, 201, 10))),
        trials=1,
        seed=1,
    )


_CAP_TAU = dict(tau=1_000_000, tau1=0, tau3=0, tau_u=0, tau_d=999_000)


def _default_fig6() -> ExperimentSpec:
    return ExperimentSpec(
        name="fig6_se_vs_N",
        config=SystemConfig(
            M=5, N=5, tau2=5, kappa_b=0.01**2, kappa_u=0.01**2,
            p_b=db_to_linear(15.0), **_CAP_TAU,
        ),
        sweep=SweepAxis("n_elements", (5, 10, 20, 50, 100, 200, 400)),
        trials=200,
        seed=1,
    )


def _default_fig7() -> ExperimentSpec:
    return ExperimentSpec(
        name="fig7_se_vs_snr",
        config=SystemConfig(
            M=5, N=50, tau2=50, kappa_b=0.01**2, kappa_u=0.01**2, **_CAP_TAU
        ),
        sweep=SweepAxis("p_b_db", tuple(range(-10, 121, 10))),
        trials=200,
        seed=1,
    )


def _default_fig8() -> ExperimentSpec:
    return ExperimentSpec(
        name="fig8_se_vs_M",
        config=SystemConfig(
            M=1, N=64, tau2=64, kappa_b=0.01**2, kappa_u=0.01**2,
            p_b=db_to_linear(120.0), **_CAP_TAU,
        ),
        sweep=SweepAxis("m_antennas", (1, 2, 5, 10, 20, 50, 100)),
        trials=200,
        seed=1,
    )


def _default_fig9() -> ExperimentSpec:
    return ExperimentSpec(
        name="fig9_convergence",
        config=SystemConfig(
            M=5, N=8, tau2=8, kappa_b=0.01**2, kappa_u=0.01**2,
            p_b=db_to_linear(30.0), **_CAP_TAU,
        ),
        sweep=SweepAxis("n_elements", (8, 16, 32, 64, 128, 256, 512)),
        trials=200,
        seed=1,
    )


def _default_fig10() -> ExperimentSpec:
    return ExperimentSpec(
        name="fig10_power_scaling",
        config=SystemConfig(
            M=20, N=100, tau=1000, tau1=0, tau2=100, tau3=0, tau_u=0, tau_d=800,
            kappa_b=0.05**2, kappa_u=0.05**2,
        ),
        sweep=SweepAxis("p_u_db", tuple(range(-20, 31, 5))),
        trials=500,
        seed=1,
    )


def _default_fig11() -> ExperimentSpec:
    return ExperimentSpec(
        name="fig11_ee_vs_M",
        config=SystemConfig(
            M=1, N=0, tau=1000, tau1=0, tau2=0, tau3=0, tau_u=0, tau_d=1000,
            kappa_b=0.01**2, kappa_u=0.01**2, p_b=1e12,
        ),
        sweep=SweepAxis(
            "m_antennas",
            (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15, 20, 30, 50, 75, 100, 150, 200),
        ),
        trials=50,
        seed=1,
        energy=EnergyConfig(rho=0.0, zeta=0.5e-6, tau_pilot=0),
    )


_CATALOG: dict[str, _CatalogEntry] = {
    "fig2_direct_mse": _CatalogEntry(
        _fig2, "snr_db",
        "Direct-link estimation MSE vs pilot SNR, empirical and closed form per EVM",
        _default_fig2,
    ),
    "fig3_cascade_mse": _CatalogEntry(
        _fig3, "snr_db",
        "Cascade estimation MSE vs pilot SNR, empirical and closed form per EVM",
        _default_fig3,
    ),
    "fig4_pilot_length": _CatalogEntry(
        _fig4, "pilot_length",
        "Estimation MSE vs pilot length at fixed power (floors vanish with length)",
        _default_fig4,
    ),
    "fig5_floor_vs_N": _CatalogEntry(
        _fig5, "n_elements",
        "High-power cascade MSE floor vs IRS size per EVM (closed form)",
        _default_fig5,
    ),
    "fig6_se_vs_N": _CatalogEntry(
        _fig6, "n_elements",
        "Downlink SE vs IRS size, optimized vs zero phases on paired channels",
        _default_fig6,
    ),
    "fig7_se_vs_snr": _CatalogEntry(
        _fig7, "p_b_db",
        "Downlink SE vs transmit power with high-power saturation bounds",
        _default_fig7,
    ),
    "fig8_se_vs_M": _CatalogEntry(
        _fig8, "m_antennas",
        "Downlink SE vs antenna count at high power with saturation bounds",
        _default_fig8,
    ),
    "fig9_convergence": _CatalogEntry(
        _fig9, "n_elements",
        "Downlink SE vs IRS size at fixed power under the dimension bound",
        _default_fig9,
    ),
    "fig10_power_scaling": _CatalogEntry(
        _fig10, "p_u_db",
        "Uplink rate vs transmit power for IRS, MISO, and SISO with distortion ceiling",
        _default_fig10,
    ),
    "fig11_ee_vs_M": _CatalogEntry(
        _fig11, "m_antennas",
        "Downlink energy efficiency vs antenna count for circuit-power splits",
        _default_fig11,
    ),
}


def experiment_names() -> tuple[str, ...]:
    return tuple(_CATALOG)


def experiment_axis(name: str) -> str:
    return _CATALOG[name].axis


def describe_experiments() -> list[tuple[str, str]]:
    return [(name, entry.description) for name, entry in _CATALOG.items()]


def default_spec(name: str) -> ExperimentSpec:
    if name not in _CATALOG:
        raise ValueError(f"unknown experiment {name!r}; known: {', '.join(_CATALOG)}")
    return _CATALOG[name].default_factory()


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> ResultTable:
    """Run one catalog experiment and return its table with metadata."""
    start = time.perf_counter()
    table = _CATALOG[spec.name].builder(spec, workers)
    table.metadata = {
        "seed": spec.seed,
        "trials": spec.trials,
        "config_hash": config_hash(spec),
        "wall_time_s": round(time.perf_counter() - start, 6),
        "version": __version__,
    }
    return table
