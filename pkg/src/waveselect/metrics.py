"""Closed-form multi-numerology CP-OFDM link model.

Per-user impairments are ISI (delay spread beyond the CP), ICI (Doppler
spread) and INI (sidelobe leakage from adjacent numerology blocks). They
combine into the three cell metrics: mean SINR, spectral efficiency and
flexibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerology import NUMEROLOGIES, GuardOption, WaveformClass, numerology_params
from .scenario import CellScenario

_PARAMS = [numerology_params(mu) for mu in NUMEROLOGIES]
_T_SYM = np.array([p.t_sym_s for p in _PARAMS])
_T_CP = np.array([p.t_cp_s for p in _PARAMS])
_SCS = np.array([p.scs_hz for p in _PARAMS])
_CP_EFF = np.array([p.cp_efficiency for p in _PARAMS])

EDGE_SUBCARRIERS = 12


class InfeasiblePlanError(ValueError):
    """Guards consume the whole bandwidth."""


@dataclass(frozen=True)
class MetricConfig:
    snr_db: float = 20.0
    total_bw_hz: float = 20e6

    @property
    def noise_power(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True)
class MetricTriple:
    sinr_db: float
    se_bps_hz: float
    flexibility: float


def isi_fraction(tau_max_s, mu: int):
    """Tail energy of a truncated exponential power-delay profile beyond the CP.

    The profile decays with constant tau_max/4 and is cut at tau_max.
    Accepts scalars or arrays of delays.
    """
    tau = np.asarray(tau_max_s, dtype=float)
    if np.any(~(tau > 0)):
        raise ValueError("maximum excess delay must be positive")
    t_cp = numerology_params(mu).t_cp_s
    sigma = tau / 4.0
    tail = (np.exp(-t_cp / sigma) - np.exp(-tau / sigma)) / -np.expm1(-tau / sigma)
    out = np.where(tau <= t_cp, 0.0, tail)
    return float(out) if out.ndim == 0 else out


def ici_fraction(doppler_hz, mu: int):
    """Small-offset ICI power for a Doppler-spread carrier, capped at 1."""
    fd = np.asarray(doppler_hz, dtype=float)
    if np.any(fd < 0) or np.any(np.isnan(fd)):
        raise ValueError("Doppler must be non-negative")
    t_sym = numerology_params(mu).t_sym_s
    out = np.minimum(1.0, (np.pi * fd * t_sym) ** 2 / 6.0)
    return float(out) if out.ndim == 0 else out


def ini_fraction(
    guard: GuardOption | float,
    victim_mu: int,
    aggressor_mu: int | None,
    aggressor_width_hz: float,
    edge_weight: float = 1.0,
) -> float:
    """Leakage power from an adjacent block into a victim subcarrier.

    Integrates the 1/f^2 sidelobe envelope of the aggressor's subcarriers
    over its block width, starting from the effective separation
    guard + scs(victim)/2, and converts it to power per unit subcarrier power.
    `guard` may be a GuardOption or a width in Hz.
    """
    if aggressor_mu is None or aggressor_mu == victim_mu:
        return 0.0
    if not 0.0 <= edge_weight <= 1.0:
        raise ValueError("edge_weight must lie in [0, 1]")
    if aggressor_width_hz < 0:
        raise ValueError("aggressor width must be non-negative")
    guard_hz = guard.guard_hz if isinstance(guard, GuardOption) else float(guard)
    g_eff = guard_hz + _SCS[victim_mu] / 2.0
    t_agg = _T_SYM[aggressor_mu]
    # density per Hz is 1/(pi^2 T^2); times T converts to aggressor subcarriers
    density = 1.0 / (np.pi**2 * t_agg**2)
    return float(edge_weight * density * t_agg * (1.0 / g_eff - 1.0 / (g_eff + aggressor_width_hz)))


@dataclass(frozen=True)
class AllocationPlan:
    active_mus: tuple[int, ...]  # frequency order, lowest band first
    user_assignment: np.ndarray  # user index -> mu
    block_bandwidth_hz: dict[int, float]
    guard_hz: float
    preferred_mus: np.ndarray = field(repr=False)

    @property
    def guard_bandwidth_hz(self) -> float:
        return self.guard_hz * (len(self.active_mus) - 1)

    def neighbours(self, mu: int) -> list[int]:
        i = self.active_mus.index(mu)
        return [self.active_mus[j] for j in (i - 1, i + 1) if 0 <= j < len(self.active_mus)]


def impairment_matrix(scenario: CellScenario) -> np.ndarray:
    """ISI+ICI power per user (rows) and numerology (columns)."""
    return np.column_stack(
        [isi_fraction(scenario.tau_max_s, mu) + ici_fraction(scenario.doppler_hz, mu) for mu in NUMEROLOGIES]
    )


def preferred_numerologies(impairments: np.ndarray) -> np.ndarray:
    # argmin of impairment == argmax of ISI+ICI-only SINR; argmin returns the lowest mu on ties
    return np.argmin(impairments, axis=1)


def select_numerologies(preferred: np.ndarray, num_count: int) -> tuple[int, ...]:
    """The `num_count` most-demanded numerologies, ties to the lower index."""
    counts = np.bincount(preferred, minlength=len(NUMEROLOGIES))
    order = sorted(NUMEROLOGIES, key=lambda mu: (-counts[mu], mu))
    return tuple(sorted(order[:num_count]))


def nearest_active(preferred: np.ndarray, active: Sequence[int]) -> np.ndarray:
    act = np.asarray(active)
    dist = np.abs(preferred[:, None] - act[None, :])
    # active is ascending, so argmin picks the lower mu on distance ties
    return act[np.argmin(dist, axis=1)]


def _plan(preferred: np.ndarray, cls: WaveformClass, total_bw_hz: float) -> AllocationPlan:
    guard_hz = cls.guard.guard_hz
    active = select_numerologies(preferred, cls.num_count)
    assignment = nearest_active(preferred, active)
    usable = total_bw_hz - guard_hz * (cls.num_count - 1)
    if usable <= 0:
        raise InfeasiblePlanError(
            f"class {cls.label}: guards of {guard_hz:g} Hz exhaust {total_bw_hz:g} Hz"
        )
    n = len(assignment)
    widths = {mu: usable * np.count_nonzero(assignment == mu) / n for mu in active}
    return AllocationPlan(active, assignment, widths, guard_hz, preferred)


def plan_allocation(scenario: CellScenario, cls: WaveformClass, total_bw_hz: float = 20e6) -> AllocationPlan:
    preferred = preferred_numerologies(impairment_matrix(scenario))
    return _plan(preferred, cls, total_bw_hz)


def user_ini(plan: AllocationPlan) -> np.ndarray:
    """INI power seen by each user from the blocks adjacent to its own."""
    per_block = {}
    for mu in plan.active_mus:
        width = plan.block_bandwidth_hz[mu]
        n_sc = width / _SCS[mu]
        weight = min(1.0, EDGE_SUBCARRIERS / n_sc) if n_sc > 0 else 0.0
        per_block[mu] = sum(
            ini_fraction(plan.guard_hz, mu, agg, plan.block_bandwidth_hz[agg], weight)
            for agg in plan.neighbours(mu)
        )
    return np.array([per_block[mu] for mu in plan.user_assignment])


def _metrics_from_plan(
    impairments: np.ndarray, plan: AllocationPlan, cls: WaveformClass, config: MetricConfig
) -> MetricTriple:
    users = np.arange(len(plan.user_assignment))
    interference = impairments[users, plan.user_assignment] + user_ini(plan)
    sinr = 1.0 / (config.noise_power + interference)
    guard_fraction = plan.guard_bandwidth_hz / config.total_bw_hz
    se = (1.0 - guard_fraction) * np.mean(_CP_EFF[plan.user_assignment] * np.log2(1.0 + sinr))
    return MetricTriple(
        sinr_db=float(np.mean(10.0 * np.log10(sinr))),
        se_bps_hz=float(se),
        flexibility=cls.flexibility,
    )


def cell_metrics(scenario: CellScenario, cls: WaveformClass, config: MetricConfig = MetricConfig()) -> MetricTriple:
    imp = impairment_matrix(scenario)
    plan = _plan(preferred_numerologies(imp), cls, config.total_bw_hz)
    return _metrics_from_plan(imp, plan, cls, config)


def all_class_metrics(
    scenario: CellScenario, classes: Sequence[WaveformClass], config: MetricConfig = MetricConfig()
) -> list[MetricTriple | None]:
    """Metrics for every class; None marks an infeasible plan."""
    imp = impairment_matrix(scenario)
    preferred = preferred_numerologies(imp)
    out: list[MetricTriple | None] = []
    for cls in classes:
        try:
            plan = _plan(preferred, cls, config.total_bw_hz)
        except InfeasiblePlanError:
            out.append(None)
            continue
        out.append(_metrics_from_plan(imp, plan, cls, config))
    return out
