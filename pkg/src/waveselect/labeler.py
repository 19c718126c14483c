"""Simulation-based class labelling and class balancing.

Every candidate class is evaluated on the scenario, the three metrics are
min-max normalized across the candidates and combined with weights chosen by
the cell's service mix. The best-scoring class becomes the label.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import extract
from .metrics import MetricConfig, MetricTriple, all_class_metrics
from .numerology import DEFAULT_GUARD_WIDTHS, LABELS, NUM_CLASSES, class_table
from .scenario import CellScenario, Service


class BalanceError(ValueError):
    pass


@dataclass(frozen=True)
class MetricWeights:
    w_sinr: float
    w_se: float
    w_flex: float

    def __post_init__(self):
        w = self.as_array()
        if np.any(w < 0):
            raise ValueError("metric weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"metric weights must sum to 1, got {float(w.sum()):g}")

    def as_array(self) -> np.ndarray:
        return np.array([self.w_sinr, self.w_se, self.w_flex])


@dataclass(frozen=True)
class WeightTable:
    """Weights for a cell whose majority (> U/2) service is known, or for a mixed cell."""

    embb: MetricWeights = MetricWeights(0.2, 0.6, 0.2)
    urllc: MetricWeights = MetricWeights(0.6, 0.2, 0.2)
    mmtc: MetricWeights = MetricWeights(0.3, 0.3, 0.4)
    mixed: MetricWeights = MetricWeights(0.25, 0.25, 0.5)

    def for_service(self, service: Service) -> MetricWeights:
        return {Service.EMBB: self.embb, Service.URLLC: self.urllc, Service.MMTC: self.mmtc}[service]


DEFAULT_WEIGHTS = WeightTable()


def weights_for(service_counts: Sequence[int], table: WeightTable = DEFAULT_WEIGHTS) -> MetricWeights:
    counts = np.asarray(service_counts)
    total = int(counts.sum())
    if total <= 0:
        raise ValueError("service counts describe an empty cell")
    for service in Service:
        if counts[service] > total / 2:
            return table.for_service(service)
    return table.mixed


def score_classes(metrics: Sequence[MetricTriple | None], weights: MetricWeights) -> np.ndarray:
    """Weighted sum of per-dimension min-max normalized metrics.

    Infeasible candidates (None) score -inf and are left out of the
    normalization. A dimension that is constant across candidates maps to 0.5.
    """
    if len(metrics) != NUM_CLASSES:
        raise ValueError(f"expected {NUM_CLASSES} metric triples, got {len(metrics)}")
    feasible = np.array([m is not None for m in metrics])
    scores = np.full(NUM_CLASSES, -np.inf)
    if not feasible.any():
        return scores
    raw = np.array([[m.sinr_db, m.se_bps_hz, m.flexibility] for m in metrics if m is not None])
    lo, hi = raw.min(axis=0), raw.max(axis=0)
    span = hi - lo
    normed = np.where(span > 0, (raw - lo) / np.where(span > 0, span, 1.0), 0.5)
    scores[feasible] = normed @ weights.as_array()
    return scores


@dataclass(frozen=True)
class LabelerConfig:
    metric: MetricConfig = MetricConfig()
    guard_widths: tuple[int, int, int] = DEFAULT_GUARD_WIDTHS
    weights: WeightTable = DEFAULT_WEIGHTS


@dataclass(frozen=True)
class LabeledScenario:
    scenario_id: int
    features: np.ndarray
    label: int
    score_table: tuple[MetricTriple | None, ...] = field(default=(), compare=False)
    scores: np.ndarray | None = field(default=None, compare=False)


def label_scenario(scenario: CellScenario, config: LabelerConfig = LabelerConfig()) -> LabeledScenario:
    classes = class_table(config.guard_widths)
    metrics = all_class_metrics(scenario, classes, config.metric)
    if all(m is None for m in metrics):
        raise ValueError(f"scenario {scenario.scenario_id}: no class has a feasible plan")
    counts = np.bincount(scenario.service, minlength=len(Service))
    scores = score_classes(metrics, weights_for(counts, config.weights))
    label = int(np.argmax(scores)) + 1  # first maximum, i.e. lowest label on ties
    return LabeledScenario(scenario.scenario_id, extract(scenario), label, tuple(metrics), scores)


def _label_chunk(args):
    scenarios, config = args
    return [label_scenario(s, config) for s in scenarios]


def label_scenarios(
    scenarios: Sequence[CellScenario], config: LabelerConfig = LabelerConfig(), workers: int = 1
) -> list[LabeledScenario]:
    if workers <= 1 or len(scenarios) < 2:
        return [label_scenario(s, config) for s in scenarios]
    size = max(1, -(-len(scenarios) // (workers * 4)))
    jobs = [(list(scenarios[i:i + size]), config) for i in range(0, len(scenarios), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [row for chunk in pool.map(_label_chunk, jobs) for row in chunk]


def class_counts(rows: Sequence[LabeledScenario]) -> np.ndarray:
    return np.bincount([r.label for r in rows], minlength=NUM_CLASSES + 1)[1:]


def balance_dataset(rows: Sequence[LabeledScenario], seed: int) -> list[LabeledScenario]:
    """Downsample every class to the rarest class's count.

    Survivors are drawn uniformly without replacement per class; the result
    is ordered by (label, scenario_id) and does not depend on input order.
    """
    by_label: dict[int, list[LabeledScenario]] = {c: [] for c in LABELS}
    for r in rows:
        by_label[r.label].append(r)
    for c in LABELS:
        if not by_label[c]:
            raise BalanceError(f"class {c} has no samples; cannot balance")
    target = min(len(v) for v in by_label.values())
    rng = np.random.default_rng(seed)
    out = []
    for c in LABELS:
        group = sorted(by_label[c], key=lambda r: r.scenario_id)
        keep = np.sort(rng.choice(len(group), size=target, replace=False))
        out.extend(group[i] for i in keep)
    return out
