"""Flat `key = value` pipeline configuration.

Lines hold `key = value`; `#` starts a comment. Unknown keys are rejected and
every key has a default, so an empty file is a valid configuration.

The pipeline defaults differ from the library defaults of the individual
modules (guards 0/4/8, 20 dB, mixed weights 0.25/0.25/0.5, delay up to 6 us,
Doppler up to 2 kHz). With those values nearly every cell receives the same
label and several classes never occur, so balancing is impossible. The
defaults below were calibrated so that all ten classes occur (the rarest at
about 1.3% of cells) and the labels are learnable from the seven features.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .dataio import SplitSpec
from .labeler import LabelerConfig, MetricWeights, WeightTable
from .metrics import MetricConfig
from .scenario import ScenarioConfig


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _depths(text: str) -> tuple[int | None, ...]:
    out = []
    for v in text.split(","):
        v = v.strip().lower()
        if v:
            out.append(None if v in ("inf", "none") else int(v))
    return tuple(out)


@dataclass(frozen=True)
class PipelineConfig:
    # scenario generation
    num_scenarios: int = 20_000
    users_per_cell: int = 20
    tau_min_s: float = 1e-7
    tau_max_s: float = 3.1e-6
    doppler_min_hz: float = 5.0
    doppler_max_hz: float = 970.0
    master_seed: int = 2019
    # link model
    snr_db: float = -4.0
    total_bw_hz: float = 20e6
    guard_g1: int = 11
    guard_g2: int = 32
    guard_g3: int = 66
    # labelling weights as w_sinr, w_se, w_flex
    weights_embb: tuple[float, ...] = (0.2, 0.6, 0.2)
    weights_urllc: tuple[float, ...] = (0.6, 0.2, 0.2)
    weights_mmtc: tuple[float, ...] = (0.3, 0.3, 0.4)
    weights_mixed: tuple[float, ...] = (0.77, 0.11, 0.12)
    # splitting
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    # hyperparameter grids
    knn_k_grid: tuple[int, ...] = (5,)
    tree_depth_grid: tuple[int | None, ...] = (4, 6, 8, 10, None)
    tree_min_leaf: int = 1
    mlp_hidden: int = 20
    mlp_lr_grid: tuple[float, ...] = (0.01, 0.05, 0.1)
    mlp_max_epochs: int = 3000
    mlp_patience: int = 20
    # execution only; never affects outputs
    workers: int = 1

    def scenario_config(self) -> ScenarioConfig:
        return ScenarioConfig(
            num_scenarios=self.num_scenarios,
            users_per_cell=self.users_per_cell,
            tau_range_s=(self.tau_min_s, self.tau_max_s),
            doppler_range_hz=(self.doppler_min_hz, self.doppler_max_hz),
            snr_db=self.snr_db,
            master_seed=self.master_seed,
        )

    def labeler_config(self) -> LabelerConfig:
        return LabelerConfig(
            metric=MetricConfig(snr_db=self.snr_db, total_bw_hz=self.total_bw_hz),
            guard_widths=(self.guard_g1, self.guard_g2, self.guard_g3),
            weights=WeightTable(
                embb=MetricWeights(*self.weights_embb),
                urllc=MetricWeights(*self.weights_urllc),
                mmtc=MetricWeights(*self.weights_mmtc),
                mixed=MetricWeights(*self.weights_mixed),
            ),
        )

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.train_frac, self.val_frac, self.test_frac, seed=self.master_seed)

    def validate(self) -> None:
        try:
            self.scenario_config().validate()
            self.labeler_config()
            self.split_spec()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if not (self.guard_g1 <= self.guard_g2 <= self.guard_g3) or self.guard_g1 < 0:
            raise ConfigError("guard widths must satisfy 0 <= g1 <= g2 <= g3")
        if not self.knn_k_grid or min(self.knn_k_grid) < 1:
            raise ConfigError("knn_k_grid needs positive entries")
        if not self.tree_depth_grid or any(d is not None and d < 1 for d in self.tree_depth_grid):
            raise ConfigError("tree_depth_grid entries must be >= 1 or inf")
        if not self.mlp_lr_grid or min(self.mlp_lr_grid) <= 0:
            raise ConfigError("mlp_lr_grid needs positive entries")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Hash of every output-affecting setting (workers excluded)."""
        text = replace(self, workers=1).to_text()
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join("inf" if v is None else _format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


_PARSERS = {
    int: int,
    float: float,
    "tuple[float, ...]": _floats,
    "tuple[int, ...]": _ints,
    "tuple[int | None, ...]": _depths,
}


def parse_config(text: str) -> PipelineConfig:
    types = {f.name: f.type for f in fields(PipelineConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parser = _PARSERS[{"int": int, "float": float}.get(types[key], types[key])]
        try:
            parsed = parser(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
        if isinstance(parsed, float) and not math.isfinite(parsed):
            raise ConfigError(f"line {lineno}: {key} must be finite")
        values[key] = parsed
    cfg = PipelineConfig(**values)
    cfg.validate()
    return cfg


def load_config(path) -> PipelineConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
