"""Seeded random cell scenarios: per-user delay spread, Doppler and service type."""

from __future__ import annotations

import csv
import enum
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np


class Service(enum.IntEnum):
    EMBB = 0
    URLLC = 1
    MMTC = 2


class UserScenario(NamedTuple):
    tau_max_s: float
    doppler_hz: float
    service: Service


@dataclass(frozen=True, eq=False)
class CellScenario:
    """One raw-dataset row. Per-user values are held column-wise."""

    scenario_id: int
    tau_max_s: np.ndarray
    doppler_hz: np.ndarray
    service: np.ndarray

    def __post_init__(self):
        n = len(self.tau_max_s)
        if n < 1:
            raise ValueError("a cell needs at least one user")
        if len(self.doppler_hz) != n or len(self.service) != n:
            raise ValueError("per-user arrays must have equal length")

    @classmethod
    def from_users(cls, scenario_id: int, users: Sequence[UserScenario]) -> "CellScenario":
        if not users:
            raise ValueError("a cell needs at least one user")
        return cls(
            scenario_id,
            np.array([u.tau_max_s for u in users], dtype=float),
            np.array([u.doppler_hz for u in users], dtype=float),
            np.array([int(u.service) for u in users], dtype=np.int64),
        )

    @property
    def num_users(self) -> int:
        return len(self.tau_max_s)

    @property
    def users(self) -> list[UserScenario]:
        return [
            UserScenario(float(t), float(d), Service(int(s)))
            for t, d, s in zip(self.tau_max_s, self.doppler_hz, self.service)
        ]

    def __eq__(self, other):
        if not isinstance(other, CellScenario):
            return NotImplemented
        return (
            self.scenario_id == other.scenario_id
            and np.array_equal(self.tau_max_s, other.tau_max_s)
            and np.array_equal(self.doppler_hz, other.doppler_hz)
            and np.array_equal(self.service, other.service)
        )


@dataclass(frozen=True)
class ScenarioConfig:
    num_scenarios: int = 20_000
    users_per_cell: int = 20
    tau_range_s: tuple[float, float] = (1e-7, 6e-6)
    doppler_range_hz: tuple[float, float] = (5.0, 2000.0)
    snr_db: float = 20.0
    master_seed: int = 2019

    def validate(self) -> None:
        if self.num_scenarios < 1:
            raise ValueError("num_scenarios must be >= 1")
        if self.users_per_cell < 1:
            raise ValueError("users_per_cell must be >= 1")
        for name in ("tau_range_s", "doppler_range_hz"):
            lo, hi = getattr(self, name)
            if not (0 < lo < hi):
                raise ValueError(f"{name} must satisfy 0 < min < max, got {(lo, hi)}")
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")


def scenario_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent substream for scenario `index`.

    The mixing function is numpy's SeedSequence hash over the entropy pair
    (master_seed, index), so each scenario depends only on those two values.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, index])))


def make_scenario(config: ScenarioConfig, index: int) -> CellScenario:
    rng = scenario_rng(config.master_seed, index)
    u = config.users_per_cell
    tau = rng.uniform(*config.tau_range_s, size=u)
    doppler = rng.uniform(*config.doppler_range_hz, size=u)
    service = rng.integers(0, len(Service), size=u)
    return CellScenario(index, tau, doppler, service)


def _make_chunk(args):
    config, start, stop = args
    return [make_scenario(config, i) for i in range(start, stop)]


def _chunks(n: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, -(-n // (workers * 4)))
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def generate_scenarios(config: ScenarioConfig, workers: int = 1) -> list[CellScenario]:
    config.validate()
    n = config.num_scenarios
    if workers <= 1:
        return [make_scenario(config, i) for i in range(n)]
    jobs = [(config, a, b) for a, b in _chunks(n, workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so assembly is index-ordered
        return [s for chunk in pool.map(_make_chunk, jobs) for s in chunk]


# --- raw CSV -----------------------------------------------------------------

def raw_header(num_users: int) -> list[str]:
    cols = ["scenario_id"]
    for i in range(num_users):
        cols += [f"u{i}_tau_s", f"u{i}_doppler_hz", f"u{i}_service"]
    return cols


def format_float(x: float) -> str:
    return f"{x:.9g}"


def write_raw_csv(scenarios: Sequence[CellScenario], stream: io.TextIOBase) -> None:
    if not scenarios:
        raise ValueError("no scenarios to write")
    u = scenarios[0].num_users
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(raw_header(u))
    for sc in scenarios:
        if sc.num_users != u:
            raise ValueError("all scenarios in a raw file must have the same user count")
        row = [str(sc.scenario_id)]
        for t, d, s in zip(sc.tau_max_s, sc.doppler_hz, sc.service):
            row += [format_float(t), format_float(d), str(int(s))]
        writer.writerow(row)


def read_raw_csv(stream: io.TextIOBase) -> Iterator[CellScenario]:
    reader = csv.reader(stream)
    header = next(reader, None)
    if not header or header[0] != "scenario_id" or (len(header) - 1) % 3:
        raise ValueError("raw scenario file: missing or malformed header")
    u = (len(header) - 1) // 3
    if header != raw_header(u):
        raise ValueError("raw scenario file: unexpected column names")
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} columns, got {len(row)}")
        try:
            vals = row[1:]
            tau = np.array([float(v) for v in vals[0::3]])
            dop = np.array([float(v) for v in vals[1::3]])
            svc = np.array([int(v) for v in vals[2::3]], dtype=np.int64)
            sid = int(row[0])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if np.any((svc < 0) | (svc >= len(Service))):
            raise ValueError(f"line {lineno}: service code out of range")
        yield CellScenario(sid, tau, dop, svc)
