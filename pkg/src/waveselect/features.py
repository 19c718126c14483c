"""User-count-independent scenario features and their standardization."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scenario import CellScenario, Service

FEATURE_NAMES = (
    "mean_tau_s",
    "max_tau_s",
    "mean_doppler_hz",
    "max_doppler_hz",
    "frac_embb",
    "frac_urllc",
    "frac_mmtc",
)
NUM_FEATURES = len(FEATURE_NAMES)


def extract(scenario: CellScenario) -> np.ndarray:
    """Seven summary statistics over the users of a cell.

    Means use a correctly rounded sum, so the vector is bitwise independent
    of user order.
    """
    n = scenario.num_users
    if n == 0:
        raise ValueError("cannot extract features from an empty cell")
    counts = np.bincount(scenario.service, minlength=len(Service))
    return np.array(
        [
            math.fsum(scenario.tau_max_s) / n,
            np.max(scenario.tau_max_s),
            math.fsum(scenario.doppler_hz) / n,
            np.max(scenario.doppler_hz),
            *(counts / n),
        ]
    )


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray  # 0 marks a constant feature, passed through unscaled

    @property
    def constant(self) -> np.ndarray:
        return self.std == 0

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        scale = np.where(self.constant, 1.0, self.std)
        shift = np.where(self.constant, 0.0, self.mean)
        return (x - shift) / scale

    def inverse_transform(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        scale = np.where(self.constant, 1.0, self.std)
        shift = np.where(self.constant, 0.0, self.mean)
        return z * scale + shift


def fit_scaler(rows: np.ndarray) -> Scaler:
    x = np.asarray(rows, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("fitting a scaler needs at least two rows")
    mean = x.mean(axis=0)
    std = x.std(axis=0, ddof=1)
    # a spread at rounding level relative to the mean counts as constant
    std = np.where(std <= 1e-12 * np.maximum(1.0, np.abs(mean)), 0.0, std)
    return Scaler(mean, std)


def apply_scaler(scaler: Scaler, x: np.ndarray) -> np.ndarray:
    return scaler.transform(x)


def write_scaler(scaler: Scaler, stream: io.TextIOBase, names: Sequence[str] = FEATURE_NAMES) -> None:
    stream.write("scaler v1\n")
    for name, m, s in zip(names, scaler.mean, scaler.std):
        stream.write(f"{name} {float(m)!r} {float(s)!r}\n")


def read_scaler(lines: Sequence[str], names: Sequence[str] = FEATURE_NAMES) -> Scaler:
    """Parse a scaler from its text lines (header included)."""
    if not lines or lines[0].strip() != "scaler v1":
        raise ValueError("scaler: missing 'scaler v1' header")
    body = [ln.split() for ln in lines[1:] if ln.strip()]
    if len(body) != len(names):
        raise ValueError(f"scaler: expected {len(names)} feature lines, got {len(body)}")
    mean, std = [], []
    for expected, parts in zip(names, body):
        if len(parts) != 3 or parts[0] != expected:
            raise ValueError(f"scaler: malformed line for feature {expected!r}")
        mean.append(float(parts[1]))
        std.append(float(parts[2]))
    return Scaler(np.array(mean), np.array(std))
