"""Numerology definitions, the 10-class waveform-parameter table and class grouping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

NUMEROLOGIES = (0, 1, 2, 3)
BASE_SCS_HZ = 15_000.0
CP_RATIO = 144 / 2048

# guard widths in 15 kHz subcarrier units
DEFAULT_GUARD_WIDTHS = (0, 4, 8)


@dataclass(frozen=True)
class NumerologyParams:
    mu: int
    scs_hz: float
    t_sym_s: float
    t_cp_s: float

    @property
    def cp_efficiency(self) -> float:
        """Fraction of the symbol period that carries data."""
        return self.t_sym_s / (self.t_sym_s + self.t_cp_s)


def numerology_params(mu: int) -> NumerologyParams:
    if mu not in NUMEROLOGIES:
        raise ValueError(f"numerology index must be one of {NUMEROLOGIES}, got {mu!r}")
    scs = BASE_SCS_HZ * 2**mu
    t_sym = 1.0 / scs
    return NumerologyParams(mu=mu, scs_hz=scs, t_sym_s=t_sym, t_cp_s=CP_RATIO * t_sym)


@dataclass(frozen=True)
class GuardOption:
    id: str  # one of G1, G2, G3, NONE
    guard_sc15: int

    def __post_init__(self):
        if self.guard_sc15 < 0:
            raise ValueError("guard width must be non-negative")

    @property
    def guard_hz(self) -> float:
        return self.guard_sc15 * BASE_SCS_HZ


NO_GUARD = GuardOption("NONE", 0)


@dataclass(frozen=True)
class WaveformClass:
    label: int
    num_count: int
    guard: GuardOption

    def __post_init__(self):
        if self.num_count not in (1, 2, 3, 4):
            raise ValueError(f"numerology count must be 1..4, got {self.num_count}")
        if self.guard.id == "NONE" and self.num_count != 1:
            raise ValueError("guard option NONE requires a single numerology")

    @property
    def flexibility(self) -> float:
        return self.num_count / 4


def class_table(guard_widths: Sequence[int] = DEFAULT_GUARD_WIDTHS) -> tuple[WaveformClass, ...]:
    """The 10 labelled classes, ordered by label.

    Labels 1-9 cover 4, 3 and 2 numerologies, each with guards G1..G3 in
    ascending width; label 10 is the single-numerology class.
    """
    if len(guard_widths) != 3:
        raise ValueError("exactly three guard widths are required")
    if list(guard_widths) != sorted(guard_widths):
        raise ValueError("guard widths must be ascending")
    guards = [GuardOption(f"G{i + 1}", int(w)) for i, w in enumerate(guard_widths)]
    table = []
    label = 1
    for count in (4, 3, 2):
        for guard in guards:
            table.append(WaveformClass(label, count, guard))
            label += 1
    table.append(WaveformClass(10, 1, NO_GUARD))
    return tuple(table)


NUM_CLASSES = 10
LABELS = tuple(range(1, NUM_CLASSES + 1))

DEFAULT_GROUPING: Mapping[int, int] = {
    1: 1, 2: 1, 3: 1,
    4: 2, 5: 2, 6: 2,
    7: 3, 8: 3, 9: 3,
    10: 4,
}


def group_of(label: int, grouping: Mapping[int, int] = DEFAULT_GROUPING) -> int:
    try:
        return grouping[label]
    except KeyError:
        raise ValueError(f"unknown class label {label!r}") from None
