"""Time-domain multi-numerology CP-OFDM simulator.

Brute-force reference for the closed-form link model. Each block is
modulated with its own FFT size and cyclic prefix on a shared sample clock,
shifted to its place in frequency, and summed. Demodulation undoes the shift
of the victim block and applies that block's FFT. Unitary FFTs throughout,
so time-domain energy over the useful windows equals symbol energy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numerology import BASE_SCS_HZ, CP_RATIO

BASE_FFT = 4096  # FFT size of mu=0
SAMPLE_RATE_HZ = BASE_FFT * BASE_SCS_HZ
MAX_BLOCK_SUBCARRIERS = 600
MAX_BLOCKS = 2


class OracleConfigError(ValueError):
    pass


def fft_size(mu: int) -> int:
    return BASE_FFT >> mu


def cp_length(mu: int) -> int:
    n = fft_size(mu) * CP_RATIO
    if n != int(n):
        raise OracleConfigError(f"CP of mu={mu} is not an integer number of samples")
    return int(n)


@dataclass(frozen=True)
class Block:
    mu: int
    num_subcarriers: int


@dataclass(frozen=True)
class BlockLayout:
    mu: int
    num_subcarriers: int
    first_subcarrier_hz: float  # centre frequency of the lowest subcarrier
    symbols: np.ndarray  # (num_symbols, num_subcarriers) complex

    @property
    def scs_hz(self) -> float:
        return BASE_SCS_HZ * 2**self.mu


@dataclass(frozen=True)
class TimeDomainFrame:
    samples: np.ndarray
    sample_rate_hz: float
    blocks: tuple[BlockLayout, ...]
    components: tuple[np.ndarray, ...]  # per-block contribution to `samples`


def qpsk(rng: np.random.Generator, shape) -> np.ndarray:
    bits = rng.integers(0, 2, size=(2,) + tuple(shape))
    return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / np.sqrt(2)


def _modulate(symbols: np.ndarray, mu: int) -> np.ndarray:
    n_fft, n_cp = fft_size(mu), cp_length(mu)
    grid = np.zeros((symbols.shape[0], n_fft), dtype=complex)
    grid[:, : symbols.shape[1]] = symbols
    body = np.fft.ifft(grid, axis=1, norm="ortho")
    return np.concatenate([body[:, -n_cp:], body], axis=1).ravel()


def _shift(x: np.ndarray, freq_hz: float) -> np.ndarray:
    n = np.arange(len(x))
    return x * np.exp(2j * np.pi * freq_hz * n / SAMPLE_RATE_HZ)


def synthesize_frame(
    blocks: Sequence[Block], guard_sc15: int = 0, seed: int = 0, num_periods: int = 100
) -> TimeDomainFrame:
    """Build a frame of `num_periods` common periods.

    A common period is one symbol of the smallest numerology present; blocks
    with larger numerologies fit 2**(mu - mu_min) symbols into it. Blocks are
    placed in the given order from low to high frequency with `guard_sc15`
    15 kHz units between adjacent occupied bands.
    """
    if not 1 <= len(blocks) <= MAX_BLOCKS:
        raise OracleConfigError(f"between 1 and {MAX_BLOCKS} blocks supported")
    if guard_sc15 < 0:
        raise OracleConfigError("guard must be non-negative")
    for b in blocks:
        if b.mu not in range(4):
            raise OracleConfigError(f"unsupported numerology {b.mu}")
        if not 1 <= b.num_subcarriers <= MAX_BLOCK_SUBCARRIERS:
            raise OracleConfigError(f"block width must be 1..{MAX_BLOCK_SUBCARRIERS} subcarriers")
    span = sum(b.num_subcarriers * BASE_SCS_HZ * 2**b.mu for b in blocks) + guard_sc15 * BASE_SCS_HZ
    if span >= SAMPLE_RATE_HZ:
        raise OracleConfigError("allocation exceeds the simulated bandwidth")

    rng = np.random.default_rng(seed)
    mu_min = min(b.mu for b in blocks)
    period = fft_size(mu_min) + cp_length(mu_min)

    # lower band edge on the 15 kHz grid, roughly centred on DC
    edge = -np.floor(span / 2 / BASE_SCS_HZ) * BASE_SCS_HZ
    layouts, components = [], []
    for i, b in enumerate(blocks):
        scs = BASE_SCS_HZ * 2**b.mu
        if i > 0:
            edge += guard_sc15 * BASE_SCS_HZ
        n_sym = num_periods * 2 ** (b.mu - mu_min)
        symbols = qpsk(rng, (n_sym, b.num_subcarriers))
        first = edge + scs / 2
        x = _modulate(symbols, b.mu)
        assert len(x) == num_periods * period
        # bin k of the block sits at baseband k*scs; shift so bin 0 lands on `first`
        components.append(_shift(x, first))
        layouts.append(BlockLayout(b.mu, b.num_subcarriers, first, symbols))
        edge += b.num_subcarriers * scs
    samples = np.sum(components, axis=0)
    return TimeDomainFrame(samples, SAMPLE_RATE_HZ, tuple(layouts), tuple(components))


def demodulate(samples: np.ndarray, layout: BlockLayout) -> np.ndarray:
    """FFT outputs of the block's subcarriers, one row per symbol."""
    n_fft, n_cp = fft_size(layout.mu), cp_length(layout.mu)
    x = _shift(samples, -layout.first_subcarrier_hz)
    n_sym = len(x) // (n_fft + n_cp)
    body = x[: n_sym * (n_fft + n_cp)].reshape(n_sym, n_fft + n_cp)[:, n_cp:]
    return np.fft.fft(body, axis=1, norm="ortho")[:, : layout.num_subcarriers]


def useful_energy(samples: np.ndarray, mu: int) -> float:
    """Energy inside the FFT windows of numerology `mu` (CP samples excluded)."""
    n_fft, n_cp = fft_size(mu), cp_length(mu)
    n_sym = len(samples) // (n_fft + n_cp)
    body = samples[: n_sym * (n_fft + n_cp)].reshape(n_sym, n_fft + n_cp)[:, n_cp:]
    return float(np.sum(np.abs(body) ** 2))


def clarke_fading(num_samples: int, doppler_hz: float, seed: int, num_paths: int = 64) -> np.ndarray:
    """Flat Rayleigh fading by sum of sinusoids with uniform arrival angles."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0, 2 * np.pi, num_paths)
    phase = rng.uniform(0, 2 * np.pi, num_paths)
    t = np.arange(num_samples) / SAMPLE_RATE_HZ
    arg = 2 * np.pi * doppler_hz * np.cos(theta)[:, None] * t[None, :] + phase[:, None]
    return np.exp(1j * arg).sum(axis=0) / np.sqrt(num_paths)


@dataclass(frozen=True)
class LinkReport:
    sinr: np.ndarray  # per subcarrier, linear
    signal_power: np.ndarray
    interference_power: np.ndarray
    noise_power: float

    @property
    def sinr_db(self) -> np.ndarray:
        return 10 * np.log10(self.sinr)


def measure_link(
    frame: TimeDomainFrame,
    victim: int = 0,
    noise_power: float = 0.0,
    doppler_hz: float = 0.0,
    seed: int = 0,
) -> LinkReport:
    """Per-subcarrier SINR of one block, averaged over all its symbols.

    Interference is whatever the demodulated output holds besides the
    intended symbol scaled by the per-symbol mean channel gain. Noise is
    additive white with `noise_power` per sample, which the unitary FFT maps
    to `noise_power` per subcarrier; it enters at its expected value.
    With `doppler_hz` > 0 the whole frame passes through a flat Clarke
    fading channel, so the interference then includes Doppler ICI.
    """
    layout = frame.blocks[victim]
    samples = frame.samples
    n_fft, n_cp = fft_size(layout.mu), cp_length(layout.mu)
    n_sym = layout.symbols.shape[0]
    if doppler_hz > 0:
        h = clarke_fading(len(samples), doppler_hz, seed)
        samples = samples * h
        windows = h[: n_sym * (n_fft + n_cp)].reshape(n_sym, n_fft + n_cp)[:, n_cp:]
        gain = windows.mean(axis=1)[:, None]
    else:
        gain = np.ones((n_sym, 1))
    y = demodulate(samples, layout)
    wanted = gain * layout.symbols
    signal = np.mean(np.abs(wanted) ** 2, axis=0)
    interference = np.mean(np.abs(y - wanted) ** 2, axis=0)
    sinr = signal / (interference + noise_power)
    return LinkReport(sinr, signal, interference, noise_power)


def measured_ini(victim_mu: int, aggressor_mu: int, guard_sc15: int, width: int = 96,
                 seed: int = 0, num_periods: int = 100) -> float:
    """Mean INI power per victim subcarrier for a victim block below an aggressor."""
    frame = synthesize_frame(
        [Block(victim_mu, width), Block(aggressor_mu, width)], guard_sc15, seed, num_periods
    )
    return float(measure_link(frame, 0).interference_power.mean())
