"""Transmitter chain: serial/parallel splitting, multicode spreading, PN
spreading and subcarrier modulation.

One data symbol occupies `symbol_duration` seconds and carries one full PN
period (pn_length chips, oversampling samples per chip) on every subcarrier.
The Walsh chips of the multicode layer are stretched across the same window
on a floor-indexed grid, so Walsh and PN chip clocks co-terminate at every
symbol boundary even when the Walsh order does not divide the sample count.
All signals are complex envelopes; the real passband waveform is never built.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codes import PnSequence, WalshMatrix


@dataclass(frozen=True)
class LinkConfig:
    """System dimensions shared by the transmitter, channel and receiver.

    power is the per-branch signal power: each (substream, carrier) branch is
    sent with complex-envelope amplitude sqrt(2*power), so a full frame has
    average complex power 2*power*substreams*carriers.
    """

    users: int = 1
    substreams: int = 1
    carriers: int = 1
    walsh_order: int = 1
    pn_length: int = 7
    symbol_duration: float = 1.0
    oversampling: int = 4
    power: float = 1.0

    def __post_init__(self):
        if self.users < 1:
            raise ValueError(f"users must be >= 1, got {self.users}")
        if self.substreams < 1:
            raise ValueError(f"substreams must be >= 1, got {self.substreams}")
        if self.carriers < 1:
            raise ValueError(f"carriers must be >= 1, got {self.carriers}")
        if self.walsh_order < 1 or (self.walsh_order & (self.walsh_order - 1)) != 0:
            raise ValueError(f"walsh_order must be a power of two, got {self.walsh_order}")
        if self.walsh_order < self.substreams:
            raise ValueError(
                f"walsh_order {self.walsh_order} cannot serve {self.substreams} substreams"
            )
        if self.pn_length < 1:
            raise ValueError(f"pn_length must be >= 1, got {self.pn_length}")
        if self.oversampling < 2:
            raise ValueError(f"oversampling must be >= 2, got {self.oversampling}")
        if self.symbol_duration <= 0:
            raise ValueError(f"symbol_duration must be positive, got {self.symbol_duration}")
        if self.power <= 0:
            raise ValueError(f"power must be positive, got {self.power}")
        if self.walsh_order > self.samples_per_symbol:
            raise ValueError(
                f"walsh_order {self.walsh_order} exceeds the {self.samples_per_symbol} "
                "samples available per symbol"
            )
        if self.carriers * self.walsh_order > self.samples_per_symbol:
            raise ValueError(
                f"{self.carriers} subcarriers at spacing walsh_order/T need "
                f"{self.carriers * self.walsh_order} distinct cycles per symbol, "
                f"but only {self.samples_per_symbol} samples are available"
            )

    @property
    def samples_per_symbol(self) -> int:
        return self.oversampling * self.pn_length

    @property
    def sample_rate(self) -> float:
        return self.samples_per_symbol / self.symbol_duration

    @property
    def bits_per_symbol(self) -> int:
        """Information bits per user per symbol window."""
        return self.substreams * self.carriers

    @property
    def walsh_aligned(self) -> bool:
        """True when every Walsh chip covers the same whole number of samples."""
        return self.samples_per_symbol % self.walsh_order == 0


@dataclass(frozen=True)
class UserSymbols:
    """BPSK symbols for one user, indexed (symbol slot, substream, carrier)."""

    user: int
    symbols: np.ndarray

    def __post_init__(self):
        if self.symbols.ndim != 3:
            raise ValueError(f"symbols must be (slots, substreams, carriers), got {self.symbols.shape}")
        if not np.isin(self.symbols, (-1, 1)).all():
            raise ValueError("symbols must be +-1")


@dataclass
class BasebandFrame:
    """Complex-envelope sample stream with an explicit sample rate."""

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


def serial_to_parallel(bits, lanes: int) -> np.ndarray:
    """Round-robin split of a +-1 stream into `lanes` rows: bit i goes to
    lane i mod lanes, slot i // lanes."""
    bits = np.asarray(bits)
    if lanes < 1:
        raise ValueError(f"lanes must be >= 1, got {lanes}")
    if bits.size % lanes != 0:
        raise ValueError(f"stream length {bits.size} is not divisible by {lanes} lanes; pad first")
    return bits.reshape(-1, lanes).T


def parallel_to_serial(matrix) -> np.ndarray:
    """Inverse of serial_to_parallel."""
    matrix = np.asarray(matrix)
    return matrix.T.reshape(-1)


def multicode_spread(substream_symbols, walsh: WalshMatrix) -> np.ndarray:
    """Sum of code-weighted symbols: chip n is sum_r d_r * row_r[n].

    Returns the multi-level super-stream for one symbol slot; integer valued,
    magnitude at most R with parity equal to R's.
    """
    d = np.asarray(substream_symbols, dtype=np.int64)
    if d.ndim != 1:
        raise ValueError(f"substream symbols must be a vector, got shape {d.shape}")
    if d.size > walsh.order:
        raise ValueError(f"{d.size} substreams exceed the Walsh order {walsh.order}")
    return d @ walsh.rows[: d.size].astype(np.int64)


def subcarrier_frequency(m: int, config: LinkConfig) -> float:
    """Frequency of subcarrier m (1-based): m * walsh_order / symbol_duration.

    The spacing walsh_order/T makes every carrier difference complete a
    whole number of cycles inside each orthogonal-code chip, not just over
    the full symbol.  That stronger condition is what keeps distinct
    (substream, carrier) slots exactly orthogonal: with plain 1/T spacing a
    code-chip-rate sign pattern can alias onto a carrier difference and two
    slots stop separating, no matter how long the correlation window is.
    """
    if not 1 <= m <= config.carriers:
        raise IndexError(f"subcarrier index {m} outside 1..{config.carriers}")
    return m * config.walsh_order / config.symbol_duration


def walsh_chip_indices(config: LinkConfig) -> np.ndarray:
    """Walsh chip index for each of the samples_per_symbol sample positions.

    Floor grid: sample i belongs to chip (i * walsh_order) // samples_per_symbol.
    Exact equal-length chips whenever walsh_order divides samples_per_symbol;
    otherwise chip lengths differ by at most one sample.
    """
    i = np.arange(config.samples_per_symbol, dtype=np.int64)
    return (i * config.walsh_order) // config.samples_per_symbol


def slot_signatures(walsh: WalshMatrix, pn, config: LinkConfig) -> np.ndarray:
    """Unit-modulus signature waveform of every (substream, carrier) slot.

    Returns shape (substreams, carriers, samples_per_symbol); entry (r, m)
    is walsh_row_r (stretched) * pn chips (oversampled) * subcarrier m+1
    exponential.  pn may be a PnSequence or a bare +-1 chip array (e.g. a
    shifted per-user sequence).  The transmitter scales these by
    sqrt(2*power) and the receiver correlates against their conjugates.
    """
    chips = pn.chips if isinstance(pn, PnSequence) else np.asarray(pn)
    if chips.size != config.pn_length:
        raise ValueError(f"PN length {chips.size} does not match config pn_length {config.pn_length}")
    if walsh.order != config.walsh_order:
        raise ValueError(f"Walsh order {walsh.order} does not match config walsh_order {config.walsh_order}")
    n_samp = config.samples_per_symbol
    walsh_up = walsh.rows[: config.substreams, walsh_chip_indices(config)].astype(np.float64)
    pn_up = np.repeat(chips, config.oversampling).astype(np.float64)
    i = np.arange(n_samp)
    # Sampled e^{j 2 pi f_m t} with f_m = m*walsh_order/T and t = i T/n_samp;
    # periodic over the symbol, so tiling symbols keeps the carrier phase
    # continuous.  See subcarrier_frequency for why the spacing carries the
    # walsh_order factor.
    carriers = np.exp(
        2j * np.pi * config.walsh_order
        * np.arange(1, config.carriers + 1)[:, None] * i[None, :] / n_samp
    )
    return walsh_up[:, None, :] * pn_up[None, None, :] * carriers[None, :, :]


def modulate_user(symbols, walsh: WalshMatrix, pn: PnSequence, config: LinkConfig,
                  signatures: np.ndarray | None = None) -> BasebandFrame:
    """Complex-envelope transmit frame for one user.

    symbols has shape (slots, substreams, carriers) with +-1 entries (or is a
    UserSymbols).  Each slot becomes samples_per_symbol samples equal to
    sqrt(2*power) * sum over slots of symbol * signature.
    """
    if isinstance(symbols, UserSymbols):
        symbols = symbols.symbols
    d = np.asarray(symbols, dtype=np.float64)
    if d.ndim != 3 or d.shape[1] != config.substreams or d.shape[2] != config.carriers:
        raise ValueError(
            f"symbols must be (slots, {config.substreams}, {config.carriers}), got {d.shape}"
        )
    if signatures is None:
        signatures = slot_signatures(walsh, pn, config)
    n_slots = d.shape[0]
    n_samp = config.samples_per_symbol
    flat_sig = signatures.reshape(config.substreams * config.carriers, n_samp)
    samples = np.sqrt(2.0 * config.power) * (d.reshape(n_slots, -1) @ flat_sig)
    return BasebandFrame(samples.reshape(-1), config.sample_rate)
