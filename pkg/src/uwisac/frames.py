"""Transmit-frame construction for the four signaling schemes.

A frame is M sub-blocks of K + N_cp samples.  The guard interval carries a
cyclic prefix (OFDM, PS), one full-size Zadoff-Chu word (UW1), or two
half-size Zadoff-Chu words (UW2).  Two spatial streams are built per frame:
one for the targets beam and one for the line-of-sight beam.
"""

import enum
from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Invalid frame/scene configuration."""


class FrameKind(str, enum.Enum):
    OFDM = "ofdm"
    PS = "ps"
    UW1 = "uw1"
    UW2 = "uw2"


_SUPPORTED_QAM = (4, 16, 64, 256, 1024)


@dataclass(frozen=True)
class FrameConfig:
    """Static frame geometry.

    Attributes
    ----------
    kind : FrameKind
    fft_size : int
        K, samples per OFDM symbol.
    cp_size : int
        N_cp, guard samples per sub-block (even, < K).
    num_subblocks : int
        M, sub-blocks per frame.
    num_pilot_subblocks : int
        M_p, pilot sub-blocks (PS only; must divide M).
    qam_order : int
        Square-QAM constellation size for the data payload.
    roll_off : float
        Raised-cosine roll-off factor used throughout the chain.
    """

    kind: FrameKind
    fft_size: int
    cp_size: int
    num_subblocks: int
    num_pilot_subblocks: int = 0
    qam_order: int = 256
    roll_off: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "kind", FrameKind(self.kind))
        if self.cp_size % 2 != 0 or not 0 < self.cp_size < self.fft_size:
            raise ConfigurationError(
                f"cp_size must be even and < fft_size, got {self.cp_size}"
            )
        if self.qam_order not in _SUPPORTED_QAM:
            raise ConfigurationError(f"unsupported QAM order {self.qam_order}")
        if not 0.0 < self.roll_off <= 1.0:
            raise ConfigurationError(f"roll_off must be in (0, 1], got {self.roll_off}")
        if self.kind is FrameKind.PS:
            mp = self.num_pilot_subblocks
            if mp < 2 or self.num_subblocks % mp != 0:
                raise ConfigurationError(
                    "PS needs num_pilot_subblocks >= 2 dividing num_subblocks"
                )

    @property
    def subblock_len(self):
        return self.fft_size + self.cp_size

    @property
    def frame_len(self):
        """Total samples N_x = M (K + N_cp)."""
        return self.num_subblocks * self.subblock_len

    @property
    def fast_size(self):
        """Fast-time window the radar processes per sub-block."""
        if self.kind in (FrameKind.OFDM, FrameKind.PS):
            return self.fft_size
        if self.kind is FrameKind.UW1:
            return self.cp_size
        return self.cp_size // 2

    @property
    def slow_size(self):
        """Number of processed sub-blocks (columns of the sample grid)."""
        if self.kind is FrameKind.PS:
            return self.num_pilot_subblocks
        return self.num_subblocks

    @property
    def pilot_indexes(self):
        """Sub-block indexes carrying pilots (PS only)."""
        step = self.num_subblocks // self.num_pilot_subblocks
        return np.arange(self.num_pilot_subblocks) * step

    @property
    def max_delay_norm(self):
        """Upper delay bound (exclusive) in samples for this frame kind."""
        if self.kind is FrameKind.UW2:
            return self.cp_size // 2
        return self.cp_size


@dataclass
class TxFrame:
    """One transmitted frame: the two spatial streams plus their payloads."""

    config: FrameConfig
    target_stream: np.ndarray
    los_stream: np.ndarray
    data_symbols: np.ndarray        # (K, M) frequency-domain QAM of the target stream
    pilot_symbols: np.ndarray = field(default=None)  # (K, M_p) +/-1 pilots (PS)


def gen_qam_symbols(count, order, rng):
    """Draw `count` uniform square-QAM symbols with unit average energy."""
    if order not in _SUPPORTED_QAM:
        raise ConfigurationError(f"unsupported QAM order {order}")
    side = int(np.sqrt(order))
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    scale = np.sqrt(2.0 * (side**2 - 1) / 3.0)
    re = rng.choice(levels, size=count)
    im = rng.choice(levels, size=count)
    return (re + 1j * im) / scale


def qam_constellation(order):
    """The unit-average-energy square-QAM point set."""
    if order not in _SUPPORTED_QAM:
        raise ConfigurationError(f"unsupported QAM order {order}")
    side = int(np.sqrt(order))
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def l_ofdm(order):
    """SNR-loss factor of data-aided equalization, mean of 1/|d|^2."""
    pts = qam_constellation(order)
    return float(np.mean(1.0 / np.abs(pts) ** 2))


def data_rate_loss(kind, num_subblocks, num_pilot_subblocks=0):
    """Fraction of sub-blocks sacrificed to pilots (nonzero only for PS)."""
    kind = FrameKind(kind)
    if kind is FrameKind.PS:
        return num_pilot_subblocks / num_subblocks
    return 0.0


def zc_sequence(length):
    """Zadoff-Chu sequence exp(-j*pi*n^2/length), unit modulus everywhere."""
    n = np.arange(length, dtype=float)
    return np.exp(-1j * np.pi * n**2 / length)


def _idft(payload, axis=0):
    """Unitary inverse DFT (F_K^H)."""
    k = payload.shape[axis]
    return np.fft.ifft(payload, axis=axis) * np.sqrt(k)


def _guard(config, body):
    """Guard samples prepended to one sub-block body."""
    if config.kind in (FrameKind.OFDM, FrameKind.PS):
        return body[-config.cp_size:]
    if config.kind is FrameKind.UW1:
        return zc_sequence(config.cp_size)
    half = zc_sequence(config.cp_size // 2)
    return np.concatenate([half, half])


def build_subblock(config, payload):
    """Assemble one K+N_cp sub-block from a length-K frequency payload.

    OFDM/PS prepend the last N_cp time samples as a cyclic prefix; UW1
    prepends a full-size ZC word; UW2 prepends the half-size ZC word twice.
    """
    if len(payload) != config.fft_size:
        raise ConfigurationError(
            f"payload length {len(payload)} != fft_size {config.fft_size}"
        )
    body = _idft(np.asarray(payload, dtype=complex))
    return np.concatenate([_guard(config, body), body])


def _assemble_stream(config, payloads):
    """All sub-blocks at once: (K, M) payloads -> length-N_x stream."""
    bodies = _idft(payloads, axis=0)
    if config.kind in (FrameKind.OFDM, FrameKind.PS):
        guards = bodies[-config.cp_size:, :]
    elif config.kind is FrameKind.UW1:
        guards = np.tile(zc_sequence(config.cp_size)[:, None],
                         (1, config.num_subblocks))
    else:
        half = zc_sequence(config.cp_size // 2)
        guards = np.tile(np.concatenate([half, half])[:, None],
                         (1, config.num_subblocks))
    return np.concatenate([guards, bodies], axis=0).T.ravel()


def build_frame(config, rng):
    """Build both spatial streams of one frame.

    OFDM/UW data payloads are drawn independently for the two streams; PS
    pilot sub-blocks are identical across streams.  Deterministic given the
    generator state.
    """
    k, m = config.fft_size, config.num_subblocks
    data_t = gen_qam_symbols(k * m, config.qam_order, rng).reshape(k, m, order="F")
    data_los = gen_qam_symbols(k * m, config.qam_order, rng).reshape(k, m, order="F")
    pilots = None
    if config.kind is FrameKind.PS:
        mp = config.num_pilot_subblocks
        pilots = rng.choice([-1.0, 1.0], size=(k, mp)).astype(complex)
        for col, sb in enumerate(config.pilot_indexes):
            data_t[:, sb] = pilots[:, col]
            data_los[:, sb] = pilots[:, col]

    return TxFrame(
        config=config,
        target_stream=_assemble_stream(config, data_t),
        los_stream=_assemble_stream(config, data_los),
        data_symbols=data_t,
        pilot_symbols=pilots,
    )
