"""Band-limited bistatic channel simulation and receiver sample grids.

The simulator applies the combined raised-cosine pulse once per path (the
TX/RX root-raised-cosine pair collapses to one RC filter), with Doppler
phase accruing per absolute sample index.  Grid extraction then picks the
per-kind fast-time windows; UW1 additionally performs CP-restoration by
summing samples N_cp apart.
"""

from dataclasses import dataclass, field

import numpy as np

from .frames import ConfigurationError, FrameKind
from .pulse import DEFAULT_HALF_SPAN, rc, sampled_taps


@dataclass
class Target:
    """One propagation path in normalized delay-Doppler coordinates.

    delay is tau/T_s in samples; doppler is nu*T_s*N_x in full-frame bins.
    """

    delay: float
    doppler: float
    gain_mag: float = 1.0
    gain_phase: float = 0.0

    @property
    def gain(self):
        return self.gain_mag * np.exp(1j * self.gain_phase)


@dataclass
class Scene:
    """Ground-truth channel: target paths, optional LoS path, beam rejection."""

    targets: list
    los: Target = None
    beta: float = 0.0
    noise_power: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError(f"beta must be in [0, 1], got {self.beta}")
        if self.noise_power < 0.0:
            raise ConfigurationError("noise_power must be non-negative")
        if self.los is not None and not 0.0 <= self.los.delay < 1.0:
            raise ConfigurationError("LoS integer delay must fall in the first sample")


@dataclass
class SampleGrid:
    """Receiver samples, rows = fast-time k, columns = slow-time m."""

    data: np.ndarray
    kind: FrameKind = field(default=FrameKind.OFDM)


def _check_delay(config, delay):
    if not 0.0 <= delay < config.max_delay_norm:
        raise ConfigurationError(
            f"delay {delay} outside [0, {config.max_delay_norm}) for {config.kind.value}"
        )


def fractional_delay(stream, delay, alpha, half_span=DEFAULT_HALF_SPAN, kernel=rc):
    """FIR-filter a stream with pulse taps sampled around a fractional delay.

    The two-sided tap window spans delay +/- half_span; zeros are assumed
    outside the frame.  ``kernel`` selects the pulse (or its derivative).
    """
    k_lo = int(np.ceil(delay - half_span))
    k_hi = int(np.floor(delay + half_span))
    k = np.arange(k_lo, k_hi + 1, dtype=float)
    taps = kernel(k - delay, alpha)
    full = np.convolve(stream, taps)  # full[j] pairs with output index n = j + k_lo
    n_out = len(stream)
    delayed = np.zeros(n_out, dtype=complex)
    start = max(k_lo, 0)
    delayed[start:n_out] = full[start - k_lo: n_out - k_lo]
    return delayed


def apply_path(stream, delay, doppler, gain, frame_len, alpha,
               half_span=DEFAULT_HALF_SPAN):
    """Propagate one stream through a single delay-Doppler path.

    Fractional RC delay, then the per-sample Doppler phase
    exp(-j*2*pi*nu*n/N_x) at the receiver sample index, then the complex gain.
    """
    delayed = fractional_delay(stream, delay, alpha, half_span)
    n = np.arange(frame_len)
    phase = np.exp(-2j * np.pi * doppler * n / frame_len)
    return gain * phase * delayed


def simulate_rx(frame, scene, rng):
    """Simulate the two received beams for one frame.

    Returns (targets_stream, los_stream), each of length N_x.  The targets
    beam carries the target paths plus beta-scaled LoS leakage; the LoS beam
    carries the LoS path plus beta-scaled target leakage.  Noise is circular
    Gaussian with per-sample power scene.noise_power, independent per beam.
    """
    config = frame.config
    n_x = config.frame_len
    alpha = config.roll_off

    target_sum = np.zeros(n_x, dtype=complex)
    for t in scene.targets:
        _check_delay(config, t.delay)
        target_sum += apply_path(
            frame.target_stream, t.delay, t.doppler, t.gain, n_x, alpha
        )
    los_sum = np.zeros(n_x, dtype=complex)
    if scene.los is not None:
        los_sum = apply_path(
            frame.los_stream, scene.los.delay, scene.los.doppler, scene.los.gain,
            n_x, alpha,
        )

    sigma = np.sqrt(scene.noise_power / 2.0)
    noise_t = sigma * (rng.standard_normal(n_x) + 1j * rng.standard_normal(n_x))
    noise_l = sigma * (rng.standard_normal(n_x) + 1j * rng.standard_normal(n_x))

    y_targets = target_sum + scene.beta * los_sum + noise_t
    y_los = los_sum + scene.beta * target_sum + noise_l
    return y_targets, y_los


def grid_window_offset(config):
    """Start of the processed fast-time window within each sub-block."""
    if config.kind in (FrameKind.OFDM, FrameKind.PS):
        return config.cp_size
    if config.kind is FrameKind.UW1:
        return 0
    # UW2: the second half-size word sees a circular channel (the first copy
    # acts as its cyclic prefix), so that is the window the radar keeps.
    return config.cp_size // 2


def grid_sample_indexes(config):
    """Absolute sample index I(k, m) of each grid entry, shape (fast, slow).

    For UW1 this is the first of the two CP-restoration windows; the second
    sits N_cp samples later.
    """
    k = np.arange(config.fast_size)[:, None]
    if config.kind is FrameKind.PS:
        blocks = config.pilot_indexes[None, :]
    else:
        blocks = np.arange(config.num_subblocks)[None, :]
    return k + grid_window_offset(config) + blocks * config.subblock_len


def sample_grid(stream, config):
    """Arrange a received stream into the kind-specific sample grid."""
    stream = np.asarray(stream)
    if len(stream) != config.frame_len:
        raise ConfigurationError("stream length does not match the frame")
    idx = grid_sample_indexes(config)
    data = stream[idx]
    if config.kind is FrameKind.UW1:
        data = data + stream[idx + config.cp_size]
    return SampleGrid(data=data, kind=config.kind)


def l_uw1_expected(scene):
    """CP-restoration SNR-loss factor 2 + (sum|h_p|^2 + beta^2|h_los|^2)/sigma_w^2."""
    if scene.noise_power <= 0.0:
        raise ConfigurationError("noise_power must be positive")
    p_int = sum(t.gain_mag**2 for t in scene.targets)
    if scene.los is not None:
        p_int += scene.beta**2 * scene.los.gain_mag**2
    return 2.0 + p_int / scene.noise_power
