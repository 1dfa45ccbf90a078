"""FFT-based 2D delay-Doppler channel estimation.

The pipeline per column: forward DFT over fast time, element-wise divide by
the frequency-domain reference (known data DFT for OFDM, pilots for PS, the
ZC word for UW1/UW2), inverse DFT back to delay, then a unitary inverse DFT
across sub-blocks to resolve Doppler.  Scaling is chosen so a single target
at integer delay/Doppler produces a one-hot estimate of value h*sqrt(M):
the fast-time equalization exactly recovers the pulse taps and the slow-time
transform is unitary.
"""

from dataclasses import dataclass, field

import numpy as np

from .frames import FrameKind, zc_sequence


class EqualizationError(ValueError):
    """A reference bin is (numerically) zero; division undefined."""


@dataclass
class ChannelEstimate:
    """Estimated DD channel, rows = Doppler bin m, columns = delay bin k."""

    data: np.ndarray
    kind: FrameKind = field(default=FrameKind.OFDM)


def frame_reference(frame):
    """Frequency-domain reference matrix (fast_size, slow_size) for a frame.

    Non-unitary transform convention: the reference is the plain DFT of the
    in-window transmitted content, which makes the equalized fast-time IDFT
    return the sampled pulse with unit peak.
    """
    config = frame.config
    kind = config.kind
    if kind is FrameKind.OFDM:
        return np.sqrt(config.fft_size) * frame.data_symbols
    if kind is FrameKind.PS:
        return np.sqrt(config.fft_size) * frame.pilot_symbols
    if kind is FrameKind.UW1:
        word = zc_sequence(config.cp_size)
    else:
        word = zc_sequence(config.cp_size // 2)
    ref_col = np.fft.fft(word)
    return np.tile(ref_col[:, None], (1, config.num_subblocks))


def estimate_channel(grid, reference, kind=None):
    """Run the three-transform estimation pipeline on a sample grid.

    Parameters
    ----------
    grid : SampleGrid
        Receiver samples, (fast, slow).
    reference : ndarray
        Per-column frequency-domain reference, same shape as the grid.
    """
    y = grid.data
    reference = np.asarray(reference)
    if reference.shape != y.shape:
        raise ValueError(f"reference shape {reference.shape} != grid {y.shape}")
    if np.min(np.abs(reference)) < 1e-12:
        raise EqualizationError("zero bin in the equalization reference")
    spec = np.fft.fft(y, axis=0) / reference
    delay_domain = np.fft.ifft(spec, axis=0)
    n_slow = y.shape[1]
    h = np.sqrt(n_slow) * np.fft.ifft(delay_domain, axis=1)
    return ChannelEstimate(data=h.T, kind=kind if kind is not None else grid.kind)


def doppler_vector(n_slow, nu_norm):
    """Unitary IDFT of the Doppler exponential; one-hot sqrt(M) at integers."""
    m = np.arange(n_slow)
    u = np.exp(-2j * np.pi * nu_norm * m / n_slow)
    return np.sqrt(n_slow) * np.fft.ifft(u)
