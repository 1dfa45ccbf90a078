"""Unique-word frame design and delay-Doppler sensing toolkit for bistatic ISAC.

Builds OFDM/PS/UW1/UW2 frames, simulates the band-limited bistatic channel,
runs the FFT-based integer- and fine-grid multi-target estimators, and
evaluates them against the CRB, outlier-probability bounds, and bistatic
range geometry.
"""

from .frames import FrameConfig, FrameKind, TxFrame, build_frame
from .channel import Scene, Target, sample_grid, simulate_rx
from .chanest import estimate_channel, frame_reference
from .ddest import DDEstimate, EstimatorConfig, multi_target_estimate

__all__ = [
    "FrameConfig",
    "FrameKind",
    "TxFrame",
    "build_frame",
    "Scene",
    "Target",
    "sample_grid",
    "simulate_rx",
    "estimate_channel",
    "frame_reference",
    "DDEstimate",
    "EstimatorConfig",
    "multi_target_estimate",
]

__version__ = "0.1.0"
