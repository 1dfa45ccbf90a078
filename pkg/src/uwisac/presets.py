"""Canonical parameter sets used across the experiments and tests."""

from .frames import FrameConfig, FrameKind
from .geometry import SystemBudget

# Waterfall radar SNRs (dB) read off the outlier-probability study; inputs
# to the constant-SNR range analysis.
WATERFALL_SNR_DB = {
    FrameKind.OFDM: 22.36,
    FrameKind.PS: 17.0,
    FrameKind.UW1: 20.0,
    FrameKind.UW2: 17.0,
}


def estimation_config(kind):
    """Frame geometry of the estimation-performance studies."""
    return FrameConfig(
        kind=FrameKind(kind),
        fft_size=128,
        cp_size=32,
        num_subblocks=64,
        num_pilot_subblocks=8,
        qam_order=256,
        roll_off=0.25,
    )


def range_study_config(kind):
    """Frame geometry of the range-comparison study."""
    return FrameConfig(
        kind=FrameKind(kind),
        fft_size=1024,
        cp_size=204,
        num_subblocks=140,
        num_pilot_subblocks=20,
        qam_order=256,
        roll_off=0.25,
    )


def _dbm(value_dbm):
    return 10.0 ** (value_dbm / 10.0) * 1e-3


def outdoor_budget():
    return SystemBudget(
        bandwidth=122.88e6,
        carrier=28e9,
        tx_power=_dbm(23.98),
        bs_gain=8.0,
        radar_gain=64.0,
        rcs=10.0,
        path_loss_exp=2.3,
        bs_radar_dist=200.0,
        noise_psd=_dbm(-174.0),
    )


def indoor_budget():
    return SystemBudget(
        bandwidth=491.52e6,
        carrier=28e9,
        tx_power=_dbm(23.98),
        bs_gain=8.0,
        radar_gain=64.0,
        rcs=1.0,
        path_loss_exp=2.3,
        bs_radar_dist=20.0,
        noise_psd=_dbm(-174.0),
    )
