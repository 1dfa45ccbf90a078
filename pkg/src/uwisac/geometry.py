"""Frame comparison figures, link budget, and bistatic range geometry.

Coordinate frame: base station at (-d_br/2, 0), radar at (+d_br/2, 0).
Bearings are measured at the radar, with 0 degrees pointing away from the
base station (+x) and angles increasing counterclockwise.
"""

from dataclasses import dataclass

import numpy as np

from .frames import FrameKind, l_ofdm

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class SystemBudget:
    """Link-budget and geometry constants."""

    bandwidth: float          # Hz
    carrier: float            # Hz
    tx_power: float           # W
    bs_gain: float            # linear
    radar_gain: float         # linear
    rcs: float                # m^2
    path_loss_exp: float
    bs_radar_dist: float      # m
    noise_psd: float          # W/Hz

    def __post_init__(self):
        for name in ("bandwidth", "carrier", "tx_power", "bs_gain", "radar_gain",
                     "rcs", "path_loss_exp", "bs_radar_dist", "noise_psd"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.carrier

    @property
    def noise_power(self):
        """Thermal noise power over the full bandwidth."""
        return self.noise_psd * self.bandwidth


def processing_gain(config):
    """Coherently processed sample count: fast window times processed blocks."""
    return config.fast_size * config.slow_size


def resolution(config, bandwidth):
    """Integer-grid (delay, Doppler) resolution in seconds and Hz."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return 1.0 / bandwidth, bandwidth / config.frame_len


def fine_resolution(config, bandwidth, n_grid):
    """Fine-grid resolution: the integer-grid cell divided n_grid ways."""
    d_tau, d_nu = resolution(config, bandwidth)
    return d_tau / n_grid, d_nu / n_grid


def max_unambiguous(config, bandwidth):
    """Largest unambiguous (delay s, |Doppler| Hz): resolution times max index."""
    d_tau, d_nu = resolution(config, bandwidth)
    tau_max = (config.fast_size - 1) * d_tau
    nu_max = (config.slow_size // 2 - 1) * d_nu
    return tau_max, nu_max


def fine_grid_eval_count(n_iterations, num_targets, n_grid):
    """Published objective-evaluation budget of the fine-grid search."""
    return 2 * n_iterations * num_targets * int(np.log2(n_grid))


def receiver_complexity(config, n_fg=0):
    """Complex multiplications of the FFT receiver plus n_fg fine-grid passes."""
    g = processing_gain(config)
    return g * (np.log2(config.slow_size * config.fast_size**2) + 1 + n_fg)


def radar_snr(gain_sq, noise_power, config):
    """Post-processing radar SNR rho = G |h|^2 / sigma_w^2."""
    return processing_gain(config) * gain_sq / noise_power


def gain_sq_for_snr(rho, noise_power, config):
    """Invert the radar-SNR definition for |h|^2."""
    return rho * noise_power / processing_gain(config)


def snr_loss_uw1(rho, gain, los_term=0.0):
    """CP-restoration loss L = 2 + rho/G + beta^2 |h_los|^2 / sigma_w^2."""
    return 2.0 + rho / gain + los_term


def sinr_uw1(rho, gain, los_term=0.0):
    """Post-restoration SINR rho / L; saturates at G for large rho."""
    return rho / snr_loss_uw1(rho, gain, los_term)


def snr_loss(config):
    """Deterministic equalization loss of a frame kind (UW1 handled via
    :func:`snr_loss_uw1` because it is scene-dependent)."""
    if config.kind is FrameKind.OFDM:
        return l_ofdm(config.qam_order)
    return 1.0


def target_gain(d_bt, d_tr, budget):
    """Double-path-loss channel power |h|^2 for a target at (d_bt, d_tr)."""
    if d_bt <= 0 or d_tr <= 0:
        raise ValueError("distances must be positive")
    num = (budget.tx_power * budget.bs_gain * budget.radar_gain
           * budget.wavelength**2 * budget.rcs)
    return num / ((4.0 * np.pi) ** 3 * (d_bt * d_tr) ** budget.path_loss_exp)


def iso_range_contour(tau_max, d_br, n_points=512):
    """Iso-range ellipse for bistatic delay tau_max (LoS-referenced).

    Semi-major axis d_max/2 with d_max = tau_max*c + d_br; foci at
    (+/- d_br/2, 0).  Returns an (n_points, 2) array.
    """
    if tau_max < 0:
        raise ValueError("tau_max must be non-negative")
    tc = tau_max * SPEED_OF_LIGHT
    d_max = tc + d_br
    a = d_max / 2.0
    b = 0.5 * np.sqrt(tc**2 + 2.0 * d_br * tc)
    t = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    return np.column_stack([a * np.cos(t), b * np.sin(t)])


def cassini_constant(rho_star, gain, budget, noise_power=None):
    """Cassini constant b^2 = d_BT*d_TR attaining radar SNR rho_star."""
    if noise_power is None:
        noise_power = budget.noise_power
    num = (budget.tx_power * gain * budget.bs_gain * budget.radar_gain
           * budget.wavelength**2 * budget.rcs)
    return (num / (rho_star * noise_power * (4.0 * np.pi) ** 3)) ** (
        1.0 / budget.path_loss_exp
    )


def cassini_oval(rho_star, gain, budget, noise_power=None, n_points=512):
    """Constant-SNR Cassini oval: points with d_BT*d_TR = b^2.

    Returns (b_squared, points).  The curve is a single loop when b exceeds
    half the BS-radar separation and two lobes otherwise (one around each
    node); both lobes are returned in the latter case.
    """
    b2 = cassini_constant(rho_star, gain, budget, noise_power)
    b = np.sqrt(b2)
    a = budget.bs_radar_dist / 2.0

    def branch(t):
        # t is the distance to the radar focus at (+a, 0).
        x = (b2**2 - t**4) / (4.0 * a * t**2)
        y2 = np.maximum(t**2 - (x - a) ** 2, 0.0)
        y = np.sqrt(y2)
        return np.concatenate([x, x[::-1]]), np.concatenate([y, -y[::-1]])

    if b >= a:
        t = np.linspace(np.sqrt(a**2 + b2) - a, np.sqrt(a**2 + b2) + a,
                        n_points // 2)
        x, y = branch(t)
        pts = np.column_stack([x, y])
    else:
        t = np.linspace(np.sqrt(a**2 + b2) - a, a - np.sqrt(a**2 - b2),
                        n_points // 4)
        x, y = branch(t)
        radar_lobe = np.column_stack([x, y])
        bs_lobe = radar_lobe * np.array([-1.0, 1.0])
        pts = np.concatenate([radar_lobe, bs_lobe])
    return b2, pts


def range_at_angle(points, theta_deg, d_br, max_gap_deg=15.0):
    """Distance from the radar to a contour along one bearing.

    Interpolates the contour's polar profile about the radar position.
    Returns None when the bearing falls in an angular gap wider than
    ``max_gap_deg`` (the contour does not cover that direction).
    """
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        raise ValueError("contour is empty")
    rel = points - np.array([d_br / 2.0, 0.0])
    ang = np.arctan2(rel[:, 1], rel[:, 0])
    rad = np.hypot(rel[:, 0], rel[:, 1])
    order = np.argsort(ang)
    ang, rad = ang[order], rad[order]

    theta = np.deg2rad(theta_deg)
    theta = np.arctan2(np.sin(theta), np.cos(theta))
    idx = np.searchsorted(ang, theta)
    lo = (idx - 1) % len(ang)
    hi = idx % len(ang)
    gap = (ang[hi] - ang[lo]) % (2.0 * np.pi)
    off = (theta - ang[lo]) % (2.0 * np.pi)
    if gap > np.deg2rad(max_gap_deg):
        return None
    if gap == 0.0:
        return float(rad[lo])
    w = off / gap
    return float((1.0 - w) * rad[lo] + w * rad[hi])
