"""Delay-Doppler estimation on the 2D channel estimate.

Integer-grid estimation is an argmax over the estimate magnitude.  Fine-grid
estimation maximizes the matched-signature objective

    |<H, Psi(nu, tau)>|^2 / ||Psi(nu, tau)||_F^2

by coordinate binary refinement inside the +/-0.5-bin cell around the integer
peak.  The multi-target estimator follows the successive-interference-
cancellation loop: LoS first, then per-target estimate/subtract sweeps, and
finally delay/Doppler offsets relative to the LoS to cancel the common
timing and carrier-frequency offsets.
"""

from dataclasses import dataclass

import numpy as np

from .chanest import ChannelEstimate, doppler_vector
from .frames import FrameKind
from .pulse import sampled_taps


class DegenerateEstimateError(ValueError):
    """Signature magnitude at the rounded peak is too small to divide by."""


class UnsupportedConfigurationError(ValueError):
    """Estimator invoked on a frame kind it does not support."""


@dataclass
class EstimatorConfig:
    """Fine-grid and SIC knobs."""

    n_grid: int = 256          # cell subdivisions; power of two
    n_iterations: int = 8      # outer SIC sweeps
    num_targets: int = 1

    def __post_init__(self):
        if self.n_grid < 2 or (self.n_grid & (self.n_grid - 1)) != 0:
            raise ValueError("n_grid must be a power of two >= 2")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")


@dataclass
class DDEstimate:
    """One estimated path, plus its LoS-relative offsets when available."""

    delay: float
    doppler: float
    gain: complex
    delay_offset: float = None
    doppler_offset: float = None


def round_half_away(x):
    """Deterministic rounding, exact halves move away from zero."""
    return int(np.sign(x) * np.floor(abs(x) + 0.5))


def signature(config, nu, tau):
    """DD signature matrix: outer product of the Doppler vector and pulse taps."""
    v = doppler_vector(config.slow_size, nu)
    g = sampled_taps(tau, config.fast_size, config.roll_off)
    return np.outer(v, g)


def signature_norm_sq(config, tau):
    """||Psi||_F^2 = M * sum_k g(k - tau)^2 (the Doppler vector has norm M)."""
    g = sampled_taps(tau, config.fast_size, config.roll_off)
    return config.slow_size * float(np.dot(g, g))


def matched_objective(h_data, config, nu, tau):
    """|<H, Psi>|^2 / ||Psi||_F^2 for one candidate DD point."""
    g = sampled_taps(tau, config.fast_size, config.roll_off)
    v = doppler_vector(config.slow_size, nu)
    inner = np.vdot(v, h_data @ g)
    denom = config.slow_size * float(np.dot(g, g))
    if denom <= 0.0:
        return 0.0
    return float(np.abs(inner) ** 2 / denom)


def integer_grid_estimate(h):
    """Argmax of |H|^2 over the bin grid; ties resolve to the smallest
    (doppler_row, delay_col) in row-major order."""
    mag = np.abs(h.data) ** 2
    m_hat, k_hat = np.unravel_index(int(np.argmax(mag)), mag.shape)
    return int(m_hat), int(k_hat)


def doppler_bin_to_signed(m_bin, n_slow):
    """Map a DFT row index to the signed Doppler value it represents."""
    return m_bin - n_slow if m_bin >= n_slow / 2 else m_bin


def fine_grid_refine(h, config, init, est_cfg=None, counter=None):
    """Binary refinement of the matched objective around an integer peak.

    Starts from a +/-0.5-bin window in each dimension and halves it
    log2(n_grid) times; each halving step tests two candidates per dimension
    (delay first, then Doppler).  Returns (nu_hat, tau_hat) at 1/n_grid bin
    resolution.
    """
    if est_cfg is None:
        est_cfg = EstimatorConfig()
    m0, k0 = init
    nu = float(doppler_bin_to_signed(m0, config.slow_size))
    tau = float(k0)
    half = 0.5
    n_steps = int(np.log2(est_cfg.n_grid))
    data = h.data
    n_slow = config.slow_size
    n_fast = config.fast_size
    alpha = config.roll_off

    def tau_score(row, tau_c):
        g = sampled_taps(tau_c, n_fast, alpha)
        denom = n_slow * float(np.dot(g, g))
        return float(np.abs(row @ g) ** 2) / denom if denom > 0 else 0.0

    def nu_score(col, denom, nu_c):
        v = doppler_vector(n_slow, nu_c)
        return float(np.abs(np.vdot(v, col)) ** 2) / denom

    for _ in range(n_steps):
        step = half / 2.0
        # Delay pair shares the current Doppler vector.
        row = np.conj(doppler_vector(n_slow, nu)) @ data
        lo = tau_score(row, tau - step)
        hi = tau_score(row, tau + step)
        tau = tau + step if hi > lo else tau - step
        # Doppler pair shares the current delay taps.
        g = sampled_taps(tau, n_fast, alpha)
        col = data @ g
        denom = n_slow * float(np.dot(g, g))
        lo = nu_score(col, denom, nu - step)
        hi = nu_score(col, denom, nu + step)
        nu = nu + step if hi > lo else nu - step
        if counter is not None:
            counter.evals += 4
        half = step
    return nu, tau


def estimate_gain(h, config, nu_hat, tau_hat):
    """Channel-gain estimate: ratio of H to Psi at the rounded peak bin."""
    n_slow, n_fast = h.data.shape
    row = round_half_away(nu_hat) % n_slow
    col = min(max(round_half_away(tau_hat), 0), n_fast - 1)
    psi = signature(config, nu_hat, tau_hat)[row, col]
    if abs(psi) < 1e-9:
        raise DegenerateEstimateError(
            f"signature magnitude {abs(psi):.2e} at peak ({row}, {col})"
        )
    return complex(h.data[row, col] / psi)


@dataclass
class EvalCounter:
    """Counts matched-objective evaluations inside the SIC target loops."""

    evals: int = 0


def single_target_estimate(h, config, est_cfg=None):
    """Integer argmax plus fine refinement for a lone target, no LoS removal."""
    m0, k0 = integer_grid_estimate(h)
    nu, tau = fine_grid_refine(h, config, (m0, k0), est_cfg)
    gain = estimate_gain(h, config, nu, tau)
    return DDEstimate(delay=tau, doppler=nu, gain=gain)


def multi_target_estimate(h, h_los, config, est_cfg, counter=None):
    """Multi-target SIC estimation with LoS interference removal.

    Follows the published loop: estimate the LoS DD on the LoS-branch
    estimate and its leakage gain on the targets branch, then run
    n_iterations sweeps over the targets, each time subtracting the other
    targets and the LoS before re-estimating.  Offsets against the LoS DD
    are attached to every returned estimate.  Pass ``h_los=None`` to skip the
    LoS stage entirely (perfect rejection).
    """
    if h_los is not None and config.kind is FrameKind.OFDM:
        raise UnsupportedConfigurationError(
            "LoS removal is not defined for the OFDM frame"
        )
    p = est_cfg.num_targets

    los_nu = los_tau = None
    los_leak = 0.0 + 0.0j
    psi_los = None
    if h_los is not None:
        m0, k0 = integer_grid_estimate(h_los)
        los_nu, los_tau = fine_grid_refine(h_los, config, (m0, k0), est_cfg)
        # Leakage gain read off the *targets* branch at the LoS peak bin.
        los_leak = estimate_gain(h, config, los_nu, los_tau)
        psi_los = signature(config, los_nu, los_tau)

    gains = np.zeros(p, dtype=complex)
    nus = np.zeros(p)
    taus = np.zeros(p)
    psis = [np.zeros_like(h.data) for _ in range(p)]
    for _ in range(est_cfg.n_iterations):
        for i in range(p):
            residual = h.data.copy()
            for q in range(p):
                if q != i:
                    residual -= gains[q] * psis[q]
            if psi_los is not None:
                residual -= los_leak * psi_los
            h_i = ChannelEstimate(data=residual, kind=h.kind)
            m0, k0 = integer_grid_estimate(h_i)
            nus[i], taus[i] = fine_grid_refine(
                h_i, config, (m0, k0), est_cfg, counter=counter
            )
            gains[i] = estimate_gain(h_i, config, nus[i], taus[i])
            psis[i] = signature(config, nus[i], taus[i])

    out = []
    for i in range(p):
        d_off = taus[i] - los_tau if los_tau is not None else None
        n_off = nus[i] - los_nu if los_nu is not None else None
        out.append(
            DDEstimate(
                delay=taus[i], doppler=nus[i], gain=complex(gains[i]),
                delay_offset=d_off, doppler_offset=n_off,
            )
        )
    return out
