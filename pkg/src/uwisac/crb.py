"""Noiseless grid model, Fisher information, CRB, and a brute-force MLE oracle.

The parameter vector concatenates per-target quadruples
(delay, doppler, |h|, angle(h)).  The noiseless model is the exact sampled
received signal of the targets beam with perfect LoS rejection, built from
the same path/grid machinery as the simulator so the two agree to machine
precision.
"""

import numpy as np

from .channel import apply_path, fractional_delay, sample_grid
from .frames import FrameKind
from .pulse import rc_deriv


class SingularFisherError(np.linalg.LinAlgError):
    """Fisher matrix is not invertible at this parameter point."""

    def __init__(self, cond):
        super().__init__(f"Fisher matrix ill-conditioned (cond={cond:.3e})")
        self.cond = cond


_COND_LIMIT = 1e12


def noiseless_signal(targets, frame):
    """Noiseless sample grid of the targets beam (beta = 0), shape (fast, slow)."""
    config = frame.config
    total = np.zeros(config.frame_len, dtype=complex)
    for t in targets:
        total += apply_path(
            frame.target_stream, t.delay, t.doppler, t.gain,
            config.frame_len, config.roll_off,
        )
    return sample_grid(total, config).data


def _target_partial_grids(target, frame):
    """Grid-domain partial derivatives for one target's four parameters."""
    config = frame.config
    n_x = config.frame_len
    alpha = config.roll_off
    n = np.arange(n_x)
    phase = np.exp(-2j * np.pi * target.doppler * n / n_x)

    delayed = fractional_delay(frame.target_stream, target.delay, alpha)
    y = target.gain * phase * delayed
    # d/d(tau) of the tap sum flips the sign of the derivative kernel.
    d_tau = -target.gain * phase * fractional_delay(
        frame.target_stream, target.delay, alpha, kernel=rc_deriv
    )
    d_nu = y * (-2j * np.pi * n / n_x)
    d_mag = y / target.gain_mag
    d_phase = 1j * y

    return [sample_grid(s, config).data for s in (d_tau, d_nu, d_mag, d_phase)]


def fisher_matrix(targets, frame, noise_power):
    """Fisher information, 4P x 4P: (2/sigma^2) * Re(J J^H) over grid samples."""
    if noise_power <= 0.0:
        raise ValueError("noise_power must be positive")
    rows = []
    for t in targets:
        rows.extend(g.ravel() for g in _target_partial_grids(t, frame))
    j = np.array(rows)
    return (2.0 / noise_power) * np.real(j @ j.conj().T)


def crb(targets, frame, noise_power):
    """Per-target (delay, Doppler) variance lower bounds.

    Returns a list of (crb_delay, crb_doppler) tuples in normalized units
    (samples^2, bins^2).  Raises SingularFisherError when the Fisher matrix
    cannot be inverted reliably.
    """
    info = fisher_matrix(targets, frame, noise_power)
    cond = np.linalg.cond(info)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularFisherError(cond)
    inv = np.linalg.inv(info)
    return [(float(inv[4 * p, 4 * p]), float(inv[4 * p + 1, 4 * p + 1]))
            for p in range(len(targets))]


def _model_components(frame, delay):
    """Per-window model pieces for a unit-gain target at a given delay.

    Returns (grids, index_sets): the delayed-stream content and absolute
    sample indexes for each receive window (two windows for UW1's
    CP-restoration, one otherwise), so Doppler phasing can be applied per
    window without re-filtering.
    """
    from .channel import grid_sample_indexes

    config = frame.config
    delayed = fractional_delay(frame.target_stream, delay, config.roll_off)
    idx = grid_sample_indexes(config)
    if config.kind is FrameKind.UW1:
        index_sets = [idx, idx + config.cp_size]
    else:
        index_sets = [idx]
    return [delayed[i] for i in index_sets], index_sets


def mle_grid_oracle(y_grid, frame, dd_grid_step=1.0 / 256.0):
    """Single-target maximum-likelihood estimate by matched grid search.

    Maximizes the gain-concentrated likelihood |<Y, S>|^2 / ||S||_F^2 over a
    delay-Doppler lattice: full integer lattice first, then two nested local
    grids down to ``dd_grid_step``.  Oracle-quality, not production speed.
    Returns (tau_hat, nu_hat, gain_hat).
    """
    config = frame.config
    n_x = config.frame_len

    def scan(tau_values, nu_values):
        best = (-1.0, 0.0, 0.0, 0.0 + 0.0j)
        for tau in tau_values:
            # One filtering pass per delay, reused across all Doppler bins.
            grids, index_sets = _model_components(frame, float(tau))
            for nu in nu_values:
                s = np.zeros_like(grids[0])
                for g, idx in zip(grids, index_sets):
                    s += g * np.exp(-2j * np.pi * nu * idx / n_x)
                energy = float(np.sum(np.abs(s) ** 2))
                if energy <= 0.0:
                    continue
                inner = np.vdot(s, y_grid)
                val = float(np.abs(inner) ** 2 / energy)
                if val > best[0]:
                    best = (val, float(tau), float(nu), inner / energy)
        return best

    max_nu = config.slow_size // 2
    _, tau_hat, nu_hat, gain_hat = scan(
        range(config.max_delay_norm), range(-max_nu + 1, max_nu)
    )
    for step in (1.0 / 16.0, dd_grid_step):
        _, tau_hat, nu_hat, gain_hat = scan(
            tau_hat + np.arange(-16, 17) * step,
            nu_hat + np.arange(-16, 17) * step,
        )
    return tau_hat, nu_hat, complex(gain_hat)
