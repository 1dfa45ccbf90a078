"""Outlier-probability upper bounds for the integer-grid estimator.

The integer-grid argmax errs when some off-peak bin magnitude beats the true
peak.  Each bin magnitude is Rician, so the union bound needs the
probability that one Rician variable exceeds another: an exact (truncated)
double series, a fitted Gaussian-shaped approximation for small
noncentralities, and a ratio-moments Gaussian approximation for large ones.
"""

import numpy as np
from scipy.special import erfc, gammaln, i0e, logsumexp

from .ddest import round_half_away, signature
from .frames import FrameKind, l_ofdm


class SeriesConvergenceError(ArithmeticError):
    """Truncated series failed to meet tolerance within the term cap."""

    def __init__(self, partial, message):
        super().__init__(message)
        self.partial = partial


# Dispatch threshold on the normalized noncentrality v_x/sigma.
_GAUSSIAN_REGIME = 30.0
_MAX_TERMS = 400


def rice_pdf(r, v, sigma):
    """Rician density with noncentrality v and per-dimension scale sigma."""
    r = np.asarray(r, dtype=float)
    z = r * v / sigma**2
    # i0e = exp(-|z|) I0(z) keeps the product finite for large arguments.
    out = (r / sigma**2) * np.exp(-((r - v) ** 2) / (2.0 * sigma**2)) * i0e(z)
    out = np.where(r < 0, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def _q_function(x):
    """Standard Gaussian tail probability."""
    return 0.5 * erfc(x / np.sqrt(2.0))


def _log_2f1_neg_int(j_max, k, log_x):
    """log 2F1(-j, -j; k+1; x) for j = 0..j_max at one integer k >= 0.

    With both upper parameters negative integers the series is the finite sum
    sum_i [j!/(j-i)!]^2 x^i / ((k+1)_i i!), evaluated in log space:
    log u(j, i) = 2(lg(j+1) - lg(j-i+1)) - (lg(k+1+i) - lg(k+1)) - lg(i+1)
                  + i log x, summed over i <= j.
    """
    j = np.arange(j_max + 1)
    lg = gammaln(j + 1.0)
    jj = j[:, None]
    ii = j[None, :]
    valid = ii <= jj
    diff = np.where(valid, jj - ii, 0)
    log_u = (
        2.0 * (lg[jj] - gammaln(diff + 1.0))
        - (gammaln(k + 1.0 + ii) - gammaln(k + 1.0))
        - lg[ii]
        + ii * log_x
    )
    log_u = np.where(valid, log_u, -np.inf)
    return logsumexp(log_u, axis=1)


def pr_rice_greater_exact(v_x, v_y, sigma, tol=1e-8, max_terms=_MAX_TERMS):
    """Pr(X > Y) for independent X ~ Rice(v_x, sigma), Y ~ Rice(v_y, sigma).

    Evaluates the exact double series of the Rician-ratio CDF at ratio 1 on
    the sigma-normalized variables, truncating when the Poisson-weight tails
    fall below the tolerance.
    """
    a = v_x / sigma
    b = v_y / sigma
    if b == 0.0:
        # Y is Rayleigh; closed form from E[exp(-X^2 / (2 sigma^2))].
        return 1.0 - 0.5 * np.exp(-(a**2) / 4.0)
    if a == 0.0:
        return 0.5 * np.exp(-(b**2) / 4.0)

    rate_k = a**2 / 2.0
    rate_j = b**2 / 4.0
    log_x = 2.0 * (np.log(a) - np.log(b))

    k_idx = np.arange(max_terms + 1)
    log_wk = k_idx * np.log(rate_k) - gammaln(k_idx + 1.0)
    j_idx = np.arange(max_terms + 1)
    log_wj = j_idx * np.log(rate_j) - gammaln(j_idx + 1.0)

    # Adaptive block growth over (k, j); overall factor exp(-(a^2+b^2)/2)/2.
    log_prefactor = -np.log(2.0) - (a**2 + b**2) / 2.0
    k_max = int(min(max_terms, np.ceil(rate_k + 12.0 * np.sqrt(rate_k) + 30)))
    j_max = int(min(max_terms, np.ceil(rate_j + 12.0 * np.sqrt(rate_j) + 30)))

    while True:
        log_rows = np.empty(k_max + 1)
        log_last_col = np.empty(k_max + 1)
        for k in range(k_max + 1):
            log_f = _log_2f1_neg_int(j_max, k, log_x)
            log_rows[k] = log_wk[k] + logsumexp(log_wj[: j_max + 1] + log_f)
            log_last_col[k] = log_wk[k] + log_wj[j_max] + log_f[j_max]
        log_total = log_prefactor + logsumexp(log_rows)
        total = float(np.exp(log_total))

        # Boundary row/column contributions bound the truncation error.
        last_k = float(np.exp(log_prefactor + log_rows[k_max]))
        last_j = float(np.exp(log_prefactor + logsumexp(log_last_col)))
        if last_k < tol * max(total, tol) and last_j < tol * max(total, tol):
            return min(max(total, 0.0), 1.0)
        if k_max >= max_terms and j_max >= max_terms:
            raise SeriesConvergenceError(
                total, f"series not converged after {max_terms} terms"
            )
        k_max = min(max_terms, k_max + 40)
        j_max = min(max_terms, j_max + 40)


def _fit_width(v):
    """Fitted Gaussian-width function of the normalized noncentrality."""
    z = 1.909 * v**1.3838
    return 2.0 + 0.6616 * (1.0 - np.exp(-z) * (1.0 + z))


def _fit_center(v):
    """Fitted Gaussian-center function of the normalized noncentrality."""
    if v <= 0.0:
        return 0.0
    w = v**0.89899
    return 1.4899 * np.exp(-1.0 / (0.39899 * w)) * w


def pr_rice_greater_empirical(vx_norm, vy_norm):
    """Fitted closed form for Pr(X > Y) on sigma-normalized noncentralities.

    Gaussian-shaped in vy_norm with fitted width/center; equals 1/2 at
    vx_norm == vy_norm.  Accurate for vx_norm below about 30.
    """
    f1 = _fit_width(vx_norm)
    f2 = _fit_center(vx_norm)
    expo = ((vx_norm - f2) ** 2 - (vy_norm - f2) ** 2) / (2.0 * f1)
    half_gauss = 0.5 * np.exp(expo)
    if vx_norm < vy_norm:
        return float(half_gauss)
    return float(1.0 - half_gauss)


def pr_rice_greater_gaussian(v_x, v_y, sigma):
    """Ratio-moments Gaussian approximation, valid at large v/sigma."""
    if v_y == 0.0:
        raise ValueError("v_y must be positive for the ratio approximation")
    mu_z = v_x / v_y
    var_z = (v_x**2 / v_y**2) * (2.0 * sigma**2 / v_x**2 + 2.0 * sigma**2 / v_y**2)
    return float(_q_function((1.0 - mu_z) / np.sqrt(var_z)))


def pr_rice_greater(v_x, v_y, sigma):
    """Dispatch: fitted branch below the large-noncentrality regime."""
    if v_x / sigma < _GAUSSIAN_REGIME:
        return pr_rice_greater_empirical(v_x / sigma, v_y / sigma)
    return pr_rice_greater_gaussian(v_x, v_y, sigma)


def bin_noise_sigma(config, noise_power, snr_loss=1.0):
    """Per-dimension noise scale of one channel-estimate bin.

    The estimation pipeline normalizes the fast-time equalization so the
    signal peak is |h|*sqrt(M); the matching per-bin complex noise power is
    sigma_w^2 * L / fast_size, half of it per dimension.
    """
    return float(np.sqrt(noise_power * snr_loss / (2.0 * config.fast_size)))


def kind_snr_loss(config, target=None, noise_power=1.0, beta=0.0, los_gain_mag=0.0):
    """Equalization SNR-loss factor entering the bin-noise scale."""
    kind = config.kind
    if kind is FrameKind.OFDM:
        return l_ofdm(config.qam_order)
    if kind is FrameKind.UW1:
        p_int = target.gain_mag**2 if target is not None else 0.0
        p_int += beta**2 * los_gain_mag**2
        return 2.0 + p_int / noise_power
    return 1.0


def outlier_ub(config, target, noise_power):
    """Union-bound outlier probabilities (delay, Doppler) for one target.

    Competitor noncentralities come from the exact signature magnitudes at
    the true fractional DD; the bin noise uses the kind-specific SNR loss
    (single target, perfect LoS rejection).
    """
    loss = kind_snr_loss(config, target=target, noise_power=noise_power)
    sigma = bin_noise_sigma(config, noise_power, loss)
    psi = np.abs(signature(config, target.doppler, target.delay))
    v = target.gain_mag * psi

    n_slow, n_fast = psi.shape
    k0 = round_half_away(target.delay)
    m0 = round_half_away(target.doppler) % n_slow
    v_peak = v[m0, k0]

    p_delay = sum(
        pr_rice_greater(v[m0, k], v_peak, sigma)
        for k in range(n_fast) if k != k0
    )
    p_doppler = sum(
        pr_rice_greater(v[m, k0], v_peak, sigma)
        for m in range(n_slow) if m != m0
    )
    return float(p_delay), float(p_doppler)
