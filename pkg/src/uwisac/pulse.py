"""Peak-normalized raised-cosine pulse, its derivative, and fractional-delay taps.

The pulse here is the combined TX/RX filter normalized so that g(0) = 1 and
g(k) = 0 at nonzero integers (Nyquist property).  Everything downstream
(channel simulation, delay-Doppler signatures, Fisher information) samples
this pulse at fractional offsets.
"""

import numpy as np

# Default truncation half-length in samples.  Taps farther than this from the
# pulse center are treated as exactly zero; 32 covers the largest guard size
# used in the experiments.
DEFAULT_HALF_SPAN = 32

_SINGULAR_EPS = 1e-8


def rc(t, alpha):
    """Raised-cosine pulse sinc(t)*cos(pi*alpha*t)/(1 - (2*alpha*t)^2).

    Parameters
    ----------
    t : float or array
        Time in units of the sampling interval.
    alpha : float
        Roll-off factor in (0, 1].

    The removable singularity at t = +/- 1/(2*alpha) is evaluated by its
    limit (pi/4)*sinc(1/(2*alpha)).
    """
    t = np.asarray(t, dtype=float)
    t0 = 1.0 / (2.0 * alpha)
    denom = 1.0 - (2.0 * alpha * t) ** 2
    singular = np.abs(np.abs(t) - t0) < _SINGULAR_EPS
    safe_denom = np.where(singular, 1.0, denom)
    out = np.sinc(t) * np.cos(np.pi * alpha * t) / safe_denom
    limit = (np.pi / 4.0) * np.sinc(t0)
    out = np.where(singular, limit, out)
    if out.ndim == 0:
        return float(out)
    return out


def rc_deriv(t, alpha):
    """Closed-form derivative of :func:`rc`, odd in t.

    Three cases: the generic expression, 0 at t = 0, and the limit value
    (alpha/2)*(pi*cos(pi/(2*alpha)) - 3*alpha*sin(pi/(2*alpha))) at the
    denominator zeros t = +/- 1/(2*alpha).
    """
    t = np.asarray(t, dtype=float)
    t0 = 1.0 / (2.0 * alpha)
    at_zero = np.abs(t) < _SINGULAR_EPS
    at_sing = np.abs(np.abs(t) - t0) < _SINGULAR_EPS
    safe_t = np.where(at_zero | at_sing, 1.0, t)
    denom = 1.0 - (2.0 * alpha * safe_t) ** 2
    denom = np.where(at_sing, 1.0, denom)

    s = np.sinc(safe_t)
    c_a = np.cos(np.pi * alpha * safe_t)
    term1 = (np.cos(np.pi * safe_t) - s) / safe_t * c_a / denom
    term2 = 8.0 * alpha**2 * safe_t * s * c_a / denom**2
    term3 = -np.pi * alpha * np.sin(np.pi * alpha * safe_t) * s / denom
    out = term1 + term2 + term3

    sing_val = 0.5 * alpha * (
        np.pi * np.cos(np.pi / (2.0 * alpha))
        - 3.0 * alpha * np.sin(np.pi / (2.0 * alpha))
    )
    out = np.where(at_sing, np.sign(t) * sing_val, out)
    out = np.where(at_zero, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def sampled_taps(tau_frac, length, alpha, half_span=DEFAULT_HALF_SPAN):
    """Pulse sampled at integer lags around a fractional delay.

    Returns g[k] = rc(k - tau_frac) for k = 0..length-1, zeroed outside the
    truncation half-span around tau_frac.  At integer delays this is a
    one-hot vector (Nyquist property).
    """
    k = np.arange(length, dtype=float)
    offs = k - tau_frac
    g = rc(offs, alpha)
    g = np.where(np.abs(offs) <= half_span, g, 0.0)
    return g


def sampled_deriv_taps(tau_frac, length, alpha, half_span=DEFAULT_HALF_SPAN):
    """Derivative-pulse taps, same layout as :func:`sampled_taps`."""
    k = np.arange(length, dtype=float)
    offs = k - tau_frac
    g = rc_deriv(offs, alpha)
    g = np.where(np.abs(offs) <= half_span, g, 0.0)
    return g
