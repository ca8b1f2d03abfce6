"""Closed-form forecast-error variances and error normalizers.

All four model variants are covered:

* drifting random walk with i.i.d. noise:   ``K**2 * (tau + tau**2/m)``
* experience curve with i.i.d. noise:       ``sigma_eta**2 * (tau + S_f**2/S_p2)``
  with ``S_f`` the summed future experience changes and ``S_p2`` the summed
  squared past changes,
* either model with MA(1) noise, via the innovation-weight decomposition of
  the forecast error (general form) or its constant-growth reduction,
* a large-horizon approximation of the constant-growth MA(1) form.

The factor ``A = tau + tau**2/m`` combines accumulated future noise (``tau``)
with parameter-estimation error (``tau**2/m``); it recurs everywhere and is
also the horizon rescaling used when errors of different horizons are pooled.
"""

from __future__ import annotations

import warnings

import numpy as np

__all__ = [
    "a_factor",
    "moore_variance",
    "wright_variance",
    "wright_variance_rewritten",
    "window_error_weights",
    "wright_ma1_variance",
    "ma1_variance_constant_x",
    "ma1_variance_approx",
    "normalize_error",
    "moore_normalize",
    "horizon_rescale",
]

# Relative floor applied when the constant-growth MA(1) formula is evaluated
# outside its meaningful range and dips non-positive.
_VARIANCE_FLOOR = 1e-12


def a_factor(tau, m):
    """Variance growth factor ``tau + tau**2 / m``. Elementwise on arrays."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be non-negative")
    if m <= 0:
        raise ValueError("m must be positive")
    out = tau + tau * tau / m
    return float(out) if out.ndim == 0 else out


def moore_variance(k, tau, m):
    """Forecast-error variance of the drifting random walk: ``k**2 * A``."""
    if k < 0:
        raise ValueError("scale must be non-negative")
    return k * k * a_factor(tau, m)


def wright_variance(sigma_eta, past_x, future_x) -> float:
    """Experience-curve forecast-error variance with realized experience.

    ``sigma_eta**2 * (tau + (sum future_x)**2 / (sum past_x**2))`` where
    ``tau = len(future_x)``. The second term is the parameter-error share: a
    volatile regressor (large ``sum past_x**2``) pins the slope down and
    shrinks it.
    """
    past_x = np.asarray(past_x, dtype=float)
    future_x = np.asarray(future_x, dtype=float)
    sp2 = float(past_x @ past_x)
    if sp2 <= 0.0:
        raise ValueError("degenerate past experience changes (sum of squares is zero)")
    tau = len(future_x)
    if tau == 0:
        return 0.0
    sf = float(future_x.sum())
    return sigma_eta * sigma_eta * (tau + sf * sf / sp2)


def wright_variance_rewritten(sigma_eta, tau, m, r_future, r_past, sigma_x_past):
    """Moment form of :func:`wright_variance`.

    ``sigma_eta**2 * (tau + (tau**2/m) * r_future**2 /
    (sigma_x_past**2 + r_past**2))``. With steady experience growth
    (``sigma_x_past = 0``, ``r_future = r_past``) it collapses to
    ``sigma_eta**2 * A``, the random-walk value.
    """
    denom = sigma_x_past * sigma_x_past + r_past * r_past
    if denom <= 0.0:
        raise ValueError("degenerate denominator: sigma_x_past and r_past both zero")
    tau = np.asarray(tau, dtype=float)
    out = sigma_eta * sigma_eta * (
        tau + (tau * tau / m) * (r_future * r_future) / denom
    )
    return float(out) if out.ndim == 0 else out


def window_error_weights(past_x, future_x) -> np.ndarray:
    """Weight of each window innovation in the forecast error.

    The slope error feeds back into the forecast as
    ``-(sum future_x / sum past_x**2) * past_x_j`` per window difference
    ``j``; with constant growth every weight equals ``-tau / m``.
    """
    past_x = np.asarray(past_x, dtype=float)
    future_x = np.asarray(future_x, dtype=float)
    sp2 = float(past_x @ past_x)
    if sp2 <= 0.0:
        raise ValueError("degenerate past experience changes (sum of squares is zero)")
    return -(float(future_x.sum()) / sp2) * past_x


def wright_ma1_variance(sigma_u, rho, past_x, future_x) -> float:
    """Experience-curve forecast-error variance under MA(1) noise.

    Decomposing the error over independent innovations ``u`` with weights
    ``h`` from :func:`window_error_weights` gives

    ``sigma_u**2 * (rho**2 h_1**2 + sum_j (h_j + rho h_{j+1})**2
    + (rho + h_m)**2 + (tau - 1)(1 + rho)**2 + 1)``.

    With ``rho = 0`` this is exactly :func:`wright_variance` at
    ``sigma_eta = sigma_u``.
    """
    if not abs(rho) <= 1.0:
        raise ValueError("rho must lie in [-1, 1]")
    h = window_error_weights(past_x, future_x)
    tau = len(np.asarray(future_x, dtype=float))
    if tau == 0:
        return 0.0
    middle = float(np.sum((h[:-1] + rho * h[1:]) ** 2))
    total = (
        rho * rho * h[0] * h[0]
        + middle
        + (rho + h[-1]) ** 2
        + (tau - 1) * (1.0 + rho) ** 2
        + 1.0
    )
    return sigma_u * sigma_u * total


def ma1_variance_constant_x(sigma_u, rho, tau, m):
    """Constant-growth reduction of :func:`wright_ma1_variance`.

    ``sigma_u**2 * (-2 rho + (1 + 2(m-1) rho / m + rho**2) * A)``. The same
    expression gives the drifting-random-walk variance under MA(1) noise
    (substitute the walk's theta and innovation scale). Values below
    ``sigma_u**2 * 1e-12`` (possible only outside the meaningful parameter
    range) are floored with a warning.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if not abs(rho) <= 1.0:
        raise ValueError("rho must lie in [-1, 1]")
    s2 = sigma_u * sigma_u
    raw = s2 * (-2.0 * rho + (1.0 + 2.0 * (m - 1) * rho / m + rho * rho) * a_factor(tau, m))
    floor = s2 * _VARIANCE_FLOOR
    raw = np.asarray(raw)
    if np.any(raw < floor):
        warnings.warn(
            "constant-growth MA(1) variance fell below its positivity floor; clamping",
            RuntimeWarning,
            stacklevel=2,
        )
        raw = np.maximum(raw, floor)
    return float(raw) if raw.ndim == 0 else raw


def ma1_variance_approx(sigma_eta, rho, tau, m):
    """Large ``tau``, large ``m`` approximation of the MA(1) variance.

    ``sigma_eta**2 * (1 + rho)**2 / (1 + rho**2) * A`` -- a simple formula
    suitable for applications.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    factor = (1.0 + rho) ** 2 / (1.0 + rho * rho)
    out = sigma_eta * sigma_eta * factor * a_factor(tau, m)
    return out


def normalize_error(raw_error, variance):
    """Scale a raw error by the square root of its variance.

    Against the true variance the result is standard normal; with an
    estimated scale the reference is Student with the estimation window's
    degrees of freedom.
    """
    variance = np.asarray(variance, dtype=float)
    if np.any(variance <= 0.0):
        raise ValueError("variance must be positive")
    out = np.asarray(raw_error, dtype=float) / np.sqrt(variance)
    return float(out) if out.ndim == 0 else out


def moore_normalize(raw_error, k_hat):
    """Divide an error by the window's random-walk scale estimate."""
    if k_hat <= 0.0:
        raise ValueError("K_hat must be positive")
    out = np.asarray(raw_error, dtype=float) / k_hat
    return float(out) if out.ndim == 0 else out


def horizon_rescale(eps, a):
    """Divide a normalized error by ``sqrt(A)`` so horizons can be pooled."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0.0):
        raise ValueError("A must be positive")
    out = np.asarray(eps, dtype=float) / np.sqrt(a)
    return float(out) if out.ndim == 0 else out
