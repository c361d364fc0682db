"""Dephasing kernels for telegraph and 1/f^alpha noise.

All times and rates are dimensionless: ``tau = nu * t`` and
``gamma = xi / nu`` with ``nu`` the qubit-noise coupling and ``xi`` the
fluctuator switching rate.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .quadrature import integrate_batch

DEFAULT_WINDOW = (1e-4, 1e4)
# below this distance from gamma = 2 the kernel uses its Taylor series in
# s = gamma**2 - 4 (both closed forms are 0/0 there)
CRITICAL_BAND = 1e-6
QUAD_RTOL = 1e-8
QUAD_ATOL = 1e-12
_TAU_CHUNK = 256


@dataclass(frozen=True)
class RtnParams:
    """Single telegraph fluctuator with dimensionless switching rate."""

    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise DomainError(f"switching rate must be positive, got {self.gamma}")


@dataclass(frozen=True)
class ColoredParams:
    """Ensemble of ``n_fluctuators`` telegraph fluctuators with rates
    distributed as ``gamma**-alpha`` on ``[gamma_min, gamma_max]``."""

    alpha: float
    n_fluctuators: int = 1
    gamma_min: float = DEFAULT_WINDOW[0]
    gamma_max: float = DEFAULT_WINDOW[1]

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if int(self.n_fluctuators) != self.n_fluctuators or self.n_fluctuators < 1:
            raise DomainError(
                f"n_fluctuators must be an integer >= 1, got {self.n_fluctuators}")
        if not 0 < self.gamma_min < self.gamma_max or not np.isfinite(self.gamma_max):
            raise DomainError(
                f"need 0 < gamma_min < gamma_max, got [{self.gamma_min}, {self.gamma_max}]")

    def with_window(self, window):
        """Copy of the parameters with the rate window replaced."""
        if window is None:
            return self
        lo, hi = window
        return ColoredParams(self.alpha, self.n_fluctuators, float(lo), float(hi))

    def with_fluctuators(self, n):
        return ColoredParams(self.alpha, int(n), self.gamma_min, self.gamma_max)


@dataclass(frozen=True)
class DephasingTrace:
    """Dephasing function sampled on a time grid starting at zero."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise DomainError("times and values must be 1-d of equal length >= 2")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise DomainError("time grid must start at 0 and increase strictly")
        if abs(values[0] - 1.0) > 1e-12:
            raise DomainError(f"dephasing must equal 1 at tau = 0, got {values[0]}")
        if np.any(np.abs(values) > 1.0 + 1e-12):
            raise DomainError("dephasing values must lie in [-1, 1]")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.times.size


def _as_output(x, scalar):
    return float(x) if scalar else x


def rtn_kernel(tau, gamma):
    """Broadcasting telegraph kernel ``G(tau, gamma) = <exp(2i phi(tau))>``.

    No argument validation; see :func:`rtn_dephasing` for the checked entry
    point.
    """
    tau, gamma = np.broadcast_arrays(np.asarray(tau, dtype=float),
                                     np.asarray(gamma, dtype=float))
    out = np.empty(tau.shape)
    near = np.abs(gamma - 2.0) < CRITICAL_BAND
    under = (gamma < 2.0) & ~near
    over = (gamma > 2.0) & ~near

    if under.any():
        t, g = tau[under], gamma[under]
        w = np.sqrt((2.0 - g) * (2.0 + g))
        out[under] = np.exp(-g * t) * (np.cos(w * t) + g * np.sin(w * t) / w)
    if over.any():
        t, g = tau[over], gamma[over]
        d = np.sqrt((g - 2.0) * (g + 2.0))
        r = g / d
        slow = np.exp(-4.0 / (g + d) * t)  # exp((d - g) t) without cancellation
        fast = np.exp(-(g + d) * t)
        out[over] = 0.5 * ((1.0 + r) * slow + (1.0 - r) * fast)
    if near.any():
        t, g = tau[near], gamma[near]
        s = (g - 2.0) * (g + 2.0)
        x = s * t * t
        ch = 1.0 + x / 2.0 + x * x / 24.0 + x ** 3 / 720.0
        sh = t * (1.0 + x / 6.0 + x * x / 120.0 + x ** 3 / 5040.0)
        out[near] = np.exp(-g * t) * (ch + g * sh)
    return np.clip(out, -1.0, 1.0)


def rtn_dephasing(tau, params):
    """Dephasing factor of a qubit under random telegraph noise.

    Parameters
    ----------
    tau : float or array_like
        Dimensionless time(s), non-negative.
    params : RtnParams

    Returns
    -------
    float or ndarray
        ``G(tau, gamma)`` in ``[-1, 1]``.
    """
    scalar = np.ndim(tau) == 0
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0) or not np.all(np.isfinite(tau)):
        raise DomainError("tau must be finite and non-negative")
    RtnParams(params.gamma)
    return _as_output(rtn_kernel(tau, params.gamma), scalar)


def _log_rate_weight(u, alpha, lo, hi):
    """Rate density per unit ``ln(gamma)``, i.e. ``p_alpha(gamma) * gamma``."""
    beta = alpha - 1.0
    span = np.log(hi) - np.log(lo)
    if beta == 0.0:
        return np.full(np.shape(u), 1.0 / span)
    if beta > 0:
        return beta * np.exp(-beta * (u - np.log(lo))) / -np.expm1(-beta * span)
    b = -beta
    return b * np.exp(-b * (np.log(hi) - u)) / -np.expm1(-b * span)


def switching_rate_pdf(gamma, params):
    """Probability density of fluctuator switching rates.

    ``p(gamma) ~ gamma**-alpha`` normalised on ``[gamma_min, gamma_max]``;
    ``alpha = 1`` is the log-uniform case.
    """
    scalar = np.ndim(gamma) == 0
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < params.gamma_min) or np.any(gamma > params.gamma_max):
        raise DomainError(
            f"rate outside [{params.gamma_min}, {params.gamma_max}]")
    w = _log_rate_weight(np.log(gamma), params.alpha, params.gamma_min,
                         params.gamma_max)
    return _as_output(w / gamma, scalar)


def _single_fluctuator(taus, alpha, lo, hi):
    """Rate-averaged telegraph kernel for each entry of ``taus``."""
    taus = np.asarray(taus, dtype=float)
    flat = taus.ravel()
    out = np.empty(flat.size)
    order = np.argsort(flat, kind="stable")
    a, b = np.log(lo), np.log(hi)
    for start in range(0, flat.size, _TAU_CHUNK):
        idx = order[start:start + _TAU_CHUNK]
        t = flat[idx][:, None]

        def integrand(u, t=t):
            return rtn_kernel(t, np.exp(u)[None, :]) * _log_rate_weight(u, alpha, lo, hi)

        val, _ = integrate_batch(integrand, a, b, rtol=QUAD_RTOL, atol=QUAD_ATOL)
        out[idx] = val
    return np.clip(out, -1.0, 1.0).reshape(taus.shape)


def colored_dephasing(tau, params, window=None):
    """Dephasing factor for 1/f^alpha noise from independent fluctuators.

    The single-fluctuator factor is the telegraph kernel averaged over the
    rate distribution (adaptive Gauss-Kronrod in ``ln(gamma)``); ``N_f``
    independent fluctuators multiply, so the result is its ``N_f``-th power.

    Parameters
    ----------
    tau : float or array_like
        Dimensionless time(s), non-negative.
    params : ColoredParams
    window : (float, float), optional
        Replaces ``[gamma_min, gamma_max]``; the rate density is normalised
        on the replacement window.

    Raises
    ------
    QuadratureError
        If the subdivision cap is reached.
    """
    params = params.with_window(window)
    scalar = np.ndim(tau) == 0
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0) or not np.all(np.isfinite(tau)):
        raise DomainError("tau must be finite and non-negative")
    single = _single_fluctuator(tau, params.alpha, params.gamma_min, params.gamma_max)
    return _as_output(single ** params.n_fluctuators, scalar)


class ColoredKernel:
    """Memoising evaluator of the single-fluctuator colored factor.

    Sweeps over the fluctuator count reuse one instance, since every
    ``N_f`` is a power of the same single-fluctuator curve.  Instances hold
    a private cache and should not be shared between threads.
    """

    def __init__(self, alpha, gamma_min=DEFAULT_WINDOW[0], gamma_max=DEFAULT_WINDOW[1]):
        ColoredParams(alpha, 1, gamma_min, gamma_max)
        self.alpha = float(alpha)
        self.window = (float(gamma_min), float(gamma_max))
        self._cache = {}

    @classmethod
    def for_params(cls, params):
        return cls(params.alpha, params.gamma_min, params.gamma_max)

    def single(self, taus):
        taus = np.asarray(taus, dtype=float)
        keys = taus.ravel().tolist()
        cache = self._cache
        missing = sorted({t for t in keys if t not in cache})
        if missing:
            vals = _single_fluctuator(np.array(missing), self.alpha, *self.window)
            cache.update(zip(missing, vals.tolist()))
        return np.array([cache[t] for t in keys]).reshape(taus.shape)

    def __call__(self, taus, n_fluctuators=1):
        return self.single(taus) ** int(n_fluctuators)


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must start at 0, increase strictly and hold >= 2 points")
    return grid


def dephasing_trace(params, grid, rate_window_override=None, kernel=None):
    """Sample the dephasing function of ``params`` on ``grid``.

    ``rate_window_override`` applies to colored noise only.  ``kernel`` is
    an optional :class:`ColoredKernel` to reuse cached quadratures.
    """
    grid = _check_grid(grid)
    if isinstance(params, RtnParams):
        if rate_window_override is not None:
            raise DomainError("rate window override applies to colored noise only")
        values = rtn_dephasing(grid, params)
    elif isinstance(params, ColoredParams):
        params = params.with_window(rate_window_override)
        if kernel is None:
            values = colored_dephasing(grid, params)
        else:
            values = kernel(grid, params.n_fluctuators)
    else:
        raise TypeError(f"unsupported noise parameters: {type(params).__name__}")
    return DephasingTrace(grid, values)
