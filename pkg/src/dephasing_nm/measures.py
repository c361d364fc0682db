"""Trace-distance and capacity curves, information fluxes and the BLP/BCM
non-Markovianity measures.

Both measures are computed as the total positive variation of a sampled
curve, ``sum(max(0, f[i+1] - f[i]))``, which equals the integral of the
positive part of its derivative once the grid resolves every extremum.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import xlog1py, xlogy

from .exceptions import ConvergenceError, DomainError
from .kernels import (
    CRITICAL_BAND,
    ColoredKernel,
    ColoredParams,
    DephasingTrace,
    RtnParams,
    rtn_dephasing,
    rtn_kernel,
)

BASE_DT = 1e-2
MAX_HALVINGS = 8
REL_TOL = 1e-4
ABS_TOL = 1e-12
RTN_ENVELOPE = 1e-10
RTN_HORIZON_CAP = 1e3
COLORED_HORIZON = 50.0
MAX_DOUBLINGS = 4
SERIES_TOL = 1e-12
KINDS = ("blp", "bcm")


@dataclass
class MeasureReport:
    """Result of a non-Markovianity evaluation.

    ``positive_intervals`` are the maximal time intervals on which the
    curve of the driving measure (``kind``) increases.
    """

    n_blp: float
    n_bcm: float
    positive_intervals: list
    horizon: float
    converged: bool
    refinement_levels: int
    kind: str = "blp"
    trace: DephasingTrace = field(default=None, repr=False, compare=False)


def binary_entropy(p):
    """Shannon binary entropy in bits, with ``0 log 0 = 0``."""
    p = np.asarray(p, dtype=float)
    return -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / math.log(2.0)


def quantum_capacity(gamma_value):
    """Quantum capacity ``1 - H2((1 - G)/2)`` of a dephasing channel.

    Written as ``[(1+g) ln(1+g) + (1-g) ln(1-g)] / (2 ln 2)`` with
    ``g = |G|``: no cancellation against 1 for small ``g``, and the
    ``G -> -G`` symmetry is exact.
    """
    scalar = np.ndim(gamma_value) == 0
    g = np.abs(np.asarray(gamma_value, dtype=float))
    c = (xlog1py(1.0 + g, g) + xlog1py(1.0 - g, -g)) / (2.0 * math.log(2.0))
    c = np.clip(c, 0.0, 1.0)
    return float(c) if scalar else c


def trace_distance_curve(trace):
    """Optimal trace distance ``|Gamma|`` on the trace grid."""
    return np.abs(trace.values)


def quantum_capacity_curve(trace):
    return quantum_capacity(trace.values)


def two_qubit_capacity(c_q):
    """Capacity of two independently dephased qubits (additive)."""
    if not 0.0 <= c_q <= 1.0:
        raise DomainError(f"single-qubit capacity must lie in [0, 1], got {c_q}")
    return 2.0 * c_q


def flux(curve, times):
    """Time derivative of a sampled curve: central differences inside,
    one-sided at the ends."""
    curve = np.asarray(curve, dtype=float)
    times = np.asarray(times, dtype=float)
    if curve.size < 3 or curve.shape != times.shape:
        raise DomainError("flux needs at least 3 samples on a matching grid")
    if np.any(np.diff(times) <= 0):
        raise DomainError("time grid must increase strictly")
    return np.gradient(curve, times, edge_order=1)


def positive_variation(curve):
    """Sum of the positive increments of a sampled curve."""
    return float(np.clip(np.diff(curve), 0.0, None).sum())


def _crossings(values):
    return (values[:-1] * values[1:]) < 0


def curve_variation(values, kind):
    """Positive variation of ``|Gamma|`` (``kind="blp"``) or ``C_Q(Gamma)``
    (``"bcm"``) along the piecewise-linear interpolant of ``values``.

    Both curves are even in ``Gamma`` and vanish at ``Gamma = 0``, so on an
    interval where ``Gamma`` changes sign the curve rises from zero to its
    value at the right end; elsewhere this is the plain grid increment.
    """
    values = np.asarray(values, dtype=float)
    curve = _curve(values, kind)
    rise = np.clip(np.diff(curve), 0.0, None)
    cross = _crossings(values)
    rise[cross] = curve[1:][cross]
    return float(rise.sum())


def positive_intervals(values, times, kind="blp"):
    """Maximal ``(start, end)`` intervals on which the curve of ``kind``
    rises, with zero crossings of ``Gamma`` located by linear interpolation."""
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    curve = _curve(values, kind)
    cross = _crossings(values)
    rising = (np.diff(curve) > 0) | (cross & (curve[1:] > 0))
    if not rising.any():
        return []
    starts_at = times[:-1].copy()
    a, b = values[:-1][cross], values[1:][cross]
    starts_at[cross] = times[:-1][cross] + (times[1:] - times[:-1])[cross] * a / (a - b)
    intervals = []
    for i in np.flatnonzero(rising):
        lo, hi = float(starts_at[i]), float(times[i + 1])
        if intervals and intervals[-1][1] == float(times[i]) and not cross[i]:
            intervals[-1] = (intervals[-1][0], hi)
        else:
            intervals.append((lo, hi))
    return intervals


def _curve(values, kind):
    return np.abs(values) if kind == "blp" else quantum_capacity(values)


# ---------------------------------------------------------------------------
# Telegraph-noise closed forms


def _frequency(gamma):
    return math.sqrt((2.0 - gamma) * (2.0 + gamma))


def rtn_slowest_rate(gamma):
    """Decay rate of the slowest exponential in the telegraph kernel."""
    if gamma < 2.0:
        return gamma
    return 4.0 / (gamma + math.sqrt((gamma - 2.0) * (gamma + 2.0)))


def rtn_horizon(gamma):
    """Time at which the kernel envelope falls below ``1e-10`` (capped)."""
    return min(math.log(1.0 / RTN_ENVELOPE) / rtn_slowest_rate(gamma), RTN_HORIZON_CAP)


def rtn_blp_closed(params):
    """Closed-form BLP measure for telegraph noise.

    Sum of the trace-distance maxima ``exp(-k pi gamma / w)``,
    ``w = sqrt(4 - gamma**2)``; zero for ``gamma >= 2``.
    """
    g = params.gamma
    if g >= 2.0:
        return 0.0
    return 1.0 / math.expm1(math.pi * g / _frequency(g))


def rtn_bcm_series(params):
    """BCM measure for telegraph noise: the capacities at the maxima
    ``tau_k = k pi / w`` summed until a term drops below ``1e-12``."""
    g = params.gamma
    if g >= 2.0:
        return 0.0
    step = math.pi * g / _frequency(g)
    total = 0.0
    k0 = 1
    chunk = 4096
    while True:
        k = np.arange(k0, k0 + chunk)
        terms = quantum_capacity(np.exp(-k * step))
        small = np.flatnonzero(terms < SERIES_TOL)
        if small.size:
            return total + float(terms[:small[0]].sum())
        total += float(terms.sum())
        k0 += chunk


def rtn_maxima(params, count):
    """First ``count`` maxima of ``|G|``: ``tau_k = k pi / sqrt(4 - gamma**2)``."""
    g = params.gamma
    if g >= 2.0:
        raise DomainError("|G| is monotone for gamma >= 2; no revivals")
    return np.arange(1, count + 1) * math.pi / _frequency(g)


def rtn_minima(params, count):
    """First ``count`` zeros of ``G``, bracketed between consecutive maxima."""
    maxima = np.concatenate([[0.0], rtn_maxima(params, count)])
    return np.array([
        brentq(lambda t: rtn_dephasing(t, params), lo, hi, xtol=1e-14, rtol=1e-15)
        for lo, hi in zip(maxima[:-1], maxima[1:])
    ])


def _rtn_sinh_term(tau, gamma):
    """``exp(-gamma tau) sinh(delta tau) / delta`` on every branch."""
    tau = np.asarray(tau, dtype=float)
    if abs(gamma - 2.0) < CRITICAL_BAND:
        s = (gamma - 2.0) * (gamma + 2.0)
        x = s * tau * tau
        return np.exp(-gamma * tau) * tau * (1 + x / 6 + x * x / 120 + x ** 3 / 5040)
    if gamma < 2.0:
        w = _frequency(gamma)
        return np.exp(-gamma * tau) * np.sin(w * tau) / w
    d = math.sqrt((gamma - 2.0) * (gamma + 2.0))
    return (np.exp(-4.0 / (gamma + d) * tau) - np.exp(-(gamma + d) * tau)) / (2.0 * d)


def rtn_flux_analytic(tau, params, kind="blp"):
    """Analytic information flux for telegraph noise.

    ``dG/dtau = -4 exp(-gamma tau) sinh(delta tau) / delta``; the BLP flux is
    ``sgn(G) dG/dtau`` and the BCM flux ``arctanh(G) dG/dtau / ln 2``.
    """
    scalar = np.ndim(tau) == 0
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise DomainError("tau must be non-negative")
    g = params.gamma
    dg = -4.0 * _rtn_sinh_term(tau, g)
    G = rtn_kernel(tau, g)
    if kind == "blp":
        out = np.sign(G) * dg
    elif kind == "bcm":
        if np.any(tau == 0):
            raise DomainError("BCM flux diverges at tau = 0 (arctanh(1))")
        out = np.arctanh(G) * dg / math.log(2.0)
    else:
        raise DomainError(f"unknown flux kind {kind!r}")
    return float(out) if scalar else out


# ---------------------------------------------------------------------------
# Regime classification


def regime_mask(trace):
    """Per grid interval: True where ``Gamma`` and its increment share a sign
    (the two non-Markovian regimes), judged at the interval midpoint."""
    v = trace.values
    step = np.diff(v)
    mid = 0.5 * (v[1:] + v[:-1])
    return ((step > 0) & (mid > 0)) | ((step < 0) & (mid < 0))


def non_markovianity_regime(trace):
    """Contiguous ``((start, end), tag)`` runs with tag ``"markovian"`` or
    ``"non-markovian"``."""
    mask = regime_mask(trace)
    t = trace.times
    runs = []
    start = 0
    for i in range(1, mask.size + 1):
        if i == mask.size or mask[i] != mask[start]:
            tag = "non-markovian" if mask[start] else "markovian"
            runs.append(((float(t[start]), float(t[i])), tag))
            start = i
    return runs


# ---------------------------------------------------------------------------
# Refined measures


class _Source:
    """Uniform view of what a measure can be computed from."""

    def __init__(self, source, window=None, kernel=None):
        self.fixed = None
        self.tail_rate = None
        if isinstance(source, DephasingTrace):
            self.fixed = source
        elif isinstance(source, RtnParams):
            if window is not None:
                raise DomainError("rate window override applies to colored noise only")
            g = source.gamma
            self.evaluate = lambda t: rtn_kernel(t, g)
            self.horizon = rtn_horizon(g)
            self.doublings = 0
            self.tail_rate = rtn_slowest_rate(g)
            self.revival_period = math.pi / _frequency(g) if g < 2.0 else None
        elif isinstance(source, ColoredParams):
            params = source.with_window(window)
            if kernel is None:
                kernel = ColoredKernel.for_params(params)
            elif kernel.alpha != params.alpha or kernel.window != (params.gamma_min,
                                                                   params.gamma_max):
                raise DomainError("kernel does not match the noise parameters")
            nf = params.n_fluctuators
            self.evaluate = lambda t: kernel(t, nf)
            self.horizon = COLORED_HORIZON
            self.doublings = MAX_DOUBLINGS
        elif callable(source):
            self.evaluate = lambda t: np.asarray(source(t), dtype=float)
            self.horizon = COLORED_HORIZON
            self.doublings = MAX_DOUBLINGS
        else:
            raise TypeError(f"cannot compute a measure from {type(source).__name__}")


def _estimates(values, kinds):
    return {k: curve_variation(values, k) for k in kinds}


def _settled(new, old):
    return all(abs(new[k] - old[k]) <= max(ABS_TOL, REL_TOL * abs(new[k])) for k in new)


def _refine(evaluate, horizon, dt, max_halvings, kinds):
    n = max(2, math.ceil(horizon / dt))
    times = np.linspace(0.0, horizon, n + 1)
    values = evaluate(times)
    est = est_prev = _estimates(values, kinds)
    for level in range(1, max_halvings + 1):
        mids = 0.5 * (times[:-1] + times[1:])
        mid_vals = evaluate(mids)
        t2 = np.empty(2 * times.size - 1)
        v2 = np.empty_like(t2)
        t2[0::2], t2[1::2] = times, mids
        v2[0::2], v2[1::2] = values, mid_vals
        times, values = t2, v2
        new = _estimates(values, kinds)
        if _settled(new, est):
            return times, values, new, level
        est_prev, est = est, new
    raise ConvergenceError(
        f"measure not converged after {max_halvings} grid halvings",
        estimates=(est_prev, est),
    )


def _extend(evaluate, times, values, horizon):
    step = times[1] - times[0]
    n = round((horizon - times[-1]) / step)
    ext = times[-1] + step * np.arange(1, n + 1)
    return np.concatenate([times, ext]), np.concatenate([values, evaluate(ext)])


def measure_report(source, kinds=KINDS, *, window=None, kernel=None, horizon=None,
                   dt=BASE_DT, max_halvings=MAX_HALVINGS):
    """Evaluate the BLP and BCM measures of a noise model or sampled trace.

    Parameters
    ----------
    source : RtnParams, ColoredParams, DephasingTrace or callable
        Noise model (sampled on demand), a fixed trace (used as is), or a
        vectorised function ``tau -> Gamma(tau)``.
    kinds : sequence of {"blp", "bcm"}
        Measures whose convergence drives the refinement; the first one
        determines ``positive_intervals``.  Both values are always reported.
    window : (float, float), optional
        Rate window override for colored noise.
    kernel : ColoredKernel, optional
        Shared cache for colored noise sweeps.
    horizon : float, optional
        Initial time horizon; defaults to the envelope rule (telegraph
        noise) or 50 (colored noise), the latter doubled up to four times
        until the measure settles.
    dt, max_halvings : float, int
        Base grid step and the number of halvings allowed.

    Raises
    ------
    ConvergenceError
        If grid halving does not settle the measure.
    """
    kinds = tuple(kinds)
    if not kinds or any(k not in KINDS for k in kinds):
        raise DomainError(f"kinds must be drawn from {KINDS}")
    src = _Source(source, window, kernel)
    if src.fixed is not None:
        trace = src.fixed
        est = _estimates(trace.values, KINDS)
        return MeasureReport(
            est["blp"], est["bcm"],
            positive_intervals(trace.values, trace.times, kinds[0]),
            float(trace.times[-1]), True, 0, kinds[0], trace)

    if dt <= 0:
        raise DomainError("dt must be positive")
    h = float(horizon) if horizon is not None else src.horizon
    if h <= 0:
        raise DomainError("horizon must be positive")
    times, values, est, levels = _refine(src.evaluate, h, dt, max_halvings, kinds)

    converged = True
    if src.tail_rate is not None:
        # geometric bound on the revivals beyond the horizon, using
        # C_Q(x) <= x**2 for the capacity
        if src.revival_period is not None:
            for k in kinds:
                power = 1.0 if k == "blp" else 2.0
                rate = power * src.tail_rate
                tail = math.exp(-rate * h) / -math.expm1(-rate * src.revival_period)
                converged &= tail <= max(ABS_TOL, REL_TOL * est[k])
    else:
        converged = False
        for _ in range(src.doublings):
            h *= 2.0
            times, values = _extend(src.evaluate, times, values, h)
            new = _estimates(values, kinds)
            settled = _settled(new, est)
            est = new
            if settled:
                converged = True
                break

    full = _estimates(values, KINDS)
    trace = DephasingTrace(times, values)
    return MeasureReport(full["blp"], full["bcm"],
                         positive_intervals(values, times, kinds[0]),
                         float(times[-1]), converged, levels, kinds[0], trace)


def blp_measure(source, **kwargs):
    """BLP measure: positive variation of the optimal trace distance."""
    return measure_report(source, ("blp",), **kwargs)


def bcm_measure(source, **kwargs):
    """BCM measure: positive variation of the quantum capacity."""
    return measure_report(source, ("bcm",), **kwargs)
