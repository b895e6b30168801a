"""
Moment-based estimates of expected distances and the energy coefficient.

Three families of formulas are provided, all evaluated from
:class:`~energyhet.moments.MomentSummary` values in O(d):

``taylor``
    Second-order expansion of ``sqrt(z)`` around the mean squared
    distance. Works in any dimension from per-dimension moments.
``gaussian_exact``
    Closed forms for normal data (one dimension only).
``adjusted``
    The Gaussian closed forms with skewness/kurtosis corrections (one
    dimension only).

Approximated expectations that come out negative (possible for large
excess kurtosis) are clamped to zero and flagged ``clamped_nonneg``.

The scalar functions accept numpy arrays and broadcast.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.special import erf, ndtr

from .empirical import DistanceEstimate, coefficient_from_terms
from .moments import MomentSummary

__all__ = [
    "ApproxInputs",
    "normal_cdf",
    "taylor_exx_1d",
    "taylor_exy_1d",
    "taylor_exx_dd",
    "taylor_exy_dd",
    "gaussian_exact_exx",
    "gaussian_exact_exy",
    "adjusted_exx",
    "adjusted_exy",
    "energy_from_summaries",
    "residual_r3",
    "variance_diagnostic",
    "APPROX_METHODS",
]

APPROX_METHODS = ("taylor", "gaussian_exact", "adjusted")

SQRT2 = math.sqrt(2.0)
TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def _out(v):
    v = np.asarray(v, dtype=np.float64)
    return float(v) if v.ndim == 0 else v


def _clamp(v, flags):
    v = np.asarray(v, dtype=np.float64)
    if (v < 0).any():
        if flags is not None:
            flags.add("clamped_nonneg")
        v = np.maximum(v, 0.0)
    return v


def normal_cdf(x):
    """Standard normal CDF; ``scipy.special.ndtr`` keeps full relative accuracy in the tails."""
    return _out(ndtr(x))


def _aggregates(mx, vx, gx3, gx4, my, vy, gy3, gy4):
    """``(nu, C4, C3, delta1, delta2)`` summed over the last axis."""
    shift = mx - my
    sq = shift * shift
    nu = (vx + vy + sq).sum(axis=-1)
    c4 = (vx * vx * gx4 + vy * vy * gy4).sum(axis=-1)
    c3 = (vx * np.sqrt(vx) * gx3 - vy * np.sqrt(vy) * gy3).sum(axis=-1)
    return nu, c4, c3, shift.sum(axis=-1), sq.sum(axis=-1)


@dataclass(frozen=True)
class ApproxInputs:
    """Per-dimension moments of both sides; the last axis indexes dimensions.

    The aggregates used by the cross-distance formulas are exposed as
    properties: ``nu`` (total dispersion), ``c4``, ``c3`` and the mean
    shifts ``delta1`` (signed sum) and ``delta2`` (sum of squares).
    """

    mean_x: np.ndarray
    var_x: np.ndarray
    skew_x: np.ndarray
    kurt_x: np.ndarray
    mean_y: np.ndarray
    var_y: np.ndarray
    skew_y: np.ndarray
    kurt_y: np.ndarray

    def __post_init__(self):
        arrays = np.broadcast_arrays(
            *(np.atleast_1d(np.asarray(getattr(self, f), dtype=np.float64))
              for f in self.__dataclass_fields__)
        )
        for name, arr in zip(self.__dataclass_fields__, arrays):
            object.__setattr__(self, name, arr)

    @classmethod
    def from_moments(cls, x, y) -> ApproxInputs:
        """``x`` and ``y`` are ``(mean, variance, skewness, kurtosis)`` tuples."""
        return cls(*x, *y)

    @classmethod
    def from_summaries(cls, sx: MomentSummary, sy: MomentSummary) -> ApproxInputs:
        if sx.d != sy.d:
            raise ValueError(f"dimension mismatch: {sx.d} != {sy.d}")
        return cls(*sx.moment_arrays()[:4], *sy.moment_arrays()[:4])

    @property
    def d(self) -> int:
        return self.mean_x.shape[-1]

    @cached_property
    def _agg(self):
        return _aggregates(self.mean_x, self.var_x, self.skew_x, self.kurt_x,
                           self.mean_y, self.var_y, self.skew_y, self.kurt_y)

    nu = property(lambda self: self._agg[0])
    c4 = property(lambda self: self._agg[1])
    c3 = property(lambda self: self._agg[2])
    delta1 = property(lambda self: self._agg[3])
    delta2 = property(lambda self: self._agg[4])


def _require_1d(inputs: ApproxInputs):
    if inputs.d != 1:
        raise ValueError(f"one-dimensional formula applied to d={inputs.d}")


def _degenerate_flag(nu, flags):
    if flags is not None and np.any(nu <= 0):
        flags.add("degenerate")


# -- Taylor ---------------------------------------------------------------


def taylor_exx_1d(var, kurt, flags: set | None = None):
    """E|X - X'| ~ sqrt(2) sigma (1 - (kurt + 4) / 16)."""
    sigma = np.sqrt(np.asarray(var, dtype=np.float64))
    v = SQRT2 * sigma * (1.0 - (np.asarray(kurt) + 4.0) / 16.0)
    return _out(_clamp(v, flags))


def taylor_exy_1d(inputs: ApproxInputs, flags: set | None = None):
    """Taylor estimate of E|X - Y| for one-dimensional X, Y."""
    _require_1d(inputs)
    nu, c4, c3, delta = inputs.nu, inputs.c4, inputs.c3, inputs.delta1
    safe = np.where(nu > 0, nu, 1.0)
    corr = (c4 + 4.0 * c3 * delta + 2.0 * safe**2 - 2.0 * delta**4) / (8.0 * safe**2)
    v = np.where(nu > 0, np.sqrt(safe) * (1.0 - corr), 0.0)
    _degenerate_flag(nu, flags)
    return _out(_clamp(v, flags))


def _taylor_core(nu, c4, c3, delta1, delta2, flags):
    safe = np.where(nu > 0, nu, 1.0)
    corr = (c4 + 4.0 * c3 * delta1 - 2.0 * delta2**2) / (8.0 * safe**2)
    v = np.where(nu > 0, np.sqrt(safe) * (0.75 - corr), 0.0)
    _degenerate_flag(nu, flags)
    return _clamp(v, flags)


def taylor_exx_dd(s: MomentSummary | ApproxInputs, flags: set | None = None):
    """Taylor estimate of E|X - X'| for d-dimensional X.

    ``sqrt(nu) (3/4 - C4 / (8 nu**2))`` with ``nu = 2 sum(var_i)`` and
    ``C4 = 2 sum(var_i**2 kurt_i)``. Also accepts :class:`ApproxInputs`,
    in which case the x side is used.
    """
    if isinstance(s, MomentSummary):
        _, var, _, kurt, _ = s.moment_arrays()
    else:
        var, kurt = s.var_x, s.kurt_x
    nu = 2.0 * var.sum(axis=-1)
    c4 = 2.0 * (var**2 * kurt).sum(axis=-1)
    zero = np.zeros_like(nu)
    return _out(_taylor_core(nu, c4, zero, zero, zero, flags))


def taylor_exy_dd(sx, sy=None, flags: set | None = None):
    """Taylor estimate of E|X - Y| for d-dimensional X, Y.

    Call as ``taylor_exy_dd(sx, sy)`` with two summaries or
    ``taylor_exy_dd(inputs)`` with an :class:`ApproxInputs`.
    """
    inputs = sx if isinstance(sx, ApproxInputs) else ApproxInputs.from_summaries(sx, sy)
    return _out(_taylor_core(*inputs._agg, flags))


# -- Gaussian closed forms ------------------------------------------------


def gaussian_exact_exx(var):
    """E|X - X'| = 2 sigma / sqrt(pi) for normal X."""
    return _out(TWO_OVER_SQRT_PI * np.sqrt(np.asarray(var, dtype=np.float64)))


def gaussian_exact_exy(mean_x, var_x, mean_y, var_y):
    """E|X - Y| for independent normal X and Y.

    ``X - Y`` is normal with mean ``delta`` and variance ``s**2 = var_x + var_y``,
    so the result is the folded-normal mean

        s sqrt(2/pi) exp(-Delta**2) + delta erf(Delta),  Delta = delta / sqrt(2 s**2).

    ``delta erf(Delta)`` equals ``delta (2 Phi(delta / s) - 1)``. With both
    variances zero it returns ``|delta|``.
    """
    delta = np.asarray(mean_x, dtype=np.float64) - np.asarray(mean_y, dtype=np.float64)
    s2 = np.asarray(var_x, dtype=np.float64) + np.asarray(var_y, dtype=np.float64)
    s2, delta = np.broadcast_arrays(s2, delta)
    safe = np.where(s2 > 0, s2, 1.0)
    big_delta = delta / np.sqrt(2.0 * safe)
    v = np.sqrt(safe) * SQRT_2_OVER_PI * np.exp(-big_delta**2) + delta * erf(big_delta)
    return _out(np.where(s2 > 0, v, np.abs(delta)))


def adjusted_exx(var, kurt, flags: set | None = None):
    """E|X - X'| ~ (2/sqrt(pi) - sqrt(2) kurt / 16) sigma."""
    sigma = np.sqrt(np.asarray(var, dtype=np.float64))
    v = (TWO_OVER_SQRT_PI - SQRT2 * np.asarray(kurt) / 16.0) * sigma
    return _out(_clamp(v, flags))


def adjusted_exy(inputs: ApproxInputs, flags: set | None = None):
    """Gaussian E|X - Y| minus ``(C4 + 4 C3 delta) / (8 nu**1.5)``."""
    _require_1d(inputs)
    return _out(_adjusted_core(inputs.mean_x[..., 0], inputs.var_x[..., 0],
                               inputs.mean_y[..., 0], inputs.var_y[..., 0],
                               *inputs._agg[:4], flags))


def _adjusted_core(mx, vx, my, vy, nu, c4, c3, delta, flags):
    base = gaussian_exact_exy(mx, vx, my, vy)
    safe = np.where(nu > 0, nu, 1.0)
    corr = np.where(nu > 0, (c4 + 4.0 * c3 * delta) / (8.0 * safe**1.5), 0.0)
    _degenerate_flag(nu, flags)
    return _clamp(base - corr, flags)


# -- energy distance from summaries ---------------------------------------


class _Side(NamedTuple):
    """One summary reduced to what the cross-distance formulas need."""

    mean: np.ndarray
    var: np.ndarray
    m4_excess: np.ndarray  # var**2 * kurt per dimension, 0 where degenerate
    var_sum: float
    c4: float  # sum var**2 kurt
    c3: float  # sum var**1.5 skew


def _side(s: MomentSummary) -> _Side:
    # var**2 kurt = m4 - 3 var**2 and var**1.5 skew = m3, so the aggregates
    # come straight from the central moments
    if s.n < 2:
        raise ValueError("insufficient samples for variance")
    m = s.sums[:3] / s.n  # rows: var, m3, m4 -> var**2 kurt below
    var = m[0]
    m[2] -= 3.0 * var * var
    threshold = 1e-12 * np.abs(s.mean)
    degenerate = var <= threshold * threshold
    if degenerate.any():
        m[:, degenerate] = 0.0
    var_sum, c3, c4 = m.sum(axis=1).tolist()
    return _Side(s.mean, var, m[2], var_sum, c4, c3)


def _cross_term(a: _Side, b: _Side, method: str, flags: set) -> float:
    """E|X - Y| for the chosen method, scalar arithmetic on per-side sums."""
    if a is b:
        delta1 = delta2 = 0.0
    else:
        shift = a.mean - b.mean
        delta1 = float(shift.sum())
        delta2 = float(shift @ shift)
    nu = a.var_sum + b.var_sum + delta2
    c4 = a.c4 + b.c4
    c3 = a.c3 - b.c3
    if method == "taylor":
        if nu <= 0.0:
            flags.add("degenerate")
            return 0.0
        v = math.sqrt(nu) * (0.75 - (c4 + 4.0 * c3 * delta1 - 2.0 * delta2 * delta2) / (8.0 * nu * nu))
    else:
        s2 = a.var_sum + b.var_sum
        if s2 > 0.0:
            big = delta1 / math.sqrt(2.0 * s2)
            v = math.sqrt(s2) * SQRT_2_OVER_PI * math.exp(-big * big) + delta1 * math.erf(big)
        else:
            v = abs(delta1)
        if method == "adjusted":
            if nu <= 0.0:
                flags.add("degenerate")
            else:
                v -= (c4 + 4.0 * c3 * delta1) / (8.0 * nu**1.5)
    if v < 0.0:
        flags.add("clamped_nonneg")
        v = 0.0
    return v


def energy_from_summaries(
    sx: MomentSummary, sy: MomentSummary, method: str = "taylor"
) -> DistanceEstimate:
    """Approximate energy distance and coefficient from two summaries.

    The within-sample terms are evaluated with the same cross-distance
    formula applied to a summary and itself (which reduces to the
    ``*_exx`` forms), so identical summaries give exactly ``D2 = 0`` and
    ``H = 0``.

    Taylor estimates also carry per-dimension diagnostics: the variance
    approximation ``var * kurt / 8`` and, for order-6 summaries, the
    residual term of :func:`residual_r3`.
    """
    start = time.perf_counter()
    if method not in APPROX_METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {APPROX_METHODS}")
    if sx.d != sy.d:
        raise ValueError(f"dimension mismatch: {sx.d} != {sy.d}")
    if method != "taylor" and sx.d != 1:
        raise ValueError(f"{method} requires d=1")
    flags: set[str] = set()
    a, b = _side(sx), _side(sy)
    exx = _cross_term(a, a, method, flags)
    eyy = _cross_term(b, b, method, flags)
    exy = _cross_term(a, b, method, flags)
    value = 2.0 * exy - (exx + eyy)
    h = coefficient_from_terms(value, exy, flags, approximate=True)
    diagnostics = _diagnostics(sx, a, sy, b) if method == "taylor" else {}
    return DistanceEstimate(
        value=value,
        method=method,
        terms=(exy, exx, eyy),
        coefficient=h,
        flags=frozenset(flags),
        elapsed=time.perf_counter() - start,
        diagnostics=diagnostics,
    )


def _diagnostics(sx, a, sy, b):
    out = {}
    for side, s, info in (("x", sx, a), ("y", sy, b)):
        # var * kurt / 8 == (var**2 kurt) / var / 8
        out[f"variance_{side}"] = [
            e / v / 8.0 if v > 0.0 else 0.0
            for e, v in zip(info.m4_excess.tolist(), info.var.tolist())
        ]
        if s.order == 6:
            _, var, skew, kurt, degenerate = s.moment_arrays()
            ok = ~degenerate
            r3 = np.full(s.d, np.nan)
            if ok.any():
                r3[ok] = residual_r3(var[ok], skew[ok], kurt[ok], s.kappa6()[ok])
            out[f"residual_r3_{side}"] = [None if np.isnan(v) else float(v) for v in r3]
    return out


# -- diagnostics ----------------------------------------------------------


def residual_r3(var, skew, kurt, kappa6):
    """Third-order residual of the Taylor estimate of E|X - X'|.

    ``3 (2 k6 + 18 s6 g4 + 34 s6 - 20 s6 g3**2) / (48 (2 var)**2.5)`` with
    ``s6 = var**3``. Scales linearly with the length unit.
    """
    var = np.asarray(var, dtype=np.float64)
    if (var <= 0).any():
        raise ValueError("residual undefined for degenerate")
    s6 = var**3
    num = 2.0 * np.asarray(kappa6) + 18.0 * s6 * kurt + 34.0 * s6 - 20.0 * s6 * np.asarray(skew) ** 2
    return _out(3.0 * num / (48.0 * (2.0 * var) ** 2.5))


def variance_diagnostic(var, kurt, flags: set | None = None):
    """Approximate Var(|X - X'|) as ``var * kurt / 8``.

    Negative for platykurtic inputs; the raw value is returned and
    ``negative_variance`` is added to ``flags``.
    """
    v = np.asarray(var, dtype=np.float64) * np.asarray(kurt) / 8.0
    if flags is not None and (v < 0).any():
        flags.add("negative_variance")
    return _out(v)
