"""
Exact energy statistic and energy coefficient.

These are the O(n m d) reference computations that every moment-based
approximation is checked against. Within-sample averages use the
V-statistic normalization ``1/n**2`` over all ordered pairs, zero
diagonal included.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .moments import as_dataset

__all__ = [
    "DistanceEstimate",
    "METHODS",
    "mean_pairwise_distance",
    "energy_statistic",
    "energy_coefficient",
    "quadratic_distance",
    "coefficient_from_terms",
]

METHODS = ("empirical", "taylor", "gaussian_exact", "adjusted")

# rows per cdist block are chosen so a block of distances is about this many
# bytes (cache-sized tiles)
BLOCK_BYTES = 1 << 21


@dataclass(frozen=True)
class DistanceEstimate:
    """An energy distance value with its component expectations.

    ``terms`` is ``(E_xy, E_xx, E_yy)``; ``value`` is
    ``2 E_xy - E_xx - E_yy`` and ``coefficient`` the energy coefficient
    ``H = value / (2 E_xy)`` clamped to ``[0, 1]``. ``elapsed`` is wall
    time in seconds.
    """

    value: float
    method: str
    terms: tuple[float, float, float]
    coefficient: float
    flags: frozenset[str] = frozenset()
    elapsed: float = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        exy, exx, eyy = self.terms
        return {
            "method": self.method,
            "E_xy": exy,
            "E_xx": exx,
            "E_yy": eyy,
            "D2": self.value,
            "H": self.coefficient,
            "flags": sorted(self.flags),
            "elapsed_ns": int(self.elapsed * 1e9),
            **({"diagnostics": self.diagnostics} if self.diagnostics else {}),
        }


def _check_pair(x, y):
    x = as_dataset(x)
    y = as_dataset(y)
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} != {y.shape[1]}")
    return x, y


def _pairwise_sum(x, y, block_rows, threads=1):
    # per-block numpy sums, then an exactly rounded total: the result does
    # not depend on how blocks are scheduled
    if block_rows is None:
        block_rows = max(16, BLOCK_BYTES // (8 * y.shape[0]))
    starts = range(0, x.shape[0], block_rows)

    def block(i):
        return cdist(x[i:i + block_rows], y).sum()

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(block, starts))
    else:
        parts = [block(i) for i in starts]
    return math.fsum(parts)


def mean_pairwise_distance(
    x, y, *, block_rows: int | None = None, threads: int = 1
) -> float:
    """Average Euclidean distance over all ``n * m`` pairs ``(x_i, y_j)``."""
    x, y = _check_pair(x, y)
    return _pairwise_sum(x, y, block_rows, threads) / (x.shape[0] * y.shape[0])


def _canonical(x, y):
    key_x = (x.shape[0], x.tobytes())
    key_y = (y.shape[0], y.tobytes())
    return (x, y) if key_x <= key_y else (y, x)


def coefficient_from_terms(d2, exy, flags: set, *, approximate: bool = False) -> float:
    """Energy coefficient ``d2 / (2 exy)`` with the clamping policy.

    Raw values outside ``[0, 1]`` by more than ``1e-6`` add
    ``clamped_nonneg`` (exact path, below zero) or ``clamped_unit``
    (approximations, either side). A vanishing denominator returns 0 with
    ``degenerate`` when the numerator vanishes too; otherwise it is an
    error for exact terms and a ``clamped_unit`` endpoint for approximate
    ones.
    """
    denom = 2.0 * exy
    if denom < 1e-12:
        if abs(d2) <= 1e-12:
            flags.add("degenerate")
            return 0.0
        if approximate:
            # cross term clamped to zero by an expansion: the ratio is
            # unbounded, report the nearest end of [0, 1]
            flags.add("clamped_unit")
            return 1.0 if d2 > 0 else 0.0
        raise ValueError("identical degenerate inputs")
    h = d2 / denom
    if h < 0.0:
        if h < -1e-6:
            flags.add("clamped_unit" if approximate else "clamped_nonneg")
        h = 0.0
    elif h > 1.0:
        if h > 1.0 + 1e-6:
            flags.add("clamped_unit")
        h = 1.0
    return h


def energy_statistic(
    x, y, *, block_rows: int | None = None, threads: int = 1
) -> DistanceEstimate:
    """Empirical energy statistic ``E_{n,m}`` of two samples.

    Examples
    --------
    >>> energy_statistic([[0.0], [2.0]], [[1.0]]).terms
    (1.0, 1.0, 0.0)
    """
    start = time.perf_counter()
    x, y = _check_pair(x, y)
    # fixed argument order makes the result bit-symmetric in (x, y)
    a, b = _canonical(x, y)
    exy = _pairwise_sum(a, b, block_rows, threads) / (a.shape[0] * b.shape[0])
    exx = _pairwise_sum(x, x, block_rows, threads) / x.shape[0] ** 2
    eyy = _pairwise_sum(y, y, block_rows, threads) / y.shape[0] ** 2
    value = 2.0 * exy - (exx + eyy)
    flags: set[str] = set()
    h = coefficient_from_terms(value, exy, flags)
    return DistanceEstimate(
        value=value,
        method="empirical",
        terms=(exy, exx, eyy),
        coefficient=h,
        flags=frozenset(flags),
        elapsed=time.perf_counter() - start,
    )


def energy_coefficient(x, y, method: str = "empirical", *, order: int = 4) -> float:
    """Energy coefficient ``H`` of two samples by the chosen method.

    ``"empirical"`` uses the exact pairwise statistic; the other methods
    summarize both samples and evaluate the moment-based formulas in
    :mod:`energyhet.approx`.
    """
    if method == "empirical":
        return energy_statistic(x, y).coefficient
    from .approx import energy_from_summaries
    from .moments import summarize

    x, y = _check_pair(x, y)
    return energy_from_summaries(summarize(x, order), summarize(y, order), method).coefficient


def quadratic_distance(x, y) -> float:
    """Plug-in ``2 E|X-Y|^2 - E|X-X'|^2 - E|Y-Y'|^2`` with squared Euclidean norms.

    Each average over all ordered pairs is evaluated exactly through
    ``mean_ij |a_i - b_j|^2 = |mean(a) - mean(b)|^2 + tr cov(a) + tr cov(b)``
    (population covariances), which costs O((n + m) d).
    """
    x, y = _check_pair(x, y)
    mx, my = x.mean(axis=0), y.mean(axis=0)
    tx = ((x - mx) ** 2).mean(axis=0).sum()
    ty = ((y - my) ** 2).mean(axis=0).sum()
    shift = float(((mx - my) ** 2).sum())
    exy2 = shift + tx + ty
    return 2.0 * exy2 - (2.0 * tx + 2.0 * ty)
