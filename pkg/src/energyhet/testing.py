"""
Two-sample energy test with a permutation null.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .moments import as_dataset

__all__ = ["TestResult", "permutation_test", "ALPHAS"]

ALPHAS = (0.01, 0.05, 0.1)
_BATCH = 128


@dataclass(frozen=True)
class TestResult:
    """Outcome of :func:`permutation_test`.

    ``statistic`` is the energy statistic scaled by ``n m / (n + m)``;
    ``p_value = (1 + #{permuted >= observed}) / (permutations + 1)``.
    """

    __test__ = False  # keep pytest from collecting this class

    statistic: float
    p_value: float
    permutations: int
    seed: int
    n: int
    m: int
    reject_at: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "permutations": self.permutations,
            "seed": self.seed,
            "n": self.n,
            "m": self.m,
            "reject_at": {str(a): r for a, r in self.reject_at.items()},
        }


def _statistics(dist, row_totals, grand_total, labels, n, m):
    """Scaled energy statistics for a batch of group assignments.

    ``labels`` is ``(N, B)`` with 1 marking membership of the first group.
    """
    dl = dist @ labels
    sxx = np.einsum("ib,ib->b", labels, dl)
    sxy = row_totals @ labels - sxx
    syy = grand_total - 2.0 * (row_totals @ labels) + sxx
    e = 2.0 * sxy / (n * m) - sxx / n**2 - syy / m**2
    return e * (n * m / (n + m))


def _replicate_rng(seed, b):
    ss = np.random.SeedSequence(seed, spawn_key=(b,))
    return np.random.Generator(np.random.PCG64(ss))


def permutation_test(x, y, permutations: int = 999, seed=None) -> TestResult:
    """Permutation test of ``H0: P_X = P_Y`` with the energy statistic.

    Pooled rows are sorted lexicographically before relabeling, so the
    result does not depend on the caller's row order. Replicate ``b``
    draws its relabeling from ``SeedSequence(seed, spawn_key=(b,))``;
    replicates are independent of evaluation order.
    """
    if permutations < 99:
        raise ValueError("insufficient permutations")
    x = as_dataset(x)
    y = as_dataset(y)
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} != {y.shape[1]}")
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1)[0])
    n, m = x.shape[0], y.shape[0]
    total = n + m
    stacked = np.vstack([x, y])
    order = np.lexsort(stacked.T[::-1])
    pooled = stacked[order]
    # observed split expressed as a labeling of the sorted pool
    observed_labels = np.zeros(total)
    observed_labels[np.argsort(order)[:n]] = 1.0

    dist = cdist(pooled, pooled)
    row_totals = dist.sum(axis=1)
    grand_total = row_totals.sum()
    observed = float(
        _statistics(dist, row_totals, grand_total, observed_labels[:, None], n, m)[0]
    )

    exceed = 0
    for start in range(0, permutations, _BATCH):
        stop = min(start + _BATCH, permutations)
        labels = np.zeros((total, stop - start))
        for j, b in enumerate(range(start, stop)):
            labels[_replicate_rng(seed, b).permutation(total)[:n], j] = 1.0
        stats = _statistics(dist, row_totals, grand_total, labels, n, m)
        exceed += int((stats >= observed - 1e-12 * abs(observed)).sum())

    p = (1 + exceed) / (permutations + 1)
    return TestResult(
        statistic=observed,
        p_value=p,
        permutations=permutations,
        seed=seed,
        n=n,
        m=m,
        reject_at={a: p <= a for a in ALPHAS},
    )
