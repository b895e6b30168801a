"""
Per-dimension moment summaries.

A :class:`MomentSummary` holds the sample count, per-dimension means and
the central-moment sums ``S_k = sum((x - mean)**k)`` for ``k = 2..order``.
Summaries are built in a single pass over row chunks and merged with the
pairwise update formulas of Pébay (2008), so combining the summaries of
two partitions gives the summary of their union.

All derived moments use population (``1/n``) normalization; no bias
correction is applied to variance, skewness or kurtosis.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

__all__ = [
    "MomentSummary",
    "DerivedMoments",
    "as_dataset",
    "read_csv",
    "summarize",
    "summarize_chunks",
    "merge",
    "derived_moments",
]

# per-chunk temporaries are about CHUNK_BYTES each: small enough to stay in
# cache and to be recycled by the allocator instead of fresh pages
CHUNK_BYTES = 1 << 18


def as_dataset(data, *, row_offset: int = 0) -> np.ndarray:
    """Validate ``data`` as an ``n x d`` float matrix.

    One-dimensional input is treated as a single feature column. Raises
    :class:`ValueError` for empty input or non-finite entries, naming the
    first offending ``(row, col)``.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {x.shape}")
    if x.shape[0] == 0 or x.shape[1] == 0:
        raise ValueError("empty input")
    finite = np.isfinite(x)
    if not finite.all():
        row, col = np.argwhere(~finite)[0]
        raise ValueError(f"non-finite value at ({row + row_offset}, {col})")
    return x


def read_csv(path) -> np.ndarray:
    """Read a headered CSV of decimal floats (rows = samples)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty input")
        width = len(header)
        for r, record in enumerate(reader):
            if not record:
                continue
            if len(record) != width:
                raise ValueError(
                    f"{path}: row {r} has {len(record)} cells, expected {width}"
                )
            try:
                rows.append([float(cell) for cell in record])
            except ValueError:
                c = next(i for i, cell in enumerate(record) if not _is_float(cell))
                raise ValueError(
                    f"{path}: malformed cell at (row {r}, col {c}): {record[c]!r}"
                ) from None
    if not rows:
        raise ValueError(f"{path}: empty input")
    return as_dataset(np.array(rows))


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


class DerivedMoments(NamedTuple):
    mean: float
    variance: float
    skewness: float
    kurtosis: float
    kappa6: float | None
    degenerate: bool


@dataclass(frozen=True, eq=False)
class MomentSummary:
    """Sample count, means and central-moment sums for each dimension.

    ``sums[k - 2]`` holds ``S_k`` for ``k = 2..order``. Instances are
    immutable; the arrays are marked read-only.
    """

    n: int
    mean: np.ndarray
    sums: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        sums = np.array(self.sums, dtype=np.float64)
        if sums.ndim != 2 or sums.shape[1] != mean.shape[0]:
            raise ValueError("sums must have shape (order - 1, d)")
        if sums.shape[0] not in (3, 5):
            raise ValueError("order must be 4 or 6")
        if mean.shape[0] < 1:
            raise ValueError("d must be at least 1")
        if self.n < 0:
            raise ValueError("n must be non-negative")
        mean.flags.writeable = False
        sums.flags.writeable = False
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sums", sums)

    @classmethod
    def _trusted(cls, n: int, mean: np.ndarray, sums: np.ndarray) -> MomentSummary:
        # internal constructor for freshly computed arrays: skips validation
        # and copies
        self = object.__new__(cls)
        mean.flags.writeable = False
        sums.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sums", sums)
        return self

    @classmethod
    def empty(cls, d: int, order: int = 4) -> MomentSummary:
        return cls(0, np.zeros(d), np.zeros((order - 1, d)))

    @classmethod
    def from_moments(cls, n, mean, variance, skewness=0.0, kurtosis=0.0):
        """Build an order-4 summary from population moments (mostly for tests)."""
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        var = np.broadcast_to(np.asarray(variance, dtype=np.float64), mean.shape)
        sd = np.sqrt(var)
        m3 = np.asarray(skewness) * sd**3
        m4 = (np.asarray(kurtosis) + 3.0) * var**2
        return cls(n, mean, n * np.stack([var, m3 * np.ones_like(var), m4]))

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    @property
    def order(self) -> int:
        return self.sums.shape[0] + 1

    def central_sum(self, k: int) -> np.ndarray:
        if not 2 <= k <= self.order:
            raise ValueError(f"S{k} not tracked by an order-{self.order} summary")
        return self.sums[k - 2]

    s2 = property(lambda self: self.central_sum(2))
    s3 = property(lambda self: self.central_sum(3))
    s4 = property(lambda self: self.central_sum(4))

    def central_moments(self) -> np.ndarray:
        """Population central moments ``m_k = S_k / n``, shape (order - 1, d)."""
        if self.n < 1:
            raise ValueError("insufficient samples for variance")
        return self.sums / self.n

    def moment_arrays(self):
        """Vectorized ``(mean, variance, skewness, kurtosis, degenerate)`` over dimensions."""
        if self.n < 2:
            raise ValueError("insufficient samples for variance")
        m = self.sums / self.n
        var = m[0]
        degenerate = _degenerate(var, self.mean)
        safe = np.where(degenerate, 1.0, var)
        skew = np.where(degenerate, 0.0, m[1] / safe**1.5)
        kurt = np.where(degenerate, 0.0, m[2] / safe**2 - 3.0)
        var = np.where(degenerate, 0.0, var)
        return self.mean, var, skew, kurt, degenerate

    def kappa6(self) -> np.ndarray:
        """Per-dimension sixth cumulant ``m6 - 15 m4 m2 - 10 m3**2 + 30 m2**3``."""
        if self.order != 6:
            raise ValueError("sixth cumulant requires an order-6 summary")
        m2, m3, m4, _, m6 = self.central_moments()
        k6 = m6 - 15.0 * m4 * m2 - 10.0 * m3 * m3 + 30.0 * m2**3
        return np.where(_degenerate(m2, self.mean), 0.0, k6)

    def allclose(self, other: MomentSummary, rtol=1e-9, atol=0.0) -> bool:
        return (
            self.n == other.n
            and self.sums.shape == other.sums.shape
            and np.allclose(self.mean, other.mean, rtol=rtol, atol=atol)
            and np.allclose(self.sums, other.sums, rtol=rtol, atol=atol)
        )

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "d": self.d,
            "order": self.order,
            "mean": self.mean.tolist(),
        }
        for k in range(2, self.order + 1):
            out[f"s{k}"] = self.central_sum(k).tolist()
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> MomentSummary:
        try:
            n, d, order = int(obj["n"]), int(obj["d"]), int(obj["order"])
            if order not in (4, 6):
                raise ValueError(f"unsupported order {order}")
            mean = [float(v) for v in obj["mean"]]
            sums = [[float(v) for v in obj[f"s{k}"]] for k in range(2, order + 1)]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed summary: {exc!r}") from None
        if len(mean) != d or any(len(row) != d for row in sums):
            raise ValueError("summary arrays must have length d")
        arr = np.array(sums)
        if not (np.isfinite(arr).all() and np.isfinite(mean).all()):
            raise ValueError("summary contains non-finite values")
        if (arr[0] < 0).any() or (arr[2] < 0).any():
            raise ValueError("s2 and s4 must be non-negative")
        if n <= 1 and arr.any():
            raise ValueError("central sums must be zero for n <= 1")
        return cls(n, mean, arr)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> MomentSummary:
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"MomentSummary(n={self.n}, d={self.d}, order={self.order})"


# below this variance, var**2 underflows and standardized moments are 0/0
_VAR_FLOOR = math.sqrt(np.finfo(np.float64).tiny)


def _degenerate(var, mean):
    # constant columns leave O(eps * |mean|)**2 residue after the two-pass step
    return (var <= (1e-12 * np.abs(mean)) ** 2) | (var < _VAR_FLOOR)


def _chunk_summary(x: np.ndarray, order: int) -> MomentSummary:
    # dimension-major copy: contiguous reductions are faster and pairwise-summed
    xt = np.ascontiguousarray(x.T)
    n = xt.shape[1]
    mean = np.add.reduce(xt, axis=1) / n
    c = xt - mean[:, None]
    # corrected two-pass: the rounded mean is off by about eps * |mean|, which
    # biases odd central sums when the spread is tiny next to the location
    e = np.add.reduce(c, axis=1) / n
    c -= e[:, None]
    mean += e
    sums = np.empty((order - 1, xt.shape[0]))
    p = c * c
    np.add.reduce(p, axis=1, out=sums[0])
    for k in range(3, order + 1):
        p *= c
        np.add.reduce(p, axis=1, out=sums[k - 2])
    if n == 1:
        sums[:] = 0.0
    return MomentSummary._trusted(n, mean, sums)


def summarize(data, order: int = 4, *, chunk_rows: int | None = None) -> MomentSummary:
    """Summarize an ``n x d`` matrix.

    Parameters
    ----------
    data : array_like
        Samples in rows, features in columns.
    order : {4, 6}
        Highest central moment tracked. Order 6 is needed for the sixth
        cumulant used by :func:`energyhet.approx.residual_r3`.
    chunk_rows : int, optional
        Rows per chunk; chunks are summarized two-pass and merged. The
        default keeps each chunk near 256 KiB.
    """
    x = as_dataset(data)
    _check_order(order)
    if chunk_rows is None:
        chunk_rows = max(1024, CHUNK_BYTES // (8 * x.shape[1]))
    if x.shape[0] <= chunk_rows:
        return _chunk_summary(x, order)
    chunks = (x[i:i + chunk_rows] for i in range(0, x.shape[0], chunk_rows))
    return summarize_chunks(chunks, order)


def summarize_chunks(chunks: Iterable, order: int = 4) -> MomentSummary:
    """Single-pass summary over a stream of row chunks.

    Every chunk is consumed exactly once, so ``chunks`` may be a generator
    reading from disk or a socket.
    """
    _check_order(order)
    total = None
    rows = 0
    for chunk in chunks:
        x = as_dataset(chunk, row_offset=rows)
        rows += x.shape[0]
        part = _chunk_summary(x, order)
        total = part if total is None else merge(total, part)
    if total is None:
        raise ValueError("empty input")
    return total


def _check_order(order):
    if order not in (4, 6):
        raise ValueError(f"order must be 4 or 6, got {order}")


def merge(a: MomentSummary, b: MomentSummary) -> MomentSummary:
    """Combine the summaries of two disjoint samples."""
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} != {b.d}")
    if a.order != b.order:
        raise ValueError(f"order mismatch: {a.order} != {b.order}")
    if b.n == 0:
        return a
    if a.n == 0:
        return b
    na, nb = float(a.n), float(b.n)
    n = na + nb
    delta = b.mean - a.mean
    mean = a.mean + delta * (nb / n)
    # sa[k] / sb[k] = S_k with S_0 = n, S_1 = 0
    sa = [na, 0.0, *a.sums]
    sb = [nb, 0.0, *b.sums]
    wa, wb = -nb / n, na / n
    # powers of delta, shared by every order
    dpow = [None, delta]
    for k in range(2, a.order + 1):
        dpow.append(dpow[-1] * delta)
    sums = np.empty_like(a.sums)
    for p in range(2, a.order + 1):
        acc = sa[p] + sb[p]
        for k in range(1, p - 1):
            acc = acc + math.comb(p, k) * dpow[k] * (wa**k * sa[p - k] + wb**k * sb[p - k])
        acc = acc + dpow[p] * (na * nb / n) ** p * (
            1.0 / nb ** (p - 1) - (-1.0 / na) ** (p - 1)
        )
        sums[p - 2] = acc
    # even-order sums are non-negative; clip round-off on near-constant data
    sums[0::2] = np.maximum(sums[0::2], 0.0)
    return MomentSummary._trusted(a.n + b.n, mean, sums)


def derived_moments(s: MomentSummary, i: int = 0) -> DerivedMoments:
    """Mean, variance, skewness, excess kurtosis (and kappa_6) of dimension ``i``.

    Degenerate dimensions (zero variance) report skewness and kurtosis as 0
    and set ``degenerate``. ``kappa6`` is ``None`` unless ``s.order == 6``.
    """
    if s.n < 2:
        raise ValueError("insufficient samples for variance")
    if not 0 <= i < s.d:
        raise IndexError(f"dimension {i} out of range for d={s.d}")
    mean, var, skew, kurt, degenerate = s.moment_arrays()
    kappa6 = float(s.kappa6()[i]) if s.order == 6 else None
    return DerivedMoments(
        float(mean[i]),
        float(var[i]),
        float(skew[i]),
        float(kurt[i]),
        kappa6,
        bool(degenerate[i]),
    )

