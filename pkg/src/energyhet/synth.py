"""
Seeded samplers for the benchmark distribution families, with their
closed-form moments.

Random numbers come from numpy's counter-based ``Philox`` bit generator
seeded through ``SeedSequence(seed)``, so a ``(spec, n, d, seed)`` tuple
always yields the same matrix. Per-family algorithms are numpy's:

==============  =====================================================
normal          ``Generator.normal`` (ziggurat)
exponential     ``Generator.exponential`` (ziggurat)
student_t       ``Generator.standard_t`` (normal / chi-square ratio)
beta            ``Generator.beta`` (Johnk / Cheng)
gamma           ``Generator.gamma`` (Marsaglia-Tsang)
bernoulli       inverse CDF on ``Generator.random``
==============  =====================================================
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DistributionSpec",
    "Moments",
    "normal",
    "exponential",
    "student_t",
    "standardized_t",
    "beta",
    "gamma",
    "bernoulli",
    "parse_spec",
    "make_rng",
    "sample",
    "theoretical_moments",
    "BENCH_FAMILIES",
]

_ARITY = {
    "normal": (2,),
    "exponential": (1,),
    "student_t": (1, 3),
    "beta": (2,),
    "gamma": (2,),
    "bernoulli": (1,),
}


class Moments(NamedTuple):
    mean: float
    variance: float
    skewness: float
    kurtosis: float


@dataclass(frozen=True)
class DistributionSpec:
    """A distribution family with its parameters.

    ``params`` by family: normal ``(mu, sigma)``; exponential ``(beta,)``;
    student_t ``(df,)`` or ``(df, loc, scale)``; beta ``(a, b)``;
    gamma ``(shape k, scale theta)``; bernoulli ``(p,)``. The exponential
    parameter is a rate unless ``parameterization="scale"``.
    """

    family: str
    params: tuple[float, ...]
    parameterization: str = "rate"

    def __post_init__(self):
        if self.family not in _ARITY:
            raise ValueError(f"unknown family {self.family!r}")
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if len(params) not in _ARITY[self.family]:
            raise ValueError(f"{self.family} takes {_ARITY[self.family]} parameters")
        if self.parameterization not in ("rate", "scale"):
            raise ValueError("parameterization must be 'rate' or 'scale'")
        if not all(math.isfinite(p) for p in params):
            raise ValueError("parameters must be finite")
        f, p = self.family, params
        bad = (
            (f == "normal" and p[1] <= 0)
            or (f == "exponential" and p[0] <= 0)
            or (f == "student_t" and (p[0] <= 0 or (len(p) == 3 and p[2] <= 0)))
            or (f in ("beta", "gamma") and (p[0] <= 0 or p[1] <= 0))
            or (f == "bernoulli" and not 0 < p[0] < 1)
        )
        if bad:
            raise ValueError(f"invalid parameters for {f}: {p}")

    @property
    def label(self) -> str:
        args = ",".join(f"{p:g}" for p in self.params)
        suffix = ";scale" if self.parameterization == "scale" else ""
        return f"{self.family}({args}{suffix})"

    def __str__(self):
        return self.label


def normal(mu: float = 0.0, sigma: float = 1.0) -> DistributionSpec:
    return DistributionSpec("normal", (mu, sigma))


def exponential(beta: float = 1.0, parameterization: str = "rate") -> DistributionSpec:
    return DistributionSpec("exponential", (beta,), parameterization)


def student_t(df: float, loc: float = 0.0, scale: float = 1.0) -> DistributionSpec:
    if loc == 0.0 and scale == 1.0:
        return DistributionSpec("student_t", (df,))
    return DistributionSpec("student_t", (df, loc, scale))


def standardized_t(df: float) -> DistributionSpec:
    """Student's t rescaled to unit variance (needs ``df > 2``)."""
    if df <= 2:
        raise ValueError("variance undefined for df <= 2")
    return student_t(df, 0.0, math.sqrt((df - 2.0) / df))


def beta(a: float, b: float) -> DistributionSpec:
    return DistributionSpec("beta", (a, b))


def gamma(k: float, theta: float) -> DistributionSpec:
    return DistributionSpec("gamma", (k, theta))


def bernoulli(p: float) -> DistributionSpec:
    return DistributionSpec("bernoulli", (p,))


# the distribution list used in the benchmark experiments
BENCH_FAMILIES = (
    normal(0, 1),
    normal(1, 1),
    normal(10, 1),
    exponential(0.1),
    exponential(1),
    exponential(10),
    student_t(5),
    beta(0.5, 0.5),
    gamma(1, 2),
)

_SPEC_RE = re.compile(r"^\s*(\w+)\s*\(([^)]*)\)\s*$")


def parse_spec(text: str) -> DistributionSpec:
    """Parse labels such as ``"normal(0,1)"`` or ``"exponential(2;scale)"``."""
    m = _SPEC_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse distribution {text!r}")
    family, body = m.groups()
    parameterization = "rate"
    if ";" in body:
        body, parameterization = (part.strip() for part in body.split(";", 1))
    try:
        params = tuple(float(v) for v in body.split(",") if v.strip())
    except ValueError:
        raise ValueError(f"cannot parse distribution {text!r}") from None
    return DistributionSpec(family, params, parameterization)


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sample(spec: DistributionSpec, n: int, d: int = 1, seed=None) -> np.ndarray:
    """Draw an ``n x d`` matrix of i.i.d. values from ``spec``."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be at least 1")
    rng = make_rng(seed)
    size = (n, d)
    f, p = spec.family, spec.params
    if f == "normal":
        return rng.normal(p[0], p[1], size)
    if f == "exponential":
        scale = p[0] if spec.parameterization == "scale" else 1.0 / p[0]
        return rng.exponential(scale, size)
    if f == "student_t":
        loc, scale = (p[1], p[2]) if len(p) == 3 else (0.0, 1.0)
        return loc + scale * rng.standard_t(p[0], size)
    if f == "beta":
        return rng.beta(p[0], p[1], size)
    if f == "gamma":
        return rng.gamma(p[0], p[1], size)
    return (rng.random(size) < p[0]).astype(np.float64)


def theoretical_moments(spec: DistributionSpec) -> Moments:
    """Closed-form mean, variance, skewness and excess kurtosis."""
    f, p = spec.family, spec.params
    if f == "normal":
        return Moments(p[0], p[1] ** 2, 0.0, 0.0)
    if f == "exponential":
        scale = p[0] if spec.parameterization == "scale" else 1.0 / p[0]
        return Moments(scale, scale**2, 2.0, 6.0)
    if f == "student_t":
        df = p[0]
        loc, scale = (p[1], p[2]) if len(p) == 3 else (0.0, 1.0)
        if df <= 4:
            raise ValueError("kurtosis undefined")
        return Moments(loc, scale**2 * df / (df - 2.0), 0.0, 6.0 / (df - 4.0))
    if f == "beta":
        a, b = p
        s = a + b
        var = a * b / (s**2 * (s + 1.0))
        skew = 2.0 * (b - a) * math.sqrt(s + 1.0) / ((s + 2.0) * math.sqrt(a * b))
        kurt = 6.0 * ((a - b) ** 2 * (s + 1.0) - a * b * (s + 2.0)) / (
            a * b * (s + 2.0) * (s + 3.0)
        )
        return Moments(a / s, var, skew, kurt)
    if f == "gamma":
        k, theta = p
        return Moments(k * theta, k * theta**2, 2.0 / math.sqrt(k), 6.0 / k)
    q = p[0] * (1.0 - p[0])
    return Moments(p[0], q, (1.0 - 2.0 * p[0]) / math.sqrt(q), (1.0 - 6.0 * q) / q)
