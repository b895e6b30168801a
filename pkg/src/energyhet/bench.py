"""
Benchmark harness: energy coefficient and wall time per distribution
pair, sample size and method.

A config is a JSON object validated against :data:`CONFIG_SCHEMA`::

    {
      "families": ["normal(0,1)", "exponential(1)"],
      "setups": ["same", "vs_reference"],
      "reference": "normal(0,1)",
      "pairs": [["beta(0.5,0.5)", "normal(1,1)"]],
      "sizes": [100, 1000, 10000],
      "methods": ["empirical", "taylor", "gaussian_exact", "adjusted"],
      "repetitions": 1,
      "timing_repeats": 5,
      "d": 1,
      "order": 4,
      "seed": 0
    }

``"same"`` pairs every family with itself (independent samples),
``"vs_reference"`` pairs every family with ``reference``; explicit
``pairs`` are appended. Timing is the median of ``timing_repeats`` runs
after one warm-up, on ``time.perf_counter_ns``. Every field except
``elapsed_ns`` is a deterministic function of the config.
"""
from __future__ import annotations

import csv
import io
import json
import statistics
import time
from dataclasses import asdict, dataclass, field

import jsonschema
import numpy as np

from .approx import energy_from_summaries
from .empirical import METHODS, energy_statistic
from .moments import summarize
from .synth import BENCH_FAMILIES, parse_spec, sample

__all__ = ["CONFIG_SCHEMA", "BenchConfig", "BenchRow", "BenchReport", "run_bench", "run_method"]

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "families": {"type": "array", "items": {"type": "string"}},
        "setups": {
            "type": "array",
            "items": {"enum": ["same", "vs_reference"]},
            "uniqueItems": True,
        },
        "reference": {"type": "string"},
        "pairs": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "string"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "sizes": {
            "type": "array",
            "items": {"type": "integer", "minimum": 2},
            "minItems": 1,
        },
        "methods": {
            "type": "array",
            "items": {"enum": list(METHODS)},
            "minItems": 1,
            "uniqueItems": True,
        },
        "repetitions": {"type": "integer", "minimum": 1},
        "timing_repeats": {"type": "integer", "minimum": 1},
        "d": {"type": "integer", "minimum": 1},
        "order": {"enum": [4, 6]},
        "seed": {"type": "integer", "minimum": 0},
    },
}


@dataclass
class BenchConfig:
    pairs: list
    sizes: tuple = (100, 1000, 10000)
    methods: tuple = METHODS
    repetitions: int = 1
    timing_repeats: int = 5
    d: int = 1
    order: int = 4
    seed: int = 0

    @classmethod
    def default(cls) -> BenchConfig:
        return cls.from_dict({})

    @classmethod
    def from_dict(cls, obj: dict) -> BenchConfig:
        try:
            jsonschema.validate(obj, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ValueError(f"invalid config: {exc.message}") from None
        families = [parse_spec(f) for f in obj["families"]] if "families" in obj \
            else list(BENCH_FAMILIES)
        setups = obj.get("setups", ["same", "vs_reference"])
        reference = parse_spec(obj.get("reference", "normal(0,1)"))
        pairs = []
        if "same" in setups:
            pairs += [(f, f) for f in families]
        if "vs_reference" in setups:
            pairs += [(f, reference) for f in families if f != reference]
        pairs += [(parse_spec(a), parse_spec(b)) for a, b in obj.get("pairs", [])]
        if not pairs:
            raise ValueError("invalid config: no distribution pairs")
        cfg = cls(
            pairs=pairs,
            sizes=tuple(obj.get("sizes", cls.sizes)),
            methods=tuple(obj.get("methods", cls.methods)),
            repetitions=obj.get("repetitions", cls.repetitions),
            timing_repeats=obj.get("timing_repeats", cls.timing_repeats),
            d=obj.get("d", cls.d),
            order=obj.get("order", cls.order),
            seed=obj.get("seed", cls.seed),
        )
        if cfg.d > 1 and set(cfg.methods) & {"gaussian_exact", "adjusted"}:
            raise ValueError("invalid config: gaussian_exact and adjusted require d=1")
        return cfg


@dataclass(frozen=True)
class BenchRow:
    dist_a: str
    dist_b: str
    n: int
    method: str
    H: float
    elapsed_ns: int
    flags: str
    seed: int


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)

    def summary(self) -> list[dict]:
        """Mean H and mean elapsed time per (pair, n, method) cell."""
        cells: dict[tuple, list[BenchRow]] = {}
        for row in self.rows:
            cells.setdefault((row.dist_a, row.dist_b, row.n, row.method), []).append(row)
        return [
            {
                "dist_a": a, "dist_b": b, "n": n, "method": m,
                "mean_H": statistics.fmean(r.H for r in rows),
                "mean_elapsed_ns": statistics.fmean(r.elapsed_ns for r in rows),
                "count": len(rows),
            }
            for (a, b, n, m), rows in sorted(cells.items())
        ]

    def to_json(self) -> str:
        return json.dumps(
            {"rows": [asdict(r) for r in self.rows], "summary": self.summary()}, indent=1
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(BenchRow.__dataclass_fields__)
        for r in self.rows:
            writer.writerow([r.dist_a, r.dist_b, r.n, r.method, repr(r.H),
                             r.elapsed_ns, r.flags, r.seed])
        return buf.getvalue()


def run_method(x, y, method: str, order: int = 4):
    """Full path for one method, raw samples in: what the timings measure."""
    if method == "empirical":
        return energy_statistic(x, y)
    return energy_from_summaries(summarize(x, order), summarize(y, order), method)


def _timed(fn, repeats: int):
    result = fn()  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        result = fn()
        times.append(time.perf_counter_ns() - t0)
    return result, max(1, int(statistics.median(times)))


def _rep_seed(seed, p, n, r) -> int:
    return int(np.random.SeedSequence([seed, p, n, r]).generate_state(1)[0])


def run_bench(config: BenchConfig, progress=None) -> BenchReport:
    report = BenchReport()
    for p, (spec_a, spec_b) in enumerate(config.pairs):
        for n in config.sizes:
            for r in range(config.repetitions):
                seed = _rep_seed(config.seed, p, n, r)
                x = sample(spec_a, n, config.d, seed=[seed, 0])
                y = sample(spec_b, n, config.d, seed=[seed, 1])
                for method in config.methods:
                    est, ns = _timed(lambda: run_method(x, y, method, config.order),
                                     config.timing_repeats)
                    report.rows.append(BenchRow(
                        str(spec_a), str(spec_b), n, method, est.coefficient, ns,
                        ";".join(sorted(est.flags)), seed,
                    ))
                    if progress is not None:
                        progress(report.rows[-1])
    return report

