"""Latency benchmarks for the streaming engine's update paths."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from .engine import EngineConfig, StreamingEngine
from .errors import ConfigurationError
from .ingest import ScenarioSpec, generate_synthetic


@dataclass
class BenchReport:
    """Median completion times (seconds) for each update path."""

    n: int
    t: int
    runs: int
    initial_fit_s: float
    partial_fit_s: float
    approx_add_s: float
    full_recompute_s: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "runs": self.runs,
            "initial_fit_s": self.initial_fit_s,
            "partial_fit_s": self.partial_fit_s,
            "approx_add_s": self.approx_add_s,
            "full_recompute_s": self.full_recompute_s,
        }

    def to_table(self) -> str:
        rows = [
            ("initial fit", self.initial_fit_s),
            ("partial fit (add time point)", self.partial_fit_s),
            ("approx add (add series)", self.approx_add_s),
            ("full recompute", self.full_recompute_s),
        ]
        lines = [f"N={self.n}  T={self.t}  runs={self.runs}"]
        for name, value in rows:
            lines.append(f"  {name:<30s} {value * 1e3:12.4f} ms")
        return "\n".join(lines)


def _median_time(fn, runs: int) -> float:
    samples = []
    for _ in range(runs):
        began = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - began)
    return statistics.median(samples)


def run_bench(n: int, t: int, runs: int = 10, seed: int = 0) -> BenchReport:
    """Benchmark every update path on a synthetic N x T panel.

    Timings are medians over ``runs`` executions.  The bench engine has
    background recomputation disabled so approximate-add timings are not
    polluted by concurrent recompute threads; the full-recompute row measures
    the same work synchronously.
    """
    if n < 3 or t < 2:
        raise ConfigurationError("bench needs n >= 3 and t >= 2")
    if runs < 1:
        raise ConfigurationError("runs must be >= 1")
    panel, _ = generate_synthetic(ScenarioSpec(n_central=n, t_points=t, noise_sd=0.1, seed=seed))
    rng = np.random.default_rng(seed + 1)

    engine = StreamingEngine(
        EngineConfig(drift_threshold=1e18, approx_budget=10**9), auto_recompute=False
    )
    initial_fit_s = _median_time(lambda: engine.batch_fit(panel), runs)

    columns = iter(rng.normal(0.0, 1.0, (runs, engine.panel.n_series)))
    partial_fit_s = _median_time(lambda: engine.add_time_point(next(columns)), runs)

    new_series = iter(rng.normal(0.0, 1.0, (runs, engine.panel.t_count)))
    counter = iter(range(runs))
    approx_add_s = _median_time(
        lambda: engine.add_series_approx(f"bench_extra_{next(counter)}", next(new_series)), runs
    )

    full_recompute_s = _median_time(engine.recompute_now, runs)
    return BenchReport(
        n=n,
        t=t,
        runs=runs,
        initial_fit_s=initial_fit_s,
        partial_fit_s=partial_fit_s,
        approx_add_s=approx_add_s,
        full_recompute_s=full_recompute_s,
    )
