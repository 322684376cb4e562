"""Wall-clock timing of learning and inference over a grid of (M, N)."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .inference import predict
from .optimize import OptimizerConfig, fit
from .synthetic import GenConfig, generate

# fixed iteration budget; tol=0 disables early stopping so every cell does the same work
BENCH_OPTIMIZER = OptimizerConfig(max_iters=20, tol=0.0)


@dataclass
class BenchRecord:
    variant: str
    n_instances: int
    n_nodes: int
    fit_seconds: float
    iterations: int
    predict_seconds: float

    @property
    def seconds_per_iteration(self) -> float:
        return self.fit_seconds / max(self.iterations, 1)


@dataclass
class BenchReport:
    records: List[BenchRecord] = field(default_factory=list)

    def select(self, variant: str) -> List[BenchRecord]:
        return [r for r in self.records if r.variant == variant]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["variant", "M", "N", "fit_seconds", "iterations",
                    "seconds_per_iteration", "predict_seconds"])
        for r in self.records:
            w.writerow([r.variant, r.n_instances, r.n_nodes, f"{r.fit_seconds:.6g}",
                        r.iterations, f"{r.seconds_per_iteration:.6g}", f"{r.predict_seconds:.6g}"])
        return buf.getvalue()


def loglog_slope(x: Sequence[float], t: Sequence[float]) -> float:
    """Least-squares slope of log(t) against log(x)."""
    return float(np.polyfit(np.log(x), np.log(t), 1)[0])


def benchmark(
    grid: Iterable[Tuple[int, int]],
    seed: int = 0,
    variants: Sequence[str] = ("b", "nb"),
    cfg: OptimizerConfig = BENCH_OPTIMIZER,
    repeats: int = 1,
) -> BenchReport:
    """Time ``fit`` and ``predict`` for every (M, N) cell and variant.

    With ``repeats > 1`` the fastest run is kept, the usual way of damping
    scheduler noise.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("benchmark grid is empty")
    report = BenchReport()
    for M, N in grid:
        data = generate(GenConfig(n_nodes=N, n_instances=M, seed=seed))
        for variant in variants:
            best = None
            for _ in range(repeats):
                t0 = time.perf_counter()
                fitted = fit(variant, data, cfg=cfg)
                t1 = time.perf_counter()
                predict(variant, fitted.final_params, data)
                t2 = time.perf_counter()
                rec = BenchRecord(variant, M, N, t1 - t0, fitted.iterations, t2 - t1)
                if best is None or rec.fit_seconds < best.fit_seconds:
                    best = rec
            report.records.append(best)
    return report
