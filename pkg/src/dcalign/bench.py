"""Timing sweeps over (l, a, c) and the regressions used to summarize them."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import platform
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_info, threadpool_limits

from . import costmodel
from .alignment import Method, align
from .errors import FitError, IoError, SkippedError, ValidationError
from .numkernels import svd_backend

logger = logging.getLogger(__name__)

THREADS_ENV = "DC_MAX_THREADS"
FREE_PARAMS = ("ell", "a", "c")
CSV_COLUMNS = ("method", "free_param", "value", "median_s", "repeats", "threads", "svd_backend")


@dataclass(frozen=True)
class SweepSpec:
    free_param: str
    fixed: dict
    start: int
    step: int
    stop: int
    repeats: int = 5
    methods: tuple[Method, ...] = (Method.IMAKURA, Method.KAWAKAMI, Method.ODC)
    seed: int = 0

    def __post_init__(self):
        if self.free_param not in FREE_PARAMS:
            raise ValidationError(f"free_param must be one of {FREE_PARAMS}, got {self.free_param!r}")
        others = set(FREE_PARAMS) - {self.free_param}
        if set(self.fixed) != others:
            raise ValidationError(f"fixed must give exactly {sorted(others)}, got {sorted(self.fixed)}")
        if self.step < 1 or self.start < 1 or self.stop < self.start:
            raise ValidationError("range must be a non-empty increasing arithmetic sequence of positive values")
        if self.repeats < 1:
            raise ValidationError("repeats must be >= 1")
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        if not self.methods:
            raise ValidationError("at least one method is required")

    @property
    def values(self) -> list[int]:
        """Inclusive ``start:step:stop``."""
        return list(range(self.start, self.stop + 1, self.step))

    def point(self, value: int) -> dict:
        return {**self.fixed, self.free_param: value}

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["methods"] = [m.value for m in self.methods]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        if "range" in d:
            d["start"], d["step"], d["stop"] = d.pop("range")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ValidationError(str(exc)) from exc


@dataclass(frozen=True)
class SweepRow:
    method: str
    free_param: str
    value: int
    median_s: float
    repeats: int
    threads: int | None
    svd_backend: str


@dataclass
class SweepResult:
    rows: list[SweepRow]
    skipped: list[SkippedError] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def medians(self, method) -> tuple[list[int], list[float]]:
        method = Method(method).value
        pts = [(r.value, r.median_s) for r in self.rows if r.method == method]
        return [p[0] for p in pts], [p[1] for p in pts]


@dataclass(frozen=True)
class FitResult:
    alpha: float
    kappa: float
    r_squared: float


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def sweep_anchors(spec: SweepSpec, value: int) -> list[np.ndarray]:
    """Uniform ``[0, 1)`` anchor representations for one grid point; depends only on (seed, value)."""
    pt = spec.point(value)
    rng = np.random.default_rng([spec.seed, value])
    return list(rng.random((pt["c"], pt["a"], pt["ell"])))


def resolve_threads(threads: int | None = None) -> int | None:
    if threads is not None:
        return int(threads)
    env = os.environ.get(THREADS_ENV)
    return int(env) if env else None


def _blas_threads() -> int | None:
    counts = [p.get("num_threads") for p in threadpool_info() if p.get("user_api") == "blas"]
    return counts[0] if counts else None


def host_fingerprint() -> dict:
    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "cpu_count": os.cpu_count(),
        "blas": [
            {k: p.get(k) for k in ("internal_api", "version", "num_threads", "threading_layer")}
            for p in threadpool_info() if p.get("user_api") == "blas"
        ],
    }


def _backend_label(method: Method, pt: dict) -> str:
    if method is Method.ODC:
        return "gesdd-batched"
    return svd_backend((pt["a"], pt["c"] * pt["ell"]), pt["ell"])


def time_alignment(method, anchors, repeats: int) -> float:
    """Median wall time of ``repeats`` runs after one untimed warm-up."""
    align(method, anchors, diagnostics=False)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        align(method, anchors, diagnostics=False)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def run_sweep(spec: SweepSpec, threads: int | None = None) -> SweepResult:
    """Time each method at each grid point; rows come out ordered by parameter value."""
    threads = resolve_threads(threads)
    rows, skipped = [], []
    with threadpool_limits(limits=threads):
        effective = _blas_threads()
        for value in spec.values:
            pt = spec.point(value)
            try:
                anchors = sweep_anchors(spec, value)
            except MemoryError:
                skipped.append(SkippedError(f"{spec.free_param}={value}: out of memory generating anchors"))
                continue
            for method in spec.methods:
                try:
                    median = time_alignment(method, anchors, spec.repeats)
                except MemoryError:
                    skipped.append(SkippedError(f"{method.value} at {spec.free_param}={value}: out of memory"))
                    logger.warning("skipped %s at %s=%d (out of memory)", method.value, spec.free_param, value)
                    continue
                rows.append(SweepRow(method.value, spec.free_param, value, median,
                                     spec.repeats, effective, _backend_label(method, pt)))
            del anchors
    metadata = {
        "sweep": spec.to_dict(),
        "thread_cap": threads,
        "threads": effective,
        "host": host_fingerprint(),
        "svd_note": "baselines use exact (non-randomized) truncated SVD; timings are an upper bound "
                    "relative to randomized-SVD baselines",
        "flops_odc_below_baselines": {
            str(v): flops_hierarchy_holds(**spec.point(v)) for v in spec.values
        },
        "skipped": [str(s) for s in skipped],
    }
    return SweepResult(rows=rows, skipped=skipped, metadata=metadata)


def flops_hierarchy_holds(a: int, ell: int, c: int) -> bool | None:
    """Whether the ODC FLOP count is below both baselines; ``None`` when ``a <= l``."""
    if a <= ell:
        return None
    odc = costmodel.flops_odc(a, ell, c).total
    return odc < min(costmodel.flops_imakura(a, ell, c).total, costmodel.flops_kawakami(a, ell, c).total)


def write_sweep(result: SweepResult, out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "sweep.csv"
        with csv_path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for row in result.rows:
                writer.writerow(dataclasses.asdict(row))
        json_path = out_dir / "sweep.json"
        json_path.write_text(json.dumps(result.metadata, indent=2, sort_keys=True))
    except OSError as exc:
        raise IoError(f"cannot write sweep output to {out_dir}: {exc}") from exc
    return csv_path, json_path


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    if x.shape != y.shape or x.size < 3:
        raise FitError("need at least 3 paired points")
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise FitError("all x values are equal")
    slope = float(dx @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, min(1.0, max(0.0, r2))


def ols_loglog(xs, ts) -> FitResult:
    """Fit ``log10(t) = kappa + alpha * log10(x)`` by ordinary least squares."""
    xs = np.asarray(xs, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.float64)
    if np.any(xs <= 0) or np.any(ts <= 0):
        raise FitError("log-log fit needs strictly positive data")
    alpha, kappa, r2 = _ols(np.log10(xs), np.log10(ts))
    return FitResult(alpha=alpha, kappa=kappa, r_squared=r2)


def incremental_latency(cs, ts) -> LinearFit:
    """Fit ``T(c) = b0 + b1 * c``; ``b1`` is seconds per additional user."""
    slope, intercept, r2 = _ols(np.asarray(cs, dtype=np.float64), np.asarray(ts, dtype=np.float64))
    return LinearFit(slope=slope, intercept=intercept, r_squared=r2)
