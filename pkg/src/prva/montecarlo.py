"""Monte Carlo integration benchmark over interchangeable variate sources.

The workload integrates a Gaussian density by the trapezoid rule over a
sorted sample of the integrand's own domain: with samples that actually
cover the mass, the area estimate approaches 1 and |1 - area| is the
figure of merit. Because the integrand is cheap, the benchmark isolates
the cost and quality of the variate source itself — a uniform inverter,
the polar Gaussian baseline, or the full sensor pipeline (simulated
acquisition, drift compensation, retargeting, cache drain).

Sources are named by compact strings: ``uniform:<k>`` integrates over
mean +/- k sigma, ``gaussian`` uses the polar baseline matched to the
target, ``prva`` runs the synthetic sensor pipeline, and
``prva:<path>`` replays a captured trace file.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import GaussianSpec, UniformSpec, gaussian_pdf
from .samplers import (
    OpCounter,
    SeededStream,
    derive_seed,
    inversion_sample,
    merge_counters,
    reference_gaussian_sample,
)
from .sensor import (
    AdcModel,
    CalibrationGrid,
    GridRangeError,
    SampleTrace,
    default_adc,
    default_grid,
    generate_trace,
    load_trace,
)
from .stats import confidence_interval_90
from .transform import VariateCache, compensate, fill_cache, make_coeffs


class UnknownSourceError(ValueError):
    """Raised for a source string naming no known generator."""


@dataclass(frozen=True)
class IntegrationResult:
    """One integration run: trapezoid area, its error, and the wall time."""

    area: float
    error: float
    elapsed_s: float
    n: int
    source_label: str = ""

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("integration needs at least 2 samples")
        if self.error != abs(1.0 - self.area):
            raise ValueError("error must equal |1 - area|")
        if not (math.isfinite(self.elapsed_s) and self.elapsed_s >= 0):
            raise ValueError("elapsed time must be non-negative")


def mc_integrate(
    samples,
    target: GaussianSpec,
    *,
    source_label: str = "",
    base_elapsed: float = 0.0,
) -> IntegrationResult:
    """Trapezoid-rule integral of the target density over sorted samples.

    The samples are sorted, the density is evaluated at each, and
    adjacent pairs contribute (x[i] - x[i-1]) * (f[i] + f[i-1]) / 2.
    The result's ``error`` is exactly |1 - area|; density mass outside
    [min(samples), max(samples)] is invisible to the rule and shows up
    as error. ``base_elapsed`` lets a harness fold the sample-production
    time into the reported wall clock.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ValueError(f"integration needs at least 2 samples, got {x.size}")
    t0 = time.perf_counter()
    x = np.sort(x)
    f = gaussian_pdf(x, target)
    area = float(np.sum((x[1:] - x[:-1]) * (f[1:] + f[:-1])) * 0.5)
    elapsed = time.perf_counter() - t0 + base_elapsed
    return IntegrationResult(
        area=area,
        error=abs(1.0 - area),
        elapsed_s=elapsed,
        n=int(x.size),
        source_label=source_label,
    )


@dataclass(frozen=True)
class SourceConfig:
    """Parsed form of a source string."""

    label: str
    kind: str  # "uniform" | "gaussian" | "prva"
    half_width_sigmas: float | None = None
    trace_path: str | None = None


def parse_source(text: str) -> SourceConfig:
    """Parse ``uniform:<k>`` / ``gaussian`` / ``prva`` / ``prva:<path>``."""
    label = text.strip()
    kind, sep, arg = label.partition(":")
    if kind == "uniform":
        if not sep or not arg:
            raise UnknownSourceError(
                f"source {label!r}: uniform needs a half-width multiple, e.g. uniform:10"
            )
        try:
            k = float(arg)
        except ValueError:
            raise UnknownSourceError(
                f"source {label!r}: half-width multiple {arg!r} is not a number"
            ) from None
        if not (math.isfinite(k) and k > 0):
            raise UnknownSourceError(
                f"source {label!r}: half-width multiple must be positive"
            )
        return SourceConfig(label=label, kind="uniform", half_width_sigmas=k)
    if kind == "gaussian":
        if sep:
            raise UnknownSourceError(f"source {label!r}: gaussian takes no argument")
        return SourceConfig(label=label, kind="gaussian")
    if kind == "prva":
        return SourceConfig(label=label, kind="prva", trace_path=arg if sep else None)
    raise UnknownSourceError(f"unknown source {label!r}")


@dataclass(frozen=True)
class SourceResult:
    """Benchmark aggregate for one source across all repetitions."""

    source: str
    kind: str
    n: int
    repetitions: int
    mean_error: float
    error_ci90: tuple | None
    mean_time_s: float
    time_ci90: tuple | None
    ops: OpCounter

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "kind": self.kind,
            "n": self.n,
            "repetitions": self.repetitions,
            "mean_error": self.mean_error,
            "error_ci90": list(self.error_ci90) if self.error_ci90 else None,
            "mean_time_s": self.mean_time_s,
            "time_ci90": list(self.time_ci90) if self.time_ci90 else None,
            "ops": self.ops.as_dict(),
        }


_CSV_COLUMNS = (
    "source",
    "kind",
    "n",
    "repetitions",
    "mean_error",
    "error_ci_lo",
    "error_ci_hi",
    "mean_time_s",
    "time_ci_lo",
    "time_ci_hi",
    "multiplications",
    "additions",
    "divisions",
    "comparisons",
    "transcendental_evals",
    "uniform_draws",
    "rejections",
)


@dataclass(frozen=True)
class BenchmarkReport:
    """Full benchmark output: configuration plus per-source aggregates.

    Error and operation-count fields are bit-reproducible for a given
    configuration (same seed, sources, n, repetitions — on any thread
    count); the *_time_s fields are wall-clock measurements and vary
    from host to host and run to run.
    """

    target: GaussianSpec
    n: int
    repetitions: int
    threads: int
    seed: int
    sources: tuple

    def to_dict(self) -> dict:
        return {
            "target": {"mean": self.target.mean, "sigma": self.target.sigma},
            "n": self.n,
            "repetitions": self.repetitions,
            "threads": self.threads,
            "seed": self.seed,
            "sources": [s.to_dict() for s in self.sources],
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_CSV_COLUMNS)
            for s in self.sources:
                e_lo, e_hi = s.error_ci90 if s.error_ci90 else (None, None)
                t_lo, t_hi = s.time_ci90 if s.time_ci90 else (None, None)
                ops = s.ops.as_dict()
                writer.writerow(
                    [
                        s.source,
                        s.kind,
                        s.n,
                        s.repetitions,
                        repr(s.mean_error),
                        "" if e_lo is None else repr(e_lo),
                        "" if e_hi is None else repr(e_hi),
                        repr(s.mean_time_s),
                        "" if t_lo is None else repr(t_lo),
                        "" if t_hi is None else repr(t_hi),
                        *[ops[k] for k in _CSV_COLUMNS[10:]],
                    ]
                )

    def summary_lines(self) -> list:
        """Per-source text with deterministic fields only (no wall clock)."""
        lines = []
        for s in self.sources:
            lines.append(
                f"{s.source}: mean_error={s.mean_error!r} "
                f"ops={s.ops.total_ops} draws={s.ops.uniform_draws} "
                f"rejections={s.ops.rejections}"
            )
        return lines


def _uniform_rep(stream, cfg: SourceConfig, target: GaussianSpec, n: int):
    k = cfg.half_width_sigmas
    spec = UniformSpec(target.mean - k * target.sigma, target.mean + k * target.sigma)
    t0 = time.perf_counter()
    x = inversion_sample(stream, spec, n)
    gen = time.perf_counter() - t0
    return mc_integrate(x, target, source_label=cfg.label, base_elapsed=gen)


def _gaussian_rep(stream, cfg: SourceConfig, target: GaussianSpec, n: int):
    t0 = time.perf_counter()
    x = reference_gaussian_sample(stream, target, n)
    gen = time.perf_counter() - t0
    return mc_integrate(x, target, source_label=cfg.label, base_elapsed=gen)


def _prva_rep(
    stream,
    cfg: SourceConfig,
    target: GaussianSpec,
    n: int,
    grid: CalibrationGrid,
    adc: AdcModel,
    temperature: float,
    voltage: float,
    replay_trace: SampleTrace | None,
    cache_capacity: int | None,
):
    """One pipeline repetition: acquire/replay, compensate, retarget, drain.

    The pipeline runs to completion into the cache before the timed
    window opens (the accelerator analogue: variates are already waiting
    in the FIFO); the timer then covers the drain plus integration.
    """
    if replay_trace is None:
        trace = generate_trace(stream, grid, temperature, voltage, adc, n)
        values = compensate(trace, grid, stream=stream)
    else:
        trace = replay_trace
        try:
            grid.noise_params(trace.temperature_c, trace.voltage_v)
            values = compensate(trace, grid, stream=stream)
        except GridRangeError:
            values = compensate(trace, stream=stream, self_calibrate=True)
        values = values[:n]
    coeffs = make_coeffs(GaussianSpec(0.0, 1.0), target)
    capacity = n if cache_capacity is None else int(cache_capacity)
    cache = VariateCache(capacity, target)
    worker = fill_cache(
        cache, values, coeffs, counter=stream.counter, background=True
    )
    if capacity >= n:
        worker.join()
    t0 = time.perf_counter()
    samples = cache.get_many(n)
    gen = time.perf_counter() - t0
    worker.join()
    return mc_integrate(samples, target, source_label=cfg.label, base_elapsed=gen)


def run_benchmark(
    sources,
    target: GaussianSpec,
    n: int,
    repetitions: int,
    *,
    threads: int = 1,
    seed: int = 0,
    grid: CalibrationGrid | None = None,
    adc: AdcModel | None = None,
    temperature: float = 10.0,
    voltage: float = 2.6,
    cache_capacity: int | None = None,
) -> BenchmarkReport:
    """Benchmark every source on the same integration workload.

    Each (source, repetition) job runs on its own stream seeded from
    (seed, source index, repetition index), so the numbers a job
    produces are independent of scheduling; jobs are distributed over
    ``threads`` worker threads and reduced in repetition order, which
    keeps every non-timing field of the report identical across thread
    counts. Per-source operation counters are merged over repetitions.
    """
    if n < 2:
        raise ValueError("benchmark needs n >= 2")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    configs = [s if isinstance(s, SourceConfig) else parse_source(s) for s in sources]
    if not configs:
        raise ValueError("no sources given")
    grid = grid if grid is not None else default_grid()
    adc = adc if adc is not None else default_adc(grid, temperature, voltage)
    replays = {}
    for cfg in configs:
        if cfg.kind == "prva" and cfg.trace_path is not None:
            trace = load_trace(cfg.trace_path)
            if len(trace) < n:
                raise ValueError(
                    f"trace {cfg.trace_path!r} holds {len(trace)} codes; "
                    f"benchmark needs {n}"
                )
            replays[cfg.label] = trace

    def job(si: int, ri: int) -> IntegrationResult:
        cfg = configs[si]
        counter = OpCounter()
        stream = SeededStream(derive_seed(seed, si, ri), counter)
        if cfg.kind == "uniform":
            return _uniform_rep(stream, cfg, target, n), counter
        if cfg.kind == "gaussian":
            return _gaussian_rep(stream, cfg, target, n), counter
        return (
            _prva_rep(
                stream,
                cfg,
                target,
                n,
                grid,
                adc,
                temperature,
                voltage,
                replays.get(cfg.label),
                cache_capacity,
            ),
            counter,
        )

    jobs = [(si, ri) for si in range(len(configs)) for ri in range(repetitions)]
    results = {}
    if threads == 1:
        for si, ri in jobs:
            results[(si, ri)] = job(si, ri)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {(si, ri): pool.submit(job, si, ri) for si, ri in jobs}
        for key, fut in futures.items():
            results[key] = fut.result()

    aggregates = []
    for si, cfg in enumerate(configs):
        reps = [results[(si, ri)] for ri in range(repetitions)]
        errors = np.array([r.error for r, _ in reps])
        times = np.array([r.elapsed_s for r, _ in reps])
        ops = merge_counters(c for _, c in reps)
        aggregates.append(
            SourceResult(
                source=cfg.label,
                kind=cfg.kind,
                n=n,
                repetitions=repetitions,
                mean_error=float(errors.mean()),
                error_ci90=confidence_interval_90(errors) if repetitions > 1 else None,
                mean_time_s=float(times.mean()),
                time_ci90=confidence_interval_90(times) if repetitions > 1 else None,
                ops=ops,
            )
        )
    return BenchmarkReport(
        target=target,
        n=n,
        repetitions=repetitions,
        threads=threads,
        seed=seed,
        sources=tuple(aggregates),
    )
