"""Gaussian-to-Gaussian retargeting and the bounded variate cache.

A Gaussian source is carried to any other Gaussian by a single affine
map, so once a code stream has been dequantized its per-variate cost is
exactly one multiply and one add regardless of the target. This module
computes those coefficients, applies them under op accounting, undoes
operating-point drift by standardizing against the calibration grid
(:func:`compensate`), and buffers finished variates in a bounded FIFO
(:class:`VariateCache`) so production and consumption can proceed on
separate threads.
"""

from __future__ import annotations

import math
import threading
from collections import deque
from dataclasses import dataclass

import numpy as np

from .distributions import GaussianSpec
from .samplers import OpCounter, SeededStream
from .sensor import CalibrationGrid, SampleTrace, dequantize_with_jitter
from .stats import fit_gaussian


class CacheEmpty(Exception):
    """Non-blocking read from an empty (but still open) cache."""


class CacheClosed(Exception):
    """Read from a cache that is closed and fully drained."""


class CoeffsMismatchError(ValueError):
    """Coefficients deliver a different Gaussian than the cache is labeled with."""


@dataclass(frozen=True)
class TransformCoeffs:
    """Affine map y = scale * x + offset between two Gaussians."""

    scale: float
    offset: float

    def __post_init__(self):
        if not (math.isfinite(self.scale) and math.isfinite(self.offset)):
            raise ValueError("transform coefficients must be finite")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


def make_coeffs(src: GaussianSpec, dst: GaussianSpec) -> TransformCoeffs:
    """Coefficients carrying N(src.mean, src.sigma) onto N(dst.mean, dst.sigma).

    scale = dst.sigma / src.sigma and offset = dst.mean - scale * src.mean,
    so scale * src.mean + offset reproduces dst.mean exactly.
    """
    scale = dst.sigma / src.sigma
    return TransformCoeffs(scale=scale, offset=dst.mean - scale * src.mean)


def apply(coeffs: TransformCoeffs, x, counter: OpCounter | None = None):
    """Evaluate the affine map; charges one multiply and one add per value."""
    arr = np.asarray(x, dtype=float)
    out = coeffs.scale * arr + coeffs.offset
    if counter is not None:
        n = arr.size
        counter.multiplications += n
        counter.additions += n
    return out if out.ndim else float(out)


def compensate(
    trace: SampleTrace,
    grid: CalibrationGrid | None = None,
    *,
    stream: SeededStream,
    self_calibrate: bool = False,
) -> np.ndarray:
    """Standardize a trace: dequantize, then map its Gaussian onto N(0, 1).

    The source parameters are taken from the calibration grid at the
    trace's recorded operating point, which is what removes temperature
    and supply drift: two traces captured at different (T, V) standardize
    to the same distribution. With ``self_calibrate=True`` the source
    parameters are instead fit from the dequantized samples themselves,
    allowing grid-free operation at the price of estimation error.

    Jitter uniforms are drawn from ``stream`` and all arithmetic is
    charged to its counter.
    """
    values = dequantize_with_jitter(trace, stream)
    if self_calibrate:
        fit = fit_gaussian(values)
        src = GaussianSpec(fit.mean, fit.sigma)
    else:
        if grid is None:
            raise ValueError("compensate needs a calibration grid or self_calibrate=True")
        mean, sigma = grid.noise_params(trace.temperature_c, trace.voltage_v)
        src = GaussianSpec(mean, sigma)
    coeffs = make_coeffs(src, GaussianSpec(0.0, 1.0))
    return apply(coeffs, values, stream.counter)


class VariateCache:
    """Bounded FIFO of finished variates, one producer and one consumer.

    The cache is labeled with the Gaussian its contents are supposed to
    follow (``requested_spec``); :func:`fill_cache` refuses coefficients
    that would deliver anything else. Writes block while the cache is
    full and reads block while it is empty, so a slow consumer throttles
    the producer instead of growing memory. ``close()`` marks the end of
    production: readers drain what remains and then see CacheClosed.

    Values are stored in chunks internally; occupancy and the high-water
    mark are counted in variates.
    """

    def __init__(self, capacity: int, requested_spec: GaussianSpec):
        capacity = int(capacity)
        if capacity < 1:
            raise ValueError(f"cache capacity must be >= 1, got {capacity}")
        if not isinstance(requested_spec, GaussianSpec):
            raise ValueError("cache must be labeled with a GaussianSpec")
        self.capacity = capacity
        self.requested_spec = requested_spec
        self._chunks: deque = deque()
        self._head = 0  # read offset into the first chunk
        self._count = 0
        self._closed = False
        self._cond = threading.Condition()
        self.high_water = 0
        self.total_produced = 0
        self.total_consumed = 0

    @property
    def occupancy(self) -> int:
        """Variates currently buffered."""
        return self._count

    @property
    def closed(self) -> bool:
        return self._closed

    def put_many(self, values) -> None:
        """Append variates in order, blocking whenever the cache is full."""
        arr = np.asarray(values, dtype=float).ravel()
        offset = 0
        while offset < arr.size:
            with self._cond:
                while self._count >= self.capacity and not self._closed:
                    self._cond.wait()
                if self._closed:
                    raise CacheClosed("cannot put into a closed cache")
                take = min(arr.size - offset, self.capacity - self._count)
                self._chunks.append(arr[offset : offset + take])
                self._count += take
                self.total_produced += take
                self.high_water = max(self.high_water, self._count)
                self._cond.notify_all()
            offset += take

    def put(self, value: float) -> None:
        self.put_many(np.asarray([value], dtype=float))

    def get_many(self, count: int, block: bool = True) -> np.ndarray:
        """Pop up to ``count`` variates in FIFO order.

        Blocks until ``count`` are available (or production closes, in
        which case whatever remains is returned — possibly fewer). With
        ``block=False`` an empty open cache raises CacheEmpty instead of
        waiting. A closed, fully drained cache raises CacheClosed.
        """
        count = int(count)
        if count < 1:
            raise ValueError("count must be >= 1")
        parts = []
        got = 0
        with self._cond:
            while got < count:
                while self._count == 0 and not self._closed:
                    if not block:
                        raise CacheEmpty("cache is empty")
                    self._cond.wait()
                if self._count == 0 and self._closed:
                    if got == 0:
                        raise CacheClosed("cache is closed and drained")
                    break
                chunk = self._chunks[0]
                avail = chunk.size - self._head
                take = min(avail, count - got)
                parts.append(chunk[self._head : self._head + take])
                self._head += take
                if self._head == chunk.size:
                    self._chunks.popleft()
                    self._head = 0
                self._count -= take
                self.total_consumed += take
                got += take
                self._cond.notify_all()
        return np.concatenate(parts) if len(parts) != 1 else np.array(parts[0])

    def get(self, block: bool = True) -> float:
        return float(self.get_many(1, block=block)[0])

    def close(self) -> None:
        """End production; blocked readers wake and drain what remains."""
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def stats(self) -> dict:
        return {
            "capacity": self.capacity,
            "occupancy": self.occupancy,
            "high_water": self.high_water,
            "total_produced": self.total_produced,
            "total_consumed": self.total_consumed,
            "closed": self._closed,
        }


def fill_cache(
    cache: VariateCache,
    values,
    coeffs: TransformCoeffs,
    *,
    counter: OpCounter | None = None,
    background: bool = False,
    chunk_size: int = 8192,
    close_when_done: bool = True,
):
    """Retarget standardized values through ``coeffs`` into ``cache``.

    ``values`` is the N(0, 1) stream from :func:`compensate` (an array,
    or any iterable of arrays). Before anything is produced the
    coefficients are checked against the cache label: coefficients that
    map N(0, 1) to some other Gaussian than ``cache.requested_spec``
    raise CoeffsMismatchError. With ``background=True`` production runs
    on a daemon thread and the started thread is returned, which is the
    producer/consumer arrangement the cache exists for; otherwise the
    cache is filled inline (its capacity must then cover all values, or
    the blocked put would deadlock) and None is returned.
    """
    spec = cache.requested_spec
    want = make_coeffs(GaussianSpec(0.0, 1.0), spec)
    if not (
        math.isclose(coeffs.scale, want.scale, rel_tol=1e-9, abs_tol=1e-9)
        and math.isclose(coeffs.offset, want.offset, rel_tol=1e-9, abs_tol=1e-9)
    ):
        delivered_sigma = coeffs.scale
        delivered_mean = coeffs.offset
        raise CoeffsMismatchError(
            f"coefficients deliver N({delivered_mean}, {delivered_sigma}) into a "
            f"cache labeled N({spec.mean}, {spec.sigma})"
        )
    if isinstance(values, np.ndarray):
        arr = values.ravel()
        pieces = (arr[i : i + chunk_size] for i in range(0, arr.size, chunk_size))
    else:
        pieces = (np.asarray(p, dtype=float).ravel() for p in values)

    def produce():
        try:
            for piece in pieces:
                if piece.size:
                    cache.put_many(apply(coeffs, piece, counter))
        finally:
            if close_when_done:
                cache.close()

    if background:
        worker = threading.Thread(target=produce, name="prva-cache-fill", daemon=True)
        worker.start()
        return worker
    produce()
    return None
