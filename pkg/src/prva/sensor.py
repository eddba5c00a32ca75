"""Simulated noise-sensor front end: ADC, calibration grid, trace files.

The physical source being modeled is a noisy analog channel read through
an ADC: raw noise is Gaussian with slowly drifting parameters, and what
software ever sees is the stream of quantized integer codes plus the
operating point (die temperature, supply voltage) it was captured at.
This module simulates that acquisition, maps operating points to noise
parameters through a calibration grid, and round-trips captured traces
and calibration tables through plain text files.

Trace file format
-----------------
A trace file is a key=value header, one blank line, then one decimal
code per line::

    bins=4096
    range_lo=951.2
    range_hi=1010.3
    temperature_c=10.0
    voltage_v=2.6
    sample_rate_hz=1154.0
    source=synthetic

    2048
    2051
    ...

All seven header fields are required, none may repeat, and every code
must lie in ``[0, bins)``. Calibration tables are CSV with the exact
header ``temperature_c,voltage_v,mean,sigma`` and one row per grid cell.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import GaussianSpec
from .samplers import SeededStream, reference_gaussian_sample

DEFAULT_SAMPLE_RATE_HZ = 1154.0

_TRACE_FIELDS = (
    "bins",
    "range_lo",
    "range_hi",
    "temperature_c",
    "voltage_v",
    "sample_rate_hz",
    "source",
)

_CALIBRATION_HEADER = ("temperature_c", "voltage_v", "mean", "sigma")


def _lerp(a: float, b: float, w: float) -> float:
    return a + w * (b - a)


def _locate(axis, x: float):
    """Cell index and weight along one grid axis.

    Points that coincide with an axis node get weight 0 in the cell to
    their right — except the topmost node, which has no right cell and
    is reported as (last index, None), meaning "no interpolation on this
    axis". This keeps every node evaluation exact.
    """
    if x == axis[-1]:
        return len(axis) - 1, None
    i = int(np.searchsorted(axis, x, side="right")) - 1
    i = max(0, min(i, len(axis) - 2))
    return i, (x - axis[i]) / (axis[i + 1] - axis[i])


class GridRangeError(ValueError):
    """Raised when an operating point falls outside the calibration grid."""


class CalibrationFormatError(ValueError):
    """Raised for malformed or incomplete calibration CSV data."""


class TraceHeaderError(ValueError):
    """Raised for missing, repeated, unknown, or unparseable header fields."""


class TraceCodeError(ValueError):
    """Raised when a trace body contains a code outside [0, bins)."""


class TraceBodyError(ValueError):
    """Raised when a trace body is empty or contains an unparseable line."""


@dataclass(frozen=True)
class AdcModel:
    """Uniform quantizer: ``bin_count`` equal bins spanning [range_lo, range_hi].

    Quantization floors into bins and saturates: inputs at or beyond the
    range edges land in the first or last bin rather than erroring, the
    way a real converter clips. ``value`` maps codes back to bin centers.
    """

    bin_count: int
    range_lo: float
    range_hi: float

    def __post_init__(self):
        if int(self.bin_count) != self.bin_count or self.bin_count < 2:
            raise ValueError(f"bin_count must be an integer >= 2, got {self.bin_count}")
        if not (math.isfinite(self.range_lo) and math.isfinite(self.range_hi)):
            raise ValueError("ADC range bounds must be finite")
        if not self.range_lo < self.range_hi:
            raise ValueError(
                f"ADC range requires range_lo < range_hi, got "
                f"[{self.range_lo}, {self.range_hi}]"
            )

    @property
    def width(self) -> float:
        """Width of one code bin."""
        return (self.range_hi - self.range_lo) / self.bin_count

    def quantize(self, values):
        """Map real values to integer codes, saturating out-of-range inputs."""
        x = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("cannot quantize non-finite values")
        idx = np.floor((x - self.range_lo) / self.width).astype(np.int64)
        idx = np.clip(idx, 0, self.bin_count - 1)
        return idx if idx.ndim else int(idx)

    def value(self, codes):
        """Bin-center value of each code."""
        c = np.asarray(codes)
        if not np.issubdtype(c.dtype, np.integer):
            raise ValueError("codes must be integers")
        if np.any(c < 0) or np.any(c >= self.bin_count):
            raise ValueError(f"codes must lie in [0, {self.bin_count})")
        out = self.range_lo + (c.astype(float) + 0.5) * self.width
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class CalibrationGrid:
    """Noise parameters (mean, sigma) tabulated over temperature x voltage.

    Axes may be given in either strictly monotone direction (acquisition
    sweeps typically run hot-to-cold); they are stored ascending with the
    cell matrices reordered to match. ``means`` and ``sigmas`` are indexed
    ``[temperature_index, voltage_index]``.
    """

    temperatures: tuple
    voltages: tuple
    means: np.ndarray = field(repr=False)
    sigmas: np.ndarray = field(repr=False)

    def __post_init__(self):
        temps = np.asarray(self.temperatures, dtype=float)
        volts = np.asarray(self.voltages, dtype=float)
        means = np.array(self.means, dtype=float)
        sigmas = np.array(self.sigmas, dtype=float)
        for name, ax in (("temperature", temps), ("voltage", volts)):
            if ax.size < 2:
                raise ValueError(f"{name} axis needs at least two points")
            d = np.diff(ax)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise ValueError(f"{name} axis must be strictly monotone")
        if temps[0] > temps[-1]:
            temps = temps[::-1]
            means = means[::-1, :]
            sigmas = sigmas[::-1, :]
        if volts[0] > volts[-1]:
            volts = volts[::-1]
            means = means[:, ::-1]
            sigmas = sigmas[:, ::-1]
        if means.shape != (temps.size, volts.size) or sigmas.shape != means.shape:
            raise ValueError(
                f"cell matrices must have shape {(temps.size, volts.size)}, "
                f"got {means.shape} and {sigmas.shape}"
            )
        if not np.all(np.isfinite(means)) or not np.all(np.isfinite(sigmas)):
            raise ValueError("grid cells must be finite")
        if np.any(sigmas <= 0):
            raise ValueError("grid sigmas must all be positive")
        means.setflags(write=False)
        sigmas.setflags(write=False)
        object.__setattr__(self, "temperatures", tuple(float(t) for t in temps))
        object.__setattr__(self, "voltages", tuple(float(v) for v in volts))
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sigmas", sigmas)

    def _cell_interp(self, ti: int, vi: int, temperature: float, voltage: float):
        """Bilinear blend inside cell (ti, vi), as composed lerps.

        The a + w*(b-a) form is exact at w = 0 and exact whenever the
        endpoints coincide, so grid nodes reproduce their cell values bit
        for bit and a constant grid interpolates to the constant.
        """
        t0, t1 = self.temperatures[ti], self.temperatures[ti + 1]
        v0, v1 = self.voltages[vi], self.voltages[vi + 1]
        wt = (temperature - t0) / (t1 - t0)
        wv = (voltage - v0) / (v1 - v0)
        out = []
        for cells in (self.means, self.sigmas):
            lo = _lerp(cells[ti, vi], cells[ti, vi + 1], wv)
            hi = _lerp(cells[ti + 1, vi], cells[ti + 1, vi + 1], wv)
            out.append(_lerp(lo, hi, wt))
        return float(out[0]), float(out[1])

    def noise_params(self, temperature: float, voltage: float):
        """Interpolated (mean, sigma) at an in-grid operating point.

        Bilinear within the enclosing cell, exact at grid nodes, and
        continuous across cell boundaries. Operating points outside the
        grid raise GridRangeError naming the offending axis.
        """
        temps, volts = self.temperatures, self.voltages
        if not temps[0] <= temperature <= temps[-1]:
            raise GridRangeError(
                f"temperature {temperature} outside calibration range "
                f"[{temps[0]}, {temps[-1]}]"
            )
        if not volts[0] <= voltage <= volts[-1]:
            raise GridRangeError(
                f"voltage {voltage} outside calibration range "
                f"[{volts[0]}, {volts[-1]}]"
            )
        ti, wt = _locate(temps, temperature)
        vi, wv = _locate(volts, voltage)
        out = []
        for cells in (self.means, self.sigmas):
            if wt is None and wv is None:
                out.append(cells[ti, vi])
            elif wt is None:
                out.append(_lerp(cells[ti, vi], cells[ti, vi + 1], wv))
            elif wv is None:
                out.append(_lerp(cells[ti, vi], cells[ti + 1, vi], wt))
            else:
                lo = _lerp(cells[ti, vi], cells[ti, vi + 1], wv)
                hi = _lerp(cells[ti + 1, vi], cells[ti + 1, vi + 1], wv)
                out.append(_lerp(lo, hi, wt))
        return float(out[0]), float(out[1])


def default_grid() -> CalibrationGrid:
    """Synthetic calibration surface used when no measured table is loaded.

    Affine trends anchored at (980.794, 7.178) for the (20 C, 3.0 V)
    operating point, with slopes chosen so that, along every grid line,
    mean and sigma strictly decrease with temperature, mean strictly
    increases with supply voltage, and sigma strictly decreases with it.
    Small fixed-seed per-node offsets keep the surface from being exactly
    planar (so bilinear structure is exercised) while staying well below
    the node-to-node steps, which preserves the strict trends. The anchor
    node itself is left offset-free.
    """
    temps = np.arange(25.0, -5.0 - 2.5, -5.0)  # 25 C down to -5 C
    volts = np.round(np.arange(3.6, 1.4 - 0.1, -0.2), 10)  # 3.6 V down to 1.4 V
    tt = temps[:, None]
    vv = volts[None, :]
    means = 980.794 + 0.12 * (20.0 - tt) + 0.8 * (vv - 3.0)
    sigmas = 7.178 + 0.03 * (20.0 - tt) + 0.25 * (3.0 - vv)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(1297032)))
    means = means + rng.uniform(-0.05, 0.05, size=means.shape)
    sigmas = sigmas + rng.uniform(-0.02, 0.02, size=sigmas.shape)
    anchor = (int(np.where(temps == 20.0)[0][0]), int(np.where(volts == 3.0)[0][0]))
    means[anchor] = 980.794
    sigmas[anchor] = 7.178
    return CalibrationGrid(tuple(temps), tuple(volts), means, sigmas)


def default_adc(
    grid: CalibrationGrid,
    temperature: float = 10.0,
    voltage: float = 2.6,
    bits: int = 12,
    span_sigmas: float = 4.0,
) -> AdcModel:
    """ADC sized for an operating point: 2**bits bins over mean +/- span_sigmas."""
    mean, sigma = grid.noise_params(temperature, voltage)
    half = span_sigmas * sigma
    return AdcModel(2**bits, mean - half, mean + half)


@dataclass(frozen=True)
class SampleTrace:
    """A captured code stream plus the acquisition context it needs replayed.

    ``codes`` is the raw integer ADC output; the remaining fields record
    the converter geometry and operating point, which is exactly the
    header of the on-disk format.
    """

    codes: np.ndarray
    adc: AdcModel
    temperature_c: float
    voltage_v: float
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    source: str = "synthetic"

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if not np.issubdtype(codes.dtype, np.integer):
            raise ValueError("trace codes must be integers")
        if codes.size == 0:
            raise ValueError("trace must contain at least one code")
        if np.any(codes < 0) or np.any(codes >= self.adc.bin_count):
            raise ValueError(f"trace codes must lie in [0, {self.adc.bin_count})")
        if not (math.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise ValueError("sample_rate_hz must be positive")
        codes = codes.astype(np.int64, copy=True)
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)

    def __len__(self) -> int:
        return int(self.codes.size)


def generate_trace(
    stream: SeededStream,
    grid: CalibrationGrid,
    temperature: float,
    voltage: float,
    adc: AdcModel,
    n: int,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    source: str = "synthetic",
) -> SampleTrace:
    """Simulate an acquisition: Gaussian noise at the operating point, quantized.

    The noise parameters come from the calibration grid at (temperature,
    voltage); the raw stream is produced by the package's reference
    Gaussian generator on ``stream`` and pushed through ``adc``.
    """
    if n < 1:
        raise ValueError("trace length must be at least 1")
    mean, sigma = grid.noise_params(temperature, voltage)
    raw = reference_gaussian_sample(stream, GaussianSpec(mean, sigma), n)
    return SampleTrace(
        codes=adc.quantize(raw),
        adc=adc,
        temperature_c=float(temperature),
        voltage_v=float(voltage),
        sample_rate_hz=float(sample_rate_hz),
        source=source,
    )


def dequantize_with_jitter(trace: SampleTrace, stream: SeededStream) -> np.ndarray:
    """Reconstruct real values from codes: bin center plus uniform bin jitter.

    Each code c becomes ``value(c) + u * width/2`` with u ~ U[-1, 1), so
    every reconstructed sample stays inside its own bin and the staircase
    of the quantizer is smoothed instead of echoed. One uniform is drawn
    per code; the affine jitter map charges two multiplies and two adds
    per sample to the stream's counter.
    """
    centers = trace.adc.value(trace.codes)
    n = trace.codes.size
    u = stream.uniforms(n)
    half = trace.adc.width / 2.0
    out = centers + (2.0 * u - 1.0) * half
    stream.counter.multiplications += 2 * n
    stream.counter.additions += 2 * n
    return out


def store_trace(trace: SampleTrace, path) -> None:
    """Write a trace in the key=value header + one-code-per-line format."""
    lines = [
        f"bins={int(trace.adc.bin_count)}",
        f"range_lo={float(trace.adc.range_lo)!r}",
        f"range_hi={float(trace.adc.range_hi)!r}",
        f"temperature_c={float(trace.temperature_c)!r}",
        f"voltage_v={float(trace.voltage_v)!r}",
        f"sample_rate_hz={float(trace.sample_rate_hz)!r}",
        f"source={trace.source}",
        "",
    ]
    lines.extend(str(int(c)) for c in trace.codes)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_trace(path) -> SampleTrace:
    """Parse a trace file, distinguishing header, code-range, and body faults.

    Header problems (missing/unknown/duplicate fields, unparseable values,
    inconsistent ADC geometry) raise TraceHeaderError; codes outside
    [0, bins) raise TraceCodeError; an empty body or a line that is not a
    decimal integer raises TraceBodyError.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    header: dict[str, str] = {}
    body_start = None
    for i, line in enumerate(lines):
        if line.strip() == "":
            body_start = i + 1
            break
        if "=" not in line:
            raise TraceHeaderError(f"header line {i + 1} is not key=value: {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _TRACE_FIELDS:
            raise TraceHeaderError(f"unknown header field {key!r}")
        if key in header:
            raise TraceHeaderError(f"duplicate header field {key!r}")
        header[key] = value
    missing = [k for k in _TRACE_FIELDS if k not in header]
    if missing:
        raise TraceHeaderError(f"missing header field(s): {', '.join(missing)}")
    try:
        bins = int(header["bins"])
        range_lo = float(header["range_lo"])
        range_hi = float(header["range_hi"])
        temperature = float(header["temperature_c"])
        voltage = float(header["voltage_v"])
        rate = float(header["sample_rate_hz"])
    except ValueError as exc:
        raise TraceHeaderError(f"unparseable header value: {exc}") from exc
    try:
        adc = AdcModel(bins, range_lo, range_hi)
    except ValueError as exc:
        raise TraceHeaderError(str(exc)) from exc

    body = [] if body_start is None else lines[body_start:]
    codes = []
    for j, line in enumerate(body):
        stripped = line.strip()
        if stripped == "" and j == len(body) - 1:
            continue  # trailing newline artifact, not a sample
        try:
            code = int(stripped)
        except ValueError as exc:
            raise TraceBodyError(
                f"unparseable sample line {body_start + j + 1}: {line!r}"
            ) from exc
        if not 0 <= code < bins:
            raise TraceCodeError(
                f"code {code} at line {body_start + j + 1} outside [0, {bins})"
            )
        codes.append(code)
    if not codes:
        raise TraceBodyError("trace body contains no samples")
    return SampleTrace(
        codes=np.asarray(codes, dtype=np.int64),
        adc=adc,
        temperature_c=temperature,
        voltage_v=voltage,
        sample_rate_hz=rate,
        source=header["source"],
    )


def store_calibration(grid: CalibrationGrid, path) -> None:
    """Write a calibration grid as CSV, one row per cell, axes ascending."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CALIBRATION_HEADER)
        for ti, t in enumerate(grid.temperatures):
            for vi, v in enumerate(grid.voltages):
                writer.writerow(
                    [
                        repr(float(t)),
                        repr(float(v)),
                        repr(float(grid.means[ti, vi])),
                        repr(float(grid.sigmas[ti, vi])),
                    ]
                )


def load_calibration(path) -> CalibrationGrid:
    """Parse a calibration CSV into a grid.

    The header must be exactly ``temperature_c,voltage_v,mean,sigma``,
    every row must parse as four floats, no cell may repeat, and the
    cells must tile the full temperature x voltage rectangle; any
    violation raises CalibrationFormatError.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]  # ignore blank lines
    if not rows or tuple(s.strip() for s in rows[0]) != _CALIBRATION_HEADER:
        raise CalibrationFormatError(
            f"calibration header must be {','.join(_CALIBRATION_HEADER)!r}"
        )
    cells: dict[tuple, tuple] = {}
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise CalibrationFormatError(f"row {i} must have 4 fields, got {len(row)}")
        try:
            t, v, m, s = (float(x) for x in row)
        except ValueError as exc:
            raise CalibrationFormatError(f"row {i} is not numeric: {row!r}") from exc
        if (t, v) in cells:
            raise CalibrationFormatError(f"duplicate cell ({t}, {v}) at row {i}")
        cells[(t, v)] = (m, s)
    if not cells:
        raise CalibrationFormatError("calibration table has no rows")
    temps = sorted({t for t, _ in cells})
    volts = sorted({v for _, v in cells})
    means = np.empty((len(temps), len(volts)))
    sigmas = np.empty_like(means)
    for ti, t in enumerate(temps):
        for vi, v in enumerate(volts):
            if (t, v) not in cells:
                raise CalibrationFormatError(f"incomplete grid: missing cell ({t}, {v})")
            means[ti, vi], sigmas[ti, vi] = cells[(t, v)]
    try:
        return CalibrationGrid(tuple(temps), tuple(volts), means, sigmas)
    except ValueError as exc:
        raise CalibrationFormatError(str(exc)) from exc
