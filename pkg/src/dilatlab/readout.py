"""Measurement records and Fourier extraction of Bohr frequencies.

Any observable recorded along a trajectory is a discrete sum of
oscillations exp(i (E_v - E_v') t) weighted by c_v* c_v' <v|O|v'>, so its
spectrum has peaks at the Bohr frequencies |E_v - E_v'| only. The records
are exact expectation values (no shot noise).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import signal

from .evolve import EigenSolution, Trajectory
from .export import dump_json
from .model import WaveFunction

__all__ = [
    "Observable",
    "MeasurementRecord",
    "Peak",
    "SpectrumEstimate",
    "PeakMatch",
    "MatchReport",
    "record",
    "extract_spectrum",
    "match_peaks",
    "write_spectrum_csv",
    "write_peaks_json",
]

MIN_SAMPLES = 64


@dataclass(frozen=True)
class Observable:
    """What to measure on each sample.

    kind: "density" (probability in the grid cell nearest ``point``),
    "position" (<q> along ``axis``) or "autocorrelation" (<psi(0)|psi(t)>).
    """

    kind: str
    point: Optional[tuple] = None
    axis: int = 0

    def __post_init__(self):
        if self.kind not in ("density", "position", "autocorrelation"):
            raise ValueError(f"unknown observable kind {self.kind!r}")
        if self.kind == "density" and self.point is None:
            raise ValueError("density observable needs a probe point")

    @property
    def id(self) -> str:
        if self.kind == "density":
            return "density@" + ",".join(f"{q:g}" for q in self.point)
        if self.kind == "position":
            return f"position[{self.axis}]"
        return "autocorrelation"

    def evaluator(self, grid, psi0: WaveFunction):
        if self.kind == "density":
            idx = grid.nearest_index(self.point)
            return lambda wf: float(abs(wf.psi[idx]) ** 2 * grid.dV)
        if self.kind == "position":
            if not 0 <= self.axis < grid.ndim:
                raise ValueError(f"axis {self.axis} out of range for a {grid.ndim}-axis grid")
            return lambda wf: float(wf.expect_position()[self.axis])
        return lambda wf: psi0.inner(wf)


@dataclass
class MeasurementRecord:
    times: np.ndarray
    values: np.ndarray
    observable: str

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def duration(self) -> float:
        """Length covered by the FFT window, n * dt."""
        return len(self.times) * self.dt


def record(traj: Trajectory, observable: Observable) -> MeasurementRecord:
    """Evaluate ``observable`` on every retained state of ``traj``."""
    if not traj.states:
        raise ValueError("trajectory has no retained states")
    if len(traj.times) > 2:
        steps = np.diff(traj.times)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
            raise ValueError("trajectory samples are not uniformly spaced")
    grid = traj.states[0].grid
    fn = observable.evaluator(grid, traj.states[0])
    vals = np.array([fn(wf) for wf in traj.states])
    if observable.kind != "autocorrelation":
        vals = vals.real.astype(float)
    return MeasurementRecord(np.asarray(traj.times, dtype=float), vals, observable.id)


@dataclass(frozen=True)
class Peak:
    omega: float
    amplitude: float
    width: float


@dataclass
class SpectrumEstimate:
    omega: np.ndarray
    power: np.ndarray
    peaks: List[Peak]
    window: str
    resolution: float
    signal_energy: float = 0.0

    @property
    def peak_frequencies(self) -> np.ndarray:
        return np.array([p.omega for p in self.peaks])


def extract_spectrum(
    rec: MeasurementRecord,
    window: str = "hann",
    threshold: float = 5.0,
    min_relative: float = 1e-2,
) -> SpectrumEstimate:
    """Windowed power spectrum of a record and its peaks.

    A bin is a peak if it is a local maximum whose power exceeds both
    ``threshold`` times the median power and ``min_relative`` times the
    largest power. Real records give a one-sided spectrum (omega >= 0)
    whose bins sum to the windowed-signal energy; complex records give the
    full two-sided spectrum.
    """
    x = np.asarray(rec.values)
    n = x.size
    if n < MIN_SAMPLES:
        raise ValueError(f"record has {n} samples; at least {MIN_SAMPLES} required")
    if window in ("hann", "hanning"):
        w = np.hanning(n)
    elif window in ("none", "rect", "rectangular", None):
        w = np.ones(n)
        window = "none"
    else:
        raise ValueError(f"unknown window {window!r}")
    dt = rec.dt
    scale = float(np.max(np.abs(x))) if n else 0.0
    xw = (x - x.mean()) * w
    energy = float(np.sum(np.abs(xw) ** 2))

    if np.iscomplexobj(x):
        X = np.fft.fftshift(np.fft.fft(xw))
        omega = np.fft.fftshift(2 * np.pi * np.fft.fftfreq(n, dt))
        power = np.abs(X) ** 2 / n
    else:
        X = np.fft.rfft(xw)
        omega = 2 * np.pi * np.fft.rfftfreq(n, dt)
        power = np.abs(X) ** 2 / n
        last = -1 if n % 2 == 0 else None
        power[1:last] *= 2.0

    floor = (1e-10 * scale) ** 2 * n
    height = max(threshold * float(np.median(power)), min_relative * float(power.max()), floor)
    peaks: List[Peak] = []
    if power.max() > floor:
        idx, _ = signal.find_peaks(power, height=height)
        if idx.size:
            widths = signal.peak_widths(power, idx, rel_height=0.5)[0] * (omega[1] - omega[0])
            peaks = [Peak(float(omega[i]), float(power[i]), float(wd)) for i, wd in zip(idx, widths)]
    return SpectrumEstimate(
        omega=omega,
        power=power,
        peaks=sorted(peaks, key=lambda p: p.omega),
        window=window,
        resolution=2 * math.pi / (n * dt),
        signal_energy=energy,
    )


@dataclass(frozen=True)
class PeakMatch:
    omega: float
    amplitude: float
    matched_bohr: float
    residual: float
    matched: bool


@dataclass
class MatchReport:
    matches: List[PeakMatch]
    scale: float
    tol: float

    @property
    def n_peaks(self) -> int:
        return len(self.matches)

    @property
    def matched_fraction(self) -> float:
        if not self.matches:
            return 1.0
        return sum(m.matched for m in self.matches) / len(self.matches)

    @property
    def max_residual(self) -> float:
        return max((m.residual for m in self.matches), default=0.0)

    @property
    def unmatched(self) -> List[PeakMatch]:
        return [m for m in self.matches if not m.matched]


def match_peaks(
    spectrum: SpectrumEstimate,
    eig: EigenSolution | Sequence[float],
    tol: float,
    scale: float = 1.0,
    against: str = "bohr",
) -> MatchReport:
    """Assign each peak (divided by ``scale``) to the nearest reference line.

    ``against="bohr"`` compares |omega| with eigenvalue differences; use
    ``"levels"`` for autocorrelation records whose lines sit at -E_v.
    Pass ``scale=lam`` to compare a simulator record with electron-gas
    eigenvalues.
    """
    if tol < spectrum.resolution / scale * (1 - 1e-12):
        raise ValueError(f"tol {tol:g} is below the scaled resolution {spectrum.resolution / scale:g}")
    values = np.asarray(eig.values if isinstance(eig, EigenSolution) else eig, dtype=float)
    if against == "bohr":
        ref = np.abs(values[:, None] - values[None, :])[np.triu_indices(len(values), k=1)]
        ref = np.unique(ref)
    elif against == "levels":
        ref = np.sort(values)
    else:
        raise ValueError(f"unknown reference set {against!r}")
    out = []
    for p in spectrum.peaks:
        w = abs(p.omega) / scale if against == "bohr" else -p.omega / scale
        if ref.size == 0:
            out.append(PeakMatch(p.omega, p.amplitude, float("nan"), float("inf"), False))
            continue
        j = int(np.argmin(np.abs(ref - w)))
        res = float(abs(ref[j] - w))
        out.append(PeakMatch(p.omega, p.amplitude, float(ref[j]), res, res <= tol))
    return MatchReport(out, scale, tol)


def write_spectrum_csv(path, spectrum: SpectrumEstimate) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "power"])
        for om, pw in zip(spectrum.omega, spectrum.power):
            w.writerow([f"{om:.17g}", f"{pw:.17g}"])


def write_peaks_json(path, spectrum: SpectrumEstimate, report: Optional[MatchReport] = None) -> None:
    """List of {omega, amplitude, matched_bohr, residual}; the last two are null without a report."""
    if report is not None:
        rows = [
            {"omega": m.omega, "amplitude": m.amplitude, "matched_bohr": m.matched_bohr, "residual": m.residual}
            for m in report.matches
        ]
    else:
        rows = [
            {"omega": p.omega, "amplitude": p.amplitude, "matched_bohr": None, "residual": None}
            for p in spectrum.peaks
        ]
    with open(path, "w") as fh:
        fh.write(dump_json({"resolution": spectrum.resolution, "window": spectrum.window, "peaks": rows}))
