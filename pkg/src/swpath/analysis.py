"""Transmission-curve metrics: peaks, bandwidths, attenuation fits, isolation.

All functions are pure. Curves are dB-valued spectra on strictly increasing
frequency grids; invalid samples (reference underflow) carry NaN and an
accompanying validity mask. Averages over bands are taken in the dB domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TransmissionCurve:
    """Normalized transmission spectrum for one (layout, distance) pair."""

    frequencies: np.ndarray
    s21_db: np.ndarray
    layout_id: str = ""
    distance_m: float = float("nan")
    valid: np.ndarray = field(default=None)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, float)
        self.s21_db = np.asarray(self.s21_db, float)
        if self.frequencies.shape != self.s21_db.shape:
            raise ValueError("frequencies and s21_db must have equal length")
        if len(self.frequencies) and np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if self.valid is None:
            self.valid = np.isfinite(self.s21_db)
        else:
            self.valid = np.asarray(self.valid, bool) & np.isfinite(self.s21_db)

    def value_at(self, f: float) -> float:
        """Linear interpolation of the curve at frequency f."""
        m = self.valid
        return float(np.interp(f, self.frequencies[m], self.s21_db[m]))

    def restricted(self, f_lo: float, f_hi: float) -> "TransmissionCurve":
        m = (self.frequencies >= f_lo) & (self.frequencies <= f_hi)
        if not m.any():
            raise ValueError(f"no samples in [{f_lo}, {f_hi}]")
        return TransmissionCurve(
            self.frequencies[m], self.s21_db[m],
            layout_id=self.layout_id, distance_m=self.distance_m,
            valid=self.valid[m])

    def minus(self, other: "TransmissionCurve", layout_id: str = "") -> "TransmissionCurve":
        """Pointwise dB difference (response relative to a reference curve)."""
        if not np.array_equal(self.frequencies, other.frequencies):
            raise ValueError("curves live on different frequency grids")
        return TransmissionCurve(
            self.frequencies, self.s21_db - other.s21_db,
            layout_id=layout_id or self.layout_id,
            distance_m=self.distance_m,
            valid=self.valid & other.valid)


@dataclass(frozen=True)
class PeakEstimate:
    frequency: float
    level_db: float
    boundary: bool   # peak sits at the curve edge (no interior maximum)


@dataclass(frozen=True)
class Band:
    lo: float
    hi: float
    lo_clamped: bool = False
    hi_clamped: bool = False

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, f: float) -> bool:
        return self.lo <= f <= self.hi


@dataclass(frozen=True)
class AttenuationFit:
    slope_db_per_m: float   # positive = loss per meter
    intercept_db: float
    r_squared: float


@dataclass(frozen=True)
class MetricsReport:
    optimal_frequency: float
    half_power_band: Band
    band_average_s21: float
    attenuation: AttenuationFit | None = None
    isolation_db: float | None = None


def optimal_frequency(curve: TransmissionCurve) -> PeakEstimate:
    """Peak location of the curve; ties break toward lower frequency.

    Interior peaks are refined by parabolic interpolation through the peak
    triplet; a peak on the curve edge is returned as-is with the boundary
    flag set.
    """
    m = curve.valid
    if m.sum() < 3:
        raise ValueError("need at least 3 valid samples")
    f = curve.frequencies[m]
    s = curve.s21_db[m]
    i = int(np.argmax(s))   # argmax returns the first (lowest-f) maximum
    if i == 0 or i == len(s) - 1:
        return PeakEstimate(float(f[i]), float(s[i]), boundary=True)
    y0, y1, y2 = s[i - 1], s[i], s[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0.0:   # flat or degenerate triplet: keep the sample
        return PeakEstimate(float(f[i]), float(s[i]), boundary=False)
    shift = 0.5 * (y0 - y2) / denom
    shift = min(max(shift, -0.5), 0.5)
    df = 0.5 * (f[i + 1] - f[i - 1])
    level = y1 - 0.25 * (y0 - y2) * shift
    return PeakEstimate(float(f[i] + shift * df), float(level), boundary=False)


def half_power_band(curve: TransmissionCurve, drop_db: float = 3.0) -> Band:
    """Outermost crossings of (peak - drop_db), linearly interpolated.

    A side that never crosses is clamped to the curve edge and flagged.
    """
    peak = optimal_frequency(curve)
    m = curve.valid
    f = curve.frequencies[m]
    s = curve.s21_db[m]
    threshold = peak.level_db - drop_db
    above = s >= threshold
    if not above.any():
        raise ValueError("no samples within the half-power window")
    # outermost crossings: scan outward from the extreme above-threshold points
    first = int(np.argmax(above))
    last = len(s) - 1 - int(np.argmax(above[::-1]))
    if first == 0:
        lo, lo_clamped = float(f[0]), True
    else:
        f0, f1 = f[first - 1], f[first]
        s0, s1 = s[first - 1], s[first]
        lo = float(f0 + (threshold - s0) * (f1 - f0) / (s1 - s0))
        lo_clamped = False
    if last == len(s) - 1:
        hi, hi_clamped = float(f[-1]), True
    else:
        f0, f1 = f[last], f[last + 1]
        s0, s1 = s[last], s[last + 1]
        hi = float(f0 + (threshold - s0) * (f1 - f0) / (s1 - s0))
        hi_clamped = False
    return Band(lo, hi, lo_clamped, hi_clamped)


def attenuation_fit(curves: list[TransmissionCurve], f: float) -> AttenuationFit:
    """Least-squares line of s21(f) against distance; slope reported as loss.

    Flat (zero-variance) data fits exactly, so its R-squared is defined
    to be 1.
    """
    if len(curves) < 3:
        raise ValueError("need at least 3 curves at distinct distances")
    d = np.array([c.distance_m for c in curves])
    if len(np.unique(d)) < 3:
        raise ValueError("need at least 3 distinct distances")
    if np.any(~np.isfinite(d)):
        raise ValueError("every curve needs a finite distance")
    s = np.array([c.value_at(f) for c in curves])
    slope, intercept = np.polyfit(d, s, 1)
    resid = s - (slope * d + intercept)
    var = float(np.sum((s - s.mean()) ** 2))
    r2 = 1.0 if var == 0.0 else 1.0 - float(np.sum(resid ** 2)) / var
    return AttenuationFit(slope_db_per_m=float(-slope), intercept_db=float(intercept),
                          r_squared=r2)


def isolation(in_path_db: float, out_path_db: float) -> float:
    """Level difference between the desired and undesired pathways."""
    if not (math.isfinite(in_path_db) and math.isfinite(out_path_db)):
        raise ValueError("isolation needs finite levels")
    return in_path_db - out_path_db


def band_average_s21(curve: TransmissionCurve, band: Band) -> float:
    """Arithmetic mean of the dB samples inside the band (dB-domain average)."""
    m = curve.valid & (curve.frequencies >= band.lo) & (curve.frequencies <= band.hi)
    if not m.any():
        raise ValueError(f"band [{band.lo}, {band.hi}] contains no valid samples")
    return float(np.mean(curve.s21_db[m]))


def band_power_centroid(curve: TransmissionCurve, f_lo: float, f_hi: float) -> float:
    """Power-weighted mean frequency over [f_lo, f_hi].

    A ripple-robust stand-in for the peak location of strongly interfering
    spectra: linear powers weight each frequency sample.
    """
    m = curve.valid & (curve.frequencies >= f_lo) & (curve.frequencies <= f_hi)
    if not m.any():
        raise ValueError(f"no valid samples in [{f_lo}, {f_hi}]")
    p = 10.0 ** (curve.s21_db[m] / 10.0)
    return float(np.sum(curve.frequencies[m] * p) / np.sum(p))


def onset_frequency(curve: TransmissionCurve, *, rise_db: float = 10.0,
                    quiet_hi: float = 22.5e9, sustain: int = 3) -> float | None:
    """First frequency where the curve rises ``rise_db`` above its quiet floor.

    The floor is the median level below ``quiet_hi``; the crossing must hold
    for ``sustain`` consecutive samples. Returns None when no onset exists.
    """
    m = curve.valid
    f = curve.frequencies[m]
    s = curve.s21_db[m]
    quiet = s[f <= quiet_hi]
    if len(quiet) == 0:
        raise ValueError("no samples below the quiet-band limit")
    floor = float(np.median(quiet))
    above = s >= floor + rise_db
    run = 0
    for i, flag in enumerate(above):
        run = run + 1 if flag else 0
        if run >= sustain:
            return float(f[i - sustain + 1])
    return None
