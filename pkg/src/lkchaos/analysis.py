"""Time-series metrics: delay-signature ACF peak, permutation entropy,
Welch spectrum with 80% bandwidth, and distribution statistics.

The ACF convention is the per-lag normalized estimator

    C(k) = < (x_i - m_a)(x_{i+k} - m_b) > / (s_a * s_b)

where m_a, s_a are mean/std of the leading segment x[0:n-k] and m_b, s_b
of the trailing segment x[k:n].  It is computed with an FFT but matches
the direct sum exactly (same formula, different bracketing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as _signal

WELCH_NPERSEG = 16384
TDS_HALF_WINDOW_S = 2e-9
PE_ORDER_DEFAULT = 4


class InsufficientDataError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


class AnalysisError(RuntimeError):
    """Wraps a metric failure inside analyze_all with the metric name."""


@dataclass(frozen=True)
class TimeSeries:
    samples: np.ndarray
    dt_sample: float

    def __post_init__(self):
        object.__setattr__(self, "samples",
                           np.asarray(self.samples, dtype=np.float64))
        if self.dt_sample <= 0:
            raise ValueError("dt_sample must be > 0")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def span(self) -> float:
        return self.n * self.dt_sample


@dataclass(frozen=True)
class AcfCurve:
    lags: np.ndarray   # seconds, uniform grid starting at 0
    c: np.ndarray

    def __post_init__(self):
        if self.c.shape != self.lags.shape:
            raise ValueError("lags and c must have matching shape")
        if abs(self.c[0] - 1.0) != 0.0:
            raise ValueError("C(0) must be exactly 1")
        if np.max(np.abs(self.c)) > 1.0 + 1e-9:
            raise ValueError("|C| exceeds 1 + 1e-9")

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.lags, self.c]),
                   delimiter=",", header="lag_s,acf", comments="")


@dataclass(frozen=True)
class PowerSpectrum:
    freq: np.ndarray   # Hz, one-sided
    psd: np.ndarray    # units^2 / Hz
    rbw: float         # resolution bandwidth, Hz

    def __post_init__(self):
        if np.any(self.psd < 0):
            raise ValueError("PSD must be >= 0")

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.freq, self.psd]),
                   delimiter=",", header="freq_hz,psd", comments="")


@dataclass(frozen=True)
class AnalysisReport:
    cp: float
    peak_lag_s: float
    h: float
    bw80_hz: float
    skewness: float
    histogram: dict
    provenance: dict | None = None

    def __post_init__(self):
        if not (0.0 <= self.cp <= 1.0):
            raise ValueError("C_p out of [0, 1]")
        if not (0.0 <= self.h <= 1.0):
            raise ValueError("H out of [0, 1]")

    def to_dict(self) -> dict:
        d = {"cp": self.cp, "peak_lag_s": self.peak_lag_s, "h": self.h,
             "bw80_hz": self.bw80_hz, "skewness": self.skewness,
             "histogram": self.histogram}
        if self.provenance is not None:
            d["provenance"] = self.provenance
        return d


def acf(x: TimeSeries, max_lag: float) -> AcfCurve:
    """Normalized autocorrelation on lags 0..max_lag.

    Per-lag segment means and standard deviations (not the global ones)
    enter the normalization; prefix sums supply them for every lag at
    once and a zero-padded FFT supplies the raw lagged products, so the
    result equals the direct O(n^2) sum to roundoff.
    """
    v = x.samples
    n = v.shape[0]
    if n < 2:
        raise InsufficientDataError("need at least 2 samples")
    k_max = int(round(max_lag / x.dt_sample))
    if not 0 <= max_lag < 0.5 * x.span:
        raise ValueError("max_lag must be < half the record span")
    mu = float(v.mean())
    y = v - mu
    if not np.any(y):
        raise DegenerateInputError("constant input has zero variance")

    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    fy = np.fft.rfft(y, nfft)
    ryy = np.fft.irfft(fy * np.conj(fy), nfft)[:k_max + 1]

    cs1 = np.concatenate([[0.0], np.cumsum(y)])        # sum of y[0:i]
    cs2 = np.concatenate([[0.0], np.cumsum(y * y)])
    k = np.arange(k_max + 1)
    m = n - k                                          # samples per lag
    s1a = cs1[m]                 # leading segment y[0:n-k]
    s1b = cs1[n] - cs1[k]        # trailing segment y[k:n]
    s2a = cs2[m]
    s2b = cs2[n] - cs2[k]
    var_a = s2a / m - (s1a / m) ** 2
    var_b = s2b / m - (s1b / m) ** 2
    denom = m * np.sqrt(np.clip(var_a, 0.0, None) * np.clip(var_b, 0.0, None))
    num = ryy - s1a * s1b / m
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(denom > 0.0, num / denom, 0.0)
    # Cauchy-Schwarz bounds the exact value by 1; trim roundoff overshoot.
    np.clip(c, -1.0, 1.0, out=c)
    c[0] = 1.0
    return AcfCurve(lags=k * x.dt_sample, c=c)


def tds_metric(curve: AcfCurve, tau_ext: float,
               half_window: float = TDS_HALF_WINDOW_S):
    """Peak |C| in [tau_ext - h, tau_ext + h]; ties go to the smallest lag."""
    lo = tau_ext - half_window
    hi = tau_ext + half_window
    if lo < curve.lags[0] or hi > curve.lags[-1]:
        raise ValueError(
            f"window [{lo:g}, {hi:g}] s outside curve range "
            f"[{curve.lags[0]:g}, {curve.lags[-1]:g}] s")
    i0 = int(np.searchsorted(curve.lags, lo, side="left"))
    i1 = int(np.searchsorted(curve.lags, hi, side="right"))
    w = np.abs(curve.c[i0:i1])
    j = int(np.argmax(w))  # first occurrence = smallest lag on ties
    return float(w[j]), float(curve.lags[i0 + j])


def permutation_entropy(x: TimeSeries, m: int = PE_ORDER_DEFAULT, l: int = 1,
                        min_windows: int | None = None) -> float:
    """Normalized ordinal-pattern entropy, H = -sum p ln p / ln(m!).

    m is the embedding dimension (3..7), l the embedding delay in samples.
    Equal values within a window are ranked by order of occurrence (stable
    sort).  ``min_windows`` overrides the 100*m! statistical floor, for
    small-sample cross-checks against direct pattern counting.
    """
    if not 3 <= m <= 7:
        raise ValueError("embedding dimension m must be in 3..7")
    if l < 1:
        raise ValueError("embedding delay l must be >= 1 sample")
    v = x.samples
    n = v.shape[0]
    n_win = n - (m - 1) * l
    floor_req = math.factorial(m) * 100 if min_windows is None else min_windows
    if n_win < floor_req:
        raise InsufficientDataError(
            f"need n >= {floor_req + (m - 1) * l} samples for m={m}, l={l} "
            f"(got {n})")
    idx = np.arange(n_win)[:, None] + l * np.arange(m)[None, :]
    ranks = np.argsort(v[idx], axis=1, kind="stable")
    code = ranks @ (m ** np.arange(m))
    counts = np.bincount(code, minlength=m ** m)
    p = counts[counts > 0] / n_win
    return float(-(p * np.log(p)).sum() / math.log(math.factorial(m)))


def power_spectrum(x: TimeSeries) -> PowerSpectrum:
    """Welch one-sided PSD: Hann window, 16384-sample segments, 50% overlap."""
    if x.n < 2 * WELCH_NPERSEG:
        raise InsufficientDataError(
            f"need at least {2 * WELCH_NPERSEG} samples, got {x.n}")
    fs = 1.0 / x.dt_sample
    f, pxx = _signal.welch(x.samples, fs=fs, window="hann",
                           nperseg=WELCH_NPERSEG, noverlap=WELCH_NPERSEG // 2,
                           detrend="constant", scaling="density")
    return PowerSpectrum(freq=f, psd=pxx, rbw=fs / WELCH_NPERSEG)


def bandwidth_80(ps: PowerSpectrum) -> float:
    """Smallest f with >= 80% of total power in (0, f].

    The DC bin is excluded.  Cumulative power is piecewise linear between
    bin frequencies (each bin contributes psd*rbw arriving linearly over
    its own frequency), so an exactly flat spectrum on [0, B] yields 0.8*B.
    """
    nz = ps.freq > 0.0
    f = ps.freq[nz]
    p = ps.psd[nz]
    df = np.diff(ps.freq).mean() if ps.freq.size > 1 else ps.rbw
    total = float((p * df).sum())
    if total <= 0.0:
        raise DegenerateInputError("spectrum has no power off DC")
    cum = np.concatenate([[0.0], np.cumsum(p * df)])
    knots = np.concatenate([[f[0] - df], f])
    target = 0.80 * total
    i = int(np.searchsorted(cum, target, side="left"))
    if i == 0:
        return float(knots[0])
    # linear interpolation inside bin i
    c0, c1 = cum[i - 1], cum[i]
    f0, f1 = knots[i - 1], knots[i]
    if c1 == c0:
        return float(f1)
    return float(f0 + (target - c0) / (c1 - c0) * (f1 - f0))


def skewness(x: TimeSeries) -> float:
    """Third standardized central moment, population convention."""
    v = x.samples
    if v.shape[0] < 3:
        raise InsufficientDataError("need at least 3 samples")
    d = v - v.mean()
    m2 = float(np.mean(d * d))
    if m2 == 0.0:
        raise DegenerateInputError("zero variance")
    return float(np.mean(d ** 3) / m2 ** 1.5)


def _histogram_summary(v: np.ndarray, bins: int = 16) -> dict:
    counts, edges = np.histogram(v, bins=bins)
    return {
        "min": float(v.min()), "max": float(v.max()),
        "mean": float(v.mean()), "std": float(v.std()),
        "bins": int(bins), "counts": [int(c) for c in counts],
    }


def analyze_all(x: TimeSeries, tau_ext: float) -> AnalysisReport:
    """All metrics with default settings; pure function of the input.

    PE uses m=4 with embedding delay l = round(tau_ext / dt_sample); the
    ACF is evaluated out to tau_ext + 4 ns so the +/-2 ns peak-search
    window fits with margin.
    """
    def _run(name, fn):
        try:
            return fn()
        except Exception as e:
            raise AnalysisError(f"{name}: {e}") from e

    curve = _run("acf", lambda: acf(x, tau_ext + 2 * TDS_HALF_WINDOW_S))
    cp, lag = _run("tds_metric", lambda: tds_metric(curve, tau_ext))
    l = max(1, int(round(tau_ext / x.dt_sample)))
    h = _run("permutation_entropy",
             lambda: permutation_entropy(x, PE_ORDER_DEFAULT, l))
    ps = _run("power_spectrum", lambda: power_spectrum(x))
    bw = _run("bandwidth_80", lambda: bandwidth_80(ps))
    sk = _run("skewness", lambda: skewness(x))
    return AnalysisReport(cp=cp, peak_lag_s=lag, h=h, bw80_hz=bw,
                          skewness=sk, histogram=_histogram_summary(x.samples))
