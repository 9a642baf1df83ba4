"""Seeded band-limited Gaussian noise, calibrated in dB against a ground level.

The strength convention is QGSR = 5*log10(Q/G) where Q is the mean-square
of the record and G a fixed ground reference (model units^2).  Note the
factor 5 — not 10 as for power or 20 as for amplitude.  A power gain g
therefore moves the reading by 5*log10(g), half the usual power-dB shift.
The convention is kept as-is throughout; see docs/model-units.md.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import LaserParams, unit_scales

# Per-equation coupling factors (s_R, s_phi, s_N), frozen by calibration:
# with these values a 100 MHz / 16 dB injection suppresses the delay
# signature by >=90% relative to the noiseless baseline.  The carrier
# coupling dominates by design — pump fluctuations are what decorrelate
# the feedback echo; see scripts/calibrate_coupling.py.
DEFAULT_COUPLING = (0.01, 0.01, 0.25)

# Ground-noise mean-square reference, model units^2.  The experimental
# counterpart is a detector ground level; the model-unit value is 1 by
# convention so that QGSR maps directly onto stream mean-square.
GROUND_REF_DEFAULT = 1.0

# Above this record length make_streams switches from filter-then-scale to
# direct spectral synthesis (same law, ~2.5x faster at 1e8 samples).
_SYNTHESIS_MIN_N = 1 << 24


class CalibrationError(ValueError):
    """Raised when a record cannot be scaled to a target QGSR."""


@dataclass(frozen=True)
class NoiseSpec:
    """Injection request: bandwidth, strength, coupling and seed.

    ``scales`` are the dimensionless per-equation couplings (s_R, s_phi,
    s_N); each stream is multiplied by its coupling times the fixed unit
    scale of that equation (amplitude, phase, carrier).  ``shared`` selects
    one common realization for all three equations instead of three
    independent ones (default independent).
    """

    bandwidth_hz: float = 100e6
    qgsr_db: float = 16.0
    ground_ref: float = GROUND_REF_DEFAULT
    scales: tuple = DEFAULT_COUPLING
    seed: int = 0
    enabled: bool = True
    shared: bool = False

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth must be > 0")
        if not self.ground_ref > 0:
            raise ValueError("ground_ref must be > 0")
        if len(self.scales) != 3 or any(s < 0 for s in self.scales):
            raise ValueError("scales must be three values >= 0")

    def validate_grid(self, n: int, dt: float):
        if n < 1:
            raise ValueError("empty grid")
        nyq = 0.5 / dt
        if self.bandwidth_hz > nyq * (1 + 1e-12):
            raise ValueError(
                f"bandwidth {self.bandwidth_hz:g} Hz exceeds grid Nyquist {nyq:g} Hz")


@dataclass(frozen=True)
class NoiseStreams:
    """The three injection records on the integration grid.

    xi drives the field amplitude, eta the phase, beta the carrier
    equation, already in the RHS units of each equation.
    ``actual_qgsr_db`` is measured on the calibrated records before the
    per-equation scaling is applied.
    """

    xi: np.ndarray
    eta: np.ndarray
    beta: np.ndarray
    actual_qgsr_db: float


def white_gaussian(n: int, sigma: float, seed, dtype=np.float64) -> np.ndarray:
    """n i.i.d. normal(0, sigma^2) samples, deterministic per seed."""
    if n < 1:
        raise ValueError("need at least one sample")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n, dtype=dtype)
    if sigma != 1.0:
        x *= sigma
    return x


def bandlimit(x: np.ndarray, dt: float, cutoff: float) -> np.ndarray:
    """Brick-wall low-pass: DFT bins with |f| > cutoff are zeroed.

    The DC bin is inside the passband, so the output mean equals the
    input mean.  Linear by construction.
    """
    x = np.asarray(x)
    n = x.shape[0]
    nyq = 0.5 / dt
    if not 0 < cutoff <= nyq * (1 + 1e-12):
        raise ValueError(f"cutoff must be in (0, {nyq:g}] Hz")
    spec = np.fft.rfft(x)
    kmax = int(math.floor(cutoff * n * dt * (1 + 1e-12)))
    if kmax + 1 < spec.shape[0]:
        spec[kmax + 1:] = 0.0
    return np.fft.irfft(spec, n=n).astype(x.dtype, copy=False)


def calibrate_qgsr(x: np.ndarray, ground_ref: float, qgsr_db: float) -> np.ndarray:
    """Rescale x so its mean-square Q satisfies 5*log10(Q/ground_ref) = qgsr_db."""
    x = np.asarray(x)
    if ground_ref <= 0:
        raise ValueError("ground_ref must be > 0")
    q_now = float(np.mean(np.square(x, dtype=np.float64)))
    if q_now == 0.0:
        raise CalibrationError("all-zero record cannot be calibrated")
    q_target = ground_ref * 10.0 ** (qgsr_db / 5.0)
    return (x * math.sqrt(q_target / q_now)).astype(x.dtype, copy=False)


def qgsr_of(x: np.ndarray, ground_ref: float) -> float:
    """Measured QGSR of a record in dB: 5*log10(mean_square/ground_ref)."""
    if ground_ref <= 0:
        raise ValueError("ground_ref must be > 0")
    q = float(np.mean(np.square(np.asarray(x), dtype=np.float64)))
    if q == 0.0:
        raise CalibrationError("all-zero record has no finite QGSR")
    return 5.0 * math.log10(q / ground_ref)


def _synthesize_bandlimited(n: int, dt: float, cutoff: float, seed,
                            dtype=np.float32) -> np.ndarray:
    # Direct construction in the frequency domain: fill the passband rfft
    # bins with i.i.d. complex Gaussians and invert.  Distributionally the
    # same law as bandlimit(white_gaussian(...)) with zero DC, but only
    # touches the kmax in-band bins before the inverse transform.
    rng = np.random.default_rng(seed)
    n_bins = n // 2 + 1
    kmax = min(int(math.floor(cutoff * n * dt * (1 + 1e-12))), n_bins - 1)
    if kmax < 1:
        raise ValueError("grid too short to resolve the requested bandwidth")
    spec = np.zeros(n_bins, dtype=np.complex128)
    re = rng.standard_normal(kmax)
    im = rng.standard_normal(kmax)
    spec[1:kmax + 1] = re + 1j * im
    if n % 2 == 0 and kmax == n_bins - 1:
        spec[kmax] = spec[kmax].real * math.sqrt(2.0)  # Nyquist bin is real
    out = np.fft.irfft(spec, n=n)
    return out.astype(dtype, copy=False)


def make_streams(spec: NoiseSpec, grid, params: LaserParams | None = None,
                 method: str = "auto") -> NoiseStreams:
    """Build the (xi, eta, beta) injection records for an integration grid.

    grid is (n, dt).  Each stream is band-limited Gaussian noise calibrated
    to ``spec.qgsr_db`` against ``spec.ground_ref``, then multiplied by its
    coupling s_k and the per-equation unit scale A_k (amplitude: R_s/tau_ext,
    phase: 1/tau_ext, carrier: N_th/tau_ext).  Streams are float32 — three
    full-grid records at 0.5 ps x 50 us would otherwise cost 2.4 GB.

    method: "filter" (white noise -> brick-wall -> rescale), "synthesis"
    (direct spectral construction, same law, faster for long records), or
    "auto" (synthesis for n >= 2^24).  Both are deterministic per seed but
    produce different realizations from the same seed.
    """
    n, dt = int(grid[0]), float(grid[1])
    spec.validate_grid(n, dt)
    if params is None:
        params = LaserParams()
    a_r, a_phi, a_n = unit_scales(params)
    if not spec.enabled:
        z = np.zeros(n, dtype=np.float32)
        return NoiseStreams(xi=z, eta=z.copy(), beta=z.copy(),
                            actual_qgsr_db=float("-inf"))
    if method == "auto":
        method = "synthesis" if n >= _SYNTHESIS_MIN_N else "filter"
    if method not in ("filter", "synthesis"):
        raise ValueError(f"unknown method {method!r}")

    children = np.random.SeedSequence(spec.seed).spawn(3)
    if spec.shared:
        children = [children[0]] * 3

    raw = []
    for child in children:
        if method == "filter":
            w = white_gaussian(n, 1.0, child, dtype=np.float32)
            y = bandlimit(w, dt, spec.bandwidth_hz)
        else:
            y = _synthesize_bandlimited(n, dt, spec.bandwidth_hz, child)
        raw.append(calibrate_qgsr(y, spec.ground_ref, spec.qgsr_db))
        if spec.shared:
            raw = [raw[0], raw[0].copy(), raw[0].copy()]
            break

    actual = qgsr_of(raw[0], spec.ground_ref)
    s_r, s_phi, s_n = spec.scales
    return NoiseStreams(
        xi=raw[0] * np.float32(s_r * a_r),
        eta=raw[1] * np.float32(s_phi * a_phi),
        beta=raw[2] * np.float32(s_n * a_n),
        actual_qgsr_db=actual,
    )
