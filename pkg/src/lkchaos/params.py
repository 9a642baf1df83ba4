"""Physical parameters, derived constants and the deterministic laser model.

The model is a single-mode semiconductor laser with delayed optical
feedback, written in (R, phi, N) form: field amplitude, field phase and
carrier number.  All rates are in 1/s, times in seconds, and the carrier
number is a dimensionless model quantity (see docs/model-units.md).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c as _C_LIGHT
from scipy.constants import e as _E_CHARGE

# Differential gain normalization.  The literature value for this device
# family is quoted in inconsistent units; the number below is a calibrated
# choice (see docs/model-units.md): it places the solitary relaxation
# oscillation at 1.40 GHz and the feedback-driven chaos at an 80% bandwidth
# of ~3.0 GHz, while keeping every equation closed in model units.
GAIN_COEFF_DEFAULT = 4.5e3  # 1/s per carrier unit


class BelowThresholdError(ValueError):
    """Raised when an operation requires the pump to be above threshold."""


@dataclass(frozen=True)
class LaserParams:
    """Laser constants and operating point.

    Attributes
    ----------
    alpha : float
        Linewidth enhancement factor (dimensionless).
    gain_coeff : float
        Differential gain G_N (1/s per carrier unit).
    n_transparency : float
        Carrier number at transparency, dimensionless model units.
    epsilon : float
        Gain saturation coefficient (per intensity unit).
    tau_p, tau_n : float
        Photon and carrier lifetimes (s).
    tau_ext : float
        Feedback round-trip delay (s).
    lambda_m : float
        Optical wavelength (m).
    kappa : float
        Feedback rate (1/s).
    pump_factor : float
        Pump current as a multiple of threshold (rho).
    d_noise : float
        Intrinsic white-noise strength per equation (model units^2 * s).
        Zero by default so the deterministic baseline is exactly that.
    charge : float
        Elementary charge (C); used only to convert pump current J to a
        carrier injection rate J/e.
    """

    alpha: float = 5.0
    gain_coeff: float = GAIN_COEFF_DEFAULT
    n_transparency: float = 1.35e8
    epsilon: float = 5e-7
    tau_p: float = 3.2e-12
    tau_n: float = 2.3e-9
    tau_ext: float = 86.7e-9
    lambda_m: float = 1.55e-6
    kappa: float = 5e9
    pump_factor: float = 1.35
    d_noise: float = 0.0
    charge: float = _E_CHARGE

    def __post_init__(self):
        if not (self.tau_p > 0 and self.tau_n > 0 and self.tau_ext > 0):
            raise ValueError("lifetimes and delay must be positive")
        if self.kappa < 0 or self.epsilon < 0 or self.d_noise < 0:
            raise ValueError("kappa, epsilon and d_noise must be >= 0")
        if self.pump_factor <= 0:
            raise ValueError("pump_factor must be > 0")
        if not math.isfinite(self.gain_coeff) or self.gain_coeff <= 0:
            raise ValueError("gain_coeff must be a positive finite rate")

    @property
    def n_threshold(self) -> float:
        """Threshold carrier number N_th = N_0 + 1/(G_N tau_p)."""
        return self.n_transparency + 1.0 / (self.gain_coeff * self.tau_p)


@dataclass(frozen=True)
class DerivedConsts:
    """Quantities computed once from :class:`LaserParams`."""

    omega: float                  # angular optical frequency, rad/s
    feedback_phase_offset: float  # omega * tau_ext mod 2*pi, in [0, 2*pi)
    n_threshold: float
    j_threshold: float            # pump at threshold, C/s
    pump: float                   # J = rho * J_th, C/s


def derive(p: LaserParams) -> DerivedConsts:
    """Compute :class:`DerivedConsts` for a parameter set."""
    omega = 2.0 * math.pi * _C_LIGHT / p.lambda_m
    off = math.fmod(omega * p.tau_ext, 2.0 * math.pi)
    if off < 0.0:
        off += 2.0 * math.pi
    n_th = p.n_threshold
    j_th = p.charge * n_th / p.tau_n
    return DerivedConsts(
        omega=omega,
        feedback_phase_offset=off,
        n_threshold=n_th,
        j_threshold=j_th,
        pump=p.pump_factor * j_th,
    )


@dataclass(frozen=True)
class LaserState:
    """Instantaneous (R, phi, N) state."""

    R: float
    phi: float
    N: float

    def __post_init__(self):
        if not (math.isfinite(self.R) and math.isfinite(self.phi)
                and math.isfinite(self.N)):
            raise ValueError("state fields must be finite")
        if self.R < 0.0:
            raise ValueError("field amplitude must be >= 0")


def optical_gain(N, intensity, p: LaserParams):
    """Saturated optical gain G = G_N (N - N_0) / (1 + eps * I).

    Works elementwise on arrays.  May be negative below transparency.
    """
    N = np.asarray(N, dtype=float)
    intensity = np.asarray(intensity, dtype=float)
    if not (np.all(np.isfinite(N)) and np.all(np.isfinite(intensity))):
        raise ValueError("non-finite input to optical_gain")
    if np.any(intensity < 0):
        raise ValueError("intensity must be >= 0")
    out = p.gain_coeff * (N - p.n_transparency) / (1.0 + p.epsilon * intensity)
    return float(out) if out.ndim == 0 else out


def drift(state: LaserState, delayed: LaserState, c: DerivedConsts,
          p: LaserParams, amplitude_floor: float = 0.0):
    """Deterministic right-hand sides (dR/dt, dphi/dt, dN/dt).

    The feedback phase is theta(t) = omega*tau_ext + phi(t) - phi(t - tau_ext),
    entering through cos(theta) in the amplitude equation and sin(theta) in
    the phase equation.  When ``state.R`` is at or below ``amplitude_floor``
    the 1/R division uses the floor value instead (clamped evaluation; the
    integrator counts these events in its diagnostics).
    """
    I = state.R * state.R
    G = p.gain_coeff * (state.N - p.n_transparency) / (1.0 + p.epsilon * I)
    net = G - 1.0 / p.tau_p
    theta = c.feedback_phase_offset + state.phi - delayed.phi
    r_div = state.R if state.R > amplitude_floor else amplitude_floor
    if r_div <= 0.0:
        raise ZeroDivisionError("amplitude and floor are both zero")
    dR = 0.5 * net * state.R + p.kappa * delayed.R * math.cos(theta)
    dphi = 0.5 * p.alpha * net - p.kappa * (delayed.R / r_div) * math.sin(theta)
    dN = c.pump / p.charge - state.N / p.tau_n - G * I
    return dR, dphi, dN


def solitary_steady_state(p: LaserParams, allow_off: bool = False):
    """Steady state (R_s, N_s) of the solitary laser (kappa = 0).

    Closed form: on the lasing branch the gain is clamped to the photon
    loss, G = 1/tau_p, which gives

        I_s = (J/e - N_th/tau_n) / (1/tau_p + eps / (G_N tau_p tau_n))
        N_s = N_0 + (1 + eps I_s) / (G_N tau_p)

    Raises
    ------
    BelowThresholdError
        If pump_factor <= 1.  With ``allow_off=True`` the off solution
        (R=0, N = rho*N_th) is returned instead.
    """
    c = derive(p)
    if p.pump_factor <= 1.0:
        if allow_off:
            return 0.0, p.pump_factor * c.n_threshold
        raise BelowThresholdError(
            f"pump_factor={p.pump_factor} is at or below threshold")
    denom = 1.0 / p.tau_p + p.epsilon / (p.gain_coeff * p.tau_p * p.tau_n)
    i_s = (c.pump / p.charge - c.n_threshold / p.tau_n) / denom
    n_s = p.n_transparency + (1.0 + p.epsilon * i_s) / (p.gain_coeff * p.tau_p)
    return math.sqrt(i_s), n_s


def solitary_jacobian(p: LaserParams):
    """2x2 Jacobian of the solitary (R, N) subsystem at the steady state."""
    r_s, n_s = solitary_steady_state(p)
    i_s = r_s * r_s
    sat = 1.0 + p.epsilon * i_s
    G = 1.0 / p.tau_p  # gain clamp at steady state
    dG_dI = -p.epsilon * G / sat
    a11 = i_s * dG_dI
    a12 = 0.5 * r_s * p.gain_coeff / sat
    a21 = -2.0 * r_s * (G + i_s * dG_dI)
    a22 = -1.0 / p.tau_n - i_s * p.gain_coeff / sat
    return np.array([[a11, a12], [a21, a22]])


def relaxation_frequency(p: LaserParams) -> float:
    """Relaxation-oscillation frequency (Hz) from the steady-state Jacobian."""
    ev = np.linalg.eigvals(solitary_jacobian(p))
    return float(np.abs(ev.imag).max() / (2.0 * math.pi))


def unit_scales(p: LaserParams):
    """Per-equation forcing scales (A_R, A_phi, A_N).

    Each is the characteristic magnitude of its state variable divided by
    the feedback delay: A_R = R_s/tau_ext, A_phi = 1/tau_ext,
    A_N = N_th/tau_ext.  Injected noise streams are expressed in these
    units so the dimensionless coupling factors in
    :class:`~lkchaos.noise.NoiseSpec` are comparable across equations.
    """
    r_s, _ = solitary_steady_state(p)
    return r_s / p.tau_ext, 1.0 / p.tau_ext, p.n_threshold / p.tau_ext


def params_with(p: LaserParams, **kw) -> LaserParams:
    """Return a copy of ``p`` with fields replaced."""
    return replace(p, **kw)
