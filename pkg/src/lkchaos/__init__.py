"""Stochastic delayed-feedback laser simulator with calibrated noise
injection, delay-signature and complexity metrics, and a sweep harness."""

from .analysis import (AcfCurve, AnalysisReport, PowerSpectrum, TimeSeries,
                       acf, analyze_all, bandwidth_80, permutation_entropy,
                       power_spectrum, skewness, tds_metric)
from .integrator import (DivergedRunError, HistoryBuffer, SimConfig,
                         Trajectory, init_history, integrate, run_experiment)
from .noise import (NoiseSpec, NoiseStreams, bandlimit, calibrate_qgsr,
                    make_streams, qgsr_of, white_gaussian)
from .params import (BelowThresholdError, DerivedConsts, LaserParams,
                     LaserState, derive, drift, optical_gain,
                     relaxation_frequency, solitary_jacobian,
                     solitary_steady_state, unit_scales)
from .sweep import (PointRow, SweepPlan, SweepResult, preset, run_point,
                    run_sweep)

__version__ = "0.1.0"
