"""Autoresonant readout of a multilevel qubit through a chirped Kerr cavity.

Layout:

* `model` builds operators for the coupled qubit-cavity system.
* `spectrum` labels dressed levels, finds avoided crossings, and fits the
  effective driven-ladder nonlinearity.
* `quantum` evolves stochastic trajectories (jump unraveling) in the frame
  of the chirped drive, plus weak-probe steady-state transmission.
* `semiclassical` integrates the coupled classical oscillator equations with
  truncated-Wigner vacuum noise for large-field autoresonance sweeps.
* `analysis` turns capture ensembles into S-curves, thresholds, and readout
  fidelity, including the T1 back-correction.
* `cli` wires it all to config-file-driven subcommands that emit CSV with
  reproducible metadata headers, and renders figures alongside.
"""

from .model import SystemParams
from .quantum import ChirpPulse, TrajectoryRecord
from .semiclassical import CaptureResult, ClassicalState
from .analysis import FidelityReport, SCurve, ThresholdResult
from .spectrum import AvoidedCrossing, Branch, EffectiveParams

__version__ = "0.1.0"

__all__ = [
    "SystemParams",
    "ChirpPulse",
    "TrajectoryRecord",
    "CaptureResult",
    "ClassicalState",
    "SCurve",
    "ThresholdResult",
    "FidelityReport",
    "AvoidedCrossing",
    "Branch",
    "EffectiveParams",
    "__version__",
]
