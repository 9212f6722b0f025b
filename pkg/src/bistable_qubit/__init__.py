"""Simulator and analytics toolkit for a qubit with a telegraphic frequency shift.

A slow two-level defect makes the qubit frequency switch between two known
values.  This package simulates the resulting dynamics (Bloch vector, exact
telegraph jumps, decoherence, noisy readout), implements the single-shot
mode-estimation feedback protocol with interleaved validation experiments
(detuned fringe probing, randomized benchmarking), and provides the matching
closed-form error budgets as an oracle layer.
"""

__version__ = "0.1.0"

from .bloch import BlochState, PulseSpec, QubitParams
from .protocol import ControllerState, CycleTiming, Environment
from .telegraph import TelegraphParams, TlsState

__all__ = [
    "BlochState",
    "PulseSpec",
    "QubitParams",
    "ControllerState",
    "CycleTiming",
    "Environment",
    "TelegraphParams",
    "TlsState",
    "__version__",
]
