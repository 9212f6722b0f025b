"""Single-qubit Bloch-vector engine in a controller-defined rotating frame.

Conventions, fixed once and relied on everywhere else:

* z = +1 is the ground state |0>; relaxation drives z toward +1.
* ``detuning(params, f_c, xi)`` = f_c - f_q(xi): control frequency minus the
  instantaneous qubit frequency, in Hz.
* Free precession rotates (x, y) about +z by 2*pi*delta_q*dt (right-handed).
  With instantaneous pulses and no decoherence the two-pulse sequence
  X(-pi/2) -- free(tau) -- X(-pi/2) therefore returns
  P(m=1) = (1 + cos(2*pi*delta_q*tau)) / 2.
* A pulse of nominal angle theta about the equatorial axis at phase phi
  rotates the Bloch vector by theta about (cos phi, sin phi, 0),
  right-handed: X(-pi/2) maps (0, 0, 1) -> (0, 1, 0).
* A finite-duration pulse with signed drive rate W = theta/duration and
  angular detuning wd = 2*pi*delta_q rotates by sqrt(W^2 + wd^2)*duration
  about the tilted axis (W cos phi, W sin phi, wd)/sqrt(W^2 + wd^2).

Decoherence contracts (x, y) by exp(-dt/T2) and relaxes z toward +1 with
exp(-dt/T1), where 1/T2 = 1/(2 T1) + 1/Tphi.  During a finite pulse the
contraction is applied after the rotation (operator splitting; pulse
durations are ~1e-3 of T1, T2, so the splitting error is negligible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class QubitParams:
    """Physical constants of the bistable qubit.

    Frequencies in Hz, times in s, ``rabi_rate`` in rad/s.  Readout errors
    are classical assignment-error probabilities (state preparation error is
    folded into the same budget).
    """

    f_low: float
    f_high: float
    rabi_rate: float
    t1: float
    t_phi: float
    readout_eps_0to1: float = 0.03
    readout_eps_1to0: float = 0.03
    t_readout: float = 2e-6
    t_reset: float = 6e-6

    def __post_init__(self):
        if not self.f_high > self.f_low:
            raise ValueError("f_high must exceed f_low")
        if self.rabi_rate <= 0:
            raise ValueError("rabi_rate must be positive")
        if self.t1 <= 0 or self.t_phi <= 0:
            raise ValueError("t1 and t_phi must be positive")
        for name in ("readout_eps_0to1", "readout_eps_1to0"):
            eps = getattr(self, name)
            if not 0.0 <= eps < 0.5:
                raise ValueError(f"{name} must lie in [0, 0.5)")
        if self.t_readout < 0 or self.t_reset < 0:
            raise ValueError("t_readout and t_reset must be nonnegative")

    @property
    def delta_tls(self) -> float:
        """Mode splitting f_high - f_low in Hz."""
        return self.f_high - self.f_low

    @property
    def t2(self) -> float:
        """Coherence time from 1/T2 = 1/(2 T1) + 1/Tphi."""
        rate = 0.5 / self.t1 + 1.0 / self.t_phi
        return math.inf if rate == 0.0 else 1.0 / rate

    @property
    def alpha(self) -> float:
        """Fringe visibility 1 - eps01 - eps10 left after assignment errors."""
        return 1.0 - self.readout_eps_0to1 - self.readout_eps_1to0

    @property
    def t_pi(self) -> float:
        """Duration pi/rabi_rate of a full-amplitude pi pulse."""
        return math.pi / self.rabi_rate

    @property
    def t_wall(self) -> float:
        """Hardware dead time per cycle (readout plus resonator reset)."""
        return self.t_readout + self.t_reset

    def mode_frequency(self, xi: int) -> float:
        """Qubit frequency in mode ``xi`` (0 -> f_high, 1 -> f_low)."""
        return self.f_high - self.delta_tls * xi

    @classmethod
    def defaults(cls, **overrides) -> "QubitParams":
        """Reference device parameter set (374 kHz splitting, 48 ns pi pulse)."""
        params = cls(
            f_low=5.10e9 - 374e3,
            f_high=5.10e9,
            rabi_rate=math.pi / 48e-9,
            t1=74e-6,
            t_phi=61e-6,
        )
        return replace(params, **overrides) if overrides else params


@dataclass(frozen=True)
class BlochState:
    """Bloch vector (x, y, z) in the current rotating frame."""

    x: float
    y: float
    z: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def ground(cls) -> "BlochState":
        return cls(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class PulseSpec:
    """One equatorial drive pulse.

    ``axis_phase`` is the in-plane angle of the rotation axis (0 = X axis)
    and ``nominal_angle`` the signed rotation angle.  Finite pulses are
    rectangular with full drive amplitude, so duration = |angle|/rabi_rate;
    build them with :meth:`finite` to keep that invariant.
    """

    axis_phase: float
    nominal_angle: float
    finite_duration: bool = False
    duration: float = 0.0

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be nonnegative")
        if not self.finite_duration and self.duration != 0.0:
            raise ValueError("instantaneous pulses carry zero duration")

    @classmethod
    def instantaneous(cls, axis_phase: float, angle: float) -> "PulseSpec":
        return cls(axis_phase, angle, finite_duration=False)

    @classmethod
    def finite(cls, axis_phase: float, angle: float, params: QubitParams) -> "PulseSpec":
        return cls(axis_phase, angle, True, abs(angle) / params.rabi_rate)


def detuning(params: QubitParams, f_c: float, xi: int) -> float:
    """Frame detuning f_c - f_q(xi) in Hz."""
    return f_c - params.mode_frequency(xi)


def decoherence_factors(dt: float, params: QubitParams) -> tuple[float, float]:
    """Transverse and longitudinal decay factors (exp(-dt/T2), exp(-dt/T1))."""
    return math.exp(-dt / params.t2), math.exp(-dt / params.t1)


def _contract(x: float, y: float, z: float, dt: float, params: QubitParams):
    e2, e1 = decoherence_factors(dt, params)
    return x * e2, y * e2, 1.0 + (z - 1.0) * e1


def _axis_angle_matrix(nx: float, ny: float, nz: float, angle: float) -> np.ndarray:
    """Right-handed rotation matrix about the unit axis (nx, ny, nz)."""
    c = math.cos(angle)
    s = math.sin(angle)
    k = 1.0 - c
    return np.array(
        [
            [c + nx * nx * k, nx * ny * k - nz * s, nx * nz * k + ny * s],
            [ny * nx * k + nz * s, c + ny * ny * k, ny * nz * k - nx * s],
            [nz * nx * k - ny * s, nz * ny * k + nx * s, c + nz * nz * k],
        ]
    )


def rotation_matrix(pulse: PulseSpec, delta_q: float, params: QubitParams) -> np.ndarray:
    """Bloch rotation implemented by ``pulse`` at frame detuning ``delta_q``.

    Excludes the decoherence contraction, which callers apply over the pulse
    duration separately.
    """
    cphi = math.cos(pulse.axis_phase)
    sphi = math.sin(pulse.axis_phase)
    if not pulse.finite_duration:
        return _axis_angle_matrix(cphi, sphi, 0.0, pulse.nominal_angle)
    if pulse.duration == 0.0:
        return np.eye(3)
    w_drive = pulse.nominal_angle / pulse.duration
    w_detune = 2.0 * math.pi * delta_q
    w_total = math.hypot(w_drive, w_detune)
    if w_total == 0.0:
        return np.eye(3)
    return _axis_angle_matrix(
        w_drive * cphi / w_total,
        w_drive * sphi / w_total,
        w_detune / w_total,
        w_total * pulse.duration,
    )


def free_evolve(state: BlochState, delta_q: float, dt: float, params: QubitParams) -> BlochState:
    """Precess about z by 2*pi*delta_q*dt, then decohere over ``dt``."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    theta = 2.0 * math.pi * delta_q * dt
    c = math.cos(theta)
    s = math.sin(theta)
    x = c * state.x - s * state.y
    y = s * state.x + c * state.y
    x, y, z = _contract(x, y, state.z, dt, params)
    return BlochState(x, y, z)


def apply_pulse(
    state: BlochState, pulse: PulseSpec, delta_q: float, params: QubitParams
) -> BlochState:
    """Apply a drive pulse; finite pulses also decohere over their duration."""
    rot = rotation_matrix(pulse, delta_q, params)
    v = rot @ state.as_array()
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    if pulse.finite_duration and pulse.duration > 0.0:
        x, y, z = _contract(x, y, z, pulse.duration, params)
    return BlochState(x, y, z)


def rabi_transition_probability(delta_q: float, params: QubitParams) -> float:
    """Excited-state population after a nominal pi pulse detuned by ``delta_q`` Hz.

    Generalized Rabi formula W^2/(W^2+d^2) * sin^2(pi*sqrt(W^2+d^2)/(2W))
    with d = 2*pi*delta_q.
    """
    w = params.rabi_rate
    d = 2.0 * math.pi * delta_q
    w_gen_sq = w * w + d * d
    amp = w * w / w_gen_sq
    return amp * math.sin(0.5 * math.pi * math.sqrt(w_gen_sq) / w) ** 2


def measure(
    state: BlochState, params: QubitParams, rng: np.random.Generator
) -> tuple[int, BlochState]:
    """Projective z measurement followed by a classical assignment-error flip.

    Returns the reported outcome m and the state collapsed onto the pole of
    the *true* projection (the report flip never feeds back on the qubit).
    """
    p_excited = min(max((1.0 - state.z) / 2.0, 0.0), 1.0)
    true_outcome = 1 if rng.random() < p_excited else 0
    if true_outcome == 1:
        reported = 0 if rng.random() < params.readout_eps_1to0 else 1
        collapsed = BlochState(0.0, 0.0, -1.0)
    else:
        reported = 1 if rng.random() < params.readout_eps_0to1 else 0
        collapsed = BlochState(0.0, 0.0, 1.0)
    return reported, collapsed


def reported_excited_probability(z: float, params: QubitParams) -> float:
    """P(m=1) for a state with Bloch z-component ``z``, including assignment errors."""
    p_excited = min(max((1.0 - z) / 2.0, 0.0), 1.0)
    return p_excited * (1.0 - params.readout_eps_1to0) + (1.0 - p_excited) * params.readout_eps_0to1


def reset(params: QubitParams) -> BlochState:
    """Re-initialize to the ground state.

    The caller is responsible for advancing its clock by t_readout + t_reset
    for the preceding measurement and resonator reset.
    """
    return BlochState.ground()
