"""Closed-form error and coherence budgets for the bistable qubit.

This module is the oracle layer: every quantity here has an independent
Monte Carlo counterpart in the simulator modules, and the test suite checks
the two against each other.

Frame convention: ``delta_f`` is the detuning of the reference (high) mode
from the rotating frame, delta_f = f_high - f_c.  A virtual detuning applied
by the protocol module plays exactly this role when probing at f_c = f_high.
All frequencies are in Hz except Rabi rates, which are angular (rad/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bloch import QubitParams, rabi_transition_probability


def ramsey_likelihood(m: int, xi: int, tau, delta_f: float, params: QubitParams):
    """P(outcome m | mode xi) for one two-pulse probing cycle of length tau.

    1/2 + (-1)^(m+1) * (alpha/2) * exp(-tau/T2) * cos(2 pi (delta_f - xi*delta_tls) tau).
    Visibility alpha and T2 come from ``params``; vectorized over ``tau``.
    """
    if m not in (0, 1):
        raise ValueError("m must be 0 or 1")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    sign = 1.0 if m == 1 else -1.0
    phase = 2.0 * math.pi * (delta_f - xi * params.delta_tls) * tau
    value = 0.5 + sign * 0.5 * params.alpha * np.exp(-tau / params.t2) * np.cos(phase)
    return value if value.ndim else float(value)


def contrast(delta_tls: float, tau, alpha: float, t2: float, delta_f: float = 0.0):
    """Signal contrast |P(1|xi=0) - P(1|xi=1)| of the probing cycle.

    Equal to |alpha exp(-tau/T2) sin(2 pi (delta_f - delta_tls/2) tau)
    * sin(pi delta_tls tau)|; in the delta_f = 0 frame the two sine factors
    coincide and the contrast is alpha exp(-tau/T2) sin^2(pi delta_tls tau).
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    value = np.abs(
        alpha
        * np.exp(-tau / t2)
        * np.sin(2.0 * math.pi * (delta_f - 0.5 * delta_tls) * tau)
        * np.sin(math.pi * delta_tls * tau)
    )
    return value if value.ndim else float(value)


def tau_opt(delta_tls: float, t2: float) -> float:
    """Probing time maximizing the delta_f = 0 contrast.

    arctan(2 pi delta_tls T2) / (pi delta_tls); tends to 1/(2 delta_tls) for
    large splitting-coherence product and to T2 for a small one.
    """
    if delta_tls <= 0 or t2 <= 0:
        raise ValueError("delta_tls and t2 must be positive")
    return math.atan(2.0 * math.pi * delta_tls * t2) / (math.pi * delta_tls)


def p_err_static(delta_tls: float, t2: float, alpha: float) -> float:
    """Single-shot mode-assignment error at the optimal probing time, gamma = 0.

    p_err = (1 - S_max)/2 with
    S_max = alpha * x^2/(1+x^2) * exp(-2 arctan(x)/x),  x = 2 pi delta_tls T2.
    """
    if delta_tls <= 0 or t2 <= 0:
        raise ValueError("delta_tls and t2 must be positive")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    x = 2.0 * math.pi * delta_tls * t2
    if math.isinf(x):
        s_max = alpha
    else:
        s_max = alpha * (x * x / (1.0 + x * x)) * math.exp(-2.0 * math.atan(x) / x)
    return 0.5 * (1.0 - s_max)


def blind_x_infidelity(
    f_c: float, pops: tuple[float, float], params: QubitParams, include_floor: bool = True
) -> float:
    """Average infidelity of a pi pulse driven at fixed frequency ``f_c``.

    ``pops`` = (P_L, P_H) are the mode occupation probabilities.  The
    coherent part is the exact Rabi-formula mixture over the two detunings;
    ``include_floor`` adds the intrinsic term 1 - alpha*exp(-t_pi/T2).
    """
    p_l, p_h = pops
    if p_l < 0 or p_h < 0 or abs(p_l + p_h - 1.0) > 1e-9:
        raise ValueError("pops must be nonnegative and sum to 1")
    fidelity = p_l * rabi_transition_probability(f_c - params.f_low, params) + (
        p_h * rabi_transition_probability(f_c - params.f_high, params)
    )
    infidelity = 1.0 - fidelity
    if include_floor:
        infidelity += intrinsic_pulse_floor(params)
    return infidelity


def optimal_blind_frequency(pops: tuple[float, float], params: QubitParams) -> float:
    """Population-weighted mean frequency, the best fixed drive choice.

    Only valid in the weak-noise regime 2 pi delta_tls < rabi_rate; beyond it
    the fidelity landscape is bimodal and the weighted mean is no optimum, so
    a ValueError is raised.
    """
    p_l, p_h = pops
    if p_l < 0 or p_h < 0 or abs(p_l + p_h - 1.0) > 1e-9:
        raise ValueError("pops must be nonnegative and sum to 1")
    if 2.0 * math.pi * params.delta_tls >= params.rabi_rate:
        raise ValueError(
            "splitting exceeds the weak-noise regime; the blind fidelity is "
            "bimodal and the weighted-mean optimum does not apply"
        )
    return p_l * params.f_low + p_h * params.f_high


def intrinsic_pulse_floor(params: QubitParams) -> float:
    """Infidelity floor 1 - alpha*exp(-t_pi/T2) from decoherence and SPAM."""
    return 1.0 - params.alpha * math.exp(-params.t_pi / params.t2)


def active_x_infidelity(
    p_err: float, params: QubitParams, include_floor: bool = True
) -> float:
    """Pi-pulse infidelity when the drive frequency tracks a noisy mode estimate.

    Floor + p_err * 4 pi^2 delta_tls^2 / rabi_rate^2: a wrong estimate leaves
    the full splitting as drive detuning.
    """
    if not 0.0 <= p_err <= 0.5:
        raise ValueError("p_err must lie in [0, 0.5]")
    coherent = p_err * (2.0 * math.pi * params.delta_tls / params.rabi_rate) ** 2
    return coherent + (intrinsic_pulse_floor(params) if include_floor else 0.0)


def z_phase_error_variance(delta: float, t_g: float) -> float:
    """Variance (2 pi delta t_g)^2 / 4 of the frame phase accrued over t_g.

    ``delta`` is the splitting between the two frequencies the software frame
    may be mistracking by half, as when blindly tracking the mean frequency.
    """
    if t_g < 0:
        raise ValueError("t_g must be nonnegative")
    return (2.0 * math.pi * delta * t_g) ** 2 / 4.0


def finite_pulse_contrast(
    delta_tls: float, tau, alpha: float, t2: float, omega: float, echo: bool
):
    """Probing contrast with finite-duration pulses, delta_f = 0 frame.

    Identical prep and projection pulses tilt the rotation axes the same way,
    so their in-plane phase errors add and act as a timing offset 2/omega on
    the oscillatory factor: alpha exp(-tau/T2) sin^2(pi delta_tls (tau + 2/omega)).
    Inverting the projection drive echoes the error away (``echo=True``),
    restoring :func:`contrast` exactly.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if echo:
        return contrast(delta_tls, tau, alpha, t2, 0.0)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    value = (
        alpha
        * np.exp(-tau / t2)
        * np.sin(math.pi * delta_tls * (tau + 2.0 / omega)) ** 2
    )
    return value if value.ndim else float(value)


@dataclass(frozen=True)
class ContrastCurve:
    """Discrimination contrast sampled on a probe-time grid (values in [0, alpha])."""

    taus: np.ndarray
    values: np.ndarray


def contrast_curve(
    delta_tls: float, taus, alpha: float, t2: float, delta_f: float = 0.0
) -> ContrastCurve:
    """Evaluate :func:`contrast` on a grid and package it as a curve."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    return ContrastCurve(taus=taus, values=np.asarray(contrast(delta_tls, taus, alpha, t2, delta_f)))


def _sinc(x: np.ndarray) -> np.ndarray:
    """Entire function sin(x)/x, safe for complex x and x = 0."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)


@dataclass(frozen=True)
class AkCoherence:
    """Ensemble coherence of a qubit under symmetric two-state frequency jumps."""

    t: np.ndarray
    c_eq: np.ndarray
    c_plus: np.ndarray
    c_minus: np.ndarray
    delta_c: np.ndarray
    s_ak: np.ndarray


def ak_coherence(t, delta_tls: float, gamma: float) -> AkCoherence:
    """Damped-oscillator coherence for frequency jumps of +-pi*delta_tls rad/s.

    Solves C'' + gamma C' + (pi delta_tls)^2 C = 0 with C(0) = 1/2:
    ``c_eq`` for equal initial mode populations (C'(0) = 0) and ``c_plus``/
    ``c_minus`` for definite initial modes (C'(0) = +-i pi delta_tls / 2).
    ``delta_c`` = c_plus - c_minus is evaluated through the independent
    identity delta_c = -2i c_eq'/(pi delta_tls), and ``s_ak`` = |delta_c| is
    the contrast available for mode discrimination.

    Underdamped for gamma < 2 pi delta_tls; larger gamma continues
    analytically into hyperbolic (overdamped) behavior.  Exact critical
    damping is handled by an ulp-level rate shift.
    """
    if delta_tls <= 0:
        raise ValueError("delta_tls must be positive")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    w = math.pi * delta_tls
    if gamma == 2.0 * w:
        gamma *= 1.0 - 1e-12
    beta = np.sqrt(complex(w * w - 0.25 * gamma * gamma))
    envelope = np.exp(-0.5 * gamma * t)
    bt = beta * t

    c_eq = 0.5 * np.real(envelope * (np.cos(bt) + 0.5 * gamma * t * _sinc(bt)))

    # Two-branch solution from the definite-mode initial conditions.
    a_plus = 0.25 * (1.0 - w / beta + 0.5j * gamma / beta)
    a_minus = 0.25 * (1.0 + w / beta + 0.5j * gamma / beta)
    c_plus = envelope * (a_plus * np.exp(-1j * bt) + (0.5 - a_plus) * np.exp(1j * bt))
    c_minus = envelope * (a_minus * np.exp(-1j * bt) + (0.5 - a_minus) * np.exp(1j * bt))

    # Same quantity through the cancellation identity; |.| is the contrast.
    c_eq_dot_over = -0.5 * w * w * t * _sinc(bt) * envelope
    delta_c = -2j * c_eq_dot_over / w
    s_ak = np.abs(delta_c)
    return AkCoherence(t=t, c_eq=c_eq, c_plus=c_plus, c_minus=c_minus, delta_c=delta_c, s_ak=s_ak)


def ak_coherence_mc(
    delta_tls: float,
    gamma: float,
    t_grid,
    n_trajectories: int,
    rng: np.random.Generator,
    initial: str = "equal",
    chunk: int = 20000,
) -> np.ndarray:
    """Monte Carlo estimate of the ensemble coherence C(t) = <exp(i phi)>/2.

    Each trajectory accumulates phase at +-pi*delta_tls rad/s and switches
    branch at symmetric rate gamma/2 per direction (exact exponential dwell
    sampling).  ``initial`` selects the branch at t = 0: "equal", "plus" or
    "minus".  Returns a complex array on ``t_grid``.
    """
    if initial not in ("equal", "plus", "minus"):
        raise ValueError("initial must be 'equal', 'plus' or 'minus'")
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    w = math.pi * delta_tls
    horizon = float(t_grid.max(initial=0.0))
    total = np.zeros(t_grid.shape, dtype=complex)
    remaining = n_trajectories
    while remaining > 0:
        n = min(chunk, remaining)
        remaining -= n
        if initial == "equal":
            s0 = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        else:
            s0 = np.full(n, 1.0 if initial == "plus" else -1.0)
        if gamma <= 0.0:
            phase = s0[:, None] * (w * t_grid)[None, :]
            total += np.exp(1j * phase).sum(axis=0)
            continue
        scale = 2.0 / gamma
        n_dwell = max(16, int(0.5 * gamma * horizon + 8.0 * math.sqrt(0.5 * gamma * horizon) + 8))
        dwells = rng.exponential(scale, size=(n, n_dwell))
        flips = np.cumsum(dwells, axis=1)
        while flips[:, -1].min() <= horizon:
            extra = rng.exponential(scale, size=(n, n_dwell))
            dwells = np.hstack([dwells, extra])
            flips = np.cumsum(dwells, axis=1)
        phase = np.zeros((n, t_grid.size))
        seg_start = np.zeros(n)
        sign = s0.copy()
        for j in range(dwells.shape[1]):
            seg_end = flips[:, j]
            overlap = np.clip(t_grid[None, :] - seg_start[:, None], 0.0, dwells[:, j][:, None])
            phase += sign[:, None] * overlap
            seg_start = seg_end
            sign = -sign
            if seg_start.min() > horizon:
                break
        total += np.exp(1j * w * phase).sum(axis=0)
    return 0.5 * total / n_trajectories


def p_err_bandwidth(
    delta_tls: float, gamma: float, alpha: float, t2: float, t_wall: float
) -> float:
    """Linear additive syndrome-error budget under a finite switching rate.

    (1/2) [(1 - alpha) + G/(2 delta_tls) + gamma t_wall] with
    G = 1/T2 + gamma/2, clamped to [0, 1/2].  The gamma*t_wall term is the
    probability that the estimate goes stale during the hardware dead time.
    """
    _check_bandwidth_args(delta_tls, gamma, alpha, t2, t_wall)
    g_eff = 1.0 / t2 + 0.5 * gamma
    raw = 0.5 * ((1.0 - alpha) + g_eff / (2.0 * delta_tls) + gamma * t_wall)
    return min(max(raw, 0.0), 0.5)


def p_err_bandwidth_exact(
    delta_tls: float, gamma: float, alpha: float, t2: float, t_wall: float
) -> float:
    """Pre-expansion form (1/2)[1 - alpha exp(-G/(2 delta_tls) - gamma t_wall)].

    G = 1/T2 + gamma/2; the probe time enters at its large-splitting value
    1/(2 delta_tls).
    """
    _check_bandwidth_args(delta_tls, gamma, alpha, t2, t_wall)
    g_eff = 1.0 / t2 + 0.5 * gamma
    raw = 0.5 * (1.0 - alpha * math.exp(-g_eff / (2.0 * delta_tls) - gamma * t_wall))
    return min(max(raw, 0.0), 0.5)


def _check_bandwidth_args(delta_tls, gamma, alpha, t2, t_wall):
    if delta_tls <= 0 or t2 <= 0:
        raise ValueError("delta_tls and t2 must be positive")
    if gamma < 0 or t_wall < 0:
        raise ValueError("gamma and t_wall must be nonnegative")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")


@dataclass(frozen=True)
class ImprovementMap:
    """Design-space map of log10[(1-F_blind)/(1-F_active)].

    ``splittings`` holds the normalized splitting 2 pi delta_tls / omega,
    ``switching`` the dimensionless product gamma * t_cyc with
    t_cyc = 1/(2 delta_tls) + t_wall.  ``values[i, j]`` corresponds to
    (splittings[i], switching[j]).  ``zero_contour`` lists, per splitting,
    the interpolated switching value where the improvement crosses zero
    (NaN where it does not cross inside the grid).
    """

    splittings: np.ndarray
    switching: np.ndarray
    values: np.ndarray
    zero_contour: np.ndarray


def improvement_cell(
    norm_splitting: float,
    gamma_t_cyc: float,
    alpha: float,
    t_pi: float,
    t2: float,
    t_wall: float,
) -> float:
    """One map cell: infidelity ratio of blind driving to active estimation.

    The blind arm drives midway between the modes (equal populations, the
    worst case); the active arm pays p_err from the linear bandwidth budget.
    """
    omega = math.pi / t_pi
    delta = norm_splitting * omega / (2.0 * math.pi)
    t_cyc = 1.0 / (2.0 * delta) + t_wall
    gamma = gamma_t_cyc / t_cyc
    p_err = p_err_bandwidth(delta, gamma, alpha, t2, t_wall)
    floor = 1.0 - alpha * math.exp(-t_pi / t2)
    coherent = (2.0 * math.pi * delta / omega) ** 2
    blind = floor + 0.25 * coherent
    active = floor + p_err * coherent
    return math.log10(blind / active)


def improvement_map(
    splittings,
    switching,
    alpha: float = 0.94,
    t_pi: float = 48e-9,
    t2: float = 61e-6,
    t_wall: float = 8e-6,
) -> ImprovementMap:
    """Evaluate :func:`improvement_cell` on a grid and trace the zero contour."""
    splittings = np.atleast_1d(np.asarray(splittings, dtype=float))
    switching = np.atleast_1d(np.asarray(switching, dtype=float))
    if np.any(splittings <= 0) or np.any(switching < 0):
        raise ValueError("normalized splittings must be positive, switching nonnegative")
    values = np.empty((splittings.size, switching.size))
    for i, x in enumerate(splittings):
        for j, y in enumerate(switching):
            values[i, j] = improvement_cell(x, y, alpha, t_pi, t2, t_wall)
    contour = np.full(splittings.size, np.nan)
    for i in range(splittings.size):
        row = values[i]
        for j in range(row.size - 1):
            a, b = row[j], row[j + 1]
            if a == 0.0:
                contour[i] = switching[j]
                break
            if a * b < 0.0:
                frac = a / (a - b)
                contour[i] = switching[j] + frac * (switching[j + 1] - switching[j])
                break
    return ImprovementMap(
        splittings=splittings, switching=switching, values=values, zero_contour=contour
    )
