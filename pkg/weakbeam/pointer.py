"""Exact and approximate postselected photon arrival-time statistics

The emission delay of a photon which passed postselection is distributed as

    P(t) = C·e^{−Γt}·sin²(Δt + ε),  t ≥ 0,

with the normalization C in closed form. The closed forms in this module are
written without the catastrophic cancellation of the textbook expressions
(which subtract two nearly equal terms in the weak regime), and each of them
is tested against adaptive quadrature.

All functions accepting a time ``t`` are vectorized: they take either a float
or a numpy array and return the same kind of object.
"""

from weakbeam.exceptions import DegenerateDistributionError, OrthogonalStatesError
from weakbeam.exceptions import WeakRegimeWarning
from weakbeam.types import PolarizationState, PulseKind, VSystemParams, WeakValue
from weakbeam.types import postselect_angle, preselected_state

from scipy.optimize import brentq
from typing import NamedTuple, Union

import math
import numpy as np
import warnings


FloatOrArray = Union[float, np.ndarray]

_overlap_tolerance = 1e-12


def _as_output(value: np.ndarray) -> FloatOrArray:
    return value if value.ndim else float(value)


def weak_value(pre: PolarizationState, post: PolarizationState) -> WeakValue:
    """Weak value of σz for the given pre- and postselected states

    Parameters
    ----------
    pre : PolarizationState
        The preselected state |ψ⟩.
    post : PolarizationState
        The postselection, given by the coefficients of the projecting bra
        ⟨φ| = φ₊⟨+| + φ₋⟨−|. With this convention the analyser of
        `postselect_angle` yields A_w = i·cot ε and the postselected delay
        distribution e^{−Γt}·sin²(Δt + ε).

    Raises
    ------
    OrthogonalStatesError
        Raised when |⟨φ|ψ⟩| ≤ 1e-12 and the weak value is undefined.

    Returns
    -------
    WeakValue
        ⟨φ|σz|ψ⟩/⟨φ|ψ⟩ with σz = |+⟩⟨+| − |−⟩⟨−|.
    """
    overlap = post.c_plus*pre.c_plus + post.c_minus*pre.c_minus
    if abs(overlap) <= _overlap_tolerance:
        raise OrthogonalStatesError(
            f"The weak value is undefined for orthogonal states (overlap {abs(overlap):.3g})."
        )
    sigma_z = post.c_plus*pre.c_plus - post.c_minus*pre.c_minus
    value = sigma_z/overlap
    return WeakValue(value.real, value.imag)


def _check_degenerate(params: VSystemParams) -> None:
    if params.is_degenerate:
        raise DegenerateDistributionError(
            "No photon passes postselection when both the splitting and the "
            "postselection angle are zero."
        )


def norm_integral(gamma: float, delta: float, angle: float) -> float:
    """The integral ∫₀^∞ e^{−Γt}·sin²(Δt + angle) dt, i.e. 1/C"""
    return (
        gamma**2*math.sin(angle)**2 + 2*delta**2 + gamma*delta*math.sin(2*angle)
    )/(gamma*(gamma**2 + 4*delta**2))


def _survival_shape(gamma: float, delta: float, phase: np.ndarray) -> np.ndarray:
    # e^{Γt}·∫_t^∞ e^{−Γu}·sin²(Δu + ε) du as a function of the phase Δt + ε
    return (
        gamma**2*np.sin(phase)**2 + 2*delta**2 + gamma*delta*np.sin(2*phase)
    )/(gamma*(gamma**2 + 4*delta**2))


def closed_form_norm(params: VSystemParams) -> float:
    """Normalization constant C of the postselected arrival-time distribution

    The reciprocal 1/C = ½[1/Γ − (Γcos2ε − 2Δsin2ε)/(Γ²+4Δ²)] is evaluated in
    the algebraically equivalent form (Γ²sin²ε + 2Δ² + ΓΔsin2ε)/(Γ(Γ²+4Δ²)),
    which is accurate for small ε and Δ/Γ.

    Parameters
    ----------
    params : VSystemParams
        The system parameters. The pulse shape is ignored.

    Raises
    ------
    DegenerateDistributionError
        Raised when Δ=0 and ε=0.

    Returns
    -------
    float
        The normalization C in 1/s.
    """
    _check_degenerate(params)
    return 1/norm_integral(params.gamma, params.delta, params.epsilon)


def pointer_pdf(t: FloatOrArray, params: VSystemParams) -> FloatOrArray:
    """Probability density of the emission delay of a postselected photon

    This is the distribution for an impulsive excitation at t=0, the pulse
    shape of `params` is ignored. See `convolved_pdf` for the distribution of
    arrival times after a finite excitation pulse.

    Parameters
    ----------
    t : FloatOrArray
        Time(s) after excitation in seconds.
    params : VSystemParams
        The system parameters.

    Raises
    ------
    DegenerateDistributionError
        Raised when Δ=0 and ε=0.

    Returns
    -------
    FloatOrArray
        The density in 1/s, zero for negative times.
    """
    C = closed_form_norm(params)
    t = np.asarray(t, dtype=float)
    t_pos = np.maximum(t, 0)
    value = C*np.exp(-params.gamma*t_pos)*np.sin(params.delta*t_pos + params.epsilon)**2
    return _as_output(np.where(t < 0, 0.0, value))


def complementary_pdf(t: FloatOrArray, params: VSystemParams) -> FloatOrArray:
    """Normalized emission-delay density at the other output port

    The photons rejected by the polarizer are distributed according to
    e^{−Γt}·cos²(Δt + ε), i.e. the postselection angle shifted by π/2.
    Weighted by the acceptance probabilities of the two ports, the densities
    add up to the natural decay Γe^{−Γt}.

    Raises
    ------
    DegenerateDistributionError
        Raised when Δ=0 and ε=π/2, in which case no photon exits this port.
    """
    if params.delta == 0 and params.epsilon == math.pi/2:
        raise DegenerateDistributionError(
            "No photon exits the complementary port for zero splitting and ε=π/2."
        )
    angle = params.epsilon + math.pi/2
    norm = norm_integral(params.gamma, params.delta, angle)
    t = np.asarray(t, dtype=float)
    t_pos = np.maximum(t, 0)
    value = np.exp(-params.gamma*t_pos)*np.sin(params.delta*t_pos + angle)**2/norm
    return _as_output(np.where(t < 0, 0.0, value))


def natural_decay(t: FloatOrArray, gamma: float) -> FloatOrArray:
    """The unconditioned emission-delay density Γe^{−Γt}, zero for t<0"""
    t = np.asarray(t, dtype=float)
    return _as_output(np.where(t < 0, 0.0, gamma*np.exp(-gamma*np.maximum(t, 0))))


def survival(t: FloatOrArray, params: VSystemParams) -> FloatOrArray:
    """Probability that the emission delay exceeds `t`

    Evaluated in closed form, S(t) = C·e^{−Γt}·h(Δt+ε), where h is the
    normalization integral with ε replaced by the running phase. Equal to 1
    for t ≤ 0. The pulse shape of `params` is ignored.

    Raises
    ------
    DegenerateDistributionError
        Raised when Δ=0 and ε=0.
    """
    C = closed_form_norm(params)
    t = np.asarray(t, dtype=float)
    t_pos = np.maximum(t, 0)
    value = C*np.exp(-params.gamma*t_pos)*_survival_shape(
        params.gamma, params.delta, params.delta*t_pos + params.epsilon
    )
    return _as_output(np.where(t <= 0, 1.0, value))


def _survival_integral(lo: np.ndarray, hi: np.ndarray, params: VSystemParams) -> np.ndarray:
    # ∫_lo^hi S(t) dt for 0 ≤ lo ≤ hi
    gamma = params.gamma
    z = complex(gamma, -2*params.delta)
    phase = np.exp(2j*params.epsilon)
    width = hi - lo
    exp_part = -np.exp(-gamma*lo)*np.expm1(-gamma*width)/gamma**2
    osc_part = (phase*np.exp(-z*lo)*(-np.expm1(-z*width))/z**2).real
    return closed_form_norm(params)*(exp_part - osc_part)/2


def _convolved_survival(t: np.ndarray, params: VSystemParams) -> np.ndarray:
    # Probability that the arrival time (excitation time plus delay) exceeds t
    if params.pulse.kind == PulseKind.DELTA:
        return np.asarray(survival(t, params))

    T = params.pulse.duration
    t_pos = np.maximum(t, 0)
    rising = (T - t_pos + _survival_integral(np.zeros_like(t_pos), t_pos, params))/T
    tail_lo = np.maximum(t_pos - T, 0)
    tail = _survival_integral(tail_lo, np.maximum(t_pos, tail_lo), params)/T
    return np.where(t <= 0, 1.0, np.where(t < T, rising, tail))


def convolved_pdf(t: FloatOrArray, params: VSystemParams) -> FloatOrArray:
    """Arrival-time density including the excitation pulse shape

    For a square pulse of duration T the excitation time is uniform on
    [0, T] and the convolution is evaluated analytically as
    (S(max(t−T, 0)) − S(t))/T. For an impulsive excitation this is identical
    to `pointer_pdf`.

    Parameters
    ----------
    t : FloatOrArray
        Time(s) since the start of the excitation pulse in seconds.
    params : VSystemParams
        The system parameters including the pulse shape.

    Raises
    ------
    DegenerateDistributionError
        Raised when Δ=0 and ε=0.

    Returns
    -------
    FloatOrArray
        The density in 1/s.
    """
    if params.pulse.kind == PulseKind.DELTA:
        return pointer_pdf(t, params)

    T = params.pulse.duration
    t = np.asarray(t, dtype=float)
    value = (
        np.asarray(survival(np.maximum(t - T, 0), params)) - np.asarray(survival(t, params))
    )/T
    return _as_output(np.where(t <= 0, 0.0, value))


def convolved_cdf(t: FloatOrArray, params: VSystemParams) -> FloatOrArray:
    """Cumulative distribution of arrival times including the pulse shape"""
    t = np.asarray(t, dtype=float)
    return _as_output(1 - _convolved_survival(t, params))


def bin_probabilities(edges: np.ndarray, params: VSystemParams) -> np.ndarray:
    """Probability of a postselected photon arriving in each time bin

    The probabilities are exact integrals of `convolved_pdf` over the bins,
    computed as differences of the analytic survival function so that they
    remain accurate in the far tail.

    Parameters
    ----------
    edges : np.ndarray
        Strictly increasing bin edges in seconds, one more than the number of bins.
    params : VSystemParams
        The system parameters including the pulse shape.

    Raises
    ------
    ValueError
        Raised when the edges are not strictly increasing.
    DegenerateDistributionError
        Raised when Δ=0 and ε=0.

    Returns
    -------
    np.ndarray
        Array of bin probabilities, one shorter than `edges`.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("Bin edges must be a strictly increasing array of at least two values.")
    survival_at_edges = _convolved_survival(edges, params)
    return np.maximum(survival_at_edges[:-1] - survival_at_edges[1:], 0)


def mean_arrival_time(params: VSystemParams) -> float:
    """Exact mean of the postselected emission delay

    The first moment ½[1/Γ² − Re(e^{2iε}/(Γ−2iΔ)²)] of e^{−Γt}sin²(Δt+ε) is
    evaluated in a form free of cancellation and divided by the
    normalization integral. The pulse shape of `params` is ignored.

    Parameters
    ----------
    params : VSystemParams
        The system parameters.

    Raises
    ------
    DegenerateDistributionError
        Raised when Δ=0 and ε=0.

    Returns
    -------
    float
        The mean in seconds.
    """
    _check_degenerate(params)
    g, d, e = params.gamma, params.delta, params.epsilon
    s2 = math.sin(e)**2
    D = g**2 + 4*d**2
    first_moment = (
        12*g**2*d**2 + 16*d**4 + 2*g**2*(g**2 - 4*d**2)*s2 + 4*g**3*d*math.sin(2*e)
    )/(2*g**2*D**2)
    return first_moment/norm_integral(g, d, e)


def arrival_variance(params: VSystemParams) -> float:
    """Exact variance of the postselected emission delay in s²

    For the natural decay (Δ=0) this is 1/Γ², the variance entering the
    weak-value expression for the mean shift.
    """
    _check_degenerate(params)
    g, d, e = params.gamma, params.delta, params.epsilon
    z = complex(g, -2*d)
    second_moment = (2/g**3 - (2*np.exp(2j*e)/z**3).real)/2
    mean = mean_arrival_time(params)
    return float(second_moment/norm_integral(g, d, e) - mean**2)


def acceptance_probability(params: VSystemParams) -> float:
    """Fraction of emitted photons which pass the postselection polarizer

    Equal to Γ/C. In the weak regime it is ≈ ε², the price paid in signal for
    the amplification. Returns zero (rather than raising) when no photon can
    pass.
    """
    return params.gamma*norm_integral(params.gamma, params.delta, params.epsilon)


class ApproxDecayRate(NamedTuple):
    """The first-order effective decay rate and whether its assumptions hold

    Attributes
    ----------
    gamma_eff : float
        The effective decay rate (1 − 2Δ/(εΓ))·Γ in 1/s.
    valid : bool
        Whether Δ/Γ ≪ ε holds, taken as Δ/Γ ≤ ε/10.
    """
    gamma_eff: float
    valid: bool


def _first_order_valid(params: VSystemParams) -> bool:
    return params.epsilon > 0 and params.delta/params.gamma <= params.epsilon/10


def approx_decay_rate(params: VSystemParams) -> ApproxDecayRate:
    """Effective decay rate of the postselected distribution to first order

    Expanding sin²(Δt+ε) ≈ sin²ε·e^{2Δt·cot ε} for small Δt gives an
    exponential with the rate (1 − 2Δ/(εΓ))·Γ when additionally ε ≪ 1.

    Parameters
    ----------
    params : VSystemParams
        The system parameters.

    Raises
    ------
    ValueError
        Raised when ε=0.

    Returns
    -------
    ApproxDecayRate
        The rate and a validity indicator, which the caller should inspect.
    """
    if params.epsilon <= 0:
        raise ValueError("The approximate decay rate requires a positive postselection angle.")
    gamma_eff = (1 - 2*params.delta/(params.epsilon*params.gamma))*params.gamma
    return ApproxDecayRate(gamma_eff, _first_order_valid(params))


def mean_shift(params: VSystemParams) -> float:
    """First-order shift of the mean arrival time, 2Δ·cot(ε)/Γ²

    This equals 2Δ·Var(P₀)·Im A_w with the natural-decay variance 1/Γ² and the
    weak value A_w = i·cot ε. A `WeakRegimeWarning` is issued when Δ/Γ is
    not small compared to ε.

    Raises
    ------
    ValueError
        Raised when ε=0.
    """
    if params.epsilon <= 0:
        raise ValueError("The mean shift requires a positive postselection angle.")
    if not _first_order_valid(params):
        warnings.warn(
            f"Δ/Γ = {params.delta/params.gamma:.3g} is not small compared to "
            f"ε = {params.epsilon:.3g}, the first-order mean shift is inaccurate.",
            WeakRegimeWarning
        )
    return 2*params.delta/(math.tan(params.epsilon)*params.gamma**2)


def weak_value_of_params(params: VSystemParams) -> WeakValue:
    """Weak value for the prepared state and the postselection of `params`"""
    return weak_value(preselected_state(), postselect_angle(params.epsilon))


def doubling_epsilon(gamma: float, delta: float) -> float:
    """Postselection angle at which the mean arrival time is doubled

    Locates the ε at which the exact mean arrival time equals 2/Γ by a
    bracketing root search on [0, π/2].

    Raises
    ------
    ValueError
        Raised when the mean arrival time does not reach 2/Γ for any ε, e.g.
        for zero splitting.
    """
    def excess(epsilon: float) -> float:
        return mean_arrival_time(VSystemParams(gamma, delta, epsilon)) - 2/gamma

    if delta <= 0 or excess(0) <= 0 or excess(math.pi/2) >= 0:
        raise ValueError(
            f"The mean arrival time cannot be doubled for Δ/Γ = {delta/gamma:.3g}."
        )
    return float(brentq(excess, 0, math.pi/2, xtol=1e-14))


def quantum_beat_zeros(params: VSystemParams, t_max: float) -> np.ndarray:
    """Times at which the postselected emission density vanishes

    The zeros of sin²(Δt+ε) lie at t = (kπ − ε)/Δ. They are resolved as
    quantum beats when Δ ≫ Γ.

    Parameters
    ----------
    params : VSystemParams
        The system parameters. The splitting must be positive.
    t_max : float
        Upper limit of the returned times in seconds.

    Raises
    ------
    ValueError
        Raised when the splitting is zero.

    Returns
    -------
    np.ndarray
        The zeros in [0, t_max] in increasing order.
    """
    if params.delta <= 0:
        raise ValueError("Quantum beats require a non-zero Zeeman splitting.")
    k_min = math.ceil(params.epsilon/math.pi)
    k_max = math.floor((params.delta*t_max + params.epsilon)/math.pi)
    k = np.arange(k_min, k_max + 1)
    return (k*math.pi - params.epsilon)/params.delta
