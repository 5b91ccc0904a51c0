"""Fundamental limits on estimating the Zeeman splitting from arrival times

The bounds and the maximum-likelihood estimator here both use the emission
delay distribution for an impulsive excitation, so that the estimator is the
one described by the bound.
"""

from weakbeam.exceptions import DegenerateDistributionError, FitError
from weakbeam.pointer import norm_integral
from weakbeam.types import VSystemParams
from weakbeam.util import cyclic_from_angular

from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from typing import Optional, Tuple

import math
import numpy as np


def _log_norm_derivative(params: VSystemParams) -> float:
    # ∂ ln C/∂Δ = −∂ ln(1/C)/∂Δ
    g, d, e = params.gamma, params.delta, params.epsilon
    numerator = g**2*math.sin(e)**2 + 2*d**2 + g*d*math.sin(2*e)
    denominator = g*(g**2 + 4*d**2)
    return -((4*d + g*math.sin(2*e))/numerator - 8*g*d/denominator)


def fisher_information(params: VSystemParams) -> float:
    """Fisher information about Δ carried by a single detected photon

    Evaluated by adaptive quadrature of (∂_Δ ln P)²·P over the postselected
    emission-delay distribution P.

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
        The information in s² (per photon).
    """
    if params.is_degenerate:
        raise DegenerateDistributionError("No photon passes postselection.")
    g, d, e = params.gamma, params.delta, params.epsilon
    C = 1/norm_integral(g, d, e)
    log_norm_derivative = _log_norm_derivative(params)

    # In units of the lifetime, u = Γt
    def integrand(u: float) -> float:
        phase = d*u/g + e
        score = log_norm_derivative*math.sin(phase) + 2*(u/g)*math.cos(phase)
        return math.exp(-u)*score**2

    value, _ = quad(integrand, 0, np.inf, limit=500, epsabs=0, epsrel=1e-10)
    information = C*value/g
    # Rounding of sin(2ε) and cos(π/2) leaves a residue at stationary points.
    return information if information*g**2 > 1e-20 else 0.0


def crlb_sensitivity(params: VSystemParams, count_rate: float) -> float:
    """Cramér-Rao bound on the splitting, as a cyclic frequency

    Parameters
    ----------
    params : VSystemParams
        The system parameters with ε > 0. The pulse shape is ignored.
    count_rate : float
        Rate of detected postselected photons in 1/s.

    Raises
    ------
    ValueError
        Raised when ε=0 or the rate is not positive.
    DegenerateDistributionError
        Raised when Δ=0 and ε=0.

    Returns
    -------
    float
        The smallest achievable standard deviation of Δ/2π after one second
        of counting, in Hz/√Hz. Infinite when the photons carry no information.
    """
    if params.epsilon <= 0:
        raise ValueError("The sensitivity bound requires a positive postselection angle.")
    if not count_rate > 0:
        raise ValueError(f"Count rate must be positive, got {count_rate}.")
    information = fisher_information(params)
    if information == 0:
        return math.inf
    return cyclic_from_angular(1/math.sqrt(information*count_rate))


def _negative_log_likelihood(delta: float, times: np.ndarray, params: VSystemParams) -> float:
    g, e = params.gamma, params.epsilon
    if delta == 0 and e == 0:
        return math.inf
    sines = np.abs(np.sin(delta*times + e))
    if np.any(sines == 0):
        return math.inf
    return float(
        len(times)*math.log(norm_integral(g, delta, e)) + g*np.sum(times) - 2*np.sum(np.log(sines))
    )


def estimate_delta_ml(
    times: np.ndarray,
    params: VSystemParams,
    bounds: Optional[Tuple[float, float]]=None,
) -> float:
    """Maximum-likelihood estimate of the splitting from emission delays

    Γ and ε are taken as known and the likelihood of the postselected
    distribution is maximized over Δ by a bounded scalar search.

    Parameters
    ----------
    times : np.ndarray
        Emission delays in seconds after an impulsive excitation.
    params : VSystemParams
        Provides Γ and ε. The splitting is ignored.
    bounds : Optional[Tuple[float, float]], optional
        Search interval for Δ in rad/s. Defaults to [0, Γ].

    Raises
    ------
    ValueError
        Raised when no times are given.
    FitError
        Raised when the search does not converge.

    Returns
    -------
    float
        The estimate of Δ in rad/s.
    """
    times = np.asarray(times, dtype=float)
    if len(times) == 0:
        raise ValueError("Cannot estimate the splitting without arrival times.")
    if bounds is None:
        bounds = (0, params.gamma)
    optimum = minimize_scalar(
        _negative_log_likelihood,
        bounds=bounds,
        args=(times, params),
        method='bounded',
        options={'xatol': 1e-10*params.gamma},
    )
    if not optimum.success:
        raise FitError(f"Likelihood maximization did not converge: {optimum.message}")
    return float(optimum.x)
