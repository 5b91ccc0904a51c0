"""Fitting the model to measured histograms and estimating moments

All fits are weighted least squares with Poisson weights: the weight of a
bin is the reciprocal of its variance, floored at one count² so that empty
bins do not receive infinite weight. Model counts are exact bin integrals of
the pulse-convolved distributions.
"""

from weakbeam.exceptions import EmptyWindowError, FitError
from weakbeam.histogram import TimeHistogram
from weakbeam.pointer import bin_probabilities, mean_arrival_time
from weakbeam.types import PulseShape, Seconds, VSystemParams
from weakbeam.util import seconds_from_ns

from dataclasses import dataclass
from scipy.optimize import minimize_scalar, nnls
from typing import NamedTuple, Optional, Tuple

import logging
import math
import numpy as np


logger = logging.getLogger(__name__)

Window = Tuple[float, float]

_ridge = 1e-12
_max_condition = 1e12
_reweighting_passes = 2


@dataclass(frozen=True)
class AnalysisResult:
    """Outcome of fitting a histogram

    Parameters
    ----------
    scale : float
        Fitted amplitude, i.e. the number of postselected photons implied by
        the fit over the whole distribution.
    scale_se : float
        Standard error of `scale`.
    gamma_eff : float
        Effective decay rate in 1/s. For a scale-only fit this is the
        reciprocal of the model's exact mean arrival time.
    gamma_eff_se : float
        Standard error of `gamma_eff`, zero when it was not fitted.
    mean_arrival : Seconds
        Estimated mean arrival time with the pulse offset removed.
    mean_arrival_se : float
        Standard error of `mean_arrival` in seconds.
    chi2_reduced : float
        Reduced χ² of the fit.
    window : Tuple[float, float]
        The fit window [t_lo, t_hi] in seconds.
    background_fraction : Optional[float], optional
        Fraction of incoherent background found in the ε=0 reference, when
        one was used. Defaults to None.

    Raises
    ------
    ValueError
        Raised when the result violates its invariants.

    Attributes
    ----------
    scale
        See initialization parameter
    scale_se
        See initialization parameter
    gamma_eff
        See initialization parameter
    gamma_eff_se
        See initialization parameter
    mean_arrival
        See initialization parameter
    mean_arrival_se
        See initialization parameter
    chi2_reduced
        See initialization parameter
    window
        See initialization parameter
    background_fraction
        See initialization parameter
    """
    scale: float
    scale_se: float
    gamma_eff: float
    gamma_eff_se: float
    mean_arrival: Seconds
    mean_arrival_se: float
    chi2_reduced: float
    window: Window
    background_fraction: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.gamma_eff > 0:
            raise ValueError(f"Effective decay rate must be positive, got {self.gamma_eff}.")
        if not self.window[0] < self.window[1]:
            raise ValueError(f"Invalid fit window: {self.window}.")
        if min(self.scale_se, self.gamma_eff_se, self.mean_arrival_se) < 0:
            raise ValueError("Standard errors cannot be negative.")
        object.__setattr__(self, 'mean_arrival', Seconds(self.mean_arrival))


class LeastSquaresSolution(NamedTuple):
    coefficients: np.ndarray
    covariance: np.ndarray
    chi2: float


def poisson_weights(variances: np.ndarray) -> np.ndarray:
    return 1/np.maximum(variances, 1)


def weighted_least_squares(
    design: np.ndarray,
    counts: np.ndarray,
    variances: np.ndarray,
    nonnegative: bool=False,
) -> LeastSquaresSolution:
    """Solve a linear weighted least-squares problem by normal equations

    A ridge term of 1e-12 times the trace conditions the normal matrix.

    Parameters
    ----------
    design : np.ndarray
        Model columns, shape (n_bins, n_parameters).
    counts : np.ndarray
        Measured counts per bin.
    variances : np.ndarray
        Variance per bin, floored at one for the weights.
    nonnegative : bool, optional
        When True and the unconstrained solution has a negative coefficient,
        the problem is re-solved with non-negativity constraints. Defaults to
        False.

    Raises
    ------
    FitError
        Raised when the normal equations are singular, i.e. the columns are
        not linearly independent over the bins given.

    Returns
    -------
    LeastSquaresSolution
        The coefficients, their covariance (inverse normal matrix) and χ².
    """
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design[:, np.newaxis]
    weights = poisson_weights(variances)
    normal = design.T @ (weights[:, np.newaxis]*design)
    normal += _ridge*np.trace(normal)*np.eye(len(normal))
    if not np.all(np.isfinite(normal)) or np.trace(normal) == 0 or np.linalg.cond(normal) > _max_condition:
        raise FitError(
            "Normal equations are singular: the model columns are not independent "
            "over the fit window."
        )
    covariance = np.linalg.inv(normal)
    coefficients = covariance @ (design.T @ (weights*counts))

    if nonnegative and np.any(coefficients < 0):
        sqrt_w = np.sqrt(weights)
        coefficients, _ = nnls(design*sqrt_w[:, np.newaxis], counts*sqrt_w)

    residuals = counts - design @ coefficients
    chi2 = float(np.sum(weights*residuals**2))
    return LeastSquaresSolution(coefficients, covariance, chi2)


def _window_bins(hist: TimeHistogram, window: Window) -> np.ndarray:
    if not window[0] < window[1]:
        raise EmptyWindowError(f"Invalid analysis window: {window}.")
    mask = hist.window_mask(window)
    if not np.any(mask):
        raise EmptyWindowError(f"No histogram bins lie within the window {window}.")
    if not np.sum(hist.counts[mask]) > 0:
        raise EmptyWindowError(f"No counts in the window {window}.")
    return mask


def _degrees_of_freedom(n_bins: int, n_parameters: int) -> int:
    return max(n_bins - n_parameters, 1)


class MeanEstimate(NamedTuple):
    value: float
    se: float


def estimate_mean_arrival(
    hist: TimeHistogram,
    window: Optional[Window]=None,
    pulse: PulseShape=PulseShape.delta(),
) -> MeanEstimate:
    """Mean arrival time of the counts within a window

    Bin centers are weighted by the counts and the mean excitation time within
    the pulse is subtracted. The standard error propagates the per-bin
    variances through the ratio.

    Parameters
    ----------
    hist : TimeHistogram
        A background-subtracted, corrected histogram.
    window : Optional[Tuple[float, float]], optional
        The window [t_lo, t_hi] in seconds measured from the trigger. Defaults
        to the whole histogram.
    pulse : PulseShape, optional
        The excitation pulse whose mean offset is subtracted. Defaults to an
        impulsive excitation.

    Raises
    ------
    EmptyWindowError
        Raised when the window contains no counts.

    Returns
    -------
    MeanEstimate
        The mean and its standard error in seconds.
    """
    if window is None:
        window = (0, hist.window)
    mask = _window_bins(hist, window)
    t = hist.centers[mask]
    counts = hist.counts[mask]
    total = np.sum(counts)
    mean = float(np.sum(t*counts)/total)
    se = float(math.sqrt(np.sum((t - mean)**2*hist.variances[mask]))/total)
    return MeanEstimate(mean - pulse.mean_offset, se)


def fit_scale_only(
    hist: TimeHistogram,
    params: VSystemParams,
    window: Optional[Window]=None,
) -> AnalysisResult:
    """Fit the exact model with the scale as the only free parameter

    Parameters
    ----------
    hist : TimeHistogram
        A background-subtracted, corrected histogram.
    params : VSystemParams
        The known system parameters including the pulse shape.
    window : Optional[Tuple[float, float]], optional
        The fit window [t_lo, t_hi] in seconds. Defaults to the whole histogram.

    Raises
    ------
    EmptyWindowError
        Raised when the window contains no counts.

    Returns
    -------
    AnalysisResult
        The fitted scale, the reduced χ² over n−1 degrees of freedom and the
        mean arrival time estimated over the same window. The effective
        decay rate is the model's, 1/(exact mean), with zero error.
    """
    if window is None:
        window = (0, hist.window)
    mask = _window_bins(hist, window)
    model = bin_probabilities(hist.edges, params)[mask]
    counts = hist.counts[mask]
    solution = weighted_least_squares(model, counts, hist.variances[mask])
    mean = estimate_mean_arrival(hist, window, params.pulse)

    result = AnalysisResult(
        scale=float(solution.coefficients[0]),
        scale_se=float(math.sqrt(solution.covariance[0, 0])),
        gamma_eff=1/mean_arrival_time(params),
        gamma_eff_se=0,
        mean_arrival=Seconds(mean.value),
        mean_arrival_se=mean.se,
        chi2_reduced=solution.chi2/_degrees_of_freedom(len(counts), 1),
        window=window,
    )
    logger.info(
        f"Scale-only fit: scale {result.scale:.6g} ± {result.scale_se:.2g}, "
        f"χ²_red {result.chi2_reduced:.4g}, mean {result.mean_arrival.ns():.5g} ns"
    )
    return result


def _exponential_model(edges: np.ndarray, gamma: float, pulse: PulseShape) -> np.ndarray:
    # Natural decay is the postselected distribution for Δ=0, ε=π/2
    return bin_probabilities(edges, VSystemParams(gamma, 0, math.pi/2, pulse))


def decay_fit_window(
    params: VSystemParams,
    window: Window,
    lifetimes: float=1.0,
) -> Window:
    """The window of the free decay-rate fit within an analysis window

    The fit starts 2 ns after the end of the pulse and spans `lifetimes`
    natural lifetimes. The local decay rate of the postselected distribution
    drifts from (1 − 2Δ/(εΓ))·Γ at the start toward Γ at late times, so a
    short span keeps the fit in the regime of the first-order approximation.

    Parameters
    ----------
    params : VSystemParams
        Provides the natural rate Γ and the pulse duration.
    window : Tuple[float, float]
        The analysis window [t_lo, t_hi] in seconds.
    lifetimes : float, optional
        Length of the fit window in units of 1/Γ. Defaults to 1.

    Raises
    ------
    ValueError
        Raised when `lifetimes` is not positive.

    Returns
    -------
    Tuple[float, float]
        The fit window in seconds, clipped to the analysis window.
    """
    if not lifetimes > 0:
        raise ValueError(f"Invalid value for `lifetimes`: {lifetimes} (must be positive).")
    lo = max(window[0], params.pulse.duration + seconds_from_ns(2))
    return (lo, min(window[1], lo + lifetimes/params.gamma))


def fit_free_gamma(
    hist: TimeHistogram,
    params: VSystemParams,
    window: Optional[Window]=None,
) -> AnalysisResult:
    """Fit a pulse-convolved exponential with free scale and decay rate

    The rate is found by a bounded Brent (golden-section) search over
    [Γ/20, 20Γ], solving for the scale in closed form at each step. The
    search is repeated with the weights taken from the counts predicted by
    the previous fit rather than the observed ones, which would pull the
    rate upward where counts are low. Errors follow from the Gauss-Newton
    approximation of the covariance with a finite-difference derivative
    with respect to the rate.

    Parameters
    ----------
    hist : TimeHistogram
        A background-subtracted, corrected histogram.
    params : VSystemParams
        Provides the natural rate Γ, which sets the search interval, and the
        pulse shape.
    window : Optional[Tuple[float, float]], optional
        The fit window in seconds. Defaults to one natural lifetime starting
        2 ns after the end of the pulse, see `decay_fit_window`.

    Raises
    ------
    EmptyWindowError
        Raised when the window contains no counts.
    FitError
        Raised when the search does not converge or ends at a bound.

    Returns
    -------
    AnalysisResult
        The fitted scale and effective rate with standard errors. The mean
        arrival time is estimated over [0, t_hi].
    """
    if window is None:
        window = decay_fit_window(params, (0, hist.window))
    mask = _window_bins(hist, window)
    bins = np.flatnonzero(mask)
    edges = hist.edges[bins[0]:bins[-1] + 2]
    counts = hist.counts[mask]
    variances = hist.variances[mask]
    # Variance added by subtraction and correction on top of the counts
    excess = np.maximum(variances - counts, 0)

    def model_at(gamma: float) -> np.ndarray:
        return _exponential_model(edges, gamma, params.pulse)

    def scale_at(model: np.ndarray, weights: np.ndarray) -> float:
        return float(np.sum(weights*model*counts)/np.sum(weights*model**2))

    def chi2(gamma: float, weights: np.ndarray) -> float:
        model = model_at(gamma)
        return float(np.sum(weights*(counts - scale_at(model, weights)*model)**2))

    lo, hi = params.gamma/20, 20*params.gamma
    weights = poisson_weights(variances)
    for iteration in range(_reweighting_passes + 1):
        optimum = minimize_scalar(
            chi2,
            args=(weights,),
            bounds=(lo, hi),
            method='bounded',
            options={'xatol': 1e-9*params.gamma, 'maxiter': 500},
        )
        if not optimum.success:
            raise FitError(f"Decay-rate fit did not converge: {optimum.message}")
        gamma_eff = float(optimum.x)
        if min(gamma_eff - lo, hi - gamma_eff) < 1e-6*params.gamma:
            raise FitError(f"Decay-rate fit ended at the search bound ({gamma_eff:.4g}/s).")
        if iteration < _reweighting_passes:
            model = model_at(gamma_eff)
            predicted = np.maximum(scale_at(model, weights)*model, 0)
            weights = poisson_weights(predicted + excess)

    model = model_at(gamma_eff)
    scale = scale_at(model, weights)
    step = 1e-6*gamma_eff
    derivative = (model_at(gamma_eff + step) - model_at(gamma_eff - step))/(2*step)
    jacobian = np.column_stack([model, scale*derivative])
    normal = jacobian.T @ (weights[:, np.newaxis]*jacobian)
    try:
        covariance = np.linalg.inv(normal)
    except np.linalg.LinAlgError as e:
        raise FitError(f"Decay-rate fit covariance is singular: {e}")

    mean = estimate_mean_arrival(hist, (0, window[1]), params.pulse)
    result = AnalysisResult(
        scale=scale,
        scale_se=float(math.sqrt(max(covariance[0, 0], 0))),
        gamma_eff=gamma_eff,
        gamma_eff_se=float(math.sqrt(max(covariance[1, 1], 0))),
        mean_arrival=Seconds(mean.value),
        mean_arrival_se=mean.se,
        chi2_reduced=float(optimum.fun)/_degrees_of_freedom(len(counts), 2),
        window=window,
    )
    logger.info(
        f"Free-rate fit: Γ_eff/Γ = {gamma_eff/params.gamma:.5g} ± "
        f"{result.gamma_eff_se/params.gamma:.2g}, χ²_red {result.chi2_reduced:.4g}"
    )
    return result

