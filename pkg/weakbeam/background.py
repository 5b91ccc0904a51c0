"""Estimation and subtraction of the incoherent background

Photons from decay channels outside the ideal V system contribute a
pure-exponential component which does not depend on the postselection
angle. It is most prominent at ε=0, where the coherent signal is weakest, so
references recorded at ε=0 before and after each measurement are fitted with
the two components and the exponential one is subtracted from the data.
"""

from weakbeam.exceptions import DegenerateDistributionError, FitError, ReferenceStabilityError
from weakbeam.fitting import Window, weighted_least_squares
from weakbeam.histogram import TimeHistogram
from weakbeam.pointer import bin_probabilities
from weakbeam.types import VSystemParams

from dataclasses import dataclass, replace
from typing import Optional

import logging
import math
import numpy as np


logger = logging.getLogger(__name__)

_stability_sigmas = 3


@dataclass(frozen=True)
class ReferenceFit:
    """Decomposition of an ε=0 reference into background and coherent signal

    Parameters
    ----------
    exp_profile : np.ndarray
        Probability per bin of the pulse-convolved natural decay.
    coherent_profile : np.ndarray
        Probability per bin of the pulse-convolved postselected distribution at ε=0.
    A : float
        Number of background photons in the reference.
    B : float
        Number of coherent signal photons in the reference.
    covariance : np.ndarray
        Covariance matrix of (A, B).
    n_shots : int
        Number of triggers of the reference.
    bin_width : float
        Bin width of the reference histogram in seconds.

    Attributes
    ----------
    exp_profile
        See initialization parameter
    coherent_profile
        See initialization parameter
    A
        See initialization parameter
    B
        See initialization parameter
    covariance
        See initialization parameter
    n_shots
        See initialization parameter
    bin_width
        See initialization parameter
    """
    exp_profile: np.ndarray
    coherent_profile: np.ndarray
    A: float
    B: float
    covariance: np.ndarray
    n_shots: int
    bin_width: float

    def __post_init__(self) -> None:
        if self.A < 0 or self.B < 0:
            raise ValueError(f"Reference amplitudes must be non-negative, got A={self.A}, B={self.B}.")
        if self.n_shots < 1:
            raise ValueError("Reference must contain at least one shot.")

    @property
    def exp_component(self) -> np.ndarray:
        """Background counts per bin"""
        return self.A*self.exp_profile

    @property
    def coherent_component(self) -> np.ndarray:
        """Coherent signal counts per bin"""
        return self.B*self.coherent_profile

    @property
    def A_se(self) -> float:
        return math.sqrt(max(self.covariance[0, 0], 0))

    @property
    def B_se(self) -> float:
        return math.sqrt(max(self.covariance[1, 1], 0))

    @property
    def background_fraction(self) -> float:
        """Fraction of background among the detected reference photons"""
        total = self.A + self.B
        return self.A/total if total > 0 else 0.0

    @property
    def background_per_shot(self) -> float:
        return self.A/self.n_shots


def fit_reference(
    hist: TimeHistogram,
    params: VSystemParams,
    window: Optional[Window]=None,
) -> ReferenceFit:
    """Fit an ε=0 reference with a background and a coherent component

    The counts are fitted as A·(natural decay) + B·(postselected distribution
    at ε=0), both convolved with the pulse, with Γ and Δ fixed. Coefficients
    are constrained to be non-negative when the unconstrained solution is not.

    Parameters
    ----------
    hist : TimeHistogram
        A corrected histogram recorded at ε=0.
    params : VSystemParams
        Provides Γ, Δ and the pulse shape. The postselection angle is ignored.
    window : Optional[Tuple[float, float]], optional
        The fit window in seconds. Defaults to the whole histogram.

    Raises
    ------
    FitError
        Raised when the two components cannot be separated, e.g. for Δ=0 or a
        window which is too short.

    Returns
    -------
    ReferenceFit
        The fitted amplitudes and both components over the whole histogram.
    """
    reference = replace(params, epsilon=0)
    natural = VSystemParams(params.gamma, 0, math.pi/2, params.pulse)
    try:
        coherent_profile = bin_probabilities(hist.edges, reference)
    except DegenerateDistributionError as e:
        raise FitError(f"Reference components are not separable: {e}")
    exp_profile = bin_probabilities(hist.edges, natural)

    mask = np.ones(hist.n_bins, dtype=bool) if window is None else hist.window_mask(window)
    if not np.any(mask):
        raise FitError(f"No histogram bins lie within the reference window {window}.")
    design = np.column_stack([exp_profile[mask], coherent_profile[mask]])
    solution = weighted_least_squares(
        design, hist.counts[mask], hist.variances[mask], nonnegative=True
    )
    A, B = (max(float(c), 0.0) for c in solution.coefficients)

    fit = ReferenceFit(
        exp_profile,
        coherent_profile,
        A,
        B,
        solution.covariance,
        hist.n_shots,
        hist.bin_width,
    )
    logger.info(
        f"Reference fit: background {A:.6g} ± {fit.A_se:.2g}, coherent {B:.6g} ± "
        f"{fit.B_se:.2g} ({100*fit.background_fraction:.3g}% background)"
    )
    return fit


def subtract_background(
    data: TimeHistogram,
    ref_before: ReferenceFit,
    ref_after: ReferenceFit,
    tolerance: float=0.05,
) -> TimeHistogram:
    """Subtract the background found in the references around a measurement

    The background of the two references is averaged per shot and rescaled to
    the number of shots of the data, as it does not depend on the
    postselection angle. Its uncertainty is added to the variance channel.

    Parameters
    ----------
    data : TimeHistogram
        The corrected measurement.
    ref_before : ReferenceFit
        Reference recorded before the measurement.
    ref_after : ReferenceFit
        Reference recorded after the measurement.
    tolerance : float, optional
        Relative difference of the background per shot between the two
        references which is always accepted. Defaults to 0.05.

    Raises
    ------
    ValueError
        Raised when the references were binned differently from the data.
    ReferenceStabilityError
        Raised when the references differ by more than both the tolerance
        and 3 standard errors of the difference.

    Returns
    -------
    TimeHistogram
        The data with the background removed, clipped at zero.
    """
    for ref in (ref_before, ref_after):
        if ref.bin_width != data.bin_width or len(ref.exp_profile) != data.n_bins:
            raise ValueError(
                f"Reference binning ({len(ref.exp_profile)} bins of {ref.bin_width} s) differs "
                f"from the data ({data.n_bins} bins of {data.bin_width} s)."
            )

    a_before, a_after = ref_before.background_per_shot, ref_after.background_per_shot
    average = (a_before + a_after)/2
    difference = abs(a_before - a_after)
    difference_se = math.hypot(
        ref_before.A_se/ref_before.n_shots, ref_after.A_se/ref_after.n_shots
    )
    if average > 0 and difference > max(tolerance*average, _stability_sigmas*difference_se):
        raise ReferenceStabilityError(
            f"Background per shot differs between the references by "
            f"{100*difference/average:.3g}% (tolerance {100*tolerance:.3g}%, "
            f"{difference/difference_se if difference_se > 0 else math.inf:.3g} standard errors)."
        )

    background = data.n_shots*(
        ref_before.exp_component/ref_before.n_shots + ref_after.exp_component/ref_after.n_shots
    )/2
    background_variance = (data.n_shots/2)**2*(
        (ref_before.exp_profile*ref_before.A_se/ref_before.n_shots)**2 +
        (ref_after.exp_profile*ref_after.A_se/ref_after.n_shots)**2
    )
    logger.info(f"Subtracting {np.sum(background):.6g} background counts")
    return replace(
        data,
        counts=np.maximum(data.counts - background, 0),
        variances=data.variances + background_variance,
    )
