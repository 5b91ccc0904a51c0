"""The data-reduction chain from detector events to an analysis result

The stages run in the order

    filter → histogram → correct → reference → subtract → fit → moments

Afterpulses are removed by enforcing an effective dead time, for which the
histogram is then corrected. The incoherent background is found by fitting
references recorded at ε=0 before and after the measurement and removed
from the data, which is finally fitted with the exact model. Any error
raised within a stage is re-raised as a `PipelineStageError` naming it.

The histogram after each stage is kept, so that every intermediate result
can be written out for inspection.
"""

from weakbeam.background import fit_reference, ReferenceFit, subtract_background
from weakbeam.corrections import deadtime_correct, filter_afterpulses
from weakbeam.events import EventStream
from weakbeam.exceptions import InputFormatError, PipelineStageError
from weakbeam.fitting import AnalysisResult, decay_fit_window, estimate_mean_arrival
from weakbeam.fitting import fit_free_gamma, fit_scale_only, Window
from weakbeam.histogram import histogram, smooth_gaussian, TimeHistogram
from weakbeam.types import Seconds, VSystemParams

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Tuple, Union

import logging
import numpy as np


logger = logging.getLogger(__name__)

PipelineInput = Union[EventStream, TimeHistogram]


@dataclass(frozen=True)
class AnalysisOptions:
    """Options of the analysis pipeline

    Parameters
    ----------
    window : Tuple[float, float]
        The window [t_lo, t_hi] in seconds for the fits and the mean.
    afterpulse_cutoff : Optional[float], optional
        Effective dead time in seconds enforced on the events and corrected
        for in the histogram. When None, neither filtering nor correction
        takes place, as appropriate for an ideal detector. Defaults to None.
    subtract_background : bool, optional
        Whether the background found in the references is subtracted.
        Defaults to False.
    reference_tolerance : float, optional
        Maximum relative difference of the background per shot between the
        two references. Defaults to 0.05.
    smooth_fwhm : Optional[float], optional
        When given, a smoothed copy of the final histogram is kept for
        display. It is never used for fitting. Defaults to None.
    decay_fit_lifetimes : float, optional
        Length of the free decay-rate fit window in natural lifetimes, see
        `decay_fit_window`. Defaults to 1.

    Raises
    ------
    ValueError
        Raised when an option is out of range.

    Attributes
    ----------
    window
        See initialization parameter
    afterpulse_cutoff
        See initialization parameter
    subtract_background
        See initialization parameter
    reference_tolerance
        See initialization parameter
    smooth_fwhm
        See initialization parameter
    decay_fit_lifetimes
        See initialization parameter
    """
    window: Window
    afterpulse_cutoff: Optional[float] = None
    subtract_background: bool = False
    reference_tolerance: float = 0.05
    smooth_fwhm: Optional[float] = None
    decay_fit_lifetimes: float = 1.0

    def __post_init__(self) -> None:
        if not 0 <= self.window[0] < self.window[1]:
            raise ValueError(f"Invalid value for `window`: {self.window}.")
        if self.afterpulse_cutoff is not None and self.afterpulse_cutoff < 0:
            raise ValueError(f"Invalid value for `afterpulse_cutoff`: {self.afterpulse_cutoff}.")
        if not self.reference_tolerance > 0:
            raise ValueError(f"Invalid value for `reference_tolerance`: {self.reference_tolerance}.")
        if self.smooth_fwhm is not None and not self.smooth_fwhm > 0:
            raise ValueError(f"Invalid value for `smooth_fwhm`: {self.smooth_fwhm}.")
        if not self.decay_fit_lifetimes > 0:
            raise ValueError(f"Invalid value for `decay_fit_lifetimes`: {self.decay_fit_lifetimes}.")


@dataclass(frozen=True)
class PipelineOutput:
    """Result of the pipeline together with its intermediate histograms

    Attributes
    ----------
    result : AnalysisResult
        The scale and reduced χ² of the exact-model fit, the effective decay
        rate of the free exponential fit over the tail and the mean arrival
        time over the analysis window.
    stages : Dict[str, TimeHistogram]
        The data histogram after each stage which produced one, in order:
        ``raw``, ``corrected``, ``subtracted`` and ``smoothed``.
    references : Optional[Tuple[ReferenceFit, ReferenceFit]]
        The fits of the references before and after, when subtracting.
    """
    result: AnalysisResult
    stages: Dict[str, TimeHistogram] = field(default_factory=dict)
    references: Optional[Tuple[ReferenceFit, ReferenceFit]] = None


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Re-raise errors occurring within the block as `PipelineStageError`"""
    try:
        yield
    except PipelineStageError:
        raise
    except (ValueError, RuntimeError, InputFormatError, OSError) as e:
        logger.error(f"Stage `{name}` failed: {e}")
        raise PipelineStageError(name, e) from e


def prepare_histogram(
    data: PipelineInput,
    options: AnalysisOptions,
    stages: Optional[Dict[str, TimeHistogram]]=None,
) -> TimeHistogram:
    """Run the filter, histogram and correct stages

    Events are histogrammed over the whole repetition period at the
    digitizer resolution, as the dead-time correction wraps around the shot
    boundary. A histogram input is taken to be raw unless it carries
    corrections already.

    Parameters
    ----------
    data : Union[EventStream, TimeHistogram]
        The recorded events or their histogram.
    options : AnalysisOptions
        The pipeline options.
    stages : Optional[Dict[str, TimeHistogram]], optional
        When given, the ``raw`` and ``corrected`` histograms are stored in it.

    Raises
    ------
    PipelineStageError
        Raised when any of the stages fails.

    Returns
    -------
    TimeHistogram
        The histogram corrected for dead time.
    """
    if isinstance(data, EventStream):
        events = data
        if options.afterpulse_cutoff is not None:
            with stage('filter'):
                events = filter_afterpulses(events, options.afterpulse_cutoff)
                logger.info(f"Filter: {len(data)} events in, {len(events)} out")
        with stage('histogram'):
            raw = histogram(events, events.bin_width, events.rep_period)
            logger.info(f"Histogram: {raw.total():.0f} counts in {raw.n_bins} bins")
        rep_period = events.rep_period
    else:
        raw = data
        rep_period = raw.window

    if stages is not None:
        stages['raw'] = raw
    if options.afterpulse_cutoff is None or raw.corrections is not None:
        return raw

    with stage('correct'):
        corrected = deadtime_correct(raw, options.afterpulse_cutoff, rep_period)
        assert corrected.corrections is not None
        logger.info(f"Correct: largest correction factor {np.max(corrected.corrections):.6g}")
    if stages is not None:
        stages['corrected'] = corrected
    return corrected


def analyze(
    data: PipelineInput,
    params: VSystemParams,
    options: AnalysisOptions,
    ref_before: Optional[PipelineInput]=None,
    ref_after: Optional[PipelineInput]=None,
) -> PipelineOutput:
    """Run the whole analysis pipeline

    Parameters
    ----------
    data : Union[EventStream, TimeHistogram]
        The measurement, as recorded events or their histogram.
    params : VSystemParams
        The known parameters of the measurement.
    options : AnalysisOptions
        The pipeline options.
    ref_before : Optional[Union[EventStream, TimeHistogram]], optional
        The ε=0 reference recorded before the measurement. Required when
        subtracting the background.
    ref_after : Optional[Union[EventStream, TimeHistogram]], optional
        The ε=0 reference recorded after the measurement. Required when
        subtracting the background.

    Raises
    ------
    PipelineStageError
        Raised when any of the stages fails, naming it.

    Returns
    -------
    PipelineOutput
        The analysis result and the intermediate histograms.
    """
    stages: Dict[str, TimeHistogram] = {}
    hist = prepare_histogram(data, options, stages)

    references = None
    if options.subtract_background:
        if ref_before is None or ref_after is None:
            raise PipelineStageError(
                'reference',
                ValueError("Background subtraction requires references before and after.")
            )
        prepared = [prepare_histogram(ref, options) for ref in (ref_before, ref_after)]
        with stage('reference'):
            before, after = (fit_reference(ref, params, options.window) for ref in prepared)
        references = (before, after)
        with stage('subtract'):
            hist = subtract_background(hist, before, after, options.reference_tolerance)
        stages['subtracted'] = hist

    with stage('fit'):
        scale_fit = fit_scale_only(hist, params, options.window)
    with stage('moments'):
        mean = estimate_mean_arrival(hist, options.window, params.pulse)
        rate_fit = fit_free_gamma(
            hist, params, decay_fit_window(params, options.window, options.decay_fit_lifetimes)
        )

    result = AnalysisResult(
        scale=scale_fit.scale,
        scale_se=scale_fit.scale_se,
        gamma_eff=rate_fit.gamma_eff,
        gamma_eff_se=rate_fit.gamma_eff_se,
        mean_arrival=Seconds(mean.value),
        mean_arrival_se=mean.se,
        chi2_reduced=scale_fit.chi2_reduced,
        window=options.window,
        background_fraction=(
            (references[0].background_fraction + references[1].background_fraction)/2
            if references is not None else None
        ),
    )
    logger.info(
        f"Moments: mean {result.mean_arrival.ns():.5g} ± {1e9*result.mean_arrival_se:.2g} ns, "
        f"Γ_eff {result.gamma_eff:.6g} ± {result.gamma_eff_se:.2g} /s"
    )

    if options.smooth_fwhm is not None:
        stages['smoothed'] = smooth_gaussian(hist, options.smooth_fwhm)
    return PipelineOutput(result, stages, references)
