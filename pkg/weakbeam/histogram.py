"""Arrival-time histograms, the pointer as measured"""

from weakbeam._util import ticks_from_duration
from weakbeam.events import EventStream

from dataclasses import dataclass, field, replace
from scipy.ndimage import convolve1d
from typing import Optional, Tuple

import math
import numpy as np


@dataclass(frozen=True)
class TimeHistogram:
    """Histogram of arrival times since the trigger, starting at t=0

    Bin ``i`` covers [i·bin_width, (i+1)·bin_width). Counts become real-valued
    once corrections or background subtraction have been applied.

    Parameters
    ----------
    bin_width : float
        Bin width in seconds.
    counts : np.ndarray
        Non-negative finite counts per bin.
    n_shots : int
        Number of triggers contributing to the histogram.
    variances : Optional[np.ndarray], optional
        Estimated variance of each bin. Defaults to the counts (Poisson
        statistics of a raw histogram).
    corrections : Optional[np.ndarray], optional
        Dead-time correction factors already applied to each bin, each in
        [1, 100]. Defaults to None, meaning the histogram is uncorrected.

    Raises
    ------
    ValueError
        Raised when the arrays are inconsistent or out of range.

    Attributes
    ----------
    bin_width
        See initialization parameter
    counts
        See initialization parameter
    n_shots
        See initialization parameter
    variances
        See initialization parameter
    corrections
        See initialization parameter
    """
    bin_width: float
    counts: np.ndarray
    n_shots: int
    variances: np.ndarray = field(default=None)  # type: ignore # (replaced in __post_init__)
    corrections: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=float)
        object.__setattr__(self, 'counts', counts)
        if self.variances is None:
            object.__setattr__(self, 'variances', counts.copy())
        else:
            object.__setattr__(self, 'variances', np.asarray(self.variances, dtype=float))

        if not self.bin_width > 0:
            raise ValueError(f"Bin width must be positive, got {self.bin_width}.")
        if self.n_shots < 0:
            raise ValueError(f"Number of shots cannot be negative, got {self.n_shots}.")
        if counts.ndim != 1:
            raise ValueError("Histogram counts must be one-dimensional.")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0):
            raise ValueError("Histogram counts must be finite and non-negative.")
        if self.variances.shape != counts.shape or np.any(self.variances < 0):
            raise ValueError("Histogram variances must match the counts and be non-negative.")
        if self.corrections is not None:
            corrections = np.asarray(self.corrections, dtype=float)
            object.__setattr__(self, 'corrections', corrections)
            if corrections.shape != counts.shape:
                raise ValueError("Correction factors must match the counts in length.")
            # Tolerance for the rounding of factors computed as 1/(1 − B).
            if np.any(corrections < 1 - 1e-12) or np.any(corrections > 100):
                raise ValueError("Correction factors must lie in [1, 100].")

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def window(self) -> float:
        """Upper end of the histogram in seconds"""
        return self.n_bins*self.bin_width

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n_bins + 1)*self.bin_width

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_bins) + 0.5)*self.bin_width

    def window_mask(self, window: Tuple[float, float]) -> np.ndarray:
        """Boolean mask of the bins lying entirely within [lo, hi]"""
        lo, hi = window
        # Half a per mille of a bin absorbs rounding of window limits given in other units.
        tolerance = 5e-4*self.bin_width
        edges = self.edges
        return (edges[:-1] >= lo - tolerance) & (edges[1:] <= hi + tolerance)

    def total(self) -> float:
        return float(np.sum(self.counts))

    def _check_compatible(self, other: "TimeHistogram") -> None:
        if self.bin_width != other.bin_width or self.n_bins != other.n_bins:
            raise ValueError(
                f"Histograms differ in binning: {self.n_bins} bins of {self.bin_width} s v. "
                f"{other.n_bins} bins of {other.bin_width} s."
            )

    def __add__(self, other: "TimeHistogram") -> "TimeHistogram":
        """Superpose two signals recorded over the same shots

        Counts and variances add while the number of shots is kept, so both
        histograms must have been taken over the same number of triggers.
        """
        self._check_compatible(other)
        if self.n_shots != other.n_shots:
            raise ValueError(
                f"Cannot superpose histograms of different shot counts: "
                f"{self.n_shots} v. {other.n_shots}."
            )
        if self.corrections is not None or other.corrections is not None:
            raise ValueError("Cannot superpose histograms with correction factors.")
        return TimeHistogram(
            self.bin_width,
            self.counts + other.counts,
            self.n_shots,
            self.variances + other.variances,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimeHistogram):
            return NotImplemented
        if (self.corrections is None) != (other.corrections is None):
            return False
        return (
            self.bin_width == other.bin_width and
            self.n_shots == other.n_shots and
            np.array_equal(self.counts, other.counts) and
            np.array_equal(self.variances, other.variances) and
            (self.corrections is None or np.array_equal(self.corrections, other.corrections))
        )


def histogram(
    events: EventStream,
    bin_width: float,
    window: float,
    n_shots: Optional[int]=None,
) -> TimeHistogram:
    """Histogram the times since trigger of an event stream

    Parameters
    ----------
    events : EventStream
        Events ordered in absolute time.
    bin_width : float
        Histogram bin width in seconds, a whole multiple of the stream's tick.
    window : float
        Upper end of the histogram in seconds, at most the repetition period.
        Rounded to a whole number of bins.
    n_shots : Optional[int], optional
        Number of triggers to record with the histogram. Defaults to the
        stream's number of shots.

    Raises
    ------
    UnorderedEventsError
        Raised when the events are not ordered.
    ValueError
        Raised when the binning is incompatible with the stream.

    Returns
    -------
    TimeHistogram
        The raw histogram. Events outside the window are not counted.
    """
    events.check_ordered()
    ticks_per_bin = ticks_from_duration(bin_width, events.bin_width, "bin_width")
    if window > events.rep_period*(1 + 1e-12):
        raise ValueError(
            f"Histogram window ({window} s) exceeds the repetition period ({events.rep_period} s)."
        )
    n_bins = int(round(window/bin_width))
    if n_bins < 1:
        raise ValueError(f"Histogram window ({window} s) is shorter than one bin.")
    counts = np.bincount(events.t_rel_ticks//ticks_per_bin, minlength=n_bins)[:n_bins]
    return TimeHistogram(
        bin_width,
        counts.astype(float),
        events.n_shots if n_shots is None else n_shots,
    )


_fwhm_per_sigma = 2*math.sqrt(2*math.log(2))


def gaussian_kernel(full_width: float, bin_width: float) -> np.ndarray:
    """Normalized discrete Gaussian kernel

    Parameters
    ----------
    full_width : float
        Full width at half maximum in seconds.
    bin_width : float
        Bin width in seconds.

    Returns
    -------
    np.ndarray
        Symmetric kernel truncated at ±4σ with unit sum.
    """
    sigma = full_width/_fwhm_per_sigma/bin_width
    half_length = int(math.ceil(4*sigma))
    x = np.arange(-half_length, half_length + 1)
    kernel = np.exp(-x**2/(2*sigma**2))
    return kernel/np.sum(kernel)


def smooth_gaussian(hist: TimeHistogram, full_width: float) -> TimeHistogram:
    """Low-pass filter a histogram for display

    The result must not be used for fitting or moment estimation, as the
    bins are no longer independent.

    Parameters
    ----------
    hist : TimeHistogram
        The histogram to smooth.
    full_width : float
        FWHM of the Gaussian filter in seconds, larger than the bin width.

    Raises
    ------
    ValueError
        Raised when the width does not exceed the bin width.

    Returns
    -------
    TimeHistogram
        The smoothed histogram. Edges are padded with the nearest bin value.
        Variances are filtered with the squared kernel.
    """
    if not full_width > hist.bin_width:
        raise ValueError(
            f"Filter width ({full_width} s) must exceed the bin width ({hist.bin_width} s)."
        )
    kernel = gaussian_kernel(full_width, hist.bin_width)
    return replace(
        hist,
        counts=np.maximum(convolve1d(hist.counts, kernel, mode='nearest'), 0),
        variances=convolve1d(hist.variances, kernel**2, mode='nearest'),
    )
