"""Monte Carlo generation of detector event streams

Each excitation trigger (shot) yields at most one photon before the detector:
a postselected signal photon distributed according to the pulse-convolved
arrival-time distribution, or an incoherent background photon from the
pulse-convolved natural decay. The merged stream then passes through a model
of the detector with dead time, afterpulsing and digitizer quantization.

Shots are generated in blocks, each with its own counter-based random stream
derived from the seed and the block index, so that results do not depend on
whether the blocks are generated in parallel.
"""

from weakbeam._util import ticks_from_duration
from weakbeam.events import EventStream, Tag
from weakbeam.exceptions import DegenerateDistributionError
from weakbeam.pointer import acceptance_probability
from weakbeam.types import PulseShape, VSystemParams

from dataclasses import dataclass, replace
from joblib import Parallel, delayed
from typing import List, Tuple

import logging
import math
import numpy as np


logger = logging.getLogger(__name__)

_max_batch = 1 << 20


@dataclass(frozen=True)
class DetectorConfig:
    """Model of the single-photon detector and time digitizer

    Parameters
    ----------
    dead_time : float
        Time in seconds after a click during which further photons are lost.
    afterpulse_prob : float
        Probability of a spurious click exactly at the end of the dead time.
    bin_width : float
        Digitizer resolution in seconds. Event times are floored to it.
    enabled : bool, optional
        When False the detector is ideal: no dead time and no afterpulses,
        though times are still quantized. Defaults to True.

    Raises
    ------
    ValueError
        Raised when a parameter is out of range.

    Attributes
    ----------
    dead_time
        See initialization parameter
    afterpulse_prob
        See initialization parameter
    bin_width
        See initialization parameter
    enabled
        See initialization parameter
    """
    dead_time: float
    afterpulse_prob: float
    bin_width: float
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.dead_time < 0:
            raise ValueError(f"Invalid value for `dead_time`: {self.dead_time} (must be non-negative).")
        if not 0 <= self.afterpulse_prob <= 0.1:
            raise ValueError(f"Invalid value for `afterpulse_prob`: {self.afterpulse_prob} (must be in [0, 0.1]).")
        if not self.bin_width > 0:
            raise ValueError(f"Invalid value for `bin_width`: {self.bin_width} (must be positive).")
        if self.afterpulse_prob > 0 and self.dead_time < self.bin_width:
            raise ValueError(
                "Invalid value for `dead_time`: afterpulsing requires a dead time "
                "of at least one bin width."
            )

    @property
    def dead_ticks(self) -> int:
        """The dead time in digitizer ticks, rounded up"""
        return int(math.ceil(self.dead_time/self.bin_width - 1e-9))


@dataclass(frozen=True)
class SimConfig:
    """Configuration of a simulated run

    Parameters
    ----------
    physics : VSystemParams
        The atom, its postselection and the excitation pulse.
    n_shots : int
        Number of excitation triggers.
    rep_period : float
        Time between triggers in seconds. Must exceed 20/Γ plus the pulse
        duration and be a whole number of digitizer ticks.
    detect_prob : float
        Probability per shot that the emitted photon (before postselection)
        reaches the detector path, in (0, 1].
    background_fraction : float
        Fraction of incoherent background in the total detected signal at the
        ε=0 reference, in [0, 0.5).
    rng_seed : int
        Seed of the random streams.
    detector : DetectorConfig
        The detector model.
    block_shots : int, optional
        Number of shots generated per random stream. Defaults to 262144.
    n_jobs : int, optional
        Number of parallel workers for generating blocks, as understood by
        `joblib`. Defaults to 1.

    Raises
    ------
    ValueError
        Raised when a parameter is out of range.

    Attributes
    ----------
    physics
        See initialization parameter
    n_shots
        See initialization parameter
    rep_period
        See initialization parameter
    detect_prob
        See initialization parameter
    background_fraction
        See initialization parameter
    rng_seed
        See initialization parameter
    detector
        See initialization parameter
    block_shots
        See initialization parameter
    n_jobs
        See initialization parameter
    """
    physics: VSystemParams
    n_shots: int
    rep_period: float
    detect_prob: float
    background_fraction: float
    rng_seed: int
    detector: DetectorConfig
    block_shots: int = 262144
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.n_shots < 1:
            raise ValueError(f"Invalid value for `n_shots`: {self.n_shots} (must be at least 1).")
        min_period = 20/self.physics.gamma + self.physics.pulse.duration
        if not self.rep_period > min_period:
            raise ValueError(
                f"Invalid value for `rep_period`: {self.rep_period} s (must exceed "
                f"20/Γ plus the pulse duration, {min_period:.4g} s)."
            )
        ticks_from_duration(self.rep_period, self.detector.bin_width, "rep_period")
        if not 0 < self.detect_prob <= 1:
            raise ValueError(f"Invalid value for `detect_prob`: {self.detect_prob} (must be in (0, 1]).")
        if not 0 <= self.background_fraction < 0.5:
            raise ValueError(
                f"Invalid value for `background_fraction`: {self.background_fraction} "
                f"(must be in [0, 0.5))."
            )
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError(f"Invalid value for `rng_seed`: {self.rng_seed} (must be a 64-bit unsigned integer).")
        if self.block_shots < 1:
            raise ValueError(f"Invalid value for `block_shots`: {self.block_shots} (must be at least 1).")
        if self.n_jobs == 0:
            raise ValueError("Invalid value for `n_jobs`: 0.")

    @property
    def rep_period_ticks(self) -> int:
        return ticks_from_duration(self.rep_period, self.detector.bin_width, "rep_period")

    def signal_probability(self) -> float:
        """Probability per shot of a postselected signal photon reaching the detector"""
        return self.detect_prob*acceptance_probability(self.physics)

    def background_probability(self) -> float:
        """Probability per shot of a background photon reaching the detector

        Independent of ε: chosen so that the background makes up
        `background_fraction` of the detected photons at the ε=0 reference.
        """
        reference = replace(self.physics, epsilon=0)
        reference_signal = self.detect_prob*acceptance_probability(reference)
        return self.background_fraction*reference_signal/(1 - self.background_fraction)


def branching_background_fraction(amplitude_ratio: float=math.sqrt(6)) -> float:
    """Lower bound on the incoherent background from the decay branching ratios

    The two excited states decay coherently into the same ground sublevel
    with an amplitude `amplitude_ratio` times larger than into the two
    distinguishable outer sublevels. With the coherent paths interfering
    constructively the coherent channel is 2·ratio² times more likely, which
    for the √6 of the ⁸⁷Rb Clebsch-Gordan coefficients gives 1/13 ≈ 8%.
    """
    if amplitude_ratio <= 0:
        raise ValueError(f"Amplitude ratio must be positive, got {amplitude_ratio}.")
    return 1/(1 + 2*amplitude_ratio**2)


def _pulse_offsets(pulse: PulseShape, rng: np.random.Generator, size: int) -> np.ndarray:
    if pulse.duration == 0:
        return np.zeros(size)
    return rng.uniform(0, pulse.duration, size)


def sample_arrivals(
    params: VSystemParams,
    rng: np.random.Generator,
    size: int,
    max_batch: int=_max_batch,
) -> np.ndarray:
    """Draw arrival times from the pulse-convolved postselected distribution

    Emission delays are proposed from the natural decay and accepted with
    probability sin²(Δt+ε); the excitation time within the pulse is added to
    the accepted delays. Proposals are drawn in batches of at most
    `max_batch`, so a small acceptance probability costs time, not memory.

    Parameters
    ----------
    params : VSystemParams
        The system parameters including the pulse shape.
    rng : np.random.Generator
        Source of randomness.
    size : int
        Number of draws.
    max_batch : int, optional
        Largest number of proposals drawn at once. Defaults to 2²⁰.

    Raises
    ------
    DegenerateDistributionError
        Raised when Δ=0 and ε=0.
    ValueError
        Raised when `max_batch` is not positive.

    Returns
    -------
    np.ndarray
        The arrival times in seconds.
    """
    if params.is_degenerate:
        raise DegenerateDistributionError("Cannot sample: no photon passes postselection.")
    if max_batch < 1:
        raise ValueError(f"Invalid value for `max_batch`: {max_batch} (must be positive).")
    acceptance = acceptance_probability(params)
    accepted: List[np.ndarray] = []
    remaining = size
    while remaining > 0:
        batch = int(min(math.ceil(min(remaining/acceptance*1.1, max_batch)) + 16, max_batch))
        delays = rng.exponential(1/params.gamma, batch)
        keep = rng.random(batch) < np.sin(params.delta*delays + params.epsilon)**2
        delays = delays[keep][:remaining]
        accepted.append(delays)
        remaining -= len(delays)
    delays = np.concatenate(accepted) if accepted else np.zeros(0)
    return delays + _pulse_offsets(params.pulse, rng, size)


def sample_arrival(params: VSystemParams, rng: np.random.Generator) -> float:
    """Draw a single arrival time in seconds, see `sample_arrivals`"""
    return float(sample_arrivals(params, rng, 1)[0])


def sample_backgrounds(
    gamma: float,
    pulse: PulseShape,
    rng: np.random.Generator,
    size: int
) -> np.ndarray:
    """Draw arrival times of background photons from the pulse-convolved natural decay"""
    if not gamma > 0:
        raise ValueError(f"Invalid value for `gamma`: {gamma} (must be positive).")
    return rng.exponential(1/gamma, size) + _pulse_offsets(pulse, rng, size)


def sample_background(gamma: float, pulse: PulseShape, rng: np.random.Generator) -> float:
    """Draw a single background arrival time in seconds"""
    return float(sample_backgrounds(gamma, pulse, rng, 1)[0])


def _block_rng(seed: int, key: Tuple[int, ...]) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _simulate_block(
    config: SimConfig,
    block_index: int,
    p_signal: float,
    p_background: float,
) -> Tuple[np.ndarray, np.ndarray]:
    # Absolute times in ticks and tags of the photons reaching the detector
    first_shot = block_index*config.block_shots
    n = min(config.block_shots, config.n_shots - first_shot)
    rng = _block_rng(config.rng_seed, (0, block_index))

    u = rng.random(n)
    signal_shots = np.flatnonzero(u < p_signal)
    background_shots = np.flatnonzero((u >= p_signal) & (u < p_signal + p_background))

    signal_times = sample_arrivals(config.physics, rng, len(signal_shots)) if len(signal_shots) else np.zeros(0)
    background_times = sample_backgrounds(
        config.physics.gamma, config.physics.pulse, rng, len(background_shots)
    )

    shots = np.concatenate([signal_shots, background_shots])
    times = np.concatenate([signal_times, background_times])
    tags = np.concatenate([
        np.full(len(signal_shots), Tag.SIGNAL.value, dtype=np.uint8),
        np.full(len(background_shots), Tag.BACKGROUND.value, dtype=np.uint8),
    ])

    rep_ticks = config.rep_period_ticks
    t_rel_ticks = np.floor(times/config.detector.bin_width).astype(np.int64)
    # Photons arriving after the next trigger are truncated (probability < e^{-20}).
    in_period = t_rel_ticks < rep_ticks
    order = np.argsort(shots[in_period], kind='stable')
    t_abs_ticks = (shots[in_period] + first_shot)*rep_ticks + t_rel_ticks[in_period]
    return t_abs_ticks[order], tags[in_period][order]


def apply_detector(
    stream: EventStream,
    detector: DetectorConfig,
    rng: np.random.Generator
) -> EventStream:
    """Pass an ordered stream of photons through the detector model

    The stream is swept in absolute time. A photon arriving less than the dead
    time after the last click is lost. Every click (including an afterpulse)
    produces an afterpulse exactly at the end of its dead time with
    probability `afterpulse_prob`, so that higher-order afterpulses occur
    naturally. Afterpulses falling after the end of the run are discarded.

    Parameters
    ----------
    stream : EventStream
        The photons reaching the detector, ordered in absolute time.
    detector : DetectorConfig
        The detector model. When disabled the stream is returned unchanged.
    rng : np.random.Generator
        Source of randomness for afterpulsing.

    Raises
    ------
    UnorderedEventsError
        Raised when the input stream is not ordered.

    Returns
    -------
    EventStream
        The recorded clicks.
    """
    stream.check_ordered()
    if not detector.enabled:
        return stream

    dead = detector.dead_ticks
    ap = detector.afterpulse_prob
    run_end = stream.n_shots*stream.rep_period_ticks
    ap_draws = rng.random(len(stream)).tolist()

    out_times: List[int] = []
    out_tags: List[int] = []
    last = None
    pending = None

    for t, tag, u in zip(stream.t_abs_ticks.tolist(), stream.tags.tolist(), ap_draws):
        while pending is not None and pending <= t:
            out_times.append(pending)
            out_tags.append(Tag.AFTERPULSE.value)
            last = pending
            pending = last + dead if rng.random() < ap else None
        if last is not None and t - last < dead:
            continue
        out_times.append(t)
        out_tags.append(tag)
        last = t
        pending = t + dead if u < ap else None

    while pending is not None and pending < run_end:
        out_times.append(pending)
        out_tags.append(Tag.AFTERPULSE.value)
        pending = pending + dead if rng.random() < ap else None

    return EventStream.from_abs_ticks(
        stream.bin_width,
        stream.rep_period_ticks,
        stream.n_shots,
        np.array(out_times, dtype=np.int64),
        np.array(out_tags, dtype=np.uint8),
    )


def run_simulation(config: SimConfig) -> EventStream:
    """Simulate a run and return the recorded detector events

    Parameters
    ----------
    config : SimConfig
        The run configuration.

    Raises
    ------
    DegenerateDistributionError
        Raised when Δ=0 and ε=0, as no signal can be generated.

    Returns
    -------
    EventStream
        The recorded events ordered in absolute time. Identical configurations
        (including the seed) give identical streams.
    """
    if config.physics.is_degenerate:
        raise DegenerateDistributionError("Cannot simulate: no photon passes postselection.")
    p_signal = config.signal_probability()
    p_background = config.background_probability()
    if p_signal + p_background > 1:
        raise ValueError(
            f"Signal and background probabilities per shot exceed one "
            f"({p_signal:.3g} + {p_background:.3g}); lower `detect_prob`."
        )

    n_blocks = int(math.ceil(config.n_shots/config.block_shots))
    logger.debug(f"Generating {config.n_shots} shots in {n_blocks} blocks")
    blocks = Parallel(n_jobs=config.n_jobs)(
        delayed(_simulate_block)(config, b, p_signal, p_background) for b in range(n_blocks)
    )
    t_abs_ticks = np.concatenate([block[0] for block in blocks])
    tags = np.concatenate([block[1] for block in blocks])

    photons = EventStream.from_abs_ticks(
        config.detector.bin_width,
        config.rep_period_ticks,
        config.n_shots,
        t_abs_ticks,
        tags,
    )
    events = apply_detector(photons, config.detector, _block_rng(config.rng_seed, (1,)))

    logger.info(
        f"Simulated {config.n_shots} shots at ε={config.physics.epsilon:.4g}: "
        f"{len(events)} events ({events.count_tag(Tag.SIGNAL)} signal, "
        f"{events.count_tag(Tag.BACKGROUND)} background, "
        f"{events.count_tag(Tag.AFTERPULSE)} afterpulse), "
        f"acceptance {acceptance_probability(config.physics):.4g}"
    )
    return events
