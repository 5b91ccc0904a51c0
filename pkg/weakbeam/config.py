"""Run configuration: parsing, validation and the resolved-configuration dump

Configuration files consist of ``key = value`` lines, optionally grouped under
``[section]`` headers, with ``#`` comments. Keys are unique across sections,
so a file without headers is equally valid, but a key placed under the wrong
header is rejected. Units are part of the key names and frequencies are
cyclic (Hz); see `weakbeam.util` for the conversion to the angular
frequencies used internally.

Example::

    [physics]
    gamma_lifetime_ns = 26
    delta_hz = 600e3
    epsilon_rad = 0.2

    [simulation]
    n_shots = 1000000
"""

from weakbeam.emission import DetectorConfig, SimConfig
from weakbeam.exceptions import ConfigValidationError, InputFormatError
from weakbeam.types import PulseKind, PulseShape, VSystemParams
from weakbeam.util import angular_from_cyclic, natural_lifetime_rb87_ns
from weakbeam.util import rate_from_lifetime_ns, rate_from_linewidth_hz
from weakbeam.util import seconds_from_ns, seconds_from_ps
from weakbeam._util import iter_key_values, NoValue

from dataclasses import dataclass, field, fields, replace
from enum import auto
from typing import Any, Callable, Dict, List, Optional, TextIO, Tuple

import io
import math
import os


class Mode(NoValue):
    SIMULATE = auto()
    ANALYZE = auto()
    THEORY = auto()
    SWEEP = auto()
    CRLB = auto()


@dataclass(frozen=True)
class PhysicsSection:
    gamma_hz: Optional[float] = None
    gamma_lifetime_ns: Optional[float] = None
    delta_hz: float = 600e3
    epsilon_rad: float = 0.2
    pulse_kind: PulseKind = PulseKind.SQUARE
    pulse_duration_ns: float = 4.2

    def params(self) -> VSystemParams:
        """The physical parameters in SI units with angular frequencies"""
        if self.gamma_hz is not None:
            gamma = rate_from_linewidth_hz(self.gamma_hz)
        else:
            gamma = rate_from_lifetime_ns(
                self.gamma_lifetime_ns if self.gamma_lifetime_ns is not None else natural_lifetime_rb87_ns
            )
        pulse = (
            PulseShape.square(seconds_from_ns(self.pulse_duration_ns))
            if self.pulse_kind == PulseKind.SQUARE else PulseShape.delta()
        )
        return VSystemParams(gamma, angular_from_cyclic(self.delta_hz), self.epsilon_rad, pulse)


@dataclass(frozen=True)
class SimulationSection:
    n_shots: int = 1000000
    rep_period_ns: float = 1000
    detect_prob: float = 0.01
    background_fraction: float = 0.12
    rng_seed: int = 0
    block_shots: int = 262144
    n_jobs: int = 1


@dataclass(frozen=True)
class DetectorSection:
    detector_enabled: bool = True
    dead_time_ns: float = 52
    afterpulse_prob: float = 0.02
    bin_width_ps: float = 100

    def detector(self) -> DetectorConfig:
        return DetectorConfig(
            seconds_from_ns(self.dead_time_ns),
            self.afterpulse_prob,
            seconds_from_ps(self.bin_width_ps),
            self.detector_enabled,
        )


@dataclass(frozen=True)
class AnalysisSection:
    """Analysis options; `window_hi_ns` and `reference_shots` are resolved at load"""
    afterpulse_cutoff_ns: float = 115
    window_lo_ns: float = 0
    window_hi_ns: Optional[float] = None
    smooth_fwhm_ns: float = 4.2
    reference_tolerance: float = 0.05
    subtract_background: bool = True
    reference_shots: Optional[int] = None
    decay_fit_lifetimes: float = 1.0


@dataclass(frozen=True)
class IoSection:
    input_events: Optional[str] = None
    input_histogram: Optional[str] = None
    reference_before: Optional[str] = None
    reference_after: Optional[str] = None
    out_dir: str = '.'


@dataclass(frozen=True)
class SweepSection:
    sweep_epsilons: List[float] = field(
        default_factory=lambda: [0.15, 0.2, 0.3, 0.5, 0.8, math.pi/2]
    )
    sweep_seeds: List[int] = field(default_factory=lambda: [0])


@dataclass(frozen=True)
class CrlbSection:
    crlb_epsilons: List[float] = field(default_factory=lambda: [0.05, 0.1, 0.2, 0.5, 1.0])
    crlb_rates: List[float] = field(default_factory=lambda: [1e4, 1e5, 1e6])


@dataclass(frozen=True)
class TheorySection:
    theory_t_max_ns: float = 200
    theory_points: int = 2001
    theory_epsilon_points: int = 200
    theory_spectrum_halfwidth_gamma: float = 20


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved and validated configuration of a run

    Parameters
    ----------
    mode : Mode
        The command to run.
    physics, simulation, detector, analysis, io, sweep, crlb, theory
        The sections of the configuration file, with defaults resolved.
    """
    mode: Mode
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    simulation: SimulationSection = field(default_factory=SimulationSection)
    detector: DetectorSection = field(default_factory=DetectorSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    io: IoSection = field(default_factory=IoSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    crlb: CrlbSection = field(default_factory=CrlbSection)
    theory: TheorySection = field(default_factory=TheorySection)

    def params(self) -> VSystemParams:
        return self.physics.params()

    def sim_config(self, epsilon: Optional[float]=None, seed: Optional[int]=None) -> SimConfig:
        """The simulation configuration, optionally at another angle or seed"""
        params = self.params()
        if epsilon is not None:
            params = replace(params, epsilon=epsilon)
        s = self.simulation
        return SimConfig(
            params,
            s.n_shots,
            seconds_from_ns(s.rep_period_ns),
            s.detect_prob,
            s.background_fraction,
            s.rng_seed if seed is None else seed,
            self.detector.detector(),
            s.block_shots,
            s.n_jobs,
        )

    @property
    def window(self) -> Tuple[float, float]:
        """The analysis window in seconds"""
        assert self.analysis.window_hi_ns is not None
        return (seconds_from_ns(self.analysis.window_lo_ns), seconds_from_ns(self.analysis.window_hi_ns))


_section_types = {
    'physics': PhysicsSection,
    'simulation': SimulationSection,
    'detector': DetectorSection,
    'analysis': AnalysisSection,
    'io': IoSection,
    'sweep': SweepSection,
    'crlb': CrlbSection,
    'theory': TheorySection,
}


def _to_float(value: str) -> float:
    result = float(value)
    if not math.isfinite(result):
        raise ValueError(f"`{value}` is not finite")
    return result


def _to_int(value: str) -> int:
    try:
        return int(value)
    except ValueError:
        as_float = float(value)
        if not as_float.is_integer():
            raise ValueError(f"`{value}` is not an integer")
        return int(as_float)


def _to_bool(value: str) -> bool:
    if value not in ('true', 'false'):
        raise ValueError(f"`{value}` is neither `true` nor `false`")
    return value == 'true'


def _to_pulse_kind(value: str) -> PulseKind:
    try:
        return PulseKind[value.upper()]
    except KeyError:
        raise ValueError(f"`{value}` is neither `delta` nor `square`")


def _list_of(converter: Callable[[str], Any]) -> Callable[[str], List[Any]]:
    def convert(value: str) -> List[Any]:
        return [converter(item.strip()) for item in value.split(',') if item.strip()]
    return convert


_float_keys = {
    'gamma_hz', 'gamma_lifetime_ns', 'delta_hz', 'epsilon_rad', 'pulse_duration_ns',
    'rep_period_ns', 'detect_prob', 'background_fraction', 'dead_time_ns',
    'afterpulse_prob', 'bin_width_ps', 'afterpulse_cutoff_ns', 'window_lo_ns',
    'window_hi_ns', 'smooth_fwhm_ns', 'reference_tolerance', 'decay_fit_lifetimes', 'theory_t_max_ns',
    'theory_spectrum_halfwidth_gamma',
}
_int_keys = {
    'n_shots', 'rng_seed', 'block_shots', 'n_jobs', 'reference_shots', 'theory_points',
    'theory_epsilon_points',
}

_converters: Dict[str, Callable[[str], Any]] = {
    **{key: _to_float for key in _float_keys},
    **{key: _to_int for key in _int_keys},
    'pulse_kind': _to_pulse_kind,
    'detector_enabled': _to_bool,
    'subtract_background': _to_bool,
    'input_events': str,
    'input_histogram': str,
    'reference_before': str,
    'reference_after': str,
    'out_dir': str,
    'sweep_epsilons': _list_of(_to_float),
    'sweep_seeds': _list_of(_to_int),
    'crlb_epsilons': _list_of(_to_float),
    'crlb_rates': _list_of(_to_float),
}

_key_sections = {
    f.name: section for section, section_type in _section_types.items() for f in fields(section_type)
}


def _check(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigValidationError(key, message)


def _validate(config: RunConfig) -> None:
    p, s, d, a = config.physics, config.simulation, config.detector, config.analysis

    _check(p.gamma_hz is None or p.gamma_lifetime_ns is None, 'gamma_hz',
           "give either `gamma_hz` or `gamma_lifetime_ns`, not both")
    _check(p.gamma_hz is None or p.gamma_hz > 0, 'gamma_hz', "must be positive")
    _check(p.gamma_lifetime_ns is None or p.gamma_lifetime_ns > 0, 'gamma_lifetime_ns', "must be positive")
    _check(p.delta_hz >= 0, 'delta_hz', "must be non-negative")
    _check(0 <= p.epsilon_rad <= math.pi/2, 'epsilon_rad', "must be in [0, π/2]")
    _check(p.pulse_kind == PulseKind.DELTA or p.pulse_duration_ns > 0, 'pulse_duration_ns',
           "must be positive for a square pulse")

    _check(s.n_shots >= 1, 'n_shots', "must be at least 1")
    _check(s.rep_period_ns > 0, 'rep_period_ns', "must be positive")
    _check(0 < s.detect_prob <= 1, 'detect_prob', "must be in (0, 1]")
    _check(0 <= s.background_fraction < 0.5, 'background_fraction', "must be in [0, 0.5)")
    _check(0 <= s.rng_seed < 2**64, 'rng_seed', "must be a 64-bit unsigned integer")
    _check(s.block_shots >= 1, 'block_shots', "must be at least 1")
    _check(s.n_jobs != 0, 'n_jobs', "must not be zero")

    _check(d.dead_time_ns >= 0, 'dead_time_ns', "must be non-negative")
    _check(0 <= d.afterpulse_prob <= 0.1, 'afterpulse_prob', "must be in [0, 0.1]")
    _check(d.bin_width_ps > 0, 'bin_width_ps', "must be positive")

    assert a.window_hi_ns is not None and a.reference_shots is not None
    _check(a.afterpulse_cutoff_ns >= 0, 'afterpulse_cutoff_ns', "must be non-negative")
    _check(not d.detector_enabled or a.afterpulse_cutoff_ns >= d.dead_time_ns, 'afterpulse_cutoff_ns',
           "must be at least the detector dead time")
    _check(a.afterpulse_cutoff_ns < s.rep_period_ns, 'afterpulse_cutoff_ns',
           "must be shorter than the repetition period")
    _check(0 <= a.window_lo_ns < a.window_hi_ns, 'window_lo_ns', "must be in [0, window_hi_ns)")
    _check(a.window_hi_ns <= s.rep_period_ns, 'window_hi_ns', "must not exceed the repetition period")
    _check(a.smooth_fwhm_ns*1e3 > d.bin_width_ps, 'smooth_fwhm_ns', "must exceed the bin width")
    _check(a.reference_tolerance > 0, 'reference_tolerance', "must be positive")
    _check(a.reference_shots >= 1, 'reference_shots', "must be at least 1")
    _check(a.decay_fit_lifetimes > 0, 'decay_fit_lifetimes', "must be positive")

    _check(len(config.sweep.sweep_epsilons) > 0, 'sweep_epsilons', "must not be empty")
    _check(all(0 <= e <= math.pi/2 for e in config.sweep.sweep_epsilons), 'sweep_epsilons',
           "must lie in [0, π/2]")
    _check(len(config.sweep.sweep_seeds) > 0, 'sweep_seeds', "must not be empty")
    _check(all(0 <= seed < 2**64 for seed in config.sweep.sweep_seeds), 'sweep_seeds',
           "must be 64-bit unsigned integers")
    _check(len(config.crlb.crlb_epsilons) > 0, 'crlb_epsilons', "must not be empty")
    _check(all(0 < e <= math.pi/2 for e in config.crlb.crlb_epsilons), 'crlb_epsilons',
           "must lie in (0, π/2]")
    _check(len(config.crlb.crlb_rates) > 0, 'crlb_rates', "must not be empty")
    _check(all(r > 0 for r in config.crlb.crlb_rates), 'crlb_rates', "must be positive")

    t = config.theory
    _check(t.theory_t_max_ns > 0, 'theory_t_max_ns', "must be positive")
    _check(t.theory_points >= 2, 'theory_points', "must be at least 2")
    _check(t.theory_epsilon_points >= 2, 'theory_epsilon_points', "must be at least 2")
    _check(t.theory_spectrum_halfwidth_gamma > 0, 'theory_spectrum_halfwidth_gamma', "must be positive")

    if config.mode == Mode.ANALYZE:
        inputs = [path for path in (config.io.input_events, config.io.input_histogram) if path is not None]
        _check(len(inputs) == 1, 'input_events', "exactly one of `input_events` and `input_histogram` is required")
        _check(os.path.isfile(inputs[0]), 'input_events' if config.io.input_events else 'input_histogram',
               f"file `{inputs[0]}` does not exist")

    # Re-validate the invariants of the derived types
    try:
        config.params()
    except ValueError as e:
        raise ConfigValidationError('physics', str(e))
    try:
        config.detector.detector()
    except ValueError as e:
        raise ConfigValidationError('detector', str(e))
    if config.mode in (Mode.SIMULATE, Mode.SWEEP):
        try:
            config.sim_config()
        except ValueError as e:
            raise ConfigValidationError('simulation', str(e))


def _resolve(config: RunConfig) -> RunConfig:
    physics = config.physics
    if physics.gamma_hz is None and physics.gamma_lifetime_ns is None:
        physics = replace(physics, gamma_lifetime_ns=natural_lifetime_rb87_ns)
    analysis = config.analysis
    if analysis.window_hi_ns is None:
        gamma = _resolved_gamma(physics)
        analysis = replace(analysis, window_hi_ns=20e9/gamma)
    if analysis.reference_shots is None:
        analysis = replace(analysis, reference_shots=config.simulation.n_shots)
    return replace(config, physics=physics, analysis=analysis)


def _resolved_gamma(physics: PhysicsSection) -> float:
    # Invalid rates are reported by validation; any positive rate will do here
    if physics.gamma_hz is not None and physics.gamma_hz > 0:
        return rate_from_linewidth_hz(physics.gamma_hz)
    if physics.gamma_lifetime_ns is not None and physics.gamma_lifetime_ns > 0:
        return rate_from_lifetime_ns(physics.gamma_lifetime_ns)
    return rate_from_lifetime_ns(natural_lifetime_rb87_ns)


def parse_config(f: TextIO, mode: Mode) -> RunConfig:
    """Parse and validate a configuration

    Parameters
    ----------
    f : TextIO
        File object opened in read mode.
    mode : Mode
        The command to be run, which determines mode-specific requirements.

    Raises
    ------
    InputFormatError
        Raised when a line is malformed, a key is unknown, repeated or placed
        under the wrong section.
    ConfigValidationError
        Raised when a value cannot be converted or violates an invariant.

    Returns
    -------
    RunConfig
        The configuration with all defaults resolved.
    """
    values: Dict[str, Dict[str, Any]] = {section: {} for section in _section_types}
    seen = set()
    for line in iter_key_values(f):
        if line.section is not None and line.section not in _section_types:
            raise InputFormatError(f"Unknown section `[{line.section}]`.", line.line_number)
        if line.key not in _key_sections:
            raise InputFormatError(f"Unknown key `{line.key}`.", line.line_number)
        section = _key_sections[line.key]
        if line.section is not None and line.section != section:
            raise InputFormatError(
                f"Key `{line.key}` belongs to section `[{section}]`, not `[{line.section}]`.",
                line.line_number
            )
        if line.key in seen:
            raise InputFormatError(f"Repeated key `{line.key}`.", line.line_number)
        seen.add(line.key)
        try:
            values[section][line.key] = _converters[line.key](line.value)
        except ValueError as e:
            raise ConfigValidationError(line.key, str(e))

    config = RunConfig(
        mode,
        **{section: section_type(**values[section]) for section, section_type in _section_types.items()}
    )
    config = _resolve(config)
    _validate(config)
    return config


def load_config(path: str, mode: Mode) -> RunConfig:
    """Load and validate the configuration file at `path`, see `parse_config`"""
    with open(path, 'r') as f:
        return parse_config(f, mode)


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, PulseKind):
        return value.name.lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ', '.join(_format_value(item) for item in value)
    return str(value)


def dump_config(config: RunConfig) -> str:
    """The resolved configuration as loadable text

    Every key is written once with its resolved value; unset optional keys
    are listed as comments. Parsing the output for the same mode yields an
    equal configuration.
    """
    out = io.StringIO()
    for section in _section_types:
        print(f"[{section}]", file=out)
        section_values = getattr(config, section)
        for f in fields(section_values):
            value = getattr(section_values, f.name)
            if value is None:
                print(f"# {f.name} (unset)", file=out)
            else:
                print(f"{f.name} = {_format_value(value)}", file=out)
        print(file=out)
    return out.getvalue()


def with_overrides(
    config: RunConfig,
    seed: Optional[int]=None,
    epsilon: Optional[float]=None,
    out_dir: Optional[str]=None,
) -> RunConfig:
    """Apply command-line overrides and re-validate"""
    if seed is not None:
        config = replace(config, simulation=replace(config.simulation, rng_seed=seed))
    if epsilon is not None:
        config = replace(config, physics=replace(config.physics, epsilon_rad=epsilon))
    if out_dir is not None:
        config = replace(config, io=replace(config.io, out_dir=out_dir))
    _validate(config)
    return config
