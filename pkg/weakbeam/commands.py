"""The commands run by the ``weakbeam`` script

Each command takes a validated `RunConfig`, writes its output files into
the configured output directory and returns what it computed, so that the
commands can be used and tested without the command-line layer.
"""

from weakbeam.config import RunConfig
from weakbeam.emission import run_simulation, SimConfig
from weakbeam.event_format import parse_event_stream, parse_events_csv, write_event_stream
from weakbeam.events import EventStream, Tag
from weakbeam.exceptions import DegenerateDistributionError, PipelineStageError
from weakbeam.histogram import histogram
from weakbeam.histogram_format import parse_histogram, write_histogram
from weakbeam.pipeline import analyze, AnalysisOptions, PipelineInput, PipelineOutput, stage
from weakbeam.pointer import acceptance_probability, approx_decay_rate, complementary_pdf
from weakbeam.pointer import convolved_pdf, mean_arrival_time, mean_shift, natural_decay
from weakbeam.pointer import pointer_pdf
from weakbeam.result_format import write_result
from weakbeam.sensitivity import crlb_sensitivity
from weakbeam.spectrum import detuning_grid, spectral_amplitude
from weakbeam.util import seconds_from_ns

from dataclasses import replace
from joblib import Parallel, delayed
from typing import Any, Dict, List, NamedTuple, Optional

import logging
import math
import numpy as np
import os
import pandas as pd


logger = logging.getLogger(__name__)

_float_format = '%.17g'

THEORY_PDF_FILE = 'theory_pdf.csv'
THEORY_SPECTRUM_FILE = 'theory_spectrum.csv'
THEORY_MEAN_FILE = 'theory_mean.csv'
EVENTS_FILE = 'events.wbev'
HISTOGRAM_FILE = 'histogram.csv'
REFERENCE_BEFORE_FILE = 'reference_before.wbev'
REFERENCE_AFTER_FILE = 'reference_after.wbev'
RESULT_FILE = 'result.txt'
SWEEP_FILE = 'sweep.csv'
CRLB_FILE = 'crlb.csv'


def _output_path(config: RunConfig, filename: str) -> str:
    os.makedirs(config.io.out_dir, exist_ok=True)
    return os.path.join(config.io.out_dir, filename)


def _write_table(path: str, df: pd.DataFrame, description: str) -> None:
    with open(path, 'w') as f:
        print(f"# {description}", file=f)
        df.to_csv(f, index=False, float_format=_float_format)
    logger.info(f"Written {len(df)} rows to {path}")


def read_table(path: str) -> pd.DataFrame:
    """Read a table written by one of the commands"""
    return pd.read_csv(path, comment='#', float_precision='round_trip')


def cmd_theory(config: RunConfig) -> List[str]:
    """Write the theoretical curves for the configured parameters

    Three tables are written:

    * ``theory_pdf.csv``: the exact arrival-time density, its first-order
      exponential approximation, the natural decay, the density convolved
      with the pulse and the density at the complementary port, against time.
    * ``theory_spectrum.csv``: the intensity of the postselected spectral
      amplitude against detuning.
    * ``theory_mean.csv``: the exact and first-order mean arrival times and
      the postselection acceptance against ε over (0, π/2].

    Columns are empty where a curve is undefined.

    Raises
    ------
    DegenerateDistributionError
        Raised when Δ=0 and ε=0.

    Returns
    -------
    List[str]
        The paths of the written files.
    """
    params = config.params()
    t_config = config.theory
    g = params.gamma

    t = np.linspace(0, seconds_from_ns(t_config.theory_t_max_ns), t_config.theory_points)
    if params.epsilon > 0 and approx_decay_rate(params).gamma_eff > 0:
        gamma_eff = approx_decay_rate(params).gamma_eff
        approx = gamma_eff*np.exp(-gamma_eff*t)
    else:
        approx = np.full(len(t), np.nan)
    try:
        complementary = complementary_pdf(t, params)
    except DegenerateDistributionError:
        complementary = np.full(len(t), np.nan)
    pdf_path = _output_path(config, THEORY_PDF_FILE)
    _write_table(pdf_path, pd.DataFrame({
        't_s': t,
        'pdf': pointer_pdf(t, params),
        'pdf_approx': approx,
        'natural_decay': natural_decay(t, g),
        'convolved_pdf': convolved_pdf(t, params),
        'complementary_pdf': complementary,
    }), "densities in 1/s against time since the trigger in s")

    spectrum = spectral_amplitude(params, detuning_grid(g, t_config.theory_spectrum_halfwidth_gamma))
    spectrum_path = _output_path(config, THEORY_SPECTRUM_FILE)
    _write_table(spectrum_path, pd.DataFrame({
        'detuning_rad_s': spectrum.detuning,
        'detuning_gamma': spectrum.detuning/g,
        'intensity': spectrum.intensity,
    }), "unnormalized spectral intensity against detuning in rad/s and in units of Γ")

    rows = []
    for epsilon in np.linspace(0, math.pi/2, t_config.theory_epsilon_points + 1)[1:]:
        p = replace(params, epsilon=float(epsilon))
        shift = mean_shift(p) if approx_decay_rate(p).valid else math.nan
        rows.append({
            'epsilon_rad': p.epsilon,
            'mean_s': mean_arrival_time(p),
            'mean_approx_s': 1/g + shift,
            'acceptance': acceptance_probability(p),
        })
    mean_path = _output_path(config, THEORY_MEAN_FILE)
    _write_table(mean_path, pd.DataFrame(rows), "mean arrival times in s against ε in rad")

    return [pdf_path, spectrum_path, mean_path]


class SimulationSummary(NamedTuple):
    """Counts of a simulated run by ground-truth tag"""
    n_events: int
    n_signal: int
    n_background: int
    n_afterpulse: int
    acceptance: float

    @property
    def background_fraction(self) -> float:
        """Realized fraction of background among the recorded photons"""
        photons = self.n_signal + self.n_background
        return self.n_background/photons if photons else math.nan

    @classmethod
    def from_events(cls, events: EventStream, config: SimConfig) -> "SimulationSummary":
        return cls(
            len(events),
            events.count_tag(Tag.SIGNAL),
            events.count_tag(Tag.BACKGROUND),
            events.count_tag(Tag.AFTERPULSE),
            acceptance_probability(config.physics),
        )

    def describe(self) -> str:
        return (
            f"{self.n_events} events ({self.n_signal} signal, {self.n_background} background, "
            f"{self.n_afterpulse} afterpulses), acceptance {self.acceptance:.4g}, "
            f"realized background fraction {self.background_fraction:.4g}"
        )


def reference_seed(seed: int, which: int) -> int:
    """Seed of a reference run, independent of the runs with other seeds"""
    state = np.random.SeedSequence(seed, spawn_key=(2, which)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _reference_configs(config: RunConfig, seed: int) -> List[SimConfig]:
    return [
        replace(
            config.sim_config(epsilon=0, seed=reference_seed(seed, which)),
            n_shots=config.analysis.reference_shots,
        )
        for which in (0, 1)
    ]


def cmd_simulate(config: RunConfig) -> SimulationSummary:
    """Simulate a run and write its events and raw histogram

    When background subtraction is configured, references at ε=0 with
    `reference_shots` shots are also simulated and written, so that the
    output can be analyzed directly.

    Returns
    -------
    SimulationSummary
        The composition of the simulated measurement.
    """
    sim_config = config.sim_config()
    events = run_simulation(sim_config)
    with open(_output_path(config, EVENTS_FILE), 'wb') as f:
        write_event_stream(f, events)
    with open(_output_path(config, HISTOGRAM_FILE), 'w') as f:
        write_histogram(f, histogram(events, events.bin_width, events.rep_period))

    if config.analysis.subtract_background:
        for ref_config, filename in zip(
            _reference_configs(config, sim_config.rng_seed),
            (REFERENCE_BEFORE_FILE, REFERENCE_AFTER_FILE)
        ):
            with open(_output_path(config, filename), 'wb') as f:
                write_event_stream(f, run_simulation(ref_config))

    return SimulationSummary.from_events(events, sim_config)


def analysis_options(config: RunConfig) -> AnalysisOptions:
    a = config.analysis
    return AnalysisOptions(
        window=config.window,
        afterpulse_cutoff=(
            seconds_from_ns(a.afterpulse_cutoff_ns) if config.detector.detector_enabled else None
        ),
        subtract_background=a.subtract_background,
        reference_tolerance=a.reference_tolerance,
        smooth_fwhm=seconds_from_ns(a.smooth_fwhm_ns),
        decay_fit_lifetimes=a.decay_fit_lifetimes,
    )


def load_input(path: str, config: RunConfig, n_shots: int) -> PipelineInput:
    """Load events or a histogram, recognizing the format from the content

    WBEV files are recognized by their magic and histogram files by their
    ``#`` header line. Anything else is read as an event CSV, for which the
    timing is taken from the configuration and `n_shots`.
    """
    with open(path, 'rb') as fb:
        if fb.read(4) == b'WBEV':
            fb.seek(0)
            return parse_event_stream(fb)
    with open(path, 'r') as f:
        if f.read(1) == '#':
            f.seek(0)
            return parse_histogram(f)
        f.seek(0)
        return parse_events_csv(
            f,
            config.detector.detector().bin_width,
            seconds_from_ns(config.simulation.rep_period_ns),
            n_shots,
        )


def cmd_analyze(config: RunConfig) -> PipelineOutput:
    """Analyze a measurement and write the result and the stage histograms

    The result goes to ``result.txt`` and the histogram after each stage to
    ``stage_<name>.csv``.

    Raises
    ------
    PipelineStageError
        Raised when loading the inputs or any of the analysis stages fails.
    """
    io_config = config.io
    with stage('load'):
        path = io_config.input_events or io_config.input_histogram
        if path is None:
            raise ValueError("No input given.")
        data = load_input(path, config, config.simulation.n_shots)
        ref_before = ref_after = None
        if config.analysis.subtract_background:
            if io_config.reference_before is None or io_config.reference_after is None:
                raise ValueError("Background subtraction requires `reference_before` and `reference_after`.")
            assert config.analysis.reference_shots is not None
            ref_before = load_input(io_config.reference_before, config, config.analysis.reference_shots)
            ref_after = load_input(io_config.reference_after, config, config.analysis.reference_shots)

    output = analyze(data, config.params(), analysis_options(config), ref_before, ref_after)

    with open(_output_path(config, RESULT_FILE), 'w') as f:
        write_result(f, output.result)
    for name, stage_hist in output.stages.items():
        with open(_output_path(config, f'stage_{name}.csv'), 'w') as f:
            write_histogram(f, stage_hist)
    return output


def _sweep_row(config: RunConfig, epsilon: float, seed: int) -> Dict[str, Any]:
    logger.debug(f"Sweep row ε={epsilon}, seed={seed}")
    row: Dict[str, Any] = {
        'epsilon': epsilon,
        'seed': seed,
        'mean_ps': math.nan,
        'se_ps': math.nan,
        'gamma_eff': math.nan,
        'chi2_red': math.nan,
        'theory_mean_ps': math.nan,
        'error': '',
    }
    try:
        sim_config = replace(config.sim_config(epsilon=epsilon, seed=seed), n_jobs=1)
        row['theory_mean_ps'] = 1e12*mean_arrival_time(sim_config.physics)
        with stage('simulate'):
            data = run_simulation(sim_config)
            references: List[Optional[PipelineInput]] = [None, None]
            if config.analysis.subtract_background:
                references = [
                    run_simulation(replace(ref_config, n_jobs=1))
                    for ref_config in _reference_configs(config, seed)
                ]
        result = analyze(
            data, sim_config.physics, analysis_options(config), references[0], references[1]
        ).result
    except (PipelineStageError, ValueError, RuntimeError) as e:
        logger.warning(f"Sweep row ε={epsilon}, seed={seed} failed: {e}")
        row['error'] = str(e)
        return row

    row.update(
        mean_ps=1e12*float(result.mean_arrival),
        se_ps=1e12*result.mean_arrival_se,
        gamma_eff=result.gamma_eff,
        chi2_red=result.chi2_reduced,
    )
    return row


def cmd_sweep(config: RunConfig) -> pd.DataFrame:
    """Simulate and analyze every combination of the swept ε and seeds

    Rows are independent and run in parallel with `n_jobs` workers. A row
    whose simulation or analysis fails records the error in its ``error``
    column without stopping the sweep.

    Returns
    -------
    pd.DataFrame
        The table written to ``sweep.csv``, with the columns ``epsilon``,
        ``seed``, ``mean_ps``, ``se_ps``, ``gamma_eff``, ``chi2_red``,
        ``theory_mean_ps`` and ``error``.
    """
    rows = Parallel(n_jobs=config.simulation.n_jobs)(
        delayed(_sweep_row)(config, epsilon, seed)
        for epsilon in config.sweep.sweep_epsilons
        for seed in config.sweep.sweep_seeds
    )
    df = pd.DataFrame(rows)
    _write_table(
        _output_path(config, SWEEP_FILE), df,
        "mean arrival times in ps against ε in rad; gamma_eff in 1/s"
    )
    n_failed = int(np.sum(df['error'] != ''))
    if n_failed:
        logger.warning(f"{n_failed} of {len(df)} sweep rows failed")
    return df


def cmd_crlb(config: RunConfig) -> pd.DataFrame:
    """Tabulate the Cramér-Rao bound on the splitting over ε and count rate

    Configurations carrying no information have an infinite bound.

    Returns
    -------
    pd.DataFrame
        The table written to ``crlb.csv`` with the columns ``epsilon_rad``,
        ``rate_per_s`` and ``sensitivity_hz_per_sqrt_hz``.
    """
    params = config.params()
    rows = [
        {
            'epsilon_rad': epsilon,
            'rate_per_s': rate,
            'sensitivity_hz_per_sqrt_hz': crlb_sensitivity(replace(params, epsilon=epsilon), rate),
        }
        for epsilon in config.crlb.crlb_epsilons
        for rate in config.crlb.crlb_rates
    ]
    df = pd.DataFrame(rows)
    _write_table(
        _output_path(config, CRLB_FILE), df,
        "bound on the standard deviation of Δ/2π after one second, in Hz/√Hz"
    )
    return df
