from weakbeam.commands import cmd_analyze, cmd_crlb, cmd_simulate, cmd_sweep, cmd_theory
from weakbeam.config import dump_config, load_config, Mode, RunConfig, with_overrides
from weakbeam.exceptions import ConfigValidationError, InputFormatError, PipelineStageError

import argparse
import logging
import sys


EXIT_PARSE_ERROR = 2
EXIT_VALIDATION_ERROR = 3
EXIT_STAGE_ERROR = 4
EXIT_IO_ERROR = 5


def run(config: RunConfig) -> None:
    if config.mode == Mode.THEORY:
        for path in cmd_theory(config):
            print(f"Written {path}")
    elif config.mode == Mode.SIMULATE:
        print(cmd_simulate(config).describe())
    elif config.mode == Mode.ANALYZE:
        result = cmd_analyze(config).result
        print(
            f"Mean arrival time {result.mean_arrival.ns():.6g} ± "
            f"{1e9*result.mean_arrival_se:.2g} ns, Γ_eff {result.gamma_eff:.6g} ± "
            f"{result.gamma_eff_se:.2g} /s, reduced χ² {result.chi2_reduced:.4g}"
        )
    elif config.mode == Mode.SWEEP:
        print(cmd_sweep(config).to_string(index=False))
    elif config.mode == Mode.CRLB:
        print(cmd_crlb(config).to_string(index=False))


def make_parser() -> argparse.ArgumentParser:

    help_description = """
        Simulate and analyze the postselected spontaneous emission of a
        Zeeman-split V system, in which the arrival time of the photon acts
        as the pointer of a weak measurement of the atomic polarization.

        The mode selects the command: 'theory' writes the exact curves,
        'simulate' generates detector events, 'analyze' runs the data
        reduction on recorded events or histograms, 'sweep' simulates and
        analyzes a series of postselection angles and 'crlb' tabulates the
        bound on the sensitivity to the Zeeman splitting.

        Exit status is 0 on success, 2 on a malformed command line or
        configuration file, 3 on an invalid configuration value, 4 when an
        analysis stage fails and 5 on I/O errors.
        """

    parser = argparse.ArgumentParser(
        description=help_description,
        formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )

    parser.add_argument("mode",
                        choices=[mode.name.lower() for mode in Mode],
                        help="the command to run")

    parser.add_argument("--config",
                        help="path to the configuration file",
                        required=True,
                        metavar="CONFIG")

    parser.add_argument("--out-dir",
                        help="""directory for the output files, overriding the
                        `out_dir` configuration key""",
                        metavar="OUT_DIR")

    parser.add_argument("--seed",
                        help="random seed, overriding `rng_seed`",
                        type=int)

    parser.add_argument("--epsilon",
                        help="postselection angle in rad, overriding `epsilon_rad`",
                        type=float)

    parser.add_argument("--quiet",
                        help="only log warnings and errors",
                        action='store_true')

    parser.add_argument("--print-config",
                        help="print the resolved configuration and exit",
                        action='store_true')

    return parser


def main() -> None:

    args = make_parser().parse_args()

    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format='%(levelname)s:%(name)s: %(message)s'
    )

    try:
        config = load_config(args.config, Mode[args.mode.upper()])
        config = with_overrides(config, args.seed, args.epsilon, args.out_dir)
        if args.print_config:
            print(dump_config(config), end='')
            return
        run(config)
    except InputFormatError as e:
        print(f"Error in configuration: {e}", file=sys.stderr)
        sys.exit(EXIT_PARSE_ERROR)
    except ConfigValidationError as e:
        print(f"Invalid configuration: {e}", file=sys.stderr)
        sys.exit(EXIT_VALIDATION_ERROR)
    except PipelineStageError as e:
        print(e, file=sys.stderr)
        sys.exit(EXIT_STAGE_ERROR)
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        sys.exit(EXIT_IO_ERROR)
    except ValueError as e:
        # Remaining invariant violations, e.g. a degenerate parameter set
        print(f"Invalid parameters: {e}", file=sys.stderr)
        sys.exit(EXIT_VALIDATION_ERROR)


if __name__ == "__main__":
    main()
