"""Parsing and writing analysis results as flat ``key = value`` text

One key per line, in a fixed order, with floats written by `repr` so that
files can be compared with ``diff`` and parse back to identical values.
"""

from weakbeam.exceptions import InputFormatError
from weakbeam.fitting import AnalysisResult
from weakbeam.types import Seconds
from weakbeam._util import iter_key_values

from typing import Dict, Optional, TextIO


_keys = [
    'scale',
    'scale_se',
    'gamma_eff',
    'gamma_eff_se',
    'mean_arrival_s',
    'mean_arrival_se_s',
    'chi2_reduced',
    'window_lo_s',
    'window_hi_s',
    'background_fraction',
]


def write_result(f: TextIO, result: AnalysisResult) -> None:
    """Write an analysis result, one ``key = value`` per line"""
    values = [
        result.scale,
        result.scale_se,
        result.gamma_eff,
        result.gamma_eff_se,
        float(result.mean_arrival),
        result.mean_arrival_se,
        result.chi2_reduced,
        float(result.window[0]),
        float(result.window[1]),
        result.background_fraction,
    ]
    for key, value in zip(_keys, values):
        print(f"{key} = {'none' if value is None else repr(float(value))}", file=f)


def parse_result(f: TextIO) -> AnalysisResult:
    """Parse an analysis result written by `write_result`

    Raises
    ------
    InputFormatError
        Raised when a key is missing, unknown or repeated, or a value is not
        a number.
    """
    values: Dict[str, Optional[float]] = {}
    for line in iter_key_values(f):
        if line.section is not None:
            raise InputFormatError("Result files do not have sections.", line.line_number)
        if line.key not in _keys:
            raise InputFormatError(f"Unknown key `{line.key}`.", line.line_number)
        if line.key in values:
            raise InputFormatError(f"Repeated key `{line.key}`.", line.line_number)
        if line.value == 'none' and line.key == 'background_fraction':
            values[line.key] = None
            continue
        try:
            values[line.key] = float(line.value)
        except ValueError:
            raise InputFormatError(
                f"Value of `{line.key}` is not a number: `{line.value}`.", line.line_number
            )

    missing = [key for key in _keys if key not in values]
    if missing:
        raise InputFormatError(f"Result lacks the keys: {', '.join(missing)}.")

    def get(key: str) -> float:
        value = values[key]
        assert value is not None
        return value

    try:
        return AnalysisResult(
            scale=get('scale'),
            scale_se=get('scale_se'),
            gamma_eff=get('gamma_eff'),
            gamma_eff_se=get('gamma_eff_se'),
            mean_arrival=Seconds(get('mean_arrival_s')),
            mean_arrival_se=get('mean_arrival_se_s'),
            chi2_reduced=get('chi2_reduced'),
            window=(get('window_lo_s'), get('window_hi_s')),
            background_fraction=values['background_fraction'],
        )
    except (ValueError, AssertionError) as e:
        raise InputFormatError(f"Invalid result: {e}")
