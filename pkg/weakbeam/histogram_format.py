"""Parsing and writing arrival-time histograms as CSV

The first line is a comment with the binning,
``# bin_width_ps=100, n_shots=1000000, window_ps=520000``,
followed by a table with the columns ``bin_index,count,variance,correction``.
The correction column is empty for uncorrected histograms. Floats are written
with 17 significant digits, so values are reproduced exactly on parsing.
"""

from weakbeam.exceptions import InputFormatError
from weakbeam.histogram import TimeHistogram
from weakbeam.util import ps_from_seconds, seconds_from_ps
from weakbeam._util import get_line

from typing import Dict, TextIO

import numpy as np
import pandas as pd


_float_format = '%.17g'
_columns = ['bin_index', 'count', 'variance', 'correction']


def write_histogram(f: TextIO, hist: TimeHistogram) -> None:
    """Write a histogram to a CSV file

    Parameters
    ----------
    f : TextIO
        File object opened in write mode.
    hist : TimeHistogram
        The histogram to write.
    """
    bin_width_ps = ps_from_seconds(hist.bin_width)
    f.write(
        f"# bin_width_ps={_float_format % bin_width_ps}, "
        f"n_shots={hist.n_shots}, "
        f"window_ps={_float_format % (bin_width_ps*hist.n_bins)}\n"
    )
    pd.DataFrame({
        'bin_index': np.arange(hist.n_bins),
        'count': hist.counts,
        'variance': hist.variances,
        'correction': hist.corrections if hist.corrections is not None else np.full(hist.n_bins, np.nan),
    }).to_csv(f, index=False, float_format=_float_format, na_rep='')


def _parse_header(line: str) -> Dict[str, str]:
    if not line.startswith('#'):
        raise InputFormatError("Histogram file must start with a `#` header line.", 1)
    fields: Dict[str, str] = {}
    for item in line[1:].split(','):
        key, sep, value = item.partition('=')
        if not sep:
            raise InputFormatError(f"Malformed header item: `{item.strip()}`.", 1)
        fields[key.strip()] = value.strip()
    for key in ('bin_width_ps', 'n_shots'):
        if key not in fields:
            raise InputFormatError(f"Header lacks `{key}`.", 1)
    return fields


def parse_histogram(f: TextIO) -> TimeHistogram:
    """Parse a histogram from a CSV file

    Parameters
    ----------
    f : TextIO
        File object opened in read mode.

    Raises
    ------
    InputFormatError
        Raised when the file does not follow the format.

    Returns
    -------
    TimeHistogram
        The histogram described by the file.
    """
    header = _parse_header(get_line(f))
    try:
        bin_width = seconds_from_ps(float(header['bin_width_ps']))
        n_shots = int(header['n_shots'])
        df = pd.read_csv(
            f,
            dtype={'bin_index': np.int64, 'count': float, 'variance': float, 'correction': float},
            float_precision='round_trip',
        )
    except (ValueError, pd.errors.ParserError) as e:
        raise InputFormatError(f"Malformed histogram file: {e}")

    if list(df.columns) != _columns:
        raise InputFormatError(
            f"Expected columns {','.join(_columns)}, found {','.join(map(str, df.columns))}.", 2
        )
    if not np.array_equal(df['bin_index'].to_numpy(), np.arange(len(df))):
        raise InputFormatError("Bin indices must be consecutive and start at zero.")

    corrections = df['correction'].to_numpy()
    if np.all(np.isnan(corrections)):
        corrections = None
    elif np.any(np.isnan(corrections)):
        raise InputFormatError("Correction column must be either complete or empty.")

    try:
        hist = TimeHistogram(
            bin_width,
            df['count'].to_numpy(),
            n_shots,
            df['variance'].to_numpy(),
            corrections,
        )
    except ValueError as e:
        raise InputFormatError(f"Invalid histogram: {e}")

    if 'window_ps' in header and abs(float(header['window_ps']) - ps_from_seconds(hist.window)) > 1e-6*float(header['window_ps']):
        raise InputFormatError(
            f"Header window ({header['window_ps']} ps) does not match the number of bins."
        )
    return hist
