"""Parsing and writing detector event streams

Two formats are supported:

* The binary "WBEV" format: a little-endian header (magic ``WBEV``, version
  as u16, bin width in ps, repetition period in ps and number of shots, each
  as u64) followed by one record per event (shot index as u64, time since
  trigger in ticks as u64, tag as u8).
* A plain-text CSV export with the header ``shot,t_rel_ps,tag``, which is
  also the route for adapting timestamps exported from real digitizers.
  The tag column is optional on input.
"""

from weakbeam.events import EventStream, Tag
from weakbeam.exceptions import InputFormatError
from weakbeam.util import ps_from_seconds, seconds_from_ps

from typing import BinaryIO, Dict, TextIO

import numpy as np
import pandas as pd
import struct


_magic = b'WBEV'
_version = 1
_header = struct.Struct('<4sHQQQ')
_record = np.dtype([('shot', '<u8'), ('t_rel_ticks', '<u8'), ('tag', 'u1')])

_tag_names: Dict[Tag, str] = {tag: tag.name.lower() for tag in Tag}


def _integer_ps(value: float, name: str) -> int:
    ps = ps_from_seconds(value)
    rounded = int(round(ps))
    if abs(ps - rounded) > 1e-6 or rounded < 1:
        raise ValueError(f"The {name} ({value} s) is not a positive whole number of picoseconds.")
    return rounded


def write_event_stream(f: BinaryIO, events: EventStream) -> None:
    """Write an event stream in the binary WBEV format

    Parameters
    ----------
    f : BinaryIO
        File object opened in binary write mode.
    events : EventStream
        The events. Bin width and repetition period must be whole picoseconds.

    Raises
    ------
    ValueError
        Raised when the timing cannot be represented in picoseconds.
    """
    bin_width_ps = _integer_ps(events.bin_width, "bin width")
    f.write(_header.pack(
        _magic,
        _version,
        bin_width_ps,
        events.rep_period_ticks*bin_width_ps,
        events.n_shots,
    ))
    records = np.empty(len(events), dtype=_record)
    records['shot'] = events.shot_index
    records['t_rel_ticks'] = events.t_rel_ticks
    records['tag'] = events.tags
    f.write(records.tobytes())


def parse_event_stream(f: BinaryIO) -> EventStream:
    """Parse an event stream in the binary WBEV format

    Parameters
    ----------
    f : BinaryIO
        File object opened in binary read mode.

    Raises
    ------
    InputFormatError
        Raised when the file is not a valid WBEV file.

    Returns
    -------
    EventStream
        The events described by the file.
    """
    header = f.read(_header.size)
    if len(header) != _header.size:
        raise InputFormatError("Event file is too short to contain a header.")
    magic, version, bin_width_ps, rep_period_ps, n_shots = _header.unpack(header)
    if magic != _magic:
        raise InputFormatError(f"Not an event file: unexpected magic {magic!r}.")
    if version != _version:
        raise InputFormatError(f"Unsupported event file version: {version}.")
    if bin_width_ps == 0 or rep_period_ps % bin_width_ps != 0:
        raise InputFormatError(
            f"Repetition period ({rep_period_ps} ps) is not a whole number of "
            f"bins ({bin_width_ps} ps)."
        )

    body = f.read()
    if len(body) % _record.itemsize != 0:
        raise InputFormatError("Event file ends with an incomplete record.")
    records = np.frombuffer(body, dtype=_record)

    try:
        events = EventStream(
            seconds_from_ps(bin_width_ps),
            rep_period_ps//bin_width_ps,
            n_shots,
            records['shot'].astype(np.int64),
            records['t_rel_ticks'].astype(np.int64),
            records['tag'],
        )
    except ValueError as e:
        raise InputFormatError(f"Invalid event records: {e}")
    return events


def write_events_csv(f: TextIO, events: EventStream) -> None:
    """Export an event stream as CSV with the columns ``shot,t_rel_ps,tag``"""
    bin_width_ps = _integer_ps(events.bin_width, "bin width")
    pd.DataFrame({
        'shot': events.shot_index,
        't_rel_ps': events.t_rel_ticks*bin_width_ps,
        'tag': [_tag_names[Tag(int(tag))] for tag in events.tags],
    }).to_csv(f, index=False)


def parse_events_csv(
    f: TextIO,
    bin_width: float,
    rep_period: float,
    n_shots: int
) -> EventStream:
    """Parse events exported as CSV

    The file does not record the run's timing, which must be supplied.

    Parameters
    ----------
    f : TextIO
        File object opened in read mode.
    bin_width : float
        Digitizer tick in seconds, a whole number of picoseconds. Times in the
        file must be multiples of it.
    rep_period : float
        Time between triggers in seconds.
    n_shots : int
        Number of triggers in the run.

    Raises
    ------
    InputFormatError
        Raised when the file does not follow the format or is inconsistent
        with the timing.

    Returns
    -------
    EventStream
        The events, ordered as in the file. Events without a tag column are
        `Tag.UNLABELLED`.
    """
    try:
        df = pd.read_csv(f, dtype={'shot': np.int64, 't_rel_ps': np.int64, 'tag': str})
    except (ValueError, pd.errors.ParserError) as e:
        raise InputFormatError(f"Malformed event CSV: {e}")
    for column in ('shot', 't_rel_ps'):
        if column not in df.columns:
            raise InputFormatError(f"Event CSV lacks the `{column}` column.")

    bin_width_ps = _integer_ps(bin_width, "bin width")
    rep_period_ticks = _integer_ps(rep_period, "repetition period")//bin_width_ps
    t_rel_ps = df['t_rel_ps'].to_numpy()
    if np.any(t_rel_ps % bin_width_ps != 0):
        bad = int(np.argmax(t_rel_ps % bin_width_ps != 0))
        raise InputFormatError(
            f"Time {t_rel_ps[bad]} ps is not a multiple of the bin width.", bad + 2
        )

    if 'tag' in df.columns:
        by_name = {name: tag.value for tag, name in _tag_names.items()}
        try:
            tags = np.array([by_name[name] for name in df['tag']], dtype=np.uint8)
        except KeyError as e:
            raise InputFormatError(f"Unknown event tag: {e}")
    else:
        tags = np.full(len(df), Tag.UNLABELLED.value, dtype=np.uint8)

    try:
        return EventStream(
            bin_width,
            rep_period_ticks,
            n_shots,
            df['shot'].to_numpy(),
            t_rel_ps//bin_width_ps,
            tags,
        )
    except ValueError as e:
        raise InputFormatError(f"Invalid events: {e}")
