from weakbeam.exceptions import InputFormatError

from enum import Enum
from typing import Collection, Iterable, Iterator, NamedTuple, Optional, TextIO, Tuple, TypeVar

import math


# As per Python docs
class NoValue(Enum):
    def __repr__(self) -> str:
        return '<%s.%s>' % (self.__class__.__name__, self.name)


T = TypeVar('T')
U = TypeVar('U')

def zip_exact(first: Collection[T], second: Collection[U]) -> Iterable[Tuple[T, U]]:

    if len(first) != len(second):
        raise ValueError(
            f"Failed to zip arguments due to unequal lengths: {len(first)} v. {len(second)}."
        )

    return zip(first, second)


def get_line(f: TextIO) -> str:
    return f.readline().rstrip('\n')


def ticks_from_duration(duration: float, tick: float, name: str) -> int:
    """Convert a duration to an integer number of clock ticks

    Raises ValueError if the duration is not a whole number of ticks (to one
    part in a million of a tick).
    """
    ratio = duration/tick
    ticks = int(round(ratio))
    if not math.isclose(ratio, ticks, rel_tol=0, abs_tol=1e-6):
        raise ValueError(
            f"`{name}` ({duration} s) is not a whole multiple of the tick ({tick} s)."
        )
    return ticks


class KeyValueLine(NamedTuple):
    line_number: int
    section: Optional[str]
    key: str
    value: str


def iter_key_values(f: TextIO) -> Iterator[KeyValueLine]:
    """Iterate over ``key = value`` lines, tracking ``[section]`` headers

    Blank lines and ``#`` comments (also trailing ones) are skipped. Values may
    be empty. Raises
    InputFormatError with the line number on malformed lines.
    """
    section: Optional[str] = None
    for line_number, line in enumerate(f, start=1):
        content = line.split('#', 1)[0].strip()
        if not content:
            continue
        if content.startswith('['):
            if not content.endswith(']') or not content[1:-1].strip():
                raise InputFormatError(f"Malformed section header: `{content}`.", line_number)
            section = content[1:-1].strip()
            continue
        key, sep, value = content.partition('=')
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise InputFormatError(f"Expected `key = value`, found: `{content}`.", line_number)
        yield KeyValueLine(line_number, section, key, value)
