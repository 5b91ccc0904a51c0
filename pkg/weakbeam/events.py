"""Detector event streams as recorded by a multiple-event time digitizer

Times are stored as integer numbers of digitizer ticks (the bin width), so
that event streams can be written and read back exactly.
"""

from weakbeam._util import NoValue
from weakbeam.exceptions import UnorderedEventsError

from dataclasses import dataclass
from typing import Iterator, overload, Sequence, Union

import numpy as np


class Tag(NoValue):
    """Ground-truth origin of an event, known only for simulated streams"""
    SIGNAL = 0
    BACKGROUND = 1
    AFTERPULSE = 2
    UNLABELLED = 3


@dataclass(frozen=True)
class EventRecord:
    """A single detector click

    Parameters
    ----------
    shot_index : int
        Index of the excitation trigger owning the event.
    t_abs : float
        Absolute time since the start of the run in seconds, an integer
        multiple of the bin width.
    t_rel : float
        Time since the owning trigger in seconds, same quantization.
    tag : Tag
        The ground-truth label. Analysis never inspects it.

    Attributes
    ----------
    shot_index
        See initialization parameter
    t_abs
        See initialization parameter
    t_rel
        See initialization parameter
    tag
        See initialization parameter
    """
    shot_index: int
    t_abs: float
    t_rel: float
    tag: Tag


class EventStream(Sequence[EventRecord]):
    """Ordered stream of detector events backed by numpy arrays

    Parameters
    ----------
    bin_width : float
        Duration of one digitizer tick in seconds.
    rep_period_ticks : int
        Time between excitation triggers in ticks.
    n_shots : int
        Number of excitation triggers in the run, including those without events.
    shot_index : np.ndarray
        Owning shot of each event.
    t_rel_ticks : np.ndarray
        Time since the owning trigger of each event in ticks, each less than
        `rep_period_ticks`.
    tags : np.ndarray
        The `Tag` value of each event.

    Raises
    ------
    ValueError
        Raised when the arrays differ in length or contain out-of-range values.

    Attributes
    ----------
    bin_width
        See initialization parameter
    rep_period_ticks
        See initialization parameter
    n_shots
        See initialization parameter
    shot_index
        See initialization parameter
    t_rel_ticks
        See initialization parameter
    tags
        See initialization parameter
    """

    def __init__(
        self,
        bin_width: float,
        rep_period_ticks: int,
        n_shots: int,
        shot_index: np.ndarray,
        t_rel_ticks: np.ndarray,
        tags: np.ndarray,
    ) -> None:
        if bin_width <= 0:
            raise ValueError(f"Bin width must be positive, got {bin_width}.")
        if rep_period_ticks < 1:
            raise ValueError(f"Repetition period must be at least one tick, got {rep_period_ticks}.")
        if n_shots < 0:
            raise ValueError(f"Number of shots cannot be negative, got {n_shots}.")

        self.bin_width = float(bin_width)
        self.rep_period_ticks = int(rep_period_ticks)
        self.n_shots = int(n_shots)
        self.shot_index = np.asarray(shot_index, dtype=np.int64)
        self.t_rel_ticks = np.asarray(t_rel_ticks, dtype=np.int64)
        self.tags = np.asarray(tags, dtype=np.uint8)

        if not len(self.shot_index) == len(self.t_rel_ticks) == len(self.tags):
            raise ValueError(
                f"Event arrays differ in length: {len(self.shot_index)}, "
                f"{len(self.t_rel_ticks)}, {len(self.tags)}."
            )
        if len(self):
            if self.t_rel_ticks.min() < 0 or self.t_rel_ticks.max() >= self.rep_period_ticks:
                raise ValueError("Event times must lie within the repetition period.")
            if self.shot_index.min() < 0 or self.shot_index.max() >= self.n_shots:
                raise ValueError("Event shot indices must lie within the run.")
            if self.tags.max() > max(tag.value for tag in Tag):
                raise ValueError("Unknown event tag.")

        for array in (self.shot_index, self.t_rel_ticks, self.tags):
            array.setflags(write=False)

    @classmethod
    def empty(cls, bin_width: float, rep_period_ticks: int, n_shots: int) -> "EventStream":
        no_events = np.zeros(0, dtype=np.int64)
        return cls(bin_width, rep_period_ticks, n_shots, no_events, no_events, no_events)

    @classmethod
    def from_abs_ticks(
        cls,
        bin_width: float,
        rep_period_ticks: int,
        n_shots: int,
        t_abs_ticks: np.ndarray,
        tags: np.ndarray,
    ) -> "EventStream":
        """Alternative initialization from absolute times in ticks"""
        t_abs_ticks = np.asarray(t_abs_ticks, dtype=np.int64)
        shot_index, t_rel_ticks = np.divmod(t_abs_ticks, rep_period_ticks)
        return cls(bin_width, rep_period_ticks, n_shots, shot_index, t_rel_ticks, tags)

    @property
    def rep_period(self) -> float:
        """Time between excitation triggers in seconds"""
        return self.rep_period_ticks*self.bin_width

    @property
    def t_abs_ticks(self) -> np.ndarray:
        return self.shot_index*self.rep_period_ticks + self.t_rel_ticks

    @property
    def t_rel(self) -> np.ndarray:
        """Times since the owning triggers in seconds"""
        return self.t_rel_ticks*self.bin_width

    def is_ordered(self) -> bool:
        """Whether events are in non-decreasing absolute time"""
        return bool(np.all(np.diff(self.t_abs_ticks) >= 0))

    def check_ordered(self) -> None:
        """Raise `UnorderedEventsError` if events are not ordered in absolute time"""
        if not self.is_ordered():
            position = int(np.argmax(np.diff(self.t_abs_ticks) < 0)) + 1
            raise UnorderedEventsError(
                f"Event {position} precedes its predecessor in absolute time."
            )

    def select(self, mask: np.ndarray) -> "EventStream":
        """New stream containing only the events selected by a boolean mask or index array"""
        return EventStream(
            self.bin_width,
            self.rep_period_ticks,
            self.n_shots,
            self.shot_index[mask],
            self.t_rel_ticks[mask],
            self.tags[mask],
        )

    def count_tag(self, tag: Tag) -> int:
        return int(np.count_nonzero(self.tags == tag.value))

    def __len__(self) -> int:
        return len(self.shot_index)

    @overload
    def __getitem__(self, index: int) -> EventRecord: ...

    @overload
    def __getitem__(self, index: slice) -> "EventStream": ...

    def __getitem__(self, index: Union[int, slice]) -> Union[EventRecord, "EventStream"]:
        if isinstance(index, slice):
            return self.select(np.arange(len(self))[index])
        shot = int(self.shot_index[index])
        t_rel_ticks = int(self.t_rel_ticks[index])
        return EventRecord(
            shot,
            (shot*self.rep_period_ticks + t_rel_ticks)*self.bin_width,
            t_rel_ticks*self.bin_width,
            Tag(int(self.tags[index])),
        )

    def __iter__(self) -> Iterator[EventRecord]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.bin_width == other.bin_width and
            self.rep_period_ticks == other.rep_period_ticks and
            self.n_shots == other.n_shots and
            np.array_equal(self.shot_index, other.shot_index) and
            np.array_equal(self.t_rel_ticks, other.t_rel_ticks) and
            np.array_equal(self.tags, other.tags)
        )

    def __repr__(self) -> str:
        return (
            f"EventStream({len(self)} events, bin_width={self.bin_width!r}, "
            f"rep_period_ticks={self.rep_period_ticks}, n_shots={self.n_shots})"
        )
