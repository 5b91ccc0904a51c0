"""Fundamental types describing the atom, its polarization states and the excitation"""

from weakbeam._util import NoValue
from weakbeam.util import ns_from_seconds, seconds_from_ns

from dataclasses import dataclass, field
from enum import auto
from typing import Any, Type, TypeVar

import cmath
import math


SecondsT = TypeVar('SecondsT', bound='Seconds')
class Seconds(float):
    """Time interval in seconds

    Photon arrival times are of the order of tens of nanoseconds and the string
    representation includes the value in ns for convenience:

    >>> s = Seconds(2.6e-08)
    >>> s
    Seconds(2.6e-08)
    >>> print(s)
    2.6e-08 s (26.0 ns)

    Parameters
    ----------
    value : Any
        Any value convertible to float representing the value in seconds.
    """

    __slots__ = ()

    def __new__(cls: Type[SecondsT], value: Any) -> SecondsT:
        return super().__new__(cls, float(value))  # type: ignore # (Too many arguments for "__new__" of "object")

    @classmethod
    def from_ns(cls: Type[SecondsT], value: Any) -> SecondsT:
        """Alternative initialization from value in nanoseconds"""
        return cls(seconds_from_ns(float(value)))

    def ns(self) -> float:
        """Value in nanoseconds"""
        return ns_from_seconds(self)

    def __repr__(self) -> str:
        return f"Seconds({super().__repr__()})"

    def __str__(self) -> str:
        return f"{super().__repr__()} s ({self.ns():.4g} ns)"


_normalization_tolerance = 1e-12


@dataclass(frozen=True)
class PolarizationState:
    """Polarization state of the emitted photon in the circular basis

    For photons emitted along the magnetic field the circular polarizations
    σ± map one-to-one onto the excited states |±⟩ of the V system, so the same
    two amplitudes describe both the atom and the photon.

    Parameters
    ----------
    c_plus : complex
        Amplitude of |+⟩ (σ⁺, m=+1).
    c_minus : complex
        Amplitude of |−⟩ (σ⁻, m=−1).

    Raises
    ------
    ValueError
        Raised when the state is not normalized to within 1e-12.

    Attributes
    ----------
    c_plus
        See initialization parameter
    c_minus
        See initialization parameter
    """
    c_plus: complex
    c_minus: complex

    def __post_init__(self) -> None:
        norm = abs(self.c_plus)**2 + abs(self.c_minus)**2
        if abs(norm - 1) > _normalization_tolerance:
            raise ValueError(
                f"Polarization state is not normalized: |c+|² + |c-|² = {norm}."
            )

    @classmethod
    def normalized(cls, c_plus: complex, c_minus: complex) -> "PolarizationState":
        """Alternative initialization from unnormalized amplitudes"""
        norm = math.sqrt(abs(c_plus)**2 + abs(c_minus)**2)
        if norm == 0:
            raise ValueError("Cannot normalize the zero vector.")
        return cls(complex(c_plus)/norm, complex(c_minus)/norm)


@dataclass(frozen=True)
class WeakValue:
    """Complex weak value split into its real and imaginary parts

    Attributes
    ----------
    re : float
        The real part (dimensionless).
    im : float
        The imaginary part (dimensionless). For this atom only the imaginary
        part is non-zero and it shifts the photon arrival time.
    """
    re: float
    im: float

    def __complex__(self) -> complex:
        return complex(self.re, self.im)


class PulseKind(NoValue):
    DELTA = auto()
    SQUARE = auto()


@dataclass(frozen=True)
class PulseShape:
    """Temporal shape of the excitation pulse

    The excitation time of the atom is distributed according to the normalized
    pulse shape, so observed arrival times are the emission delays convolved
    with it.

    Parameters
    ----------
    kind : PulseKind
        Either an instantaneous (impulsive) excitation or a square pulse.
    duration : float, optional
        Duration in seconds. Must be 0 for `PulseKind.DELTA` and positive for
        `PulseKind.SQUARE`. Defaults to 0.
    """
    kind: PulseKind
    duration: float = 0

    def __post_init__(self) -> None:
        if self.duration < 0:
            raise ValueError(f"Negative pulse duration: {self.duration}.")
        if self.kind == PulseKind.SQUARE and self.duration == 0:
            raise ValueError("A square pulse requires a positive duration.")
        if self.kind == PulseKind.DELTA and self.duration != 0:
            raise ValueError("An impulsive excitation cannot have a duration.")

    @classmethod
    def delta(cls) -> "PulseShape":
        """Instantaneous excitation at t=0"""
        return cls(PulseKind.DELTA)

    @classmethod
    def square(cls, duration: float) -> "PulseShape":
        """Square excitation pulse of the given duration in seconds"""
        return cls(PulseKind.SQUARE, duration)

    @property
    def mean_offset(self) -> float:
        """Mean excitation time within the pulse, in seconds"""
        return self.duration/2


@dataclass(frozen=True)
class VSystemParams:
    """Physical parameters of the Zeeman-split V system and its postselection

    Parameters
    ----------
    gamma : float
        Decay rate Γ in 1/s, the reciprocal of the excited-state lifetime.
    delta : float
        Zeeman splitting Δ as an angular frequency in rad/s; the excited
        levels are shifted by ±ħΔ. See `weakbeam.util` for the conversion
        from Hz.
    epsilon : float
        Postselection angle ε in rad, between 0 and π/2. The polarizer is set
        at 90°+ε to the prepared polarization.
    pulse : PulseShape, optional
        The excitation pulse. Defaults to an impulsive excitation.

    Raises
    ------
    ValueError
        Raised when any of the parameters is outside its allowed range.

    Attributes
    ----------
    gamma
        See initialization parameter
    delta
        See initialization parameter
    epsilon
        See initialization parameter
    pulse
        See initialization parameter
    """
    gamma: float
    delta: float
    epsilon: float
    pulse: PulseShape = field(default_factory=PulseShape.delta)

    def __post_init__(self) -> None:
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"Invalid value for `gamma`: {self.gamma} (must be positive).")
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise ValueError(f"Invalid value for `delta`: {self.delta} (must be non-negative).")
        if not 0 <= self.epsilon <= math.pi/2:
            raise ValueError(f"Invalid value for `epsilon`: {self.epsilon} (must be in [0, π/2]).")

    @property
    def is_degenerate(self) -> bool:
        """Whether no photon can pass postselection (Δ=0 and ε=0)"""
        return self.delta == 0 and self.epsilon == 0

    @property
    def weak_regime(self) -> bool:
        """Whether Δ/Γ ≪ ε ≪ 1 holds, taken as Δ/Γ < ε/10 and ε < 0.1·π/2

        This is a diagnostic only. All operations are valid outside the weak
        regime, but first-order approximations lose accuracy.
        """
        return self.delta/self.gamma < self.epsilon/10 and self.epsilon < 0.1*math.pi/2


def preselected_state() -> PolarizationState:
    """The state |ψ⟩ = (|+⟩ + |−⟩)/√2 prepared by the linearly polarized pulse"""
    return PolarizationState(1/math.sqrt(2), 1/math.sqrt(2))


def postselect_angle(epsilon: float) -> PolarizationState:
    """Postselected polarization at 90°+ε to the prepared one

    Parameters
    ----------
    epsilon : float
        The angle ε in rad, between 0 and π/2.

    Raises
    ------
    ValueError
        Raised when `epsilon` is outside [0, π/2].

    Returns
    -------
    PolarizationState
        The analyser state φ = (e^{−iε}|+⟩ − e^{iε}|−⟩)/√2. As a postselection
        the amplitudes are those of the projecting bra, see `weakbeam.pointer.weak_value`.
    """
    if not 0 <= epsilon <= math.pi/2:
        raise ValueError(f"Invalid value for `epsilon`: {epsilon} (must be in [0, π/2]).")
    return PolarizationState(
        cmath.exp(-1j*epsilon)/math.sqrt(2),
        -cmath.exp(1j*epsilon)/math.sqrt(2),
    )
