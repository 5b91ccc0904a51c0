"""Constants and convenience functions for interacting with the library

All quantities inside the library are in SI units: times in seconds, decay
rates in 1/s and the Zeeman splitting as an *angular* frequency in rad/s.
Configuration files and the command line use cyclic frequencies (Hz) and
convenient time units (ns, ps), converted by the functions below.

.. warning::
    The splitting quoted as "Δ = 600 kHz" is a cyclic frequency. It maps to
    Δ = 2π·600e3 rad/s, which for a 26 ns lifetime gives 2Δ ≈ Γ/5, i.e. two
    Lorentzians separated by a fifth of their width. Forgetting the 2π moves
    the experiment out of the weak regime by a factor of six.
"""

import math

"""
Attributes
----------
"""

ns_per_s = 1e9
"""float : Nanoseconds in one second"""

ps_per_s = 1e12
"""float : Picoseconds in one second"""

natural_lifetime_rb87_ns = 26.0
"""float : Lifetime 1/Γ of the ⁸⁷Rb D2 excited state used as default, in ns"""


def angular_from_cyclic(frequency_hz: float) -> float:
    """Convert a cyclic frequency in Hz to an angular frequency in rad/s

    Parameters
    ----------
    frequency_hz : float
        Cyclic frequency in Hz.

    Returns
    -------
    float
        The angular frequency 2π·frequency_hz in rad/s.
    """
    return 2*math.pi*frequency_hz


def cyclic_from_angular(frequency_rad_s: float) -> float:
    """Convert an angular frequency in rad/s to a cyclic frequency in Hz"""
    return frequency_rad_s/(2*math.pi)


def rate_from_lifetime_ns(lifetime_ns: float) -> float:
    """Decay rate Γ in 1/s from a lifetime 1/Γ given in nanoseconds"""
    return ns_per_s/lifetime_ns


def rate_from_linewidth_hz(linewidth_hz: float) -> float:
    """Decay rate Γ in 1/s from the cyclic FWHM of the emission line in Hz

    The spectral intensity is a Lorentzian with an angular FWHM equal to Γ,
    hence Γ = 2π·linewidth_hz.
    """
    return angular_from_cyclic(linewidth_hz)


def seconds_from_ns(value_ns: float) -> float:
    return value_ns/ns_per_s


def seconds_from_ps(value_ps: float) -> float:
    return value_ps/ps_per_s


def ns_from_seconds(value_s: float) -> float:
    return value_s*ns_per_s


def ps_from_seconds(value_s: float) -> float:
    return value_s*ps_per_s
