"""Spectral amplitude of the postselected photon and its Fourier dual

Time amplitudes are related to spectral amplitudes by

    a(t) = (1/2π)·∫A(ω)·e^{iωt} dω,

with the complex Lorentzian L(ω) = 1/(1 + 2iω/Γ), which is causal in this
convention: its transform is (Γ/2)·e^{−Γt/2} for t > 0 and zero before. The
Zeeman shift moves the two circular components to ω = ±Δ and the analyser
adds the phases ±ε, so the postselected spectral amplitude is
e^{iε}L(ω−Δ) − e^{−iε}L(ω+Δ), whose transform is iΓ·e^{−Γt/2}·sin(Δt+ε).
"""

from weakbeam.exceptions import CoarseGridWarning
from weakbeam.pointer import pointer_pdf
from weakbeam.types import VSystemParams

from dataclasses import dataclass
from scipy.special import sici
from typing import Optional, Tuple

import cmath
import math
import numpy as np
import warnings


@dataclass(frozen=True)
class SpectralAmplitude:
    """Complex spectral amplitude sampled on a grid of detunings

    Parameters
    ----------
    detuning : np.ndarray
        Strictly increasing detunings ω−ω₀ in rad/s.
    amplitude : np.ndarray
        The complex (unnormalized) amplitude at each detuning.

    Attributes
    ----------
    detuning
        See initialization parameter
    amplitude
        See initialization parameter
    """
    detuning: np.ndarray
    amplitude: np.ndarray

    def __post_init__(self) -> None:
        if len(self.detuning) != len(self.amplitude):
            raise ValueError(
                f"Detuning grid and amplitude differ in length: "
                f"{len(self.detuning)} v. {len(self.amplitude)}."
            )
        if len(self.detuning) < 2 or np.any(np.diff(self.detuning) <= 0):
            raise ValueError("Detuning grid must be strictly increasing.")
        if not np.all(np.isfinite(self.amplitude)):
            raise ValueError("Spectral amplitude must be finite.")

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude)**2


def lorentzian_amplitude(detuning: np.ndarray, gamma: float) -> np.ndarray:
    """The complex Lorentzian 1/(1 + 2iω/Γ), whose intensity has FWHM Γ"""
    return 1/(1 + 2j*np.asarray(detuning, dtype=float)/gamma)


def detuning_grid(gamma: float, half_width: float=20, points_per_gamma: int=50) -> np.ndarray:
    """Uniform symmetric grid of detunings

    Parameters
    ----------
    gamma : float
        Decay rate Γ in 1/s, the unit of the grid.
    half_width : float, optional
        The grid spans ±half_width·Γ. Defaults to 20.
    points_per_gamma : int, optional
        The grid spacing is Γ/points_per_gamma. Defaults to 50.

    Returns
    -------
    np.ndarray
        The detunings in rad/s.
    """
    n_half = int(round(half_width*points_per_gamma))
    return np.arange(-n_half, n_half + 1)*(gamma/points_per_gamma)


def _is_compliant(grid: np.ndarray, gamma: float) -> bool:
    spacing = np.max(np.diff(grid))
    # Tolerance allows for the rounding of a grid built exactly at the limits.
    tolerance = 1e-9*gamma
    return bool(
        grid[0] <= -20*gamma + tolerance and
        grid[-1] >= 20*gamma - tolerance and
        spacing <= gamma/50 + tolerance
    )


def spectral_amplitude(params: VSystemParams, grid: np.ndarray) -> SpectralAmplitude:
    """Postselected spectral amplitude e^{iε}L(ω−Δ) − e^{−iε}L(ω+Δ)

    Parameters
    ----------
    params : VSystemParams
        The system parameters. The pulse shape is ignored.
    grid : np.ndarray
        Strictly increasing detunings in rad/s. A `CoarseGridWarning` is issued
        when it does not span ±20Γ with a spacing of at most Γ/50, as the
        inverse transform cannot then be certified against the time domain.

    Returns
    -------
    SpectralAmplitude
        The unnormalized amplitude on the grid.
    """
    grid = np.asarray(grid, dtype=float)
    if len(grid) >= 2 and np.all(np.diff(grid) > 0) and not _is_compliant(grid, params.gamma):
        warnings.warn(
            f"Detuning grid [{grid[0]:.3g}, {grid[-1]:.3g}] rad/s with spacing "
            f"{np.max(np.diff(grid)):.3g} rad/s is too coarse for Γ = {params.gamma:.3g}/s.",
            CoarseGridWarning
        )
    phase = cmath.exp(1j*params.epsilon)
    amplitude = (
        phase*lorentzian_amplitude(grid - params.delta, params.gamma) -
        phase.conjugate()*lorentzian_amplitude(grid + params.delta, params.gamma)
    )
    return SpectralAmplitude(grid, amplitude)


def _tail_integrals(t: np.ndarray, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    # Integrals of e^{iωt}/ω and e^{iωt}/ω² over (−∞, lo] ∪ [hi, ∞), for lo < 0 < hi and t > 0.
    si_hi, ci_hi = sici(hi*t)
    si_lo, ci_lo = sici(-lo*t)
    first_hi = -ci_hi + 1j*(math.pi/2 - si_hi)
    first_lo = ci_lo + 1j*(math.pi/2 - si_lo)
    second_hi = np.exp(1j*hi*t)/hi + 1j*t*first_hi
    second_lo = np.exp(1j*lo*t)/(-lo) + 1j*t*first_lo
    return first_hi + first_lo, second_hi + second_lo


def time_amplitude(
    spectrum: SpectralAmplitude,
    t_max: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse Fourier transform of a sampled spectral amplitude

    The transform inside the grid is evaluated by FFT with trapezoidal
    weights and an endpoint derivative correction. Outside the grid the
    amplitude is continued as α/ω + β/ω², matched to the two edge values,
    and the tail integrals are added analytically through the sine and cosine
    integrals. This captures the slowly decaying tails of the Lorentzians
    which would otherwise dominate the error.

    Parameters
    ----------
    spectrum : SpectralAmplitude
        The spectral amplitude on a uniform grid enclosing zero detuning.
    t_max : float
        The largest time of interest in seconds.

    Raises
    ------
    ValueError
        Raised when the grid is not uniform, does not enclose zero, or is too
        coarse to resolve times up to `t_max`.

    Returns
    -------
    Tuple[np.ndarray, np.ndarray]
        The positive times 0 < t ≤ t_max of the transform grid in seconds and
        the complex time amplitude at these times.
    """
    omega = spectrum.detuning
    n = len(omega)
    h = (omega[-1] - omega[0])/(n - 1)
    if not np.allclose(np.diff(omega), h, rtol=1e-6, atol=0):
        raise ValueError("Inverse transform requires a uniform detuning grid.")
    lo, hi = omega[0], omega[-1]
    if not lo < 0 < hi:
        raise ValueError("Detuning grid must enclose zero detuning.")

    dt = 2*math.pi/(n*h)
    n_times = int(math.floor(t_max/dt))
    if n_times < 1 or n_times >= n//2:
        raise ValueError(
            f"Detuning grid of {n} points with spacing {h:.3g} rad/s cannot "
            f"resolve times up to {t_max:.3g} s."
        )
    j = np.arange(1, n_times + 1)
    t = j*dt

    weights = np.ones(n)
    weights[0] = weights[-1] = 0.5
    inner = n*np.fft.ifft(spectrum.amplitude*weights)[j]*np.exp(1j*lo*t)*h

    # Edge continuation A(ω) ≈ α/ω + β/ω²
    A_lo, A_hi = spectrum.amplitude[0], spectrum.amplitude[-1]
    matrix = np.array([[1/hi, 1/hi**2], [1/lo, 1/lo**2]])
    alpha, beta = np.linalg.solve(matrix, np.array([A_hi, A_lo]))

    # Euler-Maclaurin correction using the derivative of the continuation
    def edge_derivative(w: float, A_w: complex) -> np.ndarray:
        A_prime = -alpha/w**2 - 2*beta/w**3
        return (A_prime + 1j*t*A_w)*np.exp(1j*w*t)

    inner -= h**2/12*(edge_derivative(hi, A_hi) - edge_derivative(lo, A_lo))

    first, second = _tail_integrals(t, lo, hi)
    return t, (inner + alpha*first + beta*second)/(2*math.pi)


def fourier_duality_error(
    params: VSystemParams,
    grid: Optional[np.ndarray]=None,
) -> float:
    """Relative L² distance between the transformed spectrum and the time density

    Both |a(t)|² from `time_amplitude` and `pointer_pdf` are sampled on the
    transform's time grid over (0, 20/Γ], normalized to unit sum, and compared
    as ‖p − q‖/‖q‖.

    Parameters
    ----------
    params : VSystemParams
        The system parameters. The pulse shape is ignored.
    grid : Optional[np.ndarray], optional
        Uniform detuning grid in rad/s. Defaults to ±2000Γ with spacing Γ/50,
        on which the error is well below 1e-6.

    Returns
    -------
    float
        The relative L² error.
    """
    if grid is None:
        grid = detuning_grid(params.gamma, half_width=2000)
    t, amplitude = time_amplitude(spectral_amplitude(params, grid), 20/params.gamma)
    transformed = np.abs(amplitude)**2
    transformed /= np.sum(transformed)
    expected = np.asarray(pointer_pdf(t, params))
    expected = expected/np.sum(expected)
    return float(np.linalg.norm(transformed - expected)/np.linalg.norm(expected))
