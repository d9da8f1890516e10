"""
Polarization-resolved photoluminescence synthesis for a single quantum dot.

Each exciton eigenstate gives one Lorentzian line in the channel of its
polarization with a height proportional to its bright fraction (linear in
excitation power). The biexciton cascade adds one line per brighter state,
quadratic in power and mirrored below the exciton doublet.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.utils.errors import CoverageError, ParameterDomainError
from src.utils.model_core import (
    Branch,
    DotParameters,
    FineStructure,
    Polarization,
    fine_structure,
)

logger = logging.getLogger(__name__)

# Half-width of the default grid around each doublet, ueV
DEFAULT_MARGIN = 600.0
DEFAULT_STEP = 1.0
# Narrowest linewidth allowed when lifetime broadening is on, as a fraction of gamma
MIN_WIDTH_FRACTION = 1e-3


class LineOrigin(str, Enum):
    X_BRIGHTER = "X-brighter"
    X_DARKER = "X-darker"
    XX_H = "XX-H"
    XX_V = "XX-V"


@dataclass(frozen=True)
class SpectralLine:
    center: float
    fwhm: float
    height: float
    polarization: Polarization
    origin: LineOrigin

    def __post_init__(self):
        if self.fwhm <= 0:
            raise ParameterDomainError("fwhm", f"must be positive, got {self.fwhm}")
        if self.height < 0:
            raise ParameterDomainError("height", f"must not be negative, got {self.height}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "center": self.center,
            "fwhm": self.fwhm,
            "height": self.height,
            "polarization": self.polarization.value,
            "origin": self.origin.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpectralLine":
        return cls(
            center=float(data["center"]),
            fwhm=float(data["fwhm"]),
            height=float(data["height"]),
            polarization=Polarization(data["polarization"]),
            origin=LineOrigin(data["origin"]),
        )

    def __str__(self) -> str:
        return f"{self.origin.value} ({self.polarization.value}) at {self.center:.3f} ueV"


@dataclass(frozen=True)
class GridSpec:
    """Uniform energy grid: ``center`` and full ``span`` in ueV, sample ``step``."""

    center: float
    span: float
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if self.step <= 0:
            raise ParameterDomainError("step", f"must be positive, got {self.step}")
        if self.span <= 0:
            raise ParameterDomainError("span", f"must be positive, got {self.span}")

    def energies(self) -> np.ndarray:
        n = int(math.floor(self.span / self.step + 1e-9)) + 1
        return (self.center - 0.5 * self.span) + self.step * np.arange(n)

    @classmethod
    def default_for(cls, params: DotParameters, include_biexciton: bool = True) -> "GridSpec":
        """e0 +/- 600 ueV, extended down to cover the biexciton doublet when it is synthesized."""
        hi = params.e0 + DEFAULT_MARGIN
        lo = params.e0 - DEFAULT_MARGIN
        if include_biexciton:
            lo -= params.xx_binding
        return cls(center=0.5 * (hi + lo), span=hi - lo, step=DEFAULT_STEP)


@dataclass(frozen=True, eq=False)
class PolarizedSpectrum:
    polarization: Polarization
    grid: np.ndarray
    intensity: np.ndarray
    lines: Tuple[SpectralLine, ...] = ()
    noise_seed: Optional[int] = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        intensity = np.asarray(self.intensity, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ParameterDomainError("grid", "needs at least two samples")
        if intensity.shape != grid.shape:
            raise ParameterDomainError(
                "intensity", f"length {intensity.size} does not match grid length {grid.size}"
            )
        steps = np.diff(grid)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-6, atol=1e-9):
            raise ParameterDomainError("grid", "must be strictly increasing with a constant step")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "intensity", intensity)
        object.__setattr__(self, "lines", tuple(self.lines))

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "polarization": self.polarization.value,
            "grid": self.grid.tolist(),
            "intensity": self.intensity.tolist(),
            "lines": [line.to_dict() for line in self.lines],
            "noise_seed": self.noise_seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PolarizedSpectrum":
        return cls(
            polarization=Polarization(data["polarization"]),
            grid=np.asarray(data["grid"], dtype=float),
            intensity=np.asarray(data["intensity"], dtype=float),
            lines=tuple(SpectralLine.from_dict(d) for d in data.get("lines", [])),
            noise_seed=data.get("noise_seed"),
        )


def lorentzian(grid: np.ndarray, center: float, fwhm: float, height: float) -> np.ndarray:
    """Lorentzian of peak value ``height``; its area is height * pi * fwhm / 2."""
    half_width = 0.5 * fwhm
    return height / (1.0 + ((grid - center) / half_width) ** 2)


def effective_brightness(params: DotParameters, b_x: float) -> Dict[Tuple[Polarization, Branch], float]:
    """Relative radiative rate of each eigenstate (its bright fraction)."""
    fs = fine_structure(params, b_x)
    return {(st.polarization, st.label): st.bright_fraction for st in fs.states}


def linewidth_from_brightness(gamma: float, bright_fraction: float) -> float:
    """Lifetime-limited linewidth of a mixed state: its radiative rate scales the width."""
    return gamma * max(bright_fraction, MIN_WIDTH_FRACTION)


def _emission_lines(
    params: DotParameters,
    fs: FineStructure,
    power: float,
    include_biexciton: bool,
    lifetime_broadening: bool,
) -> List[SpectralLine]:
    lines: List[SpectralLine] = []

    def width(frac: float) -> float:
        return linewidth_from_brightness(params.gamma, frac) if lifetime_broadening else params.gamma

    for st in fs.states:
        height = power * st.bright_fraction
        if height <= 0:
            continue
        origin = LineOrigin.X_BRIGHTER if st.label == Branch.BRIGHTER else LineOrigin.X_DARKER
        lines.append(SpectralLine(params.e0 + st.energy, width(st.bright_fraction), height, st.polarization, origin))

    if include_biexciton:
        xx_origin = {Polarization.H: LineOrigin.XX_H, Polarization.V: LineOrigin.XX_V}
        for st in fs.states:
            if st.label != Branch.BRIGHTER:
                continue
            height = power ** 2 * st.bright_fraction
            if height <= 0:
                continue
            center = params.e0 - params.xx_binding - st.energy
            lines.append(SpectralLine(center, width(st.bright_fraction), height, st.polarization, xx_origin[st.polarization]))
    return lines


def synthesize(
    params: DotParameters,
    b_x: float,
    power: float = 1.0,
    grid_spec: Optional[GridSpec] = None,
    include_biexciton: bool = True,
    lifetime_broadening: bool = False,
) -> Tuple[PolarizedSpectrum, PolarizedSpectrum]:
    """Noiseless H and V photoluminescence spectra at field ``b_x``.

    Args:
        params: the dot
        b_x: in-plane field, T
        power: excitation power, arbitrary units (X lines scale linearly, XX quadratically)
        grid_spec: energy grid; defaults to ``GridSpec.default_for(params)``
        include_biexciton: also emit the XX doublet
        lifetime_broadening: narrow each line in proportion to its radiative rate
    """
    if power < 0:
        raise ParameterDomainError("power", f"must not be negative, got {power}")
    if grid_spec is None:
        grid_spec = GridSpec.default_for(params, include_biexciton)
    grid = grid_spec.energies()
    fs = fine_structure(params, b_x)
    lines = _emission_lines(params, fs, power, include_biexciton, lifetime_broadening)

    lo, hi = float(grid[0]), float(grid[-1])
    for line in lines:
        if not lo <= line.center <= hi:
            raise CoverageError(line, lo, hi)

    spectra = []
    for pol in (Polarization.H, Polarization.V):
        channel = tuple(line for line in lines if line.polarization == pol)
        intensity = np.zeros_like(grid)
        for line in channel:
            intensity += lorentzian(grid, line.center, line.fwhm, line.height)
        spectra.append(PolarizedSpectrum(polarization=pol, grid=grid, intensity=intensity, lines=channel))
    logger.debug("Synthesized %d lines at %.3f T on %d grid points", len(lines), b_x, grid.size)
    return spectra[0], spectra[1]


def add_noise(spectrum: PolarizedSpectrum, sigma_rel: float, seed: int) -> PolarizedSpectrum:
    """Add zero-mean Gaussian noise of std ``sigma_rel * max(intensity)``.

    Uses numpy's PCG64 generator seeded with ``seed``: the same seed and input
    give bit-identical output.
    """
    if sigma_rel < 0:
        raise ParameterDomainError("sigma_rel", f"must not be negative, got {sigma_rel}")
    if not 0 <= int(seed) < 2 ** 64:
        raise ParameterDomainError("seed", f"must fit in an unsigned 64-bit integer, got {seed}")
    if sigma_rel == 0:
        return replace(spectrum, intensity=spectrum.intensity.copy(), noise_seed=int(seed))
    rng = np.random.default_rng(int(seed))
    scale = sigma_rel * float(np.max(spectrum.intensity))
    noisy = spectrum.intensity + rng.normal(0.0, scale, size=spectrum.intensity.size)
    return replace(spectrum, intensity=noisy, noise_seed=int(seed))


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit child seed for one (field index, channel, ...) of a seeded run."""
    state = np.random.SeedSequence([int(seed), *[int(k) for k in keys]]).generate_state(1, dtype=np.uint64)
    return int(state[0])
