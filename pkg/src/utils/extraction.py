"""
Inverse pipeline: from spectra to splittings, from splittings to dot parameters.

Covers peak extraction, the S(B) = S0 + K B^2 + K' B^4 fit, the Zeeman
quadrature fit of the brighter-darker separations, D0 extrapolation,
g-factor solutions of the closed-form K expression, crossing-field search,
crossing classification and population trends.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import bisect
from scipy.signal import find_peaks
from scipy.stats import median_abs_deviation

from src.utils.errors import (
    InfeasibleError,
    ModelMismatchError,
    ParameterDomainError,
    RankError,
)
from src.utils.model_core import (
    MU_B,
    DotParameters,
    bright_splitting,
    bright_splitting_series,
    k_eq2,
)
from src.utils.spectra import PolarizedSpectrum

logger = logging.getLogger(__name__)

# Secondary peaks weaker than this fraction of the dominant one are not paired
SECONDARY_FRACTION = 0.01
# Detection floor in robust noise deviations above the median level
NOISE_SIGMAS = 6.0
REFINED_HEIGHT_CAP = 2.0
CROSSING_SCAN_STEP = 0.01
CROSSING_XTOL = 1e-12
DEFAULT_THRESHOLDS = (5.0, 10.0)


class SplittingKind(str, Enum):
    S = "S"
    D_H = "D_H"
    D_V = "D_V"


class GConvention(str, Enum):
    SIGNED = "signed"
    MAGNITUDE = "magnitude"


@dataclass(frozen=True)
class SplittingSample:
    b_x: float
    value: float
    sigma: Optional[float] = None


@dataclass(frozen=True)
class SplittingSeries:
    kind: SplittingKind
    samples: Tuple[SplittingSample, ...]

    def __post_init__(self):
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        fields = [s.b_x for s in samples]
        if any(b < 0 for b in fields):
            raise ParameterDomainError("b_x", "fields must be non-negative")
        if len(set(fields)) != len(fields):
            raise ParameterDomainError("b_x", "fields must be distinct")
        if any(s.sigma is not None and not s.sigma > 0 for s in samples):
            raise ParameterDomainError("sigma", "uncertainties must be positive where given")

    @classmethod
    def from_arrays(
        cls,
        kind: SplittingKind,
        fields: Sequence[float],
        values: Sequence[float],
        sigmas: Optional[Sequence[Optional[float]]] = None,
    ) -> "SplittingSeries":
        if sigmas is None:
            sigmas = [None] * len(fields)
        return cls(
            kind=kind,
            samples=tuple(
                SplittingSample(float(b), float(v), None if s is None else float(s))
                for b, v, s in zip(fields, values, sigmas)
            ),
        )

    @property
    def fields(self) -> np.ndarray:
        return np.array([s.b_x for s in self.samples], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.samples], dtype=float)

    @property
    def sigmas(self) -> Optional[np.ndarray]:
        """Per-sample uncertainties, or None unless every sample has one."""
        if not self.samples or any(s.sigma is None for s in self.samples):
            return None
        return np.array([s.sigma for s in self.samples], dtype=float)

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class Eq1Fit:
    s0_hat: float
    k_hat: float
    k_prime_hat: float
    r_percent: float
    residuals: np.ndarray
    covariance: np.ndarray
    include_quartic: bool = True

    def evaluate(self, b: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        b2 = np.asarray(b, dtype=float) ** 2
        out = self.s0_hat + self.k_hat * b2 + self.k_prime_hat * b2 ** 2
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ZeemanFit:
    d_x0_hat: float
    g_hat: float
    r_percent: float
    kind: SplittingKind = SplittingKind.D_H


@dataclass(frozen=True)
class GFactorSolution:
    branches: Tuple[Tuple[float, float], ...]
    convention: GConvention
    heuristic_pick: Optional[int]
    discriminant: float

    @property
    def picked(self) -> Optional[Tuple[float, float]]:
        return None if self.heuristic_pick is None else self.branches[self.heuristic_pick]


@dataclass(frozen=True)
class TrendFit:
    slope: float
    intercept: float
    r_percent: float


@dataclass(frozen=True)
class OmittedField:
    b_x: float
    reason: str


@dataclass(frozen=True)
class ExtractedSeries:
    """S, D_H and D_V series read from a field sweep of spectra."""

    s: SplittingSeries
    d_h: SplittingSeries
    d_v: SplittingSeries
    omitted: Tuple[OmittedField, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter((self.s, self.d_h, self.d_v))


@dataclass(frozen=True)
class DotClassification:
    index: int
    label: str
    crossing_field: Optional[float]


# ---------------------------------------------------------------------------
# Peaks and series


def estimate_noise(intensity: np.ndarray) -> float:
    """Robust standard deviation of additive white noise on a spectrum.

    Taken from the MAD of first differences, so the few samples under the
    lines barely move it. Zero for noiseless spectra up to line-tail slopes.
    """
    y = np.asarray(intensity, dtype=float)
    if y.size < 3:
        return 0.0
    return float(median_abs_deviation(np.diff(y), scale="normal")) / math.sqrt(2.0)


def extract_peaks(
    spectrum: PolarizedSpectrum,
    min_prominence: float = 0.05,
    window: Optional[Tuple[float, float]] = None,
    noise_sigmas: float = NOISE_SIGMAS,
) -> List[Tuple[float, float]]:
    """Local maxima with prominence above ``min_prominence`` x global max.

    Maxima must also stand ``noise_sigmas`` noise deviations above the median
    level, both in height and in prominence. Each maximum is refined by a
    three-point parabola through the sample and its neighbours. The parabola is
    taken through the reciprocal intensities when all three samples clear the
    noise floor (exact for an isolated Lorentzian), otherwise through the
    intensities. Returns (center, height) pairs sorted by energy.
    """
    return [(center, height) for center, height, _ in _find_peaks(spectrum, min_prominence, window, noise_sigmas)]


def _find_peaks(
    spectrum: PolarizedSpectrum,
    min_prominence: float,
    window: Optional[Tuple[float, float]],
    noise_sigmas: float,
) -> List[Tuple[float, float, float]]:
    """(center, refined height, raw sample height) per detected peak, sorted by energy."""
    if not 0 < min_prominence < 1:
        raise ParameterDomainError("min_prominence", f"must lie in (0, 1), got {min_prominence}")
    if noise_sigmas < 0:
        raise ParameterDomainError("noise_sigmas", f"must not be negative, got {noise_sigmas}")
    grid, y = spectrum.grid, spectrum.intensity
    if window is not None:
        mask = (grid >= window[0]) & (grid <= window[1])
        grid, y = grid[mask], y[mask]
    if y.size < 3:
        return []
    global_max = float(np.max(y))
    if global_max <= 0:
        return []
    sigma = estimate_noise(y)
    floor = noise_sigmas * sigma
    step = spectrum.step
    indices, _ = find_peaks(
        y,
        height=float(np.median(y)) + floor,
        prominence=max(min_prominence * global_max, floor),
    )
    peaks = []
    for i in indices:
        y_l, y_c, y_r = float(y[i - 1]), float(y[i]), float(y[i + 1])
        offset, height = _refine_vertex(y_l, y_c, y_r, floor)
        peaks.append((float(grid[i]) + offset * step, height, y_c))
    if sigma > 0:
        logger.debug("Noise sigma %.4g, %d peak(s) above %.4g", sigma, len(peaks), floor)
    return sorted(peaks)


def _refine_vertex(y_l: float, y_c: float, y_r: float, floor: float = 0.0) -> Tuple[float, float]:
    """Sub-sample offset (in steps, within +/-0.5) and height of a three-point maximum.

    The height never exceeds REFINED_HEIGHT_CAP x the centre sample.
    """
    if min(y_l, y_c, y_r) > max(floor, 0.0):
        u_l, u_c, u_r = 1.0 / y_l, 1.0 / y_c, 1.0 / y_r
        curvature = u_l - 2.0 * u_c + u_r
        if curvature > 0:
            offset = min(max(0.5 * (u_l - u_r) / curvature, -0.5), 0.5)
            u_vertex = u_c - 0.25 * (u_l - u_r) * offset
            if u_vertex > 0:
                return offset, min(1.0 / u_vertex, REFINED_HEIGHT_CAP * y_c)
    curvature = y_l - 2.0 * y_c + y_r
    if curvature >= 0:
        return 0.0, y_c
    offset = min(max(0.5 * (y_l - y_r) / curvature, -0.5), 0.5)
    return offset, min(y_c - 0.25 * (y_l - y_r) * offset, REFINED_HEIGHT_CAP * y_c)


def _dominant_and_secondary(
    spectrum: PolarizedSpectrum,
    min_prominence: float,
    window: Optional[Tuple[float, float]],
    noise_sigmas: float,
) -> Tuple[Optional[Tuple[float, float]], Optional[Tuple[float, float]]]:
    # ranked by raw sample height
    peaks = sorted(_find_peaks(spectrum, min_prominence, window, noise_sigmas), key=lambda p: p[2], reverse=True)
    if not peaks:
        return None, None
    dominant = peaks[0]
    secondary = next((p for p in peaks[1:] if p[2] >= SECONDARY_FRACTION * dominant[2]), None)
    return dominant[:2], None if secondary is None else secondary[:2]


def series_from_spectra(
    sweep: Sequence[Tuple[float, PolarizedSpectrum, PolarizedSpectrum]],
    min_prominence: float = SECONDARY_FRACTION,
    window: Optional[Tuple[float, float]] = None,
    noise_sigmas: float = NOISE_SIGMAS,
) -> ExtractedSeries:
    """S, D_H and D_V from (b_x, H spectrum, V spectrum) triples.

    S is the dominant H center minus the dominant V center. D_H (D_V) is the
    separation of the dominant and secondary H (V) peaks, present only where a
    secondary peak of at least 1% of the dominant height clears the noise
    floor. Restrict ``window`` to the exciton doublet when the spectra also
    carry XX lines.
    """
    s_rows, dh_rows, dv_rows = [], [], []
    omitted: List[OmittedField] = []
    for b_x, spec_h, spec_v in sweep:
        dom_h, sec_h = _dominant_and_secondary(spec_h, min_prominence, window, noise_sigmas)
        dom_v, sec_v = _dominant_and_secondary(spec_v, min_prominence, window, noise_sigmas)
        if dom_h is None or dom_v is None:
            missing = "H" if dom_h is None else "V"
            logger.warning("No dominant %s peak at %.4g T; field omitted from S series", missing, b_x)
            omitted.append(OmittedField(b_x=float(b_x), reason=f"no dominant {missing} peak"))
        else:
            s_rows.append((b_x, dom_h[0] - dom_v[0]))
        if dom_h is not None and sec_h is not None:
            dh_rows.append((b_x, abs(dom_h[0] - sec_h[0])))
        if dom_v is not None and sec_v is not None:
            dv_rows.append((b_x, abs(dom_v[0] - sec_v[0])))

    def build(kind: SplittingKind, rows: List[Tuple[float, float]]) -> SplittingSeries:
        return SplittingSeries.from_arrays(kind, [r[0] for r in rows], [r[1] for r in rows])

    return ExtractedSeries(
        s=build(SplittingKind.S, s_rows),
        d_h=build(SplittingKind.D_H, dh_rows),
        d_v=build(SplittingKind.D_V, dv_rows),
        omitted=tuple(omitted),
    )


def average_x_xx(s_x: float, s_xx: float) -> float:
    """Mean of the exciton splitting and the reversed biexciton splitting.

    A common additive offset from the polarization optics cancels.
    """
    return 0.5 * (s_x - s_xx)


def average_series(s_x: SplittingSeries, s_xx: SplittingSeries) -> SplittingSeries:
    """``average_x_xx`` applied at every field present in both series."""
    xx = {s.b_x: s.value for s in s_xx.samples}
    rows = [(s.b_x, average_x_xx(s.value, xx[s.b_x])) for s in s_x.samples if s.b_x in xx]
    return SplittingSeries.from_arrays(SplittingKind.S, [r[0] for r in rows], [r[1] for r in rows])


# ---------------------------------------------------------------------------
# Fits


def _r_percent(y: np.ndarray, fitted: np.ndarray, w: np.ndarray) -> float:
    y_bar = np.sum(w ** 2 * y) / np.sum(w ** 2)
    ss_res = float(np.sum((w * (y - fitted)) ** 2))
    ss_tot = float(np.sum((w * (y - y_bar)) ** 2))
    if ss_tot == 0:
        return 100.0 if ss_res == 0 else 0.0
    return float(min(max(100.0 * (1.0 - ss_res / ss_tot), 0.0), 100.0))


def _weighted_lstsq(
    design: np.ndarray, y: np.ndarray, sigmas: Optional[np.ndarray]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Returns (coefficients, covariance, weights, exact)."""
    n, p = design.shape
    if n < p:
        raise RankError(f"{n} samples cannot determine {p} parameters")
    w = np.ones(n) if sigmas is None else 1.0 / sigmas
    a_w = design * w[:, None]
    if np.linalg.matrix_rank(a_w) < p:
        raise RankError("design matrix is singular")
    if n == p:
        coef = np.linalg.solve(design, y)
        cov = np.full((p, p), np.nan) if sigmas is None else np.linalg.inv(a_w.T @ a_w)
        return coef, cov, w, True
    coef, _, _, _ = np.linalg.lstsq(a_w, y * w, rcond=None)
    normal_inv = np.linalg.inv(a_w.T @ a_w)
    if sigmas is None:
        dof = n - p
        scale = float(np.sum((y - design @ coef) ** 2)) / dof
        cov = normal_inv * scale
    else:
        cov = normal_inv
    return coef, cov, w, False


def fit_eq1(series: SplittingSeries, include_quartic: bool = True) -> Eq1Fit:
    """Weighted linear least squares of S on {1, B^2, B^4} (or {1, B^2})."""
    b = series.fields
    y = series.values
    columns = [np.ones_like(b), b ** 2] + ([b ** 4] if include_quartic else [])
    design = np.column_stack(columns) if len(b) else np.zeros((0, len(columns)))
    coef, cov, w, exact = _weighted_lstsq(design, y, series.sigmas)
    if exact:
        residuals = np.zeros_like(y)
        r_percent = 100.0
    else:
        fitted = design @ coef
        residuals = y - fitted
        r_percent = _r_percent(y, fitted, w)
    k_prime = float(coef[2]) if include_quartic else 0.0
    logger.info(
        "Eq1 fit on %d samples: S0=%.6g K=%.6g K'=%.6g r=%.4g%%",
        len(series), coef[0], coef[1], k_prime, r_percent,
    )
    return Eq1Fit(
        s0_hat=float(coef[0]),
        k_hat=float(coef[1]),
        k_prime_hat=k_prime,
        r_percent=r_percent,
        residuals=residuals,
        covariance=cov,
        include_quartic=include_quartic,
    )


def evaluate_eq1(fit: Eq1Fit, b: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    return fit.evaluate(b)


def fit_zeeman(series: SplittingSeries) -> ZeemanFit:
    """Fit D^2 = D_x0^2 + (g mu_B B)^2, linear in B^2.

    Uncertainties on D propagate to D^2 as 2 D sigma.
    """
    if series.kind == SplittingKind.S:
        raise ParameterDomainError("kind", "Zeeman fit needs a D_H or D_V series")
    b = series.fields
    d = series.values
    if len(series) < 2:
        raise RankError(f"Zeeman fit needs at least 2 samples, got {len(series)}")
    if not np.any(b > 0):
        raise RankError("Zeeman fit needs at least one sample at non-zero field")
    sigmas = series.sigmas
    y = d ** 2
    design = np.column_stack([np.ones_like(b), b ** 2])
    coef, _, w, exact = _weighted_lstsq(design, y, None if sigmas is None else 2.0 * np.abs(d) * sigmas)
    intercept_sq, slope = float(coef[0]), float(coef[1])
    if intercept_sq <= 0:
        raise ModelMismatchError(f"fitted zero-field {series.kind.value}^2 is not positive ({intercept_sq:.6g} ueV^2)")
    if slope < 0:
        logger.warning("Negative Zeeman slope %.6g ueV^2/T^2 for %s; reporting g = 0", slope, series.kind.value)
        slope = 0.0
    r_percent = 100.0 if exact else _r_percent(y, design @ coef, w)
    return ZeemanFit(
        d_x0_hat=math.sqrt(intercept_sq),
        g_hat=math.sqrt(slope) / MU_B,
        r_percent=r_percent,
        kind=series.kind,
    )


def extrapolate_d0(fit_h: ZeemanFit, fit_v: ZeemanFit) -> float:
    """D0 as the mean of the zero-field H and V brighter-darker separations."""
    return 0.5 * (fit_h.d_x0_hat + fit_v.d_x0_hat)


def gfactors_from_zeeman(fit_h: ZeemanFit, fit_v: ZeemanFit) -> Tuple[float, float]:
    """(|g_e|, |g_h|) from |g_H| = |g_e + g_h| and |g_V| = |g_e - g_h|, taking |g_e| >= |g_h|."""
    g_hi = max(fit_h.g_hat, fit_v.g_hat)
    g_lo = min(fit_h.g_hat, fit_v.g_hat)
    return 0.5 * (g_hi + g_lo), 0.5 * (g_hi - g_lo)


# ---------------------------------------------------------------------------
# g-factors from K


def solve_g_equal_magnitude(g_h_fit: float) -> Tuple[float, float]:
    """g_e = g_h = g_H / 2, for dots where the V pair barely mixes (g_V ~ 0)."""
    return 0.5 * g_h_fit, 0.5 * g_h_fit


def _quadratic_roots(a: float, b: float, c: float) -> Tuple[float, List[float]]:
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return disc, []
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b)) if b != 0 else -0.5 * sq
    if q == 0:
        return disc, [0.0]
    roots = {q / a, c / q}
    return disc, sorted(roots)


def _reproduces_k(branch: Tuple[float, float], k: float, s0: float, d0: float) -> bool:
    g_e, g_h = branch
    k_back = k_eq2(DotParameters(s0=s0, d0=d0, g_e=g_e, g_h=g_h))
    scale = MU_B ** 2 / d0 * (g_e ** 2 + g_h ** 2)
    if math.isclose(k_back, k, rel_tol=1e-9, abs_tol=1e-9 * scale + 1e-12):
        return True
    logger.warning("Dropping branch (%.9g, %.9g): it gives K=%.9g instead of %.9g", g_e, g_h, k_back, k)
    return False


def solve_g_eq2(
    k: float,
    s0: float,
    d0: float,
    g_diff: float,
    convention: Union[GConvention, str] = GConvention.SIGNED,
) -> GFactorSolution:
    """All (g_e, g_h) pairs reproducing K through the closed-form expression.

    ``signed`` imposes g_e = g_h + g_diff; ``magnitude`` imposes
    |g_e| = |g_h| + g_diff with either relative sign. The expression is even
    under a global sign flip, so branches are reported with g_e >= 0 in the
    magnitude convention.
    """
    convention = GConvention(convention)
    if d0 <= 0:
        raise ParameterDomainError("d0", f"must be positive, got {d0}")
    if abs(s0) >= 2 * d0:
        raise ParameterDomainError("s0", f"|s0| must be below 2*d0 = {2 * d0}, got {s0}")
    prefactor = MU_B ** 2 / (d0 * (1.0 - s0 ** 2 / (4.0 * d0 ** 2)))
    c = s0 / (4.0 * d0)
    target = k / prefactor
    gd = g_diff

    branches: List[Tuple[float, float]] = []
    # same relative sign: bracket = (1-2c) g^2 + (1-2c) gd g - c gd^2
    disc_same, roots_same = _quadratic_roots(1 - 2 * c, (1 - 2 * c) * gd, -(c * gd ** 2 + target))
    discriminant = disc_same
    if convention == GConvention.SIGNED:
        branches.extend((g + gd, g) for g in roots_same)
    else:
        branches.extend((a + gd, a) for a in roots_same if a >= 0 and a + gd >= 0)
        # opposite relative sign, g_h = -a: bracket = -(1+2c) a^2 - (1+2c) gd a - c gd^2
        disc_opp, roots_opp = _quadratic_roots(1 + 2 * c, (1 + 2 * c) * gd, c * gd ** 2 + target)
        discriminant = max(disc_same, disc_opp)
        for a in roots_opp:
            if a >= 0 and a + gd >= 0 and not any(
                math.isclose(a + gd, e, abs_tol=1e-15) and math.isclose(-a, h, abs_tol=1e-15) for e, h in branches
            ):
                branches.append((a + gd, -a))

    if not branches:
        raise InfeasibleError(
            f"K={k:.6g} ueV/T^2 has no real g-factor solution with g_diff={gd:.6g} "
            f"({convention.value} convention), discriminant {discriminant:.6g}",
            discriminant=discriminant,
        )

    branches = [b for b in branches if _reproduces_k(b, k, s0, d0)]
    if not branches:
        raise InfeasibleError(
            f"no g-factor branch reproduces K={k:.6g} ueV/T^2 with g_diff={gd:.6g} "
            f"({convention.value} convention)",
            discriminant=discriminant,
        )

    pick = next((i for i, (g_e, g_h) in enumerate(branches) if abs(g_h) < abs(g_e)), None)
    return GFactorSolution(
        branches=tuple(branches),
        convention=convention,
        heuristic_pick=pick,
        discriminant=discriminant,
    )


# ---------------------------------------------------------------------------
# Crossing field and classification

SplittingModel = Union[DotParameters, Eq1Fit]


def _splitting_functions(model: SplittingModel) -> Tuple[Callable[[float], float], Callable[[np.ndarray], np.ndarray]]:
    if isinstance(model, DotParameters):
        return (lambda b: bright_splitting(model, b)), (lambda grid: bright_splitting_series(model, grid))
    if isinstance(model, Eq1Fit):
        return (lambda b: float(model.evaluate(b))), (lambda grid: np.asarray(model.evaluate(grid)))
    raise TypeError(f"crossing search needs DotParameters or Eq1Fit, got {type(model).__name__}")


def crossing_field(model: SplittingModel, b_max: float, step: float = CROSSING_SCAN_STEP) -> Optional[float]:
    """Smallest field in [0, b_max] where S changes sign, or None.

    S is scanned on a ``step`` grid and each sign change refined by bisection.
    S(0) = 0 counts as a crossing at zero field.
    """
    if not b_max > 0:
        raise ParameterDomainError("b_max", f"must be positive, got {b_max}")
    scalar, vector = _splitting_functions(model)
    n = int(math.ceil(b_max / step - 1e-9)) + 1
    grid = np.linspace(0.0, b_max, n)
    values = vector(grid)
    for i in range(n):
        if values[i] == 0:
            return float(grid[i])
        if i + 1 < n and np.sign(values[i]) != np.sign(values[i + 1]) and values[i + 1] != 0:
            root = bisect(scalar, float(grid[i]), float(grid[i + 1]), xtol=CROSSING_XTOL)
            logger.debug("Crossing bracketed in [%.4f, %.4f] T, refined to %.9f T", grid[i], grid[i + 1], root)
            return float(root)
    return None


def classification_labels(thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> List[str]:
    ordered = sorted(thresholds)
    return [f"crosses_below_{t:g}T" for t in ordered] + [f"no_crossing_below_{ordered[-1]:g}T"]


def _label_for_crossing(crossing: Optional[float], thresholds: Sequence[float]) -> str:
    ordered = sorted(thresholds)
    labels = classification_labels(ordered)
    if crossing is not None:
        for threshold, label in zip(ordered, labels):
            if crossing <= threshold:
                return label
    return labels[-1]


def _check_thresholds(thresholds: Sequence[float]) -> None:
    if not thresholds:
        raise ParameterDomainError("thresholds", "need at least one threshold field")


def classify_dot(model: SplittingModel, thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> str:
    """Lowest threshold field below which the brighter states cross."""
    _check_thresholds(thresholds)
    return _label_for_crossing(crossing_field(model, max(thresholds)), thresholds)


def classify_population(
    dots: Sequence[SplittingModel],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    max_workers: Optional[int] = None,
) -> List[DotClassification]:
    """Classify many dots; results are keyed by input index."""
    _check_thresholds(thresholds)
    b_max = max(thresholds)

    def one(item: Tuple[int, SplittingModel]) -> DotClassification:
        index, model = item
        crossing = crossing_field(model, b_max)
        return DotClassification(
            index=index,
            label=_label_for_crossing(crossing, thresholds),
            crossing_field=crossing,
        )

    items = list(enumerate(dots))
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(one, items))
    return [one(item) for item in items]


# ---------------------------------------------------------------------------
# Trends


def linear_trend(points: Sequence[Tuple[float, float]]) -> TrendFit:
    """Ordinary least-squares line through (x, y) points."""
    if len(points) == 0:
        raise RankError("linear trend needs at least 2 distinct x values, got none")
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.unique(x).size < 2:
        raise RankError("linear trend needs at least 2 distinct x values")
    slope, intercept = np.polyfit(x, y, 1)
    r_percent = _r_percent(y, slope * x + intercept, np.ones_like(y))
    if np.ptp(y) == 0:
        slope, intercept, r_percent = 0.0, float(y[0]), 100.0
    return TrendFit(slope=float(slope), intercept=float(intercept), r_percent=r_percent)


def population_trends(dots: Sequence[DotParameters]) -> Dict[str, Optional[TrendFit]]:
    """D0 against confinement energy E_c and against S0 across a population."""
    trends: Dict[str, Optional[TrendFit]] = {}
    with_ec = [(d.e_c, d.d0) for d in dots if d.e_c is not None]
    for name, points in (("d0_vs_e_c", with_ec), ("d0_vs_s0", [(d.s0, d.d0) for d in dots])):
        try:
            trends[name] = linear_trend(points)
        except RankError as e:
            logger.warning("Trend %s not computed: %s", name, e)
            trends[name] = None
    return trends
