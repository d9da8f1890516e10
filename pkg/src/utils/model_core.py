"""
Exciton fine structure of a neutral quantum dot in an in-plane magnetic field.

The four exciton states are written in the basis [X_H, D_H, X_V, D_V]. The
in-plane Zeeman term couples each bright state to one dark state only, so the
4x4 Hamiltonian splits into an H block and a V block that are solved in
closed form. Energies are in ueV, fields in tesla.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.utils.errors import DegenerateMixingError, ParameterDomainError

logger = logging.getLogger(__name__)

# Bohr magneton in ueV per tesla
MU_B = 57.8838

DEGENERACY_TOL = 1e-9


class Polarization(str, Enum):
    H = "H"
    V = "V"


class Branch(str, Enum):
    BRIGHTER = "brighter"
    DARKER = "darker"


@dataclass(frozen=True)
class DotParameters:
    """Physical description of one quantum dot.

    Energies are in ueV except ``e_c`` (meV, only used for population trends).
    ``s0 > 0`` means the H-polarized bright state lies above the V one.
    """

    s0: float
    d0: float
    sigma0: float = 0.0
    g_e: float = 0.0
    g_h: float = 0.0
    e0: float = 1_382_000.0
    gamma: float = 1.5
    xx_binding: float = 2000.0
    e_c: Optional[float] = None

    def __post_init__(self):
        for name in ("s0", "d0", "sigma0", "g_e", "g_h", "e0", "gamma", "xx_binding"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ParameterDomainError(name, f"must be a finite number, got {value!r}")
        if self.e_c is not None and not math.isfinite(self.e_c):
            raise ParameterDomainError("e_c", f"must be finite when given, got {self.e_c!r}")
        if self.d0 <= 0:
            raise ParameterDomainError("d0", f"must be positive, got {self.d0}")
        if abs(self.s0) >= 2 * self.d0:
            raise ParameterDomainError("s0", f"|s0| must be below 2*d0 = {2 * self.d0}, got {self.s0}")
        if abs(self.sigma0) >= 2 * self.d0:
            raise ParameterDomainError("sigma0", f"|sigma0| must be below 2*d0 = {2 * self.d0}, got {self.sigma0}")
        if self.gamma <= 0:
            raise ParameterDomainError("gamma", f"must be positive, got {self.gamma}")
        if self.xx_binding <= 0:
            raise ParameterDomainError("xx_binding", f"must be positive, got {self.xx_binding}")

    @property
    def g_hh(self) -> float:
        """Coupling of the H-polarized bright/dark pair, g_e + g_h."""
        return self.g_e + self.g_h

    @property
    def g_vv(self) -> float:
        """Coupling of the V-polarized bright/dark pair, g_e - g_h."""
        return self.g_e - self.g_h

    @property
    def delta_h(self) -> float:
        """Zero-field bright-dark separation in the H channel."""
        return self.d0 + 0.5 * (self.s0 - self.sigma0)

    @property
    def delta_v(self) -> float:
        """Zero-field bright-dark separation in the V channel."""
        return self.d0 - 0.5 * (self.s0 - self.sigma0)

    def replace(self, **changes: Any) -> "DotParameters":
        data = asdict(self)
        data.update(changes)
        return DotParameters(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DotParameters":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParameterDomainError(unknown[0], "unknown dot parameter")
        return cls(**data)


@dataclass(frozen=True)
class ExcitonState:
    energy: float
    polarization: Polarization
    bright_fraction: float
    label: Branch


@dataclass(frozen=True)
class FineStructure:
    """The four exciton eigenstates at one field.

    ``states`` is ordered [H brighter, V brighter, H darker, V darker].
    """

    b_x: float
    states: Tuple[ExcitonState, ExcitonState, ExcitonState, ExcitonState]
    s: float
    d_h: float
    d_v: float

    def state(self, polarization: Polarization, label: Branch) -> ExcitonState:
        for st in self.states:
            if st.polarization == polarization and st.label == label:
                return st
        raise KeyError((polarization, label))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "b_x": self.b_x,
            "s": self.s,
            "d_h": self.d_h,
            "d_v": self.d_v,
            "states": [
                {
                    "energy": st.energy,
                    "polarization": st.polarization.value,
                    "bright_fraction": st.bright_fraction,
                    "label": st.label.value,
                }
                for st in self.states
            ],
        }


@dataclass(frozen=True)
class PerturbativeCoefficients:
    k: float
    k_prime: float


@dataclass(frozen=True)
class SweepRow:
    """One grid point of a field sweep; ``error`` is set instead of ``fine_structure`` on failure."""

    index: int
    b_x: float
    fine_structure: Optional[FineStructure] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.fine_structure is not None


@dataclass(frozen=True)
class _BlockSolution:
    e_brighter: float
    e_darker: float
    frac_brighter: float
    separation: float


def _block_diagonals(params: DotParameters) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    d0, s0, sg = params.d0, params.s0, params.sigma0
    h_block = (0.5 * d0 + 0.5 * s0, -0.5 * d0 + 0.5 * sg)
    v_block = (0.5 * d0 - 0.5 * s0, -0.5 * d0 - 0.5 * sg)
    return h_block, v_block


def _solve_block(bright: float, dark: float, zeeman: float, channel: str) -> _BlockSolution:
    # zeeman is g*mu_B*B, twice the off-diagonal element
    delta = bright - dark
    mid = 0.5 * (bright + dark)
    separation = math.hypot(delta, zeeman)
    theta = 0.5 * math.atan2(abs(zeeman), abs(delta))
    frac = math.cos(theta) ** 2
    if abs(frac - 0.5) < DEGENERACY_TOL:
        raise DegenerateMixingError(
            f"{channel} channel: brighter and darker branches are indistinguishable "
            f"(bright fraction {frac:.12f}, delta={delta} ueV)"
        )
    sign = 1.0 if delta > 0 else -1.0
    return _BlockSolution(
        e_brighter=mid + 0.5 * sign * separation,
        e_darker=mid - 0.5 * sign * separation,
        frac_brighter=frac,
        separation=separation,
    )


def build_hamiltonian(params: DotParameters, b_x: float) -> np.ndarray:
    """Exchange + in-plane Zeeman Hamiltonian in ueV, basis [X_H, D_H, X_V, D_V]."""
    (hb, hd), (vb, vd) = _block_diagonals(params)
    c_h = 0.5 * params.g_hh * MU_B * b_x
    c_v = 0.5 * params.g_vv * MU_B * b_x
    return np.array(
        [
            [hb, c_h, 0.0, 0.0],
            [c_h, hd, 0.0, 0.0],
            [0.0, 0.0, vb, c_v],
            [0.0, 0.0, c_v, vd],
        ],
        dtype=float,
    )


def fine_structure(params: DotParameters, b_x: float) -> FineStructure:
    """Closed-form eigenstates of the H and V blocks at field ``b_x``.

    Brighter/darker labels follow the branch that is fully bright at zero field.
    """
    (hb, hd), (vb, vd) = _block_diagonals(params)
    h = _solve_block(hb, hd, params.g_hh * MU_B * b_x, "H")
    v = _solve_block(vb, vd, params.g_vv * MU_B * b_x, "V")
    states = (
        ExcitonState(h.e_brighter, Polarization.H, h.frac_brighter, Branch.BRIGHTER),
        ExcitonState(v.e_brighter, Polarization.V, v.frac_brighter, Branch.BRIGHTER),
        ExcitonState(h.e_darker, Polarization.H, 1.0 - h.frac_brighter, Branch.DARKER),
        ExcitonState(v.e_darker, Polarization.V, 1.0 - v.frac_brighter, Branch.DARKER),
    )
    return FineStructure(
        b_x=float(b_x),
        states=states,
        s=h.e_brighter - v.e_brighter,
        d_h=h.separation,
        d_v=v.separation,
    )


def bright_splitting(params: DotParameters, b_x: float) -> float:
    """S(B): energy of the H brighter line minus the V brighter line."""
    return fine_structure(params, b_x).s


def bright_splitting_series(params: DotParameters, fields: Sequence[float]) -> np.ndarray:
    """Vectorised ``bright_splitting`` over an array of fields."""
    b = np.asarray(fields, dtype=float)
    (hb, hd), (vb, vd) = _block_diagonals(params)
    out = np.zeros_like(b)
    for bright, dark, g, sign in ((hb, hd, params.g_hh, 1.0), (vb, vd, params.g_vv, -1.0)):
        delta = bright - dark
        zeeman = g * MU_B * b
        separation = np.hypot(delta, zeeman)
        frac = np.cos(0.5 * np.arctan2(np.abs(zeeman), abs(delta))) ** 2
        if np.any(np.abs(frac - 0.5) < DEGENERACY_TOL):
            raise DegenerateMixingError(f"degenerate mixing in block with delta={delta} ueV")
        e_brighter = 0.5 * (bright + dark) + 0.5 * math.copysign(1.0, delta) * separation
        out += sign * e_brighter
    return out


def dark_bright_splittings(params: DotParameters, b_x: float) -> Tuple[float, float]:
    """(D_H, D_V): brighter-darker separations, the quadrature of exchange and Zeeman energy."""
    d_h = math.hypot(params.delta_h, params.g_hh * MU_B * b_x)
    d_v = math.hypot(params.delta_v, params.g_vv * MU_B * b_x)
    return d_h, d_v


def k_eq2(params: DotParameters) -> float:
    """Curvature K of S(B) at zero field from the closed-form exchange expression."""
    s0, d0, ge, gh = params.s0, params.d0, params.g_e, params.g_h
    denominator = d0 * (1.0 - s0 ** 2 / (4.0 * d0 ** 2))
    if denominator <= 0:
        raise ParameterDomainError("s0", f"K denominator is not positive ({denominator})")
    return MU_B ** 2 / denominator * (ge * gh - s0 / (4.0 * d0) * (ge ** 2 + gh ** 2))


def perturbative_coefficients(params: DotParameters) -> PerturbativeCoefficients:
    """K and K' from the small-field series of the quadrature closed form."""
    dh0, dv0 = params.delta_h, params.delta_v
    if dh0 <= 0:
        raise ParameterDomainError("s0", f"H bright-dark separation must be positive, got {dh0}")
    if dv0 <= 0:
        raise ParameterDomainError("s0", f"V bright-dark separation must be positive, got {dv0}")
    gh2, gv2 = params.g_hh ** 2, params.g_vv ** 2
    k = MU_B ** 2 / 4.0 * (gh2 / dh0 - gv2 / dv0)
    k_prime = -(MU_B ** 4) / 16.0 * (gh2 ** 2 / dh0 ** 3 - gv2 ** 2 / dv0 ** 3)
    return PerturbativeCoefficients(k=k, k_prime=k_prime)


def field_grid(b_start: float, b_end: float, n: int) -> np.ndarray:
    if n < 2:
        raise ParameterDomainError("steps", f"need at least 2 grid points, got {n}")
    if b_start > b_end:
        raise ParameterDomainError("b_start", f"must not exceed b_end ({b_start} > {b_end})")
    return np.linspace(b_start, b_end, n)


def _sweep_point(params: DotParameters, index: int, b_x: float) -> SweepRow:
    try:
        return SweepRow(index=index, b_x=b_x, fine_structure=fine_structure(params, b_x))
    except DegenerateMixingError as e:
        logger.warning("Sweep point %d at %.6g T flagged: %s", index, b_x, e)
        return SweepRow(index=index, b_x=b_x, error=str(e))


def sweep_field(
    params: DotParameters,
    b_start: float,
    b_end: float,
    n: int,
    max_workers: Optional[int] = None,
) -> List[SweepRow]:
    """Fine structure on a uniform field grid.

    Failing points come back as flagged rows; the sweep itself never aborts.
    With ``max_workers`` the points are evaluated on a thread pool; rows stay
    in grid order.
    """
    grid = field_grid(b_start, b_end, n)
    points = [(i, float(b)) for i, b in enumerate(grid)]
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(lambda p: _sweep_point(params, *p), points))
    else:
        rows = [_sweep_point(params, i, b) for i, b in points]
    logger.debug("Swept %d fields from %.3f T to %.3f T", n, b_start, b_end)
    return rows
