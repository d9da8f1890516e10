"""
Run configuration for the command-line surface.

Values come from defaults, then an optional JSON config file, then command-line
flags. The noise seed also falls back to the FINESTRUCT_SEED environment variable.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Mapping, Optional, Tuple

from src.utils.errors import InputParseError, ParameterDomainError
from src.utils.extraction import DEFAULT_THRESHOLDS, GConvention
from src.utils.model_core import DotParameters, field_grid

logger = logging.getLogger(__name__)

SEED_ENV_VAR = "FINESTRUCT_SEED"

DOT_FIELDS = ("s0", "d0", "sigma0", "g_e", "g_h", "e0", "gamma", "xx_binding", "e_c")


@dataclass(frozen=True)
class RunConfig:
    # dot, defaults describe a GaAs-barrier dot
    s0: float = 22.0
    d0: float = 215.0
    sigma0: float = 0.0
    g_e: float = 0.395
    g_h: float = 0.395
    e0: float = 1_382_000.0
    gamma: float = 1.5
    xx_binding: float = 2000.0
    e_c: Optional[float] = None
    # field grid, T
    b_start: float = 0.0
    b_end: float = 5.0
    steps: int = 11
    # spectra
    power: float = 1.0
    grid_step: float = 1.0
    include_biexciton: bool = True
    json_spectra: bool = False
    # noise
    sigma_rel: float = 0.0
    seed: Optional[int] = None
    # fits
    include_quartic: bool = True
    weighted: bool = True
    g_convention: str = GConvention.SIGNED.value
    g_diff: Optional[float] = None
    # classification
    thresholds: Tuple[float, ...] = DEFAULT_THRESHOLDS
    b_max: Optional[float] = None
    # paths
    out_dir: str = "out"

    def dot_parameters(self) -> DotParameters:
        return DotParameters(**{name: getattr(self, name) for name in DOT_FIELDS})

    @property
    def effective_seed(self) -> int:
        return 0 if self.seed is None else self.seed

    @property
    def crossing_limit(self) -> float:
        return self.b_max if self.b_max is not None else max(self.thresholds)

    def validate(self) -> "RunConfig":
        """Raise ParameterDomainError naming the first invalid field."""
        self.dot_parameters()
        if not isinstance(self.steps, int) or self.steps < 2:
            raise ParameterDomainError("steps", f"must be an integer >= 2, got {self.steps!r}")
        field_grid(self.b_start, self.b_end, self.steps)
        if self.b_start == self.b_end:
            raise ParameterDomainError("b_end", "field grid points must be distinct")
        if self.b_start < 0:
            raise ParameterDomainError("b_start", f"must not be negative, got {self.b_start}")
        if self.sigma_rel < 0:
            raise ParameterDomainError("sigma_rel", f"must not be negative, got {self.sigma_rel}")
        if self.seed is not None and not 0 <= self.seed < 2 ** 64:
            raise ParameterDomainError("seed", f"must fit in an unsigned 64-bit integer, got {self.seed}")
        if self.power < 0:
            raise ParameterDomainError("power", f"must not be negative, got {self.power}")
        if self.grid_step <= 0:
            raise ParameterDomainError("grid_step", f"must be positive, got {self.grid_step}")
        if not self.thresholds or any(t <= 0 for t in self.thresholds):
            raise ParameterDomainError("thresholds", f"must be positive fields, got {self.thresholds}")
        if self.b_max is not None and self.b_max <= 0:
            raise ParameterDomainError("b_max", f"must be positive, got {self.b_max}")
        try:
            GConvention(self.g_convention)
        except ValueError:
            raise ParameterDomainError("g_convention", f"must be 'signed' or 'magnitude', got {self.g_convention!r}")
        if not self.out_dir:
            raise ParameterDomainError("out_dir", "must not be empty")
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["thresholds"] = list(self.thresholds)
        return data

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], source: str = "config") -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParameterDomainError(unknown[0], f"unknown key in {source}")
        values = dict(data)
        if "thresholds" in values and values["thresholds"] is not None:
            values["thresholds"] = tuple(float(t) for t in values["thresholds"])
        return cls(**values)

    @classmethod
    def load(
        cls,
        config_path: Optional[str] = None,
        overrides: Optional[Mapping[str, Any]] = None,
        environ: Optional[Mapping[str, str]] = None,
    ) -> "RunConfig":
        """Defaults, then the JSON file at ``config_path``, then non-None ``overrides``."""
        environ = os.environ if environ is None else environ
        data: Dict[str, Any] = {}
        if config_path:
            try:
                with open(config_path, "r", encoding="utf-8") as f:
                    loaded = json.load(f)
            except json.JSONDecodeError as e:
                raise InputParseError(config_path, e.msg, line=e.lineno)
            except OSError as e:
                raise InputParseError(config_path, str(e))
            if not isinstance(loaded, dict):
                raise InputParseError(config_path, "config must be a JSON object")
            data.update(loaded)
        config = cls.from_mapping(data, source=config_path or "config")
        flags = {k: v for k, v in (overrides or {}).items() if v is not None}
        if flags:
            unknown = sorted(set(flags) - {f.name for f in fields(cls)})
            if unknown:
                raise ParameterDomainError(unknown[0], "unknown flag")
            if "thresholds" in flags:
                flags["thresholds"] = tuple(float(t) for t in flags["thresholds"])
            config = replace(config, **flags)
        if config.seed is None and environ.get(SEED_ENV_VAR):
            raw = environ[SEED_ENV_VAR]
            try:
                config = replace(config, seed=int(raw))
            except ValueError:
                raise ParameterDomainError("seed", f"{SEED_ENV_VAR}={raw!r} is not an integer")
            logger.info("Seed %s taken from %s", config.seed, SEED_ENV_VAR)
        return config.validate()
