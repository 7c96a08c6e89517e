import dataclasses
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, get_args

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.geometry.errors import ConfigError
from src.geometry.exactlaw import ModelParams, Regime, RegimeKind, classify_regime

ExperimentKind = Literal[
    "sf-cdf",
    "sf-sample",
    "gumbel-1d",
    "gumbel-md",
    "polysim-crosscheck",
    "covering-crosscheck",
    "regimes-table",
    "appendix-verify",
    "volume-ratio",
]
EXPERIMENT_KINDS = get_args(ExperimentKind)


class IntensitySpec(BaseModel):
    """L(d) = ln(λκ_d) as an explicit value, the critical volume scaling, or the recipe
    x·d + coef·d^power·(ln d)^log_power + y."""

    L: Optional[float] = None
    volume_x: Optional[float] = Field(default=None, gt=0.0)
    x: Optional[float] = None
    y: float = 0.0
    coef: float = 0.0
    power: float = 0.0
    log_power: float = 0.0
    regime: Optional[Literal["subcritical", "critical", "supercritical"]] = None

    @model_validator(mode="after")
    def _one_source(self) -> "IntensitySpec":
        recipe = self.x is not None or self.coef != 0.0 or self.y != 0.0
        sources = [self.L is not None, self.volume_x is not None, recipe]
        if sum(sources) != 1:
            raise ValueError("give exactly one of L, volume_x, or the recipe (x, y, coef, power, log_power)")
        return self

    def log_intensity(self, d: int) -> float:
        if self.L is not None:
            return self.L
        if self.volume_x is not None:
            return 0.5 * d * math.log(d / (2.0 * self.volume_x))
        value = (self.x or 0.0) * d + self.y
        if self.coef:
            value += self.coef * d**self.power * math.log(d) ** self.log_power
        return value

    def params(self, d: int) -> ModelParams:
        return ModelParams(d=d, L=self.log_intensity(d))

    def resolve_regime(self) -> Regime:
        if self.regime == "critical":
            if self.x is not None:
                return Regime(RegimeKind.CRITICAL, x=self.x)
            classified = classify_regime(self.log_intensity)
            return Regime(RegimeKind.CRITICAL, x=classified.x)
        if self.regime is not None:
            return Regime(RegimeKind(self.regime))
        return classify_regime(self.log_intensity)


class ExperimentConfig(BaseModel):
    kind: ExperimentKind
    d: Optional[int] = Field(default=None, ge=2)
    d_ladder: Optional[List[int]] = None
    intensity: Optional[IntensitySpec] = None
    m: int = Field(default=2, ge=2)
    tau_grid: List[float] = Field(default_factory=lambda: [-1.0, 0.0, 1.0])
    r_grid: Optional[List[float]] = None
    r_points: int = Field(default=101, ge=2)
    reps: int = Field(default=1000, ge=1)
    seed: int = Field(default=0, ge=0)
    out: Optional[str] = None
    n_dirs: int = Field(default=32, ge=1)
    workers: Optional[int] = Field(default=None, ge=1)
    alpha_form: Literal["janson", "displayed"] = "displayed"
    total_intensity: Literal["sphere-measure", "point-count"] = "sphere-measure"
    w: float = Field(default=0.5, gt=0.0)
    grid_points: int = Field(default=10_000, ge=10)

    @field_validator("d_ladder")
    @classmethod
    def _strictly_increasing(cls, ladder: Optional[List[int]]) -> Optional[List[int]]:
        if ladder is None:
            return ladder
        if not ladder or any(d < 2 for d in ladder):
            raise ValueError("d_ladder must be non-empty with every d >= 2")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("d_ladder must be strictly increasing")
        return ladder

    @field_validator("r_grid")
    @classmethod
    def _levels_in_unit_interval(cls, grid: Optional[List[float]]) -> Optional[List[float]]:
        if grid is not None and any(not 0.0 <= r <= 1.0 for r in grid):
            raise ValueError("r_grid values must lie in [0, 1]")
        return grid

    @classmethod
    def build(cls, payload: Dict[str, Any]) -> "ExperimentConfig":
        try:
            return cls.model_validate(payload)
        except ValidationError as exc:
            lines = [
                f"{'.'.join(str(part) for part in error['loc']) or '<root>'}: {error['msg']}"
                for error in exc.errors()
            ]
            raise ConfigError("\n".join(lines)) from exc

    @property
    def dimensions(self) -> List[int]:
        if self.d_ladder:
            return list(self.d_ladder)
        if self.d is not None:
            return [self.d]
        raise ConfigError(f"d: experiment {self.kind!r} needs d or d_ladder")

    def require_intensity(self) -> IntensitySpec:
        if self.intensity is None:
            raise ConfigError(f"intensity: experiment {self.kind!r} needs an intensity spec")
        return self.intensity

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


@dataclasses.dataclass
class RuntimeSettings:
    base_dir: Path
    outputs_dir: Path
    log_level: str = "INFO"
    workers: int = 1
    series_max_terms: int = 10**6

    @classmethod
    def from_env(
        cls,
        base_dir: Path,
        outputs_dir: Optional[Path] = None,
        env_path: Optional[Path] = None,
    ) -> "RuntimeSettings":
        if env_path is None:
            env_path = base_dir / ".env"
        if env_path.exists():
            load_dotenv(env_path)
        outputs_dir = outputs_dir or Path(os.getenv("PPL_OUTPUTS_DIR", str(base_dir / "outputs")))
        outputs_dir.mkdir(parents=True, exist_ok=True)
        try:
            workers = int(os.getenv("PPL_WORKERS", "1"))
            series_max_terms = int(os.getenv("PPL_SERIES_MAX_TERMS", str(10**6)))
        except ValueError as exc:
            raise ConfigError(f"environment: {exc}") from exc
        if workers < 1 or series_max_terms < 1:
            raise ConfigError("environment: PPL_WORKERS and PPL_SERIES_MAX_TERMS must be positive")
        return cls(
            base_dir=base_dir,
            outputs_dir=outputs_dir,
            log_level=os.getenv("PPL_LOG_LEVEL", "INFO").upper(),
            workers=workers,
            series_max_terms=series_max_terms,
        )

    @property
    def resolved_log_level(self) -> int:
        return getattr(logging, self.log_level, logging.INFO)
