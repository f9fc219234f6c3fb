from __future__ import annotations

import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, Field, ValidationError, model_validator

from models.params import (
    ContactParams,
    FlagellaScenario,
    FrictionParams,
    MaterialParams,
    RssParams,
    RunParams,
    SolverParams,
)
from utils.errors import ConfigError


class SimConfig(BaseModel):
    """Every parameter of one simulation, grouped by module.

    On disk this is a TOML file with one section per block; unknown sections
    and keys are rejected.
    """

    material: MaterialParams = Field(default_factory=MaterialParams, description="Rod material.")
    contact: ContactParams = Field(default_factory=ContactParams, description="Penalty contact.")
    friction: FrictionParams = Field(default_factory=FrictionParams, description="Coulomb friction.")
    fluid: RssParams = Field(default_factory=RssParams, description="Regularized Stokeslet fluid.")
    solver: SolverParams = Field(default_factory=SolverParams, description="Newton solver.")
    scenario: FlagellaScenario = Field(default_factory=FlagellaScenario, description="Flagella layout.")
    run: RunParams = Field(default_factory=RunParams, description="Run length and outputs.")

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {
            "examples": [
                {
                    "friction": {"mu": 0.4},
                    "scenario": {"num_flagella": 2},
                    "run": {"duration": 1.0, "stride": 10},
                }
            ]
        },
    }

    @model_validator(mode="after")
    def _check_margins(self) -> "SimConfig":
        h = self.material.radius
        if not self.contact.delta_hat_m(h) > self.contact.delta_m(h):
            raise ValueError("contact.candidate_margin * h must exceed the distance tolerance delta")
        return self

    # -------------------------------------------------------------------------
    # Loading
    # -------------------------------------------------------------------------
    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> "SimConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise ConfigError(_describe(exc)) from exc

    @classmethod
    def from_toml(cls, path: Union[str, Path]) -> "SimConfig":
        path = Path(path)
        try:
            with path.open("rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_mapping(data)

    def with_overrides(
        self,
        duration: Optional[float] = None,
        out_dir: Optional[str] = None,
        stride: Optional[int] = None,
        mu: Optional[float] = None,
        num_flagella: Optional[int] = None,
    ) -> "SimConfig":
        data = self.model_dump()
        if duration is not None:
            data["run"]["duration"] = duration
        if out_dir is not None:
            data["run"]["out_dir"] = out_dir
        if stride is not None:
            data["run"]["stride"] = stride
        if mu is not None:
            data["friction"]["mu"] = mu
        if num_flagella is not None:
            data["scenario"]["num_flagella"] = num_flagella
        return SimConfig.from_mapping(data)


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{where}: {err['msg']}")
    return "invalid config: " + "; ".join(parts)
