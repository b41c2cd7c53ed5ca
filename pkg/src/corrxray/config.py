"""Run configurations for the ``xray``, ``curves`` and ``limitset`` commands.

Configs are YAML (or JSON) mappings validated by pydantic; unknown keys are
rejected and ``schema_version`` must match.  Every numeric tolerance and
budget has a default here, so an empty mapping plus the required source
fields is a complete config.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ThickThin(_Strict):
    delta: float = Field(0.25, gt=0, lt=1, description="cusp circumference")
    zeta: Optional[float] = Field(None, gt=0, description="separation; default just below the bound")
    mu: float = Field(0.0, ge=0, description="roundabout parameter")


class Budgets(_Strict):
    max_nodes: int = Field(1_000_000, gt=0)
    max_depth: Optional[int] = Field(None, gt=0)


class ContractionFit(_Strict):
    N_max: int = Field(12, gt=0)
    eps_grid: tuple[float, ...] = (0.05, 0.1, 0.25, 0.5, 1.0)
    n_rays: int = Field(8, ge=0)


class XrayConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    command: Literal["xray"] = "xray"
    correspondence: Optional[str] = Field(None, description="catalog name; the recursion is derived")
    recursion: Optional[dict] = Field(None, description="wreath recursion in its JSON form")
    connectors: Optional[dict] = Field(None, description="connector set; default is the basis, direction slot 0")
    density: int = Field(1, ge=1, description="sampling refinement for a derived recursion")
    seed_length: Optional[int] = Field(None, ge=0, description="seeds are all words up to this length")
    seeds: Optional[list[str]] = None
    basepoint: tuple[float, float] = (0.0, 1.0)
    thick_thin: ThickThin = ThickThin()
    budgets: Budgets = Budgets()
    contraction: ContractionFit = ContractionFit()
    decompose_limit: int = Field(64, ge=0, description="attractor words decomposed in the report")
    output: str = "xray"
    seed: int = 0

    @model_validator(mode="after")
    def _sources(self):
        if (self.correspondence is None) == (self.recursion is None):
            raise ValueError("give exactly one of 'correspondence' and 'recursion'")
        if (self.seed_length is None) == (self.seeds is None):
            raise ValueError("give exactly one of 'seed_length' and 'seeds'")
        if self.connectors is not None and self.recursion is None:
            raise ValueError("'connectors' needs an explicit 'recursion'")
        if self.basepoint[1] <= 0:
            raise ValueError("basepoint must lie in the upper half plane")
        return self


class CurvesConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    command: Literal["curves"] = "curves"
    map: Optional[str] = Field(None, description="polynomial whose biset is derived; default z^2 + i")
    recursion: Optional[dict] = Field(None, description="explicit rank-3 wreath recursion")
    punctures: Optional[list[tuple[float, float]]] = None
    lift_basepoint: tuple[float, float] = (0.9, -0.35)
    density: int = Field(1, ge=1)
    bound: int = Field(20, ge=0, description="seed slopes have |p|, q up to this bound")
    table_height: Optional[int] = Field(None, ge=1)
    table_cap: Optional[int] = Field(None, ge=1)
    max_nodes: int = Field(200_000, gt=0)
    output: str = "curves"
    seed: int = 0

    @model_validator(mode="after")
    def _sources(self):
        if self.recursion is not None and self.map is not None:
            raise ValueError("give either 'map' or 'recursion', not both")
        return self

    @property
    def map_expr(self) -> str:
        return self.map or "t**2 + I"


class LimitsetConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    command: Literal["limitset"] = "limitset"
    correspondence: str
    depth: int = Field(..., ge=0)
    basepoints: list[tuple[float, float]] = Field(..., min_length=1, max_length=2)
    budget: int = Field(1 << 18, gt=0, description="largest tree enumerated in full")
    samples: int = Field(1 << 14, gt=0, description="random branches when sampling")
    hausdorff_bound: Optional[float] = Field(None, gt=0)
    output: str = "limitset"
    seed: int = 0


CONFIGS = {"xray": XrayConfig, "curves": CurvesConfig, "limitset": LimitsetConfig}


def load_config(path, kind: str):
    """Parse and validate a config file for command ``kind``."""
    data = yaml.safe_load(Path(path).read_text())
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return CONFIGS[kind].model_validate(data)


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def digest(cfg: BaseModel) -> str:
    """sha256 of the canonical JSON form of a validated config.

    >>> a = XrayConfig(correspondence="rabbit", seed_length=2)
    >>> digest(a) == digest(XrayConfig.model_validate(a.model_dump()))
    True
    """
    return hashlib.sha256(canonical_json(cfg.model_dump(mode="json")).encode()).hexdigest()
