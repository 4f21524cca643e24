"""Request/config models shared by the service and the CLI.

The CLI reads the same JSON shapes the service accepts, so a config file is
exactly a request body.  All physical positivity constraints are enforced
here, before any computation starts.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import ConfigurationError
from .kernels import HankelCorrectionParams
from .profile import DeformationProfile, GridSamples


class ProfileSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["bump", "grid_sampled", "zero"]
    height: float = 0.0
    radius: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    nx: Optional[int] = None
    ny: Optional[int] = None
    x0: Optional[float] = None
    y0: Optional[float] = None
    dx: Optional[float] = None
    dy: Optional[float] = None
    values: Optional[list[float]] = None

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "bump" and self.radius <= 0:
            raise ValueError("bump radius must be positive")
        if self.kind == "grid_sampled":
            missing = [k for k in ("nx", "ny", "x0", "dx", "values")
                       if getattr(self, k) is None]
            if missing:
                raise ValueError(f"grid_sampled profile requires {missing}")
        return self

    def build(self) -> DeformationProfile:
        if self.kind == "grid_sampled":
            import numpy as np
            vals = np.asarray(self.values, dtype=float).reshape(self.ny, self.nx)
            samples = GridSamples(self.nx, self.ny, self.x0,
                                  self.y0 if self.y0 is not None else self.x0,
                                  self.dx, self.dy if self.dy is not None else self.dx,
                                  vals)
            return DeformationProfile("grid_sampled", self.height, self.radius,
                                      tuple(self.center), samples)
        return DeformationProfile(self.kind, self.height, self.radius, tuple(self.center))


class PhysicsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    lam: float = Field(default=1.0, alias="lambda", gt=0,
                       description="energy lambda > 0")
    alpha: float = Field(default=2.0, gt=0)
    z: Optional[tuple[float, float]] = Field(
        default=None, description="complex z = [re, im] for resolvent-difference runs")

    @model_validator(mode="after")
    def _check_z(self):
        if self.z is not None:
            re, im = self.z
            if im == 0 and re >= 0:
                raise ValueError("z must lie off [0, +inf)")
        return self


class HankelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_inner: int = Field(default=48, gt=0)
    n_outer: int = Field(default=192, gt=0)
    tail_cutoff: float = Field(default=10.0, gt=0)
    tolerance: float = Field(default=1e-10, gt=1e-12, lt=1e-2)

    def build(self) -> HankelCorrectionParams:
        return HankelCorrectionParams(self.n_inner, self.n_outer,
                                      self.tail_cutoff, self.tolerance)


class GridsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sigma_n: int = Field(default=12, ge=4)
    sphere_polar: int = Field(default=12, ge=2)
    sphere_azimuth: int = Field(default=24, ge=4)
    hankel: HankelSpec = Field(default_factory=HankelSpec)


class StudySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t_list: list[float] = Field(default=[1.0, 0.5, 0.25, 0.125])
    gamma: float = Field(default=0.9, gt=0, lt=1)

    @field_validator("t_list")
    @classmethod
    def _t_order(cls, v):
        if len(v) < 4:
            raise ValueError("scaling study needs at least 4 scale values")
        if any(not (0 < t <= 1) for t in v):
            raise ValueError("scale values must lie in (0, 1]")
        if not all(v[i] > v[i + 1] for i in range(len(v) - 1)):
            raise ValueError("scale list must be strictly decreasing")
        return v


class LapSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    theta: float = Field(default=0.25)
    s1: float = Field(default=1.0)
    lambda_list: list[float] = Field(default=[0.5, 1.0, 2.0])
    eps_list: list[float] = Field(
        default=[1.0, 0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6])

    @field_validator("theta")
    @classmethod
    def _theta_range(cls, v):
        if not (0 < v < 0.5):
            raise ValueError("theta must lie in (0,1/2)")
        return v

    @field_validator("s1")
    @classmethod
    def _s1_range(cls, v):
        if not v > 0.5:
            raise ValueError("s1 must exceed 1/2")
        return v

    @field_validator("lambda_list")
    @classmethod
    def _lams(cls, v):
        if any(x <= 0 for x in v):
            raise ValueError("lambda must be positive")
        return v

    @field_validator("eps_list")
    @classmethod
    def _eps(cls, v):
        if any(x <= 0 for x in v):
            raise ValueError("epsilon values must be positive")
        return v


class SourceSpec(BaseModel):
    """Gaussian volume source for resolvent-difference runs."""
    model_config = ConfigDict(extra="forbid")

    center: tuple[float, float, float] = (2.5, 0.0, 0.0)
    sigma: float = Field(default=0.4, gt=0)
    box_halfwidth: float = Field(default=1.4, gt=0)


class SmatrixRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    profile: ProfileSpec
    physics: PhysicsSpec = Field(default_factory=PhysicsSpec)
    grids: GridsSpec = Field(default_factory=GridsSpec)
    diagnostic_sign_flip: bool = False


class ScalingRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    profile: ProfileSpec
    physics: PhysicsSpec = Field(default_factory=PhysicsSpec)
    grids: GridsSpec = Field(default_factory=GridsSpec)
    study: StudySpec = Field(default_factory=StudySpec)


class Lap1dRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lap: LapSpec = Field(default_factory=LapSpec)
    alpha: float = Field(default=2.0, gt=0)


class ResolventDiffRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    profile: ProfileSpec
    physics: PhysicsSpec
    grids: GridsSpec = Field(default_factory=GridsSpec)
    source: SourceSpec = Field(default_factory=SourceSpec)
    eval_points: list[tuple[float, float, float]]
    n_volume: int = Field(default=12, ge=4)

    @model_validator(mode="after")
    def _need_z(self):
        if self.physics.z is None:
            raise ValueError("resolvent-diff requires physics.z = [re, im]")
        return self


class SelftestRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    diagnostic_sign_flip: bool = False
    fast: bool = True


COMMAND_MODELS = {
    "smatrix": SmatrixRequest,
    "scaling": ScalingRequest,
    "lap1d": Lap1dRequest,
    "resolvent-diff": ResolventDiffRequest,
    "selftest": SelftestRequest,
}


def parse_config(command: str, payload: dict):
    model = COMMAND_MODELS.get(command)
    if model is None:
        raise ConfigurationError(f"unknown command {command!r}")
    try:
        return model.model_validate(payload or {})
    except Exception as exc:  # pydantic ValidationError
        raise ConfigurationError(str(exc)) from exc
