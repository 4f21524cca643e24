"""Response models for the compute service."""

from __future__ import annotations

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class ComplexMatrixOut(BaseModel):
    re: list[list[float]]
    im: list[list[float]]

    @classmethod
    def from_array(cls, a) -> "ComplexMatrixOut":
        a = np.asarray(a)
        return cls(re=a.real.tolist(), im=a.imag.tolist())

    def to_array(self):
        return np.asarray(self.re) + 1j * np.asarray(self.im)


class SphereGridOut(BaseModel):
    directions: list[tuple[float, float, float]]
    weights: list[float]
    n_polar: int
    n_azimuth: int


class SmatrixMeta(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda")
    alpha: float
    n_sigma: int
    sphere: tuple[int, int]
    unitarity_defect: float
    condition_estimate: float
    diagnostic_sign_flip: bool = False


class SmatrixResponse(BaseModel):
    s: ComplexMatrixOut
    sphere: SphereGridOut
    surface_nodes: list[tuple[float, float]]
    surface_weights: list[float]
    meta: SmatrixMeta


class ScalingRow(BaseModel):
    t: float
    s_norm_sq: float
    gamma_int: float
    unitarity_defect: float


class ScalingResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    rows: list[ScalingRow]
    slope: Optional[float]
    degenerate: bool
    gamma: float
    lam: float = Field(alias="lambda")
    alpha: float


class Lap1dResponse(BaseModel):
    lambdas: list[float]
    eps_list: list[float]
    ratios: list[list[float]]
    max_ratio: float
    bounded: bool
    theta: float
    s1: float
    alpha: float


class ResolventDiffResponse(BaseModel):
    points: list[tuple[float, float, float]]
    re: list[float]
    im: list[float]


class SelftestCheck(BaseModel):
    name: str
    passed: bool
    detail: str


class SelftestResponse(BaseModel):
    passed: bool
    checks: list[SelftestCheck]
    kernel_csv: str


class HealthResponse(BaseModel):
    status: str
    package: str
    version: str
