"""Quadrature grids and weighted operator norms.

Two measures are discretized:

* L^2(Sigma) (+) L^2(Sigma) with the *parametric* measure dx_par on the
  bounding box of the support -- no surface Jacobian sqrt(1+|grad F|^2).
  The trace maps evaluate along the graph parametrization, so the natural
  L^2 space is that of the parameter plane.
* L^2(S^2) with the full spherical measure (total weight 4 pi), built as
  Gauss-Legendre in cos(theta) times a uniform azimuthal rule.

`weighted_operator_norm` realizes the discrete B(L^2) norm for Nystrom
matrices via a diagonal similarity transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .profile import DeformationProfile, SupportRegion, evaluate


@dataclass(frozen=True)
class SurfaceGrid:
    nodes: np.ndarray          # (n, 2) parameter-plane points
    weights: np.ndarray        # (n,) positive quadrature weights, sum = box area
    profile_values: np.ndarray  # (n,) cached F(nodes)
    region: SupportRegion

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    def to_csv(self) -> str:
        lines = ["idx,x,y,weight"]
        for i in range(self.n):
            lines.append(f"{i},{self.nodes[i,0]!r},{self.nodes[i,1]!r},{self.weights[i]!r}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SphereGrid:
    directions: np.ndarray     # (m, 3) unit vectors xi = (xi1, xi_par)
    weights: np.ndarray        # (m,) positive, sum = 4 pi
    n_polar: int
    n_azimuth: int

    @property
    def m(self) -> int:
        return self.directions.shape[0]

    def to_csv(self) -> str:
        lines = ["idx,xi1,xi2,xi3,weight"]
        for i in range(self.m):
            d = self.directions[i]
            lines.append(f"{i},{d[0]!r},{d[1]!r},{d[2]!r},{self.weights[i]!r}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DiagonalRule:
    """Local polar sub-quadrature used for singular/collision Nystrom entries.

    Each collision entry is replaced by the mean of the kernel over the
    equal-area disk of the source node's weight cell; the radial direction
    uses geometrically graded Gauss panels (handles 1/r and log kernels),
    the angular direction a uniform periodic rule.
    """

    n_radial: int = 10
    n_angular: int = 12
    patch_radius: float = np.inf   # cap on the disk radius

    def __post_init__(self):
        if self.n_radial < 2 or self.n_angular < 4:
            raise ConfigurationError("diagonal rule needs n_radial >= 2, n_angular >= 4")
        if self.patch_radius <= 0:
            raise ConfigurationError("patch_radius must be positive")

    @classmethod
    def for_grid(cls, grid: SurfaceGrid, n_radial: int = 10, n_angular: int = 12) -> "DiagonalRule":
        if grid.n == 0:
            return cls(n_radial, n_angular, np.inf)
        # patch_radius <= 4 x min node spacing
        xs = np.unique(grid.nodes[:, 0])
        ys = np.unique(grid.nodes[:, 1])
        spacing = min(np.diff(xs).min() if xs.size > 1 else np.inf,
                      np.diff(ys).min() if ys.size > 1 else np.inf)
        return cls(n_radial, n_angular, 4.0 * spacing)

    def radial_panels(self, r_full: float):
        """Radial nodes/weights on [0, r_full] (already including the r ds
        polar Jacobian is NOT applied here; caller multiplies by s)."""
        r_break = min(self.patch_radius, r_full)
        edges = [0.0, r_break / 16.0, r_break / 4.0, r_break]
        if r_full > r_break * (1 + 1e-12):
            edges.append(r_full)
        x, w = np.polynomial.legendre.leggauss(self.n_radial)
        nodes, weights = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            nodes.append(0.5 * (b - a) * x + 0.5 * (b + a))
            weights.append(0.5 * (b - a) * w)
        return np.concatenate(nodes), np.concatenate(weights)

    def angular_nodes(self):
        th = 2.0 * np.pi * np.arange(self.n_angular) / self.n_angular
        w = np.full(self.n_angular, 2.0 * np.pi / self.n_angular)
        return th, w


def build_surface_grid(region: SupportRegion, n_per_axis: int,
                       profile: DeformationProfile | None = None) -> SurfaceGrid:
    """Tensor Gauss-Legendre grid over the bounding box of `region`."""
    if region.empty:
        return SurfaceGrid(np.zeros((0, 2)), np.zeros(0), np.zeros(0), region)
    if n_per_axis < 4:
        raise DomainError("n_per_axis must be >= 4")
    if region.area <= 0:
        raise ConfigurationError("support region has zero area but is not empty")
    x, w = np.polynomial.legendre.leggauss(n_per_axis)
    xs = 0.5 * (region.xmax - region.xmin) * x + 0.5 * (region.xmax + region.xmin)
    ys = 0.5 * (region.ymax - region.ymin) * x + 0.5 * (region.ymax + region.ymin)
    wx = 0.5 * (region.xmax - region.xmin) * w
    wy = 0.5 * (region.ymax - region.ymin) * w
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    WX, WY = np.meshgrid(wx, wy, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    weights = (WX * WY).ravel()
    fvals = evaluate(profile, nodes) if profile is not None else np.zeros(len(nodes))
    return SurfaceGrid(nodes, weights, np.asarray(fvals, dtype=float), region)


def build_sphere_grid(n_polar: int, n_azimuth: int) -> SphereGrid:
    """Gauss-Legendre in cos(theta) x uniform azimuth; xi1 is the polar axis."""
    if n_polar < 2 or n_azimuth < 4:
        raise DomainError("need n_polar >= 2 and n_azimuth >= 4")
    c, wc = np.polynomial.legendre.leggauss(n_polar)       # cos(theta), weight sum 2
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    wphi = 2.0 * np.pi / n_azimuth
    s = np.sqrt(1.0 - c**2)
    xi1 = np.repeat(c, n_azimuth)
    xi2 = np.repeat(s, n_azimuth) * np.tile(np.cos(phi), n_polar)
    xi3 = np.repeat(s, n_azimuth) * np.tile(np.sin(phi), n_polar)
    directions = np.column_stack([xi1, xi2, xi3])
    weights = np.repeat(wc, n_azimuth) * wphi
    return SphereGrid(directions, weights, n_polar, n_azimuth)


def weighted_operator_norm(matrix, row_weights, col_weights) -> float:
    """sigma_max(D_r^{1/2} A D_c^{-1/2}).

    `matrix` is the full discrete map on value vectors (quadrature weights of
    the column space already applied where the operator integrates); the
    result is its operator norm L^2(col weights) -> L^2(row weights).
    """
    a = np.asarray(matrix)
    rw = np.asarray(row_weights, dtype=float)
    cw = np.asarray(col_weights, dtype=float)
    if a.shape != (rw.size, cw.size):
        raise DomainError("matrix shape inconsistent with weight vectors")
    if np.any(rw <= 0) or np.any(cw <= 0):
        raise DomainError("weights must be positive")
    if not np.all(np.isfinite(a.real)) or (np.iscomplexobj(a) and not np.all(np.isfinite(a.imag))):
        raise DomainError("matrix contains non-finite entries")
    if a.size == 0:
        return 0.0
    scaled = np.sqrt(rw)[:, None] * a / np.sqrt(cw)[None, :]
    return float(np.linalg.svd(scaled, compute_uv=False)[0])
