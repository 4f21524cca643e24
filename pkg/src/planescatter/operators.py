"""Discretized boundary operators and the scattering matrix.

Both surfaces are sampled on the same parameter nodes x_j of a SurfaceGrid;
the combined point set is P = [(F(x_j), x_j)] ++ [(0, x_j)] (F block first).
The block boundary operator M has entries r0(z; P_i, P_j); as an integral
operator on L^2(Sigma) (+) L^2(Sigma) it acts via M D_w (Nystrom).

Metric conventions (all weight placements live here):
* boundary value vectors phi: operator application  M_op phi = M D_w phi;
* far-field map L: sphere values  (L phi)(xi_r) = (L_mat D_w phi)_r;
* adjoint of L:  L* psi = L_mat^H D_S psi;
* scattering matrix (one dense solve, Lambda never formed):
      (1 + alpha J M D_w) X = J L_mat^H D_S,
      S = 1 - 2 pi i alpha (L_mat D_w) X;
* weighted operator norms / unitarity defect via the similarity
  D^{1/2} A D^{-1/2} (see quad.weighted_operator_norm).

Singular and collision entries (coincident or nearly coincident 3D points,
including F-vs-0 cross entries where F(x_j) = 0) are replaced by the mean
of the kernel over the equal-area disk of the source weight cell, computed
with the local polar rule; off-diagonal collision entries are symmetrized
so the assembled matrix stays complex-symmetric exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import DomainError, NearSingularError, SingularityError
from .kernels import (DEFAULT_HANKEL, HankelCorrectionParams, SpectralPoint,
                      correction_many, green_free_3d)
from .profile import DeformationProfile, evaluate
from .quad import DiagonalRule, SphereGrid, SurfaceGrid, weighted_operator_norm

CONDITION_LIMIT = 1e12
_CHUNK = 20000


@dataclass
class BlockBoundaryOperator:
    matrix: np.ndarray            # (2N, 2N) kernel values (M) or value map (Lambda)
    grid: SurfaceGrid
    spectral: SpectralPoint
    kind: str                     # "M_block" | "Lambda_block"
    condition_estimate: float = float("nan")

    @property
    def n_nodes(self) -> int:
        return self.grid.n

    @property
    def weights2(self) -> np.ndarray:
        return np.concatenate([self.grid.weights, self.grid.weights])


@dataclass
class FarFieldMap:
    matrix: np.ndarray            # (M, 2N) kernel values
    lam: float
    alpha: float
    sphere: SphereGrid
    grid: SurfaceGrid


@dataclass
class ScatteringMatrix:
    matrix: np.ndarray            # (M, M) on the sphere grid
    lam: float
    alpha: float
    sphere: SphereGrid
    unitarity_defect: float
    condition_estimate: float

    def recompute_defect(self) -> float:
        return unitarity_defect(self.matrix, self.sphere.weights)

    def to_csv(self) -> str:
        lines = ["i,j,re,im"]
        m = self.matrix
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                lines.append(f"{i},{j},{m[i, j].real!r},{m[i, j].imag!r}")
        return "\n".join(lines) + "\n"


def unitarity_defect(s_matrix, sphere_weights) -> float:
    """|| D^{1/2} (S S* - 1) D^{-1/2} ||_2 with S* the L^2(S^2)-adjoint."""
    w = np.asarray(sphere_weights, dtype=float)
    d = np.sqrt(w)
    shat = d[:, None] * s_matrix / d[None, :]
    gram = shat @ shat.conj().T
    return float(np.linalg.norm(gram - np.eye(len(w)), 2))


def j_signs(n: int) -> np.ndarray:
    return np.concatenate([np.ones(n), -np.ones(n)])


def combined_heights(grid: SurfaceGrid) -> np.ndarray:
    return np.concatenate([grid.profile_values, np.zeros(grid.n)])


def _kernel_pairs(spectral, rho, a, r3, params):
    """r0 on pair arrays, chunked through the Hankel correction."""
    out = np.empty(rho.shape, dtype=complex)
    for lo in range(0, rho.size, _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, rho.size))
        out[sl] = green_free_3d(spectral, r3[sl]) + correction_many(spectral, rho[sl], a[sl], params)
    return out


def _patch_means_batch(spectral, profile, targets, centers, deformed, w_cells,
                       rule: DiagonalRule, params):
    """Integrated local means for a batch of collision entries.

    targets: (m, 3) points (height, x, y); centers: (m, 2) cell centers;
    deformed: (m,) bool, source sheet; w_cells: (m,) cell weights.
    All patches share one polar layout (fixed panel count), so the kernel
    is evaluated in a single chunked call.
    """
    m = len(w_cells)
    r_full = np.sqrt(np.asarray(w_cells) / np.pi)
    rb = np.minimum(rule.patch_radius, r_full)
    # radial edges per patch: graded inside rb, one panel out to r_full
    edges = np.stack([np.zeros(m), rb / 16.0, rb / 4.0, rb, r_full], axis=0)
    xg, wg = np.polynomial.legendre.leggauss(rule.n_radial)
    s_nodes, s_w = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        s_nodes.append(half[None, :] * xg[:, None] + 0.5 * (hi + lo)[None, :])
        s_w.append(half[None, :] * wg[:, None])
    s = np.concatenate(s_nodes, axis=0)        # (nr, m)
    ws = np.concatenate(s_w, axis=0)
    th, wth = rule.angular_nodes()
    na = len(th)
    y1 = centers[None, :, 0, None] + s[:, :, None] * np.cos(th)[None, None, :]
    y2 = centers[None, :, 1, None] + s[:, :, None] * np.sin(th)[None, None, :]
    ypts = np.stack([y1.ravel(), y2.ravel()], axis=-1)
    hy = np.zeros(len(ypts))
    dmask = np.repeat(np.asarray(deformed, bool)[None, :, None],
                      s.shape[0], axis=0).repeat(na, axis=2).ravel()
    if np.any(dmask):
        hy[dmask] = evaluate(profile, ypts[dmask])
    ht = np.repeat(np.asarray(targets)[None, :, 0, None], s.shape[0], axis=0) \
        .repeat(na, axis=2).ravel()
    xt = np.repeat(np.asarray(targets)[None, :, 1, None], s.shape[0], axis=0) \
        .repeat(na, axis=2).ravel()
    yt = np.repeat(np.asarray(targets)[None, :, 2, None], s.shape[0], axis=0) \
        .repeat(na, axis=2).ravel()
    rho = np.hypot(ypts[:, 0] - xt, ypts[:, 1] - yt)
    r3 = np.hypot(rho, ht - hy)
    aa = np.abs(ht) + np.abs(hy)
    bad = (rho == 0) & (aa == 0)
    if np.any(bad):
        rho = np.where(bad, 1e-13, rho)
        r3 = np.where(r3 == 0, 1e-13, r3)
    vals = _kernel_pairs(spectral, rho, aa, r3, params).reshape(s.shape[0], m, na)
    integral = np.einsum("im,j,imj->m", ws * s, wth, vals)
    return integral / np.asarray(w_cells)


def _patch_mean(spectral, profile, target, center, source_is_deformed, w_cell,
                rule: DiagonalRule, params, grade_scale=None):
    """Mean of r0(z; target, .) over the equal-area disk of a weight cell.

    target = (height, x, y); the source runs over the disk around `center`
    on the deformed (F) or flat (0) sheet.  `grade_scale` adds geometric
    radial refinement towards the center (near-field evaluation).
    """
    r_full = np.sqrt(w_cell / np.pi)
    s, ws = rule.radial_panels(r_full)
    if grade_scale is not None and grade_scale < r_full / 8:
        edges = [0.0]
        e = grade_scale
        while e < r_full:
            edges.append(e)
            e *= 4.0
        edges.append(r_full)
        xg, wg = np.polynomial.legendre.leggauss(rule.n_radial)
        s_list, w_list = [], []
        for a_, b_ in zip(edges[:-1], edges[1:]):
            s_list.append(0.5 * (b_ - a_) * xg + 0.5 * (b_ + a_))
            w_list.append(0.5 * (b_ - a_) * wg)
        s, ws = np.concatenate(s_list), np.concatenate(w_list)
    th, wth = rule.angular_nodes()
    y = center[None, None, :] + s[:, None, None] * np.stack(
        [np.cos(th), np.sin(th)], axis=-1)[None, :, :]
    ypts = y.reshape(-1, 2)
    hy = evaluate(profile, ypts) if source_is_deformed else np.zeros(len(ypts))
    h_t, xt, yt = target
    rho = np.hypot(ypts[:, 0] - xt, ypts[:, 1] - yt)
    dh = h_t - hy
    r3 = np.hypot(rho, dh)
    a = abs(h_t) + np.abs(hy)
    # guard accidental exact hits of an interior polar node
    bad = (rho == 0) & (a == 0)
    if np.any(bad):
        rho = np.where(bad, 1e-13, rho)
        r3 = np.where(r3 == 0, 1e-13, r3)
    vals = _kernel_pairs(spectral, rho, a, r3, params).reshape(len(s), len(th))
    integral = np.einsum("i,j,ij->", ws * s, wth, vals)
    return integral / w_cell


def assemble_M(grid: SurfaceGrid, profile: DeformationProfile, spectral: SpectralPoint,
               params: HankelCorrectionParams = DEFAULT_HANKEL,
               rule: DiagonalRule | None = None) -> BlockBoundaryOperator:
    """Nystrom matrix of the two-sheet boundary operator at the spectral point."""
    n = grid.n
    if n == 0:
        return BlockBoundaryOperator(np.zeros((0, 0), dtype=complex), grid, spectral, "M_block")
    if rule is None:
        rule = DiagonalRule.for_grid(grid)
    n2 = 2 * n
    heights = combined_heights(grid)
    xy = np.vstack([grid.nodes, grid.nodes])
    w2 = np.concatenate([grid.weights, grid.weights])
    cell_r = np.sqrt(w2 / np.pi)

    mat = np.zeros((n2, n2), dtype=complex)
    iu, ju = np.triu_indices(n2, k=1)
    rho = np.hypot(xy[iu, 0] - xy[ju, 0], xy[iu, 1] - xy[ju, 1])
    dh = heights[iu] - heights[ju]
    r3 = np.hypot(rho, dh)
    a = np.abs(heights[iu]) + np.abs(heights[ju])
    colliding = r3 < 0.45 * (cell_r[iu] + cell_r[ju])

    reg = ~colliding
    vals = _kernel_pairs(spectral, rho[reg], a[reg], r3[reg], params)
    mat[iu[reg], ju[reg]] = vals
    mat[ju[reg], iu[reg]] = vals

    # collision entries: symmetrized integrated local means, batched
    ic = iu[colliding]
    jc = ju[colliding]
    diag = np.arange(n2)
    tgt_idx = np.concatenate([ic, jc, diag])
    src_idx = np.concatenate([jc, ic, diag])
    targets = np.column_stack([heights[tgt_idx], xy[tgt_idx]])
    means = _patch_means_batch(spectral, profile, targets, xy[src_idx],
                               src_idx < n, w2[src_idx], rule, params)
    nc = len(ic)
    v = 0.5 * (means[:nc] + means[nc:2 * nc])
    mat[ic, jc] = v
    mat[jc, ic] = v
    mat[diag, diag] = means[2 * nc:]
    return BlockBoundaryOperator(mat, grid, spectral, "M_block")


def _system_matrix(m_op: BlockBoundaryOperator) -> np.ndarray:
    alpha = m_op.spectral.alpha
    jsig = j_signs(m_op.n_nodes)
    w2 = m_op.weights2
    return np.eye(2 * m_op.n_nodes) + alpha * (jsig[:, None] * m_op.matrix * w2[None, :])


def _lu_with_condition(a):
    lu, piv = sla.lu_factor(a)
    gecon = sla.get_lapack_funcs("gecon", (a,))
    rcond, _ = gecon(lu, np.linalg.norm(a, 1))
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if cond > CONDITION_LIMIT:
        raise NearSingularError(
            f"boundary solve condition {cond:.3e} exceeds {CONDITION_LIMIT:.0e}; "
            "candidate embedded eigenvalue", condition=float(cond))
    return (lu, piv), float(cond)


def assemble_Lambda(m_op: BlockBoundaryOperator) -> BlockBoundaryOperator:
    """Lambda = -alpha (1 + alpha J M D_w)^{-1} J as a value map."""
    if m_op.kind != "M_block":
        raise DomainError("assemble_Lambda expects an M_block operator")
    alpha = m_op.spectral.alpha
    n2 = 2 * m_op.n_nodes
    if n2 == 0:
        return BlockBoundaryOperator(np.zeros((0, 0), dtype=complex), m_op.grid,
                                     m_op.spectral, "Lambda_block", 1.0)
    a_sys = _system_matrix(m_op)
    lu, cond = _lu_with_condition(a_sys)
    jmat = np.diag(j_signs(m_op.n_nodes)).astype(complex)
    lam_mat = -alpha * sla.lu_solve(lu, jmat)
    return BlockBoundaryOperator(lam_mat, m_op.grid, m_op.spectral, "Lambda_block", cond)


def far_field_kernel_row(lam, alpha, xi, heights, nodes):
    """Far-field kernel values for one sphere direction against boundary points."""
    sl = np.sqrt(lam)
    pref = lam**0.25 / np.sqrt(2.0) / (2.0 * np.pi) ** 1.5
    xi1 = xi[0]
    trans = np.exp(-1j * sl * xi1 * heights) \
        - alpha * np.exp(-1j * sl * abs(xi1) * np.abs(heights)) / (alpha + 2j * sl * abs(xi1))
    plane = np.exp(-1j * sl * (xi[1] * nodes[:, 0] + xi[2] * nodes[:, 1]))
    return pref * trans * plane


def assemble_L(sphere: SphereGrid, grid: SurfaceGrid, profile: DeformationProfile,
               lam: float, alpha: float) -> FarFieldMap:
    """Far-field map built from the conjugated generalized eigenfunctions."""
    if lam <= 0:
        raise DomainError("far-field map requires lambda > 0")
    sl = np.sqrt(lam)
    pref = lam**0.25 / np.sqrt(2.0) / (2.0 * np.pi) ** 1.5
    xi1 = sphere.directions[:, 0]
    fvals = grid.profile_values
    plane = np.exp(-1j * sl * (sphere.directions[:, 1:2] * grid.nodes[:, 0][None, :]
                               + sphere.directions[:, 2:3] * grid.nodes[:, 1][None, :]))
    damp = alpha / (alpha + 2j * sl * np.abs(xi1))
    block_f = (np.exp(-1j * sl * xi1[:, None] * fvals[None, :])
               - damp[:, None] * np.exp(-1j * sl * np.abs(xi1)[:, None] * np.abs(fvals)[None, :]))
    block_0 = np.repeat((1.0 - damp)[:, None], grid.n, axis=1).astype(complex)
    mat = pref * np.hstack([block_f * plane, block_0 * plane])
    return FarFieldMap(mat, float(lam), float(alpha), sphere, grid)


def assemble_S(far_field: FarFieldMap, boundary: BlockBoundaryOperator,
               sign_flip: bool = False) -> ScatteringMatrix:
    """S = 1 - 2 pi i alpha L (1 + alpha J M(lam+))^{-1} J L*.

    `boundary` is the M_block at limit_plus (one dense solve) or a
    Lambda_block (then S = 1 + 2 pi i L Lambda L*).  `sign_flip` negates the
    correction term -- a deliberately wrong variant kept for the selftest's
    sensitivity check.
    """
    sphere = far_field.sphere
    m_dim = sphere.m
    alpha = far_field.alpha
    if boundary.n_nodes == 0:
        return ScatteringMatrix(np.eye(m_dim, dtype=complex), far_field.lam, alpha,
                                sphere, 0.0, 1.0)
    w2 = boundary.weights2
    l_rows = far_field.matrix * w2[None, :]          # L D_w
    l_adj = far_field.matrix.conj().T * sphere.weights[None, :]   # L^H D_S
    if boundary.kind == "M_block":
        jsig = j_signs(boundary.n_nodes)
        a_sys = _system_matrix(boundary)
        lu, cond = _lu_with_condition(a_sys)
        x = sla.lu_solve(lu, jsig[:, None] * l_adj)
        corr = l_rows @ x
        corr *= -2j * np.pi * alpha
    else:
        cond = boundary.condition_estimate
        corr = 2j * np.pi * (l_rows @ boundary.matrix @ l_adj)
    if sign_flip:
        corr = -corr
    s = np.eye(m_dim, dtype=complex) + corr
    defect = unitarity_defect(s, sphere.weights)
    return ScatteringMatrix(s, far_field.lam, alpha, sphere, defect, cond)


def compute_smatrix(profile: DeformationProfile, lam: float, alpha: float,
                    n_sigma: int = 12, sphere_dims: tuple[int, int] = (12, 24),
                    params: HankelCorrectionParams = DEFAULT_HANKEL,
                    sign_flip: bool = False):
    """Full pipeline: grids -> M(lam+) -> L -> S.  Returns (S, sphere, grid)."""
    from .quad import build_sphere_grid, build_surface_grid
    sphere = build_sphere_grid(*sphere_dims)
    grid = build_surface_grid(profile.support, n_sigma, profile)
    far = assemble_L(sphere, grid, profile, lam, alpha)
    if grid.n == 0:
        return assemble_S(far, BlockBoundaryOperator(
            np.zeros((0, 0), dtype=complex), grid,
            SpectralPoint.limit_plus(lam, alpha), "M_block")), sphere, grid
    spectral = SpectralPoint.limit_plus(lam, alpha)
    m_op = assemble_M(grid, profile, spectral, params)
    return assemble_S(far, m_op, sign_flip=sign_flip), sphere, grid


# ---------------------------------------------------------------------------
# resolvent difference applier
# ---------------------------------------------------------------------------

def volume_rule(box, n_per_axis):
    """Tensor Gauss-Legendre rule over a 3D box ((x0,x1),(y0,y1),(z0,z1))."""
    xg, wg = np.polynomial.legendre.leggauss(n_per_axis)
    axes, weights = [], []
    for lo, hi in box:
        axes.append(0.5 * (hi - lo) * xg + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * wg)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    w = np.einsum("i,j,k->ijk", *weights).ravel()
    return pts, w


def _kernel_cross(spectral, targets, sources, params):
    """r0(z; targets[i], sources[k]) as an (nt, ns) matrix (all pairs regular)."""
    t = np.asarray(targets, float)
    s = np.asarray(sources, float)
    rho = np.hypot(t[:, None, 1] - s[None, :, 1], t[:, None, 2] - s[None, :, 2]).ravel()
    dh = (t[:, None, 0] - s[None, :, 0]).ravel()
    a = (np.abs(t[:, None, 0]) + np.abs(s[None, :, 0])).ravel()
    r3 = np.hypot(rho, dh)
    if np.any(r3 == 0):
        raise SingularityError("coincident target/source point in kernel evaluation")
    return _kernel_pairs(spectral, rho, a, r3, params).reshape(len(t), len(s))


def trace_rhs(grid: SurfaceGrid, spectral: SpectralPoint, f, box, n_volume,
              params=DEFAULT_HANKEL):
    """Sampled traces of R_0(z) f on both sheets: the 2N vector tau_Sigma R_0 f."""
    y, v = volume_rule(box, n_volume)
    fv = np.asarray(f(y), dtype=complex) * v
    heights = combined_heights(grid)
    targets = np.column_stack([heights, np.vstack([grid.nodes, grid.nodes])])
    kern = _kernel_cross(spectral, targets, y, params)
    return kern @ fv


def apply_resolvent_difference(f, profile: DeformationProfile, grid: SurfaceGrid,
                               spectral: SpectralPoint, eval_points, *,
                               volume_box, n_volume=14,
                               params: HankelCorrectionParams = DEFAULT_HANKEL):
    """(R_F(z) - R_0(z)) f at eval_points, z strictly off [0, +inf).

    Computes tau_Sigma R_0 f by volume quadrature, applies Lambda, then
    evaluates the two-sheet layer potential.
    """
    if spectral.mode != "complex_z":
        raise DomainError("resolvent difference needs a complex spectral point")
    pts = np.atleast_2d(np.asarray(eval_points, dtype=float))
    fdist = np.abs(pts[:, 0] - evaluate(profile, pts[:, 1:]))
    if np.any(np.abs(pts[:, 0]) < 1e-12) or np.any(fdist < 1e-12):
        raise SingularityError("evaluation point lies on one of the surfaces")
    if grid.n == 0:
        return np.zeros(len(pts), dtype=complex)
    m_op = assemble_M(grid, profile, spectral, params)
    lam_op = assemble_Lambda(m_op)
    gf = trace_rhs(grid, spectral, f, volume_box, n_volume, params)
    density = lam_op.matrix @ gf
    heights = combined_heights(grid)
    sources = np.column_stack([heights, np.vstack([grid.nodes, grid.nodes])])
    kern = _kernel_cross(spectral, pts, sources, params)
    w2 = np.concatenate([grid.weights, grid.weights])
    return kern @ (w2 * density)


def evaluate_potential_near(profile: DeformationProfile, grid: SurfaceGrid,
                            spectral: SpectralPoint, density, point, *,
                            rule: DiagonalRule | None = None,
                            params: HankelCorrectionParams = DEFAULT_HANKEL,
                            near_factor: float = 3.0, grade_scale=None):
    """Two-sheet layer potential at a point close to (or on) the surfaces.

    Nodes whose cells lie near the point's parallel projection are replaced
    by local disk integrals with radial grading at `grade_scale` (set it to
    the distance of the point from the surface).
    """
    if rule is None:
        rule = DiagonalRule.for_grid(grid)
    density = np.asarray(density, dtype=complex)
    n = grid.n
    heights = combined_heights(grid)
    xy = np.vstack([grid.nodes, grid.nodes])
    w2 = np.concatenate([grid.weights, grid.weights])
    cell_r = np.sqrt(w2 / np.pi)
    x1, x2, x3 = float(point[0]), float(point[1]), float(point[2])
    dpar = np.hypot(xy[:, 0] - x2, xy[:, 1] - x3)
    near = dpar < near_factor * cell_r
    far = ~near
    rho = dpar[far]
    dh = x1 - heights[far]
    r3 = np.hypot(rho, dh)
    a = np.abs(x1) + np.abs(heights[far])
    total = np.sum(_kernel_pairs(spectral, rho, a, r3, params) * w2[far] * density[far])
    for j in np.nonzero(near)[0]:
        mean = _patch_mean(spectral, profile, (x1, x2, x3), xy[j], j < n, w2[j],
                           rule, params, grade_scale=grade_scale)
        total += mean * w2[j] * density[j]
    return complex(total)
