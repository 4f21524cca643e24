"""Closed-form and semi-analytic kernels.

Branch convention
-----------------
All square roots of spectral arguments use the branch with the cut along
[0, +inf) and Im sqrt(z) > 0 off the cut.  Lateral boundary values on the
cut are tagged:  sqrt(lambda + i0) = +sqrt(lambda), sqrt(lambda - i0) =
-sqrt(lambda); on the negative axis sqrt(-lambda) = i sqrt(lambda).

Kernels
-------
* ``green_free_3d``      e^{i sqrt(z) r} / (4 pi r), the free outgoing kernel.
* ``kernel_1d_delta``    resolvent kernel of -d^2/dx^2 + alpha delta_0 on R:
                         (i/2s) e^{i s |x-y|} - (i alpha / (2s(alpha-2is)))
                         e^{i s (|x|+|y|)},  s = sqrt(z).
* ``multiplier_m0``      Fourier symbol i / (2 sqrt(z - k^2)) of the flat
                         boundary operator.
* ``multiplier_gamma0_inv``  symbol u/(alpha/2 + u), u = sqrt(k^2 - z) with
                         Re u >= 0 (equals -i sqrt(z - k^2)).
* ``eigenfunction_phi``  generalized eigenfunctions of the flat-plane
                         operator, a 1D delta-line factor tensor a 2D plane
                         wave, normalization (2 pi)^{-3/2} at alpha -> 0.
* ``kernel_r0``          full resolvent kernel of the flat-plane operator:
                         free kernel plus the Hankel-transform correction

                         c(rho, a) = -(alpha / 2 pi) *
                             int_0^inf k J0(k rho) e^{-u(k) a}
                                       / (2 u(k) (alpha + 2 u(k))) dk,

                         u(k) = sqrt(k^2 - z) (Re u >= 0),
                         rho = |p_par - q_par|, a = |p1| + |q1|.

The correction integral is evaluated on three bands: an oscillatory band
[0, k_ref] (for lateral limits, substitution k = sqrt(lambda) sin t removes
the branch singularity), an evanescent band [k_ref, k_cut] via
k = k_ref cosh t, and the tail.  When e^{-u a} decays fast enough the tail
is truncated at the tolerance point; otherwise J0 is split into Hankel
functions H0^(1,2) and the two half-tails are rotated onto vertical contours
k_cut +/- i t where they decay like e^{-t rho} (Gauss-Laguerre).  The
rotation crosses no poles or cuts: u has Re u > 0 on both rays and the
branch points +/- sqrt(z) stay inside |k| < k_cut.

No closed form of c is known to us; the implementation is validated against
the independent eigenfunction-expansion oracle in `validation`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (AccuracyError, BranchPointError, ConfigurationError,
                     DomainError, SingularityError)

COMPLEX_Z = "complex_z"
LIMIT_PLUS = "limit_plus"
LIMIT_MINUS = "limit_minus"


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral parameter: a complex z off [0, inf), or a lateral limit
    lambda +/- i0 with lambda > 0.  Carries the coupling alpha > 0."""

    mode: str
    alpha: float
    z: complex = 0j
    lam: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise DomainError("alpha must be positive (repulsive coupling)")
        if self.mode == COMPLEX_Z:
            z = complex(self.z)
            if z.imag == 0 and z.real >= 0:
                raise DomainError("complex_z spectral point must lie off [0, +inf)")
        elif self.mode in (LIMIT_PLUS, LIMIT_MINUS):
            if not self.lam > 0:
                raise DomainError("lateral limits require lambda > 0")
        else:
            raise ConfigurationError(f"unknown spectral mode {self.mode!r}")

    @classmethod
    def at_z(cls, z, alpha) -> "SpectralPoint":
        return cls(COMPLEX_Z, alpha, z=complex(z))

    @classmethod
    def limit_plus(cls, lam, alpha) -> "SpectralPoint":
        return cls(LIMIT_PLUS, alpha, lam=float(lam))

    @classmethod
    def limit_minus(cls, lam, alpha) -> "SpectralPoint":
        return cls(LIMIT_MINUS, alpha, lam=float(lam))

    @property
    def is_limit(self) -> bool:
        return self.mode in (LIMIT_PLUS, LIMIT_MINUS)

    @property
    def is_lower(self) -> bool:
        """True when the point lies below the cut (conjugate of an upper point)."""
        return self.mode == LIMIT_MINUS or (self.mode == COMPLEX_Z and complex(self.z).imag < 0)

    def conjugate(self) -> "SpectralPoint":
        if self.mode == COMPLEX_Z:
            return SpectralPoint.at_z(np.conj(complex(self.z)), self.alpha)
        if self.mode == LIMIT_PLUS:
            return SpectralPoint.limit_minus(self.lam, self.alpha)
        return SpectralPoint.limit_plus(self.lam, self.alpha)

    def sqrt_z(self) -> complex:
        """Branch square root of the spectral parameter itself."""
        if self.mode == LIMIT_PLUS:
            return complex(np.sqrt(self.lam))
        if self.mode == LIMIT_MINUS:
            return complex(-np.sqrt(self.lam))
        return branch_sqrt(self.z)

    def sqrt_shifted(self, k2):
        """branch_sqrt(z - k2) resolving lateral limits, vectorized over k2 >= 0.

        At a lateral limit the point z - k2 leaves the cut for k2 > lambda,
        where both limits give i sqrt(k2 - lambda); on k2 < lambda the limit
        tag decides the sign of the real part.
        """
        k2 = np.asarray(k2, dtype=float)
        if self.mode == COMPLEX_Z:
            return _branch_sqrt_array(complex(self.z) - k2)
        diff = self.lam - k2
        if np.any(diff == 0.0):
            raise BranchPointError("k^2 = lambda is a branch point of the lateral limit")
        out = np.where(
            diff > 0,
            np.sqrt(np.abs(diff)) * (1.0 if self.mode == LIMIT_PLUS else -1.0),
            1j * np.sqrt(np.abs(-diff)),
        )
        return _scalar_or_array(out)

    def u_shifted(self, k2):
        """sqrt(k2 - z) on the Re >= 0 branch (= -i * sqrt_shifted)."""
        return -1j * self.sqrt_shifted(k2)



def _scalar_or_array(out):
    out = np.asarray(out)
    return complex(out) if out.ndim == 0 else out

def _branch_sqrt_array(z):
    z = np.asarray(z, dtype=complex)
    return _scalar_or_array(1j * np.sqrt(-z))


def branch_sqrt(z) -> complex:
    """sqrt with cut along [0, +inf) and Im sqrt > 0; accepts a SpectralPoint
    (lateral tags resolved) or complex values off the cut."""
    if isinstance(z, SpectralPoint):
        return z.sqrt_z()
    arr = np.asarray(z, dtype=complex)
    on_cut = (arr.imag == 0) & (arr.real >= 0)
    if np.any(on_cut):
        raise DomainError("untagged nonnegative real argument; use a lateral-limit tag")
    return _branch_sqrt_array(arr)


def _as_point(z_or_point, alpha=None) -> SpectralPoint:
    if isinstance(z_or_point, SpectralPoint):
        return z_or_point
    if alpha is None:
        raise ConfigurationError("alpha required when passing a bare complex z")
    return SpectralPoint.at_z(z_or_point, alpha)


def green_free_3d(point: SpectralPoint, r):
    """Free outgoing kernel e^{i sqrt(z) r} / (4 pi r), r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SingularityError("green_free_3d requires r > 0; use the diagonal rule")
    s = point.sqrt_z() if isinstance(point, SpectralPoint) else branch_sqrt(point)
    out = np.exp(1j * s * r) / (4.0 * np.pi * r)
    return _scalar_or_array(out)


def kernel_1d_delta(point: SpectralPoint, x, y):
    """1D delta-interaction resolvent kernel; symmetric in (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = point.sqrt_z()
    alpha = point.alpha
    out = (1j / (2 * s)) * np.exp(1j * s * np.abs(x - y)) \
        - (1j * alpha / (2 * s * (alpha - 2j * s))) * np.exp(1j * s * (np.abs(x) + np.abs(y)))
    return _scalar_or_array(out)


def kernel_1d_delta_deriv(point: SpectralPoint, x, y):
    """d/dx of kernel_1d_delta; undefined at x = y and at x = 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x == y) or np.any(x == 0):
        raise DomainError("derivative kernel undefined at x = y or x = 0")
    s = point.sqrt_z()
    alpha = point.alpha
    out = -0.5 * (
        np.sign(x - y) * np.exp(1j * s * np.abs(x - y))
        - (alpha * np.sign(x) / (alpha - 2j * s)) * np.exp(1j * s * (np.abs(x) + np.abs(y)))
    )
    return _scalar_or_array(out)


def multiplier_m0(point: SpectralPoint, k):
    """Symbol i / (2 sqrt(z - k^2)) of the flat boundary operator M_0(z)."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise DomainError("transverse frequency k must be >= 0")
    return _scalar_or_array(1j / (2.0 * np.asarray(point.sqrt_shifted(k * k))))


def multiplier_gamma0_inv(point: SpectralPoint, k):
    """Symbol u / (alpha/2 + u) of Gamma_0^{-1}(z), u = sqrt(k^2 - z)."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise DomainError("transverse frequency k must be >= 0")
    u = np.asarray(point.u_shifted(k * k))
    return _scalar_or_array(u / (point.alpha / 2.0 + u))


def eigenfunction_phi_transverse(k1, alpha, x1):
    """Transverse factor e^{i k1 x} / sqrt(2 pi) - (i alpha/(2|k1|+i alpha))
    e^{i |k1| |x|} / sqrt(2 pi)."""
    k1 = np.asarray(k1, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    c = 1j * alpha / (2.0 * np.abs(k1) + 1j * alpha)
    out = (np.exp(1j * k1 * x1) - c * np.exp(1j * np.abs(k1) * np.abs(x1))) / np.sqrt(2 * np.pi)
    return _scalar_or_array(out)


def eigenfunction_phi(k, alpha, x):
    """Generalized eigenfunction phi_k(x) of the flat-plane operator.

    k, x are 3-vectors (or (..., 3) arrays); the first component is the
    transverse direction.  Tends to e^{i k.x} / (2 pi)^{3/2} as alpha -> 0.
    """
    k = np.asarray(k, dtype=float)
    x = np.asarray(x, dtype=float)
    trans = np.asarray(eigenfunction_phi_transverse(k[..., 0], alpha, x[..., 0]))
    plane = np.exp(1j * (k[..., 1] * x[..., 1] + k[..., 2] * x[..., 2])) / (2 * np.pi)
    return _scalar_or_array(trans * plane)


# ---------------------------------------------------------------------------
# Hankel-transform correction kernel c(rho, a)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HankelCorrectionParams:
    n_inner: int = 48       # nodes on the oscillatory band
    n_outer: int = 192      # nodes on the evanescent band (composite Gauss)
    tail_cutoff: float = 10.0   # dimensionless rho*k handover to the rotated tail
    tolerance: float = 1e-10    # tail truncation threshold

    def __post_init__(self):
        if self.n_inner <= 0 or self.n_outer <= 0:
            raise ConfigurationError("quadrature sizes must be positive")
        if not (1e-12 < self.tolerance < 1e-2):
            raise ConfigurationError("tolerance must lie in (1e-12, 1e-2)")
        if self.tail_cutoff <= 0:
            raise ConfigurationError("tail_cutoff must be positive")

    @property
    def n_tail(self) -> int:
        return max(32, self.n_outer // 4)


DEFAULT_HANKEL = HankelCorrectionParams()

_N_EVAN_PANELS = 12


def _low_band_rule(z, k_ref, n_inner):
    """Composite Gauss rule on [0, k_ref] for generic complex z.

    For Re z > 0 the factor 1/u peaks near k = sqrt(Re z) with width
    ~ Im z; panel edges are graded geometrically into that layer.
    """
    edges = {0.0, k_ref}
    if z.real > 0:
        sl = np.sqrt(z.real)
        layer = max(abs(z.imag) / (4.0 * max(sl, 1e-6)), 1e-8)
        w = 0.5 * max(sl, 1.0)
        while w > layer:
            for e in (sl - w, sl + w):
                if 1e-12 < e < k_ref:
                    edges.add(e)
            w /= 2.0
        if 0.0 < sl < k_ref:
            edges.add(sl)
    edges = np.array(sorted(edges))
    m = max(8, n_inner // 3)
    xg, wg = np.polynomial.legendre.leggauss(m)
    nodes, weights = [], []
    for a_, b_ in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b_ - a_) * xg + 0.5 * (b_ + a_))
        weights.append(0.5 * (b_ - a_) * wg)
    return np.concatenate(nodes), np.concatenate(weights)


def _u_on_ray(k, z):
    """sqrt(k^2 - z) continued from the real axis along vertical rays.

    numpy's principal sqrt (cut on (-inf, 0]) agrees with the Re > 0 branch
    on both rays used by the rotated tails; guard the sign for safety.
    """
    u = np.sqrt(k * k - z)
    return np.where(u.real < 0, -u, u)


def correction_many(point: SpectralPoint, rho, a,
                    params: HankelCorrectionParams = DEFAULT_HANKEL):
    """c(rho, a) vectorized over pair arrays; rho = 0 allowed only with a > 0."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if rho.shape != a.shape:
        raise DomainError("rho and a must have matching shapes")
    if np.any(rho < 0) or np.any(a < 0):
        raise DomainError("rho and a must be nonnegative")
    if np.any((rho == 0) & (a == 0)):
        raise SingularityError("correction kernel is singular at rho = a = 0")
    if point.is_lower:
        return np.conj(correction_many(point.conjugate(), rho, a, params))

    alpha = point.alpha
    m = rho.size
    total = np.zeros(m, dtype=complex)
    limit = point.mode == LIMIT_PLUS
    if limit:
        lam = point.lam
        sl = np.sqrt(lam)
        k_ref = sl
    else:
        z = complex(point.z)
        k_ref = 2.0 * (1.0 + abs(z) ** 0.5)

    # band 1: oscillatory / low band
    if limit:
        xg, wg = np.polynomial.legendre.leggauss(params.n_inner)
        t = (xg + 1.0) * (np.pi / 4.0)
        wt = wg * (np.pi / 4.0)
        st, ct = np.sin(t), np.cos(t)
        f = (sl / 2.0) * 1j * st[:, None] * special.j0(sl * st[:, None] * rho[None, :]) \
            * np.exp(1j * sl * ct[:, None] * a[None, :]) / (alpha - 2j * sl * ct[:, None])
        total += wt @ f
    else:
        # composite panels; graded around sqrt(Re z) where u = sqrt(k^2 - z)
        # nearly vanishes when Im z is small
        k, wk = _low_band_rule(z, k_ref, params.n_inner)
        u = _u_on_ray(k.astype(complex), z)
        g = k / (2.0 * u * (alpha + 2.0 * u))
        f = (g[:, None] * special.j0(k[:, None] * rho[None, :])
             * np.exp(-u[:, None] * a[None, :]))
        total += wk @ f

    # per-pair handover points
    with np.errstate(divide="ignore", over="ignore"):
        k_rot = np.where(rho > 0, np.maximum(2.0 * k_ref, params.tail_cutoff / np.where(rho > 0, rho, 1.0)), np.inf)
        k_trunc = np.where(a > 0, 2.0 * k_ref + np.log(1.0 / params.tolerance) / np.where(a > 0, a, 1.0), np.inf)
    k_cut = np.minimum(k_rot, k_trunc)
    need_tail = k_rot < k_trunc

    # band 2: evanescent band [k_ref, k_cut], k = k_ref cosh t
    t_c = np.arccosh(k_cut / k_ref)
    n_per = max(4, params.n_outer // _N_EVAN_PANELS)
    xg, wg = np.polynomial.legendre.leggauss(n_per)
    edges = np.linspace(0.0, 1.0, _N_EVAN_PANELS + 1)
    for pa, pb in zip(edges[:-1], edges[1:]):
        # nodes in scaled variable t = t_c * s, shared GL layout per pair
        s = 0.5 * (pb - pa) * xg + 0.5 * (pb + pa)
        ws = 0.5 * (pb - pa) * wg
        t = t_c[None, :] * s[:, None]
        wt = t_c[None, :] * ws[:, None]
        k = k_ref * np.cosh(t)
        j0 = special.j0(k * rho[None, :])
        if limit:
            sh = np.sinh(t)
            f = (sl / 2.0) * np.cosh(t) * j0 * np.exp(-sl * a[None, :] * sh) / (alpha + 2.0 * sl * sh)
        else:
            u = _u_on_ray(k.astype(complex), z)
            f = k * j0 * np.exp(-u * a[None, :]) / (2.0 * u * (alpha + 2.0 * u)) * k_ref * np.sinh(t)
        total += np.sum(wt * f, axis=0)

    # band 3: rotated Hankel tails where truncation is not allowed
    if np.any(need_tail):
        idx = np.nonzero(need_tail)[0]
        zz = lam if limit else z
        tau, lw = special.roots_laguerre(params.n_tail)
        kc = k_cut[idx]
        rr = rho[idx]
        aa = a[idx]
        k1 = kc[None, :] + 1j * tau[:, None] / rr[None, :]
        u1 = _u_on_ray(k1, zz)
        g1 = lw[:, None] * k1 * special.hankel1e(0, k1 * rr[None, :]) \
            * np.exp(-u1 * aa[None, :]) / (2.0 * u1 * (alpha + 2.0 * u1))
        t1 = (1j / (2.0 * rr)) * np.exp(1j * kc * rr) * np.sum(g1, axis=0)
        k2 = kc[None, :] - 1j * tau[:, None] / rr[None, :]
        u2 = _u_on_ray(k2, zz)
        g2 = lw[:, None] * k2 * special.hankel2e(0, k2 * rr[None, :]) \
            * np.exp(-u2 * aa[None, :]) / (2.0 * u2 * (alpha + 2.0 * u2))
        t2 = (-1j / (2.0 * rr)) * np.exp(-1j * kc * rr) * np.sum(g2, axis=0)
        tail = t1 + t2
        # convergence diagnostic: trailing Laguerre nodes must be negligible
        n_last = max(4, params.n_tail // 6)
        rem = (np.abs(np.sum(g1[-n_last:], axis=0)) + np.abs(np.sum(g2[-n_last:], axis=0))) / (2.0 * rr)
        scale = np.maximum(np.abs(total[idx] + tail), 1.0)
        bad = rem > 1e4 * params.tolerance * scale
        if np.any(bad):
            j = idx[np.argmax(rem)]
            raise AccuracyError(
                "rotated Hankel tail did not converge",
                diagnostics={"rho": float(rho[j]), "a": float(a[j]), "remainder": float(np.max(rem))},
            )
        total[idx] += tail

    return -(alpha / (2.0 * np.pi)) * total


def kernel_r0(point: SpectralPoint, p, q,
              params: HankelCorrectionParams = DEFAULT_HANKEL) -> complex:
    """Resolvent kernel r0(z; p, q) of the flat-plane operator at 3-points
    p != q: free kernel plus the correction c(rho, a)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = p - q
    r = float(np.linalg.norm(d))
    if r == 0.0:
        raise SingularityError("kernel_r0 is singular on the diagonal p = q")
    rho = float(np.hypot(d[1], d[2]))
    a = abs(float(p[0])) + abs(float(q[0]))
    c = correction_many(point, [rho], [a], params)[0]
    return complex(green_free_3d(point, r) + c)
