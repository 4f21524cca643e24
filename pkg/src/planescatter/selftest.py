"""Built-in verification panel: fast end-to-end checks of the core identities.

Run via the CLI (`planescatter selftest`) or the service.  The sign-flip
variant deliberately assembles the scattering matrix with the wrong sign in
front of the correction term and checks that the unitarity defect explodes,
confirming the suite detects that class of error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import (SpectralPoint, branch_sqrt, multiplier_gamma0_inv,
                      multiplier_m0)
from .operators import compute_smatrix
from .profile import DeformationProfile
from .validation import (STANDARD_PAIR_PANEL, KernelOracleReport,
                         kernel_oracle, l_difference_check)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_off_axis(rng, n):
    z = rng.uniform(-3, 3, n) + 1j * rng.uniform(-3, 3, n)
    bad = (np.abs(z.imag) < 1e-3) & (z.real >= -1e-3)
    z[bad] += 0.5j
    return z


def run_selftest(fast=True, diagnostic_sign_flip=False, rng_seed=20240501):
    """Returns (passed, [CheckResult], kernel_csv)."""
    rng = np.random.default_rng(rng_seed)
    checks = []

    # branch consistency
    z = _random_off_axis(rng, 10000)
    s = np.array([branch_sqrt(v) for v in z[:500]])
    err = np.max(np.abs(s * s - z[:500]))
    im_ok = np.all(s.imag > 0)
    checks.append(CheckResult("branch_sqrt", bool(err < 1e-13 and im_ok),
                              f"max |sqrt(z)^2 - z| = {err:.2e}"))

    # multiplier inverse identity
    alpha = 2.0
    ks = rng.uniform(0, 4, 10000)
    zs = _random_off_axis(rng, 10000)
    res = np.array([
        (1 + alpha * multiplier_m0(SpectralPoint.at_z(zz, alpha), kk))
        * multiplier_gamma0_inv(SpectralPoint.at_z(zz, alpha), kk) - 1.0
        for zz, kk in zip(zs[:2000], ks[:2000])
    ])
    err = np.max(np.abs(res))
    checks.append(CheckResult("multiplier_inverse", bool(err < 1e-14),
                              f"max |(1+a m0) g0inv - 1| = {err:.2e}"))

    # first resolvent identity at symbol level
    zw = _random_off_axis(rng, 4000).reshape(2, -1)
    kk = rng.uniform(0, 4, zw.shape[1])
    sz = np.array([branch_sqrt(v - k * k) for v, k in zip(zw[0], kk)])
    sw = np.array([branch_sqrt(v - k * k) for v, k in zip(zw[1], kk)])
    lhs = 1j / (2 * sz) - 1j / (2 * sw)
    rhs = (zw[0] - zw[1]) * (-1j) / (2 * sz * sw * (sz + sw))
    err = np.max(np.abs(lhs - rhs))
    checks.append(CheckResult("first_resolvent_symbol", bool(err < 1e-12),
                              f"max residual = {err:.2e}"))

    # flat identity
    flat = DeformationProfile("bump", height=0.0, radius=1.0)
    s_flat, sphere, _ = compute_smatrix(flat, 1.0, 2.0, 8, (8, 16))
    err = float(np.max(np.abs(s_flat.matrix - np.eye(sphere.m))))
    checks.append(CheckResult("flat_identity", bool(err < 1e-10),
                              f"max |S - 1| = {err:.2e}"))

    # kernel oracle panel
    pairs = STANDARD_PAIR_PANEL[:4] if fast else STANDARD_PAIR_PANEL
    rep_neg = kernel_oracle(SpectralPoint.at_z(-1.0, 2.0), pairs=pairs)
    checks.append(CheckResult("kernel_oracle_z_negative",
                              bool(rep_neg.max_rel_err < 1e-3),
                              f"max rel err = {rep_neg.max_rel_err:.2e}"))
    pairs_lim = STANDARD_PAIR_PANEL[:2] if fast else STANDARD_PAIR_PANEL
    rep_lim = kernel_oracle(SpectralPoint.limit_plus(1.0, 2.0), pairs=pairs_lim)
    checks.append(CheckResult("kernel_oracle_limit_plus",
                              bool(rep_lim.max_rel_err < 5e-3),
                              f"max rel err = {rep_lim.max_rel_err:.2e}"))

    # far-field difference bounds
    bump = DeformationProfile("bump", height=0.2, radius=1.0)
    ld = l_difference_check(bump, 1.0, 2.0, n_sigma=10, sphere_dims=(10, 20))
    checks.append(CheckResult("l_difference_bounds", ld.holds,
                              f"lhs={ld.lhs_sq:.3e} rhs_sinc={ld.rhs_sinc:.3e} "
                              f"rhs_l1={ld.rhs_l1:.3e}"))

    # sensitivity: wrong sign must wreck unitarity
    if diagnostic_sign_flip:
        s_good, _, _ = compute_smatrix(bump, 1.0, 2.0, 10, (10, 20))
        s_bad, _, _ = compute_smatrix(bump, 1.0, 2.0, 10, (10, 20), sign_flip=True)
        ratio = s_bad.unitarity_defect / max(s_good.unitarity_defect, 1e-300)
        checks.append(CheckResult(
            "sign_flip_sensitivity", bool(ratio > 5.0),
            f"defect wrong/correct = {s_bad.unitarity_defect:.3e}/"
            f"{s_good.unitarity_defect:.3e} = {ratio:.1f}x"))

    passed = all(c.passed for c in checks)
    return passed, checks, rep_neg.to_csv()


def format_report(checks) -> str:
    width = max(len(c.name) for c in checks)
    lines = []
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        lines.append(f"{c.name:<{width}}  {status}  {c.detail}")
    return "\n".join(lines)
