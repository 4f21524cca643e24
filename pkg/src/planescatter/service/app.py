"""FastAPI service wrapping the scattering computations.

Every endpoint is a pure function of its request body; matrices travel as
split re/im lists.  Package errors map onto structured JSON bodies carrying
the CLI exit-code contract (1 config / 2 accuracy / 3 near-singular /
4 degenerate study).
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import (Lap1dRequest, ResolventDiffRequest, ScalingRequest,
                      SelftestRequest, SmatrixRequest)
from ..errors import PlanescatterError
from ..kernels import SpectralPoint
from ..lap1d import lap_sweep
from ..operators import apply_resolvent_difference, compute_smatrix
from ..quad import build_surface_grid
from ..selftest import run_selftest
from ..validation import scaling_study
from .schemas import (ComplexMatrixOut, HealthResponse, Lap1dResponse,
                      ResolventDiffResponse, ScalingResponse, ScalingRow,
                      SelftestCheck, SelftestResponse, SmatrixMeta,
                      SmatrixResponse, SphereGridOut)

_STATUS = {"configuration": 400, "domain": 400, "branch-point": 400,
           "singularity": 400, "accuracy": 422, "near-singular": 422,
           "degenerate-study": 422}


def create_app() -> FastAPI:
    app = FastAPI(title="planescatter", version=__version__,
                  description="Scattering matrix and boundary operators for a "
                              "delta interaction on a deformed plane")

    @app.exception_handler(PlanescatterError)
    async def _package_error(request: Request, exc: PlanescatterError):
        return JSONResponse(
            status_code=_STATUS.get(exc.code, 500),
            content={"error": {"code": exc.code, "message": str(exc),
                               "exit_code": exc.exit_code}})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "configuration", "message": str(exc),
                               "exit_code": 1}})

    @app.get("/v1/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", package="planescatter", version=__version__)

    @app.post("/v1/smatrix", response_model=SmatrixResponse)
    def smatrix(req: SmatrixRequest):
        profile = req.profile.build()
        s_op, sphere, grid = compute_smatrix(
            profile, req.physics.lam, req.physics.alpha,
            n_sigma=req.grids.sigma_n,
            sphere_dims=(req.grids.sphere_polar, req.grids.sphere_azimuth),
            params=req.grids.hankel.build(),
            sign_flip=req.diagnostic_sign_flip)
        meta = SmatrixMeta(lam=req.physics.lam, alpha=req.physics.alpha,
                           n_sigma=req.grids.sigma_n,
                           sphere=(req.grids.sphere_polar, req.grids.sphere_azimuth),
                           unitarity_defect=s_op.unitarity_defect,
                           condition_estimate=s_op.condition_estimate,
                           diagnostic_sign_flip=req.diagnostic_sign_flip)
        return SmatrixResponse(
            s=ComplexMatrixOut.from_array(s_op.matrix),
            sphere=SphereGridOut(directions=[tuple(d) for d in sphere.directions],
                                 weights=sphere.weights.tolist(),
                                 n_polar=sphere.n_polar, n_azimuth=sphere.n_azimuth),
            surface_nodes=[tuple(x) for x in grid.nodes],
            surface_weights=grid.weights.tolist(),
            meta=meta)

    @app.post("/v1/scaling", response_model=ScalingResponse)
    def scaling(req: ScalingRequest):
        profile = req.profile.build()
        study = scaling_study(profile, req.study.t_list, req.physics.lam,
                              req.physics.alpha, req.study.gamma,
                              n_sigma=req.grids.sigma_n,
                              sphere_dims=(req.grids.sphere_polar,
                                           req.grids.sphere_azimuth),
                              params=req.grids.hankel.build())
        rows = [ScalingRow(**r) for r in study.records]
        return ScalingResponse(rows=rows,
                               slope=None if study.degenerate else study.slope,
                               degenerate=study.degenerate, gamma=study.gamma,
                               lam=study.lam, alpha=study.alpha)

    @app.post("/v1/lap1d", response_model=Lap1dResponse)
    def lap1d(req: Lap1dRequest):
        sweep = lap_sweep(req.lap.lambda_list, req.lap.eps_list, req.alpha,
                          req.lap.theta, req.lap.s1)
        return Lap1dResponse(lambdas=sweep.lambdas, eps_list=sweep.eps_list,
                             ratios=sweep.ratios.tolist(),
                             max_ratio=sweep.max_ratio, bounded=sweep.bounded(),
                             theta=sweep.theta, s1=sweep.s1, alpha=sweep.alpha)

    @app.post("/v1/resolvent-diff", response_model=ResolventDiffResponse)
    def resolvent_diff(req: ResolventDiffRequest):
        profile = req.profile.build()
        z = complex(*req.physics.z)
        spectral = SpectralPoint.at_z(z, req.physics.alpha)
        grid = build_surface_grid(profile.support, req.grids.sigma_n, profile)
        center = np.asarray(req.source.center)
        sig = req.source.sigma

        def source(y):
            y = np.asarray(y, dtype=float)
            return np.exp(-np.sum((y - center) ** 2, axis=-1) / (2 * sig**2))

        box = tuple((c - req.source.box_halfwidth, c + req.source.box_halfwidth)
                    for c in center)
        vals = apply_resolvent_difference(
            source, profile, grid, spectral, req.eval_points,
            volume_box=box, n_volume=req.n_volume,
            params=req.grids.hankel.build())
        return ResolventDiffResponse(points=req.eval_points,
                                     re=vals.real.tolist(), im=vals.imag.tolist())

    @app.post("/v1/selftest", response_model=SelftestResponse)
    def selftest(req: SelftestRequest):
        passed, checks, kernel_csv = run_selftest(
            fast=req.fast, diagnostic_sign_flip=req.diagnostic_sign_flip)
        return SelftestResponse(
            passed=passed,
            checks=[SelftestCheck(name=c.name, passed=c.passed, detail=c.detail)
                    for c in checks],
            kernel_csv=kernel_csv)

    return app


app = create_app()
