"""HTTP facade over synthesis, exact evaluation, path computation and
dataset statistics. Stateless: the model, normalizer and dataset summary
are loaded once at startup and never mutated by requests.

Errors are always {"error": {"code", "message"}}; 400 for malformed
requests, 422 when the geometry or the requested conditions are out of
bounds, 404 for a missing dataset, 503 for a missing model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from linksynth import conditions as cond_mod
from linksynth import dataset as ds
from linksynth.cgan import Generator, load_generator
from linksynth.kinematics import Linkage, grashof_failure, sweep_path, _valid_mask

MAX_CANDIDATES = 1000
HULL_TOLERANCE = 0.2  # fraction of the observed range a target may exceed
_HIST_BINS = 40


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def _round_poly(arr: np.ndarray) -> list:
    return [[round(float(x), 6), round(float(y), 6)] for x, y in arr]


class SynthesisRequest(BaseModel):
    d_t: float
    eta_t: float
    n: int
    seed: int | None = None


@dataclass
class ConditionHull:
    lo: np.ndarray  # observed (d_max, eta_min) minima
    hi: np.ndarray

    @classmethod
    def from_conditions(cls, conditions: np.ndarray) -> "ConditionHull":
        return cls(lo=conditions.min(axis=0), hi=conditions.max(axis=0))

    def classify(self, target: np.ndarray) -> tuple[bool, list[str]]:
        """(reject, warnings): reject when any coordinate exceeds the observed
        range by more than HULL_TOLERANCE of the range width."""
        span = self.hi - self.lo
        reject = bool(
            np.any(target < self.lo - HULL_TOLERANCE * span)
            or np.any(target > self.hi + HULL_TOLERANCE * span)
        )
        warnings = []
        for name, t, lo, hi in zip(("d_t", "eta_t"), target, self.lo, self.hi):
            if t < lo or t > hi:
                warnings.append(
                    f"{name}={t:g} is outside the observed dataset range [{lo:.4g}, {hi:.4g}]"
                )
        return reject, warnings


def create_app(
    generator: Generator | None = None,
    data: ds.Dataset | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="linksynth")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    hull = ConditionHull.from_conditions(data.conditions) if data is not None and len(data) else None

    @app.exception_handler(RequestValidationError)
    async def _malformed(request: Request, exc: RequestValidationError):
        return _error(400, "malformed", str(exc.errors()[:1]))

    @app.post("/api/synthesize")
    def synthesize(req: SynthesisRequest):
        if generator is None:
            return _error(503, "no_model", "no generator checkpoint loaded")
        if req.n < 1 or req.n > MAX_CANDIDATES:
            return _error(400, "malformed", f"n must be in [1, {MAX_CANDIDATES}]")
        target = np.array([req.d_t, req.eta_t], dtype=float)
        if not np.all(np.isfinite(target)) or np.any(target <= 0):
            return _error(400, "malformed", "conditions must be finite and positive")
        warnings: list[str] = []
        if hull is not None:
            reject, warnings = hull.classify(target)
            if reject:
                return _error(
                    422,
                    "out_of_range",
                    "; ".join(warnings)
                    + f" by more than {int(HULL_TOLERANCE * 100)}% of the range",
                )
        seed = req.seed if req.seed is not None else 0
        rows = generator.synthesize_rows(np.tile(target, (req.n, 1)), seed=seed)
        valid = _valid_mask(rows)
        candidates = []
        for i, row in enumerate(rows):
            linkage = Linkage(*row)
            item = {
                "linkage": {"l2": float(row[0]), "l3": float(row[1]), "l4": float(row[2]),
                            "ee_x": float(row[3]), "ee_y": float(row[4])},
                "valid": bool(valid[i]),
                "d_r": None,
                "eta_r": None,
            }
            if valid[i]:
                item.update(_path_payload(linkage, 360))
            candidates.append(item)
        body = {"candidates": candidates}
        if warnings:
            body["warning"] = "; ".join(warnings)
        return body

    @app.get("/api/path")
    def path_endpoint(
        l2: float = Query(...),
        l3: float = Query(...),
        l4: float = Query(...),
        ee_x: float = Query(0.0),
        ee_y: float = Query(0.0),
        steps: int = Query(360, ge=8, le=7200),
    ):
        if min(l2, l3, l4) <= 0:
            return _error(422, "invalid_linkage", "link lengths must be positive")
        linkage = Linkage(l2, l3, l4, ee_x, ee_y)
        failure = grashof_failure(linkage)
        if failure is not None:
            return _error(422, "invalid_linkage", failure)
        return _path_payload(linkage, steps)

    @app.get("/api/dataset/stats")
    def dataset_stats():
        if data is None or len(data) == 0:
            return _error(404, "no_dataset", "no dataset loaded")
        cond = data.conditions
        counts, d_edges, eta_edges = np.histogram2d(
            cond[:, 0], cond[:, 1], bins=_HIST_BINS
        )
        return {
            "n": len(data),
            "d_edges": [float(v) for v in d_edges],
            "eta_edges": [float(v) for v in eta_edges],
            "counts": counts.astype(int).tolist(),
            "marginal_d": counts.sum(axis=1).astype(int).tolist(),
            "marginal_eta": counts.sum(axis=0).astype(int).tolist(),
            "min": {"d_max": float(cond[:, 0].min()), "eta_min": float(cond[:, 1].min())},
            "max": {"d_max": float(cond[:, 0].max()), "eta_min": float(cond[:, 1].max())},
        }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _path_payload(linkage: Linkage, steps: int) -> dict:
    """Exact path, conditions and eta profile for one valid linkage."""
    path = sweep_path(linkage, steps)
    d_max, split = cond_mod.compute_dmax(path.ee)
    profile = cond_mod.compute_eta_profile(path, split=split)
    # eta spikes to inf at an exact cusp sample; cap for JSON finiteness
    # (display only, eta_min is a minimum and never touches the cap)
    eta_capped = np.minimum(profile.eta, 1e9)
    return {
        "d_r": float(d_max),
        "eta_r": float(cond_mod.compute_eta_min(profile)),
        "path": _round_poly(path.ee),
        "b": _round_poly(path.b),
        "c": _round_poly(path.c),
        "eta_profile": [round(float(v), 6) for v in eta_capped],
        "split_indices": [int(split[0]), int(split[1])],
        "n_steps": steps,
    }


def create_app_from_paths(model_path: str, dataset_path: str | None = None,
                          ui_dir: str | None = None) -> FastAPI:
    generator = load_generator(model_path)
    data = ds.load(dataset_path) if dataset_path else None
    return create_app(generator, data, ui_dir=ui_dir)
