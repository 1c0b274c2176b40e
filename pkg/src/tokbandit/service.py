"""HTTP facade over the library: typed request models, JSON responses.

The CLI talks to this app in-process by default (no socket), so every
simulation, reduction, and validation flows through one request surface.
Request validation failures surface as 422, operation failures as 500 with
the exception text; success responses are plain JSON documents.
"""

from __future__ import annotations

import json
import math
import os
from importlib.metadata import PackageNotFoundError, version

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .bts import BtsInstance, bts_to_tmab, gen_bts, smoothness_profile, tmab_to_bts
from .ddmc import analyze, gen_dump, ingest, write_dump, write_stats_csv, write_summary_json
from .harness import RunConfig, make_env, run_experiment
from .linear_env import check_assumptions, gen_affine_ddmc_env


def _jsonable(obj):
    """Recursively replace NaN/inf with None so responses stay strict JSON."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


class EnvParams(BaseModel):
    """Environment shape shared by the non-simulation endpoints."""

    family: str = "affine"
    n: int = 4
    L: int = 4
    d: int = 8
    sigma: float = 0.0
    eps: float = 0.0
    gamma: float = 0.8
    k: int = 1
    seed: int = 0
    query_pool: int = 1000


class CheckRequest(BaseModel):
    env: EnvParams = Field(default_factory=EnvParams)
    mode: str = "exhaustive"
    tol: float = 1e-9
    variant: str | None = None
    query: int = 0


class BtsReduceRequest(BaseModel):
    direction: str  # "bts_to_tmab" | "tmab_to_bts"
    tree: dict | None = None  # inline {arity, depth, leaves|leaf_map}
    arity: int = 2
    depth: int = 2
    seed: int = 0
    env: EnvParams | None = None
    cap: int = 10**6
    out: str | None = None


class GenDumpRequest(BaseModel):
    env: EnvParams = Field(default_factory=EnvParams)
    pairs: int = 50
    seed: int = 0
    diverge_at: int = 2
    w_zero: bool = True
    out: str


class ValidateDdmcRequest(BaseModel):
    path: str
    metric: str = "l2"
    p: float = 2.0
    signed: bool = False
    theta: list[float] | None = None
    dump_id: str | None = None
    out_csv: str | None = None
    out_json: str | None = None


def _run(op):
    try:
        return op()
    except (ValueError, FileNotFoundError, OSError) as exc:
        raise HTTPException(status_code=500, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="tokbandit")

    @app.get("/health")
    def health():
        try:
            v = version("tokbandit")
        except PackageNotFoundError:
            v = "unknown"
        return {"status": "ok", "version": v}

    @app.post("/simulate")
    def simulate(cfg: RunConfig):
        return _jsonable(_run(lambda: run_experiment(cfg)))

    @app.post("/assumptions/check")
    def assumptions(req: CheckRequest):
        def op():
            env = make_env(req.env, req.env.seed)
            report = check_assumptions(env, mode=req.mode, tol=req.tol,
                                       query=req.query, variant=req.variant)
            return report.to_dict()

        return _jsonable(_run(op))

    @app.post("/bts/reduce")
    def bts_reduce(req: BtsReduceRequest):
        def op():
            if req.direction == "bts_to_tmab":
                if req.tree is not None:
                    tree = BtsInstance.from_json(json.dumps(req.tree))
                else:
                    tree = gen_bts(req.arity, req.depth, req.seed)
                env = bts_to_tmab(tree)
                profile = smoothness_profile(tree)
                out = {
                    "direction": req.direction,
                    "n": env.vocab.n,
                    "L": env.L,
                    "family": env.family,
                    "leaf_count": len(tree.leaf_values),
                    "opt_value": tree.max_value(),
                    "smoothness_delta": profile.delta,
                }
            elif req.direction == "tmab_to_bts":
                if req.env is None:
                    raise ValueError("tmab_to_bts needs env parameters")
                env = make_env(req.env, req.env.seed)
                tree = tmab_to_bts(env, cap=req.cap)
                out = {
                    "direction": req.direction,
                    "tree": json.loads(tree.to_json()),
                    "max_leaf_value": tree.max_value(),
                }
            else:
                raise ValueError(f"unknown direction {req.direction!r}")
            if req.out:
                payload = out.get("tree") if req.direction == "tmab_to_bts" else out
                with open(req.out, "w") as fh:
                    json.dump(payload, fh, indent=2)
                    fh.write("\n")
                out["out"] = req.out
            return out

        return _jsonable(_run(op))

    @app.post("/dump/generate")
    def dump_generate(req: GenDumpRequest):
        def op():
            p = req.env
            if req.w_zero:
                if p.family != "affine":
                    raise ValueError("w_zero dumps are defined for the affine family")
                env = gen_affine_ddmc_env(p.n, p.L, p.d, p.sigma, p.eps, p.seed,
                                          query_pool=p.query_pool, w_frac=(0.0, 0.0))
            else:
                env = make_env(p, p.seed)
            records = gen_dump(env, req.pairs, req.seed, diverge_at=req.diverge_at)
            os.makedirs(os.path.dirname(req.out) or ".", exist_ok=True)
            write_dump(records, req.out)
            return {"out": req.out, "pairs": req.pairs, "records": len(records)}

        return _jsonable(_run(op))

    @app.post("/ddmc/validate")
    def ddmc_validate(req: ValidateDdmcRequest):
        def op():
            out = analyze(ingest(req.path), req.metric, theta=req.theta, p=req.p,
                          signed=req.signed)
            dump_id = req.dump_id or os.path.basename(req.path)
            for target in (req.out_csv, req.out_json):
                if target:
                    os.makedirs(os.path.dirname(target) or ".", exist_ok=True)
            if req.out_csv:
                write_stats_csv(out.pooled, req.out_csv, dump_id)
            if req.out_json:
                write_summary_json(out, req.out_json, dump_id)
            return out.to_summary(dump_id)

        return _jsonable(_run(op))

    return app


app = create_app()
