"""Experiment orchestration: configs, seeded cells, baselines, diagnostics.

A run fans out over (algo, seed) cells. Every cell owns its environment,
decoder state, and rng, writes one CSV trace, and reports a summary; the
merged summary JSON is written in a final single-threaded pass. Cells sharing
a seed share the query and noise streams, so algorithms that make identical
choices produce bit-identical traces.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, Field, field_validator

from .core import canonicalize, equalize_lengths, rng_from
from .decoding import (
    GreedyOracleDecoder,
    MisalignedGreedyDecoder,
    RandomDecoder,
    WrongThetaDecoder,
    brute_force_opt,
    gen_mix_env,
)
from .eoful import EofulDecoder
from .linear_env import (
    gen_affine_ddmc_env,
    gen_k_ddmc_env,
    gen_needle_env,
)
from .lookahead import KLookaheadEtcDecoder, LookaheadDecoder
from .tmab import GreedyEtcDecoder, gen_table_env

CSV_COLUMNS = [
    "t", "algo", "seed", "reward", "opt_value", "inst_regret", "cum_regret",
    "seq_len", "ratio_max", "ratio_mean", "beta", "flags",
]

ALGO_NAMES = (
    "eoful", "greedy_etc", "k_lookahead_eoful", "k_lookahead_etc",
    "wrong_theta", "misaligned_greedy", "random", "oracle_greedy",
)

FAMILY_NAMES = ("affine", "k_block", "needle", "table", "mix")


class RunConfig(BaseModel):
    """Flat experiment description; one file drives one run_experiment call."""

    algos: list[str] = Field(min_length=1)
    family: str = "affine"
    n: int = 4
    L: int = 4
    d: int = 8
    sigma: float = 0.0
    eps: float = 0.0
    gamma: float = 0.8
    k: int = 1
    T: int = Field(ge=1)
    N: int | None = None
    delta: float | None = None
    lam: float = Field(default=1.0, alias="lambda")
    topk: int | None = None
    seeds: list[int] = Field(min_length=1)
    out_path: str = "out"
    threads: int = 1
    query_pool: int = 1000
    bound_scale: float = 0.1
    bound_c: float = 1.0
    beta_schedule: str = "horizon"

    model_config = {"populate_by_name": True, "extra": "forbid"}

    @field_validator("algos")
    @classmethod
    def _known_algos(cls, v):
        for a in v:
            if a not in ALGO_NAMES:
                raise ValueError(f"unknown algo {a!r}; expected one of {ALGO_NAMES}")
        return v

    @field_validator("family")
    @classmethod
    def _known_family(cls, v):
        if v not in FAMILY_NAMES:
            raise ValueError(f"unknown family {v!r}; expected one of {FAMILY_NAMES}")
        return v


def make_env(cfg: RunConfig, seed: int):
    if cfg.family == "affine":
        return gen_affine_ddmc_env(cfg.n, cfg.L, cfg.d, cfg.sigma, cfg.eps, seed,
                                   query_pool=cfg.query_pool)
    if cfg.family == "k_block":
        return gen_k_ddmc_env(cfg.n, cfg.L, cfg.d, cfg.k, cfg.sigma, seed,
                              eps=cfg.eps, query_pool=cfg.query_pool)
    if cfg.family == "needle":
        return gen_needle_env(cfg.L, cfg.d, seed, eps=cfg.eps, sigma=cfg.sigma,
                              query_pool=cfg.query_pool)
    if cfg.family == "table":
        return gen_table_env(cfg.n, cfg.L, cfg.sigma, seed, d=cfg.d)
    if cfg.family == "mix":
        return gen_mix_env(cfg.n, cfg.L, cfg.d, cfg.sigma, cfg.gamma, seed,
                           eps=cfg.eps, query_pool=cfg.query_pool)
    raise ValueError(f"unknown family {cfg.family!r}")


def make_decoder(algo: str, env, cfg: RunConfig, seed: int):
    if algo == "eoful":
        return EofulDecoder(env, cfg.T, lam=cfg.lam, delta=cfg.delta,
                            beta_schedule=cfg.beta_schedule, top_k=cfg.topk)
    if algo == "greedy_etc":
        return GreedyEtcDecoder(env, cfg.T, pulls=cfg.N)
    if algo == "k_lookahead_eoful":
        return LookaheadDecoder(env, cfg.T, cfg.k, lam=cfg.lam, delta=cfg.delta,
                                beta_schedule=cfg.beta_schedule)
    if algo == "k_lookahead_etc":
        return KLookaheadEtcDecoder(env, cfg.T, cfg.k, pulls=cfg.N)
    if algo == "wrong_theta":
        return WrongThetaDecoder(env, cfg.T)
    if algo == "misaligned_greedy":
        return MisalignedGreedyDecoder(env, cfg.T)
    if algo == "random":
        return RandomDecoder(env, cfg.T, seed)
    if algo == "oracle_greedy":
        return GreedyOracleDecoder(env, cfg.T)
    raise ValueError(f"unknown algo {algo!r}")


@dataclass
class RunTrace:
    """One cell's per-round rows (CSV column order) plus its summary."""

    algo: str
    seed: int
    rows: list[dict]
    summary: dict
    seqs: list = field(default_factory=list)


def prefix_ratios(model, env, query: int, y) -> np.ndarray:
    """Sigma_t-norm of each proper-prefix embedding over the full sequence's.

    The full sequence and its eos-padded extensions have ratio exactly 1, so
    only strict prefixes carry information; an all-prefix norm of zero yields
    ratio 0 by convention.
    """
    e_full = env.embed(query, y)
    denom = math.sqrt(max(float(e_full @ model.Sigma @ e_full), 0.0))
    out = np.empty(len(y))
    for l in range(1, len(y) + 1):
        e = env.embed(query, y[:l])
        num = math.sqrt(max(float(e @ model.Sigma @ e), 0.0))
        out[l - 1] = num / denom if denom > 0 else 0.0
    return out


def drive(env, decoder, algo: str, seed: int, T: int) -> RunTrace:
    """Run one (algo, seed) cell for T rounds and collect its trace."""
    rng = rng_from(seed, "run")
    model = getattr(decoder, "model", None)
    opt_flag = None if env.opt_certified else "opt=greedy_reference"
    rows: list[dict] = []
    seqs: list = []
    cum = 0.0
    covered_rounds = 0
    ratio_running_max = -np.inf
    for t in range(1, T + 1):
        query = env.sample_query(rng)
        y = decoder.decode(query)
        flags: list[str] = []
        ratio_max = ratio_mean = float("nan")
        beta = float("nan")
        if model is not None:
            ratios = prefix_ratios(model, env, query, y)
            ratio_max = float(np.max(ratios))
            ratio_mean = float(np.mean(ratios))
            ratio_running_max = max(ratio_running_max, ratio_max)
            beta = float(decoder.beta_used)
            if decoder.covered():
                covered_rounds += 1
                flags.append("covered")
        reward = env.sample_reward(query, y, rng)
        decoder.observe(query, y, reward)
        opt = env.opt_value(query)
        inst = opt - env.utility_of(query, y)
        cum += inst
        flags.extend(getattr(decoder, "flags", []))
        if opt_flag:
            flags.append(opt_flag)
        rows.append({
            "t": t, "algo": algo, "seed": seed, "reward": reward,
            "opt_value": opt, "inst_regret": inst, "cum_regret": cum,
            "seq_len": len(y), "ratio_max": ratio_max, "ratio_mean": ratio_mean,
            "beta": beta, "flags": ";".join(flags),
        })
        seqs.append(y)
    summary = {
        "algo": algo,
        "seed": seed,
        "rounds": T,
        "final_cum_regret": cum,
        "mean_reward": float(np.mean([r["reward"] for r in rows])),
        "opt_mode": "greedy_reference" if opt_flag else "brute_force",
    }
    if model is not None:
        summary["covered_fraction"] = covered_rounds / T
        summary["ratio_running_max"] = float(ratio_running_max)
        summary["beta_final"] = float(model.beta())
        summary.update(det_identity_summary(model))
    return RunTrace(algo=algo, seed=seed, rows=rows, summary=summary, seqs=seqs)


def det_identity_summary(model) -> dict:
    """Compare det(Sigma_T)/det(Sigma_1) against the leverage product."""
    sign, true_logdet = np.linalg.slogdet(model.Sigma)
    logdet_ratio = float(true_logdet - model.d * math.log(model.lam))
    claimed = model.logdet_ratio()
    residual = abs(1.0 - math.exp(claimed - logdet_ratio))
    updates = len(model.log_factors)
    bound = model.d * math.log(1.0 + updates / (model.d * model.lam))
    return {
        "det_residual": residual,
        "logdet_ratio": logdet_ratio,
        "logdet_bound": bound,
    }


# ---------------------------------------------------------------------------
# baselines as standalone operations


def baseline_wrong_theta(env, theta_wrong, T: int, seed: int = 0) -> RunTrace:
    """Greedy decoding against a fixed mis-specified parameter; no learning."""
    decoder = WrongThetaDecoder(env, T, theta_wrong=theta_wrong)
    return drive(env, decoder, "wrong_theta", seed, T)


def baseline_misaligned_greedy(env, T: int, seed: int = 0) -> RunTrace:
    """Greedy decoding against the base component only; no learning."""
    decoder = MisalignedGreedyDecoder(env, T)
    return drive(env, decoder, "misaligned_greedy", seed, T)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class DiagnosticsReport:
    level_regret: np.ndarray | None
    coverage_rate: float | None
    det_residual: float | None
    logdet_ratio: float | None
    logdet_bound: float | None
    ratio_running_max: float | None
    flags: list[str]


def level_k_regret(seqs, env, query: int = 0) -> np.ndarray:
    """Per-round, per-level regret u(o^(1:k)) - u(y^(1:k)), k in [1, L].

    Both the optimum and the submitted sequence are eos-padded to the length
    cap first, so every level is defined for every round.
    """
    if not env.opt_certified:
        raise ValueError("level regret needs an enumerable optimum")
    o, _ = brute_force_opt(lambda s: env.utility_of(query, s), env.vocab, env.L)
    out = np.empty((len(seqs), env.L))
    for i, y in enumerate(seqs):
        o_pad, y_pad = equalize_lengths(o, canonicalize(tuple(y), env.vocab),
                                        env.vocab, target_len=env.L)
        for k in range(1, env.L + 1):
            out[i, k - 1] = (env.utility_of(query, o_pad[:k])
                             - env.utility_of(query, y_pad[:k]))
    return out


def diagnostics(trace: RunTrace, env, model=None, query: int = 0) -> DiagnosticsReport:
    """Assemble the per-run diagnostic quantities from a finished cell."""
    flags: list[str] = []
    level = None
    if env.opt_certified and not getattr(env.util, "query_dependent", False):
        level = level_k_regret(trace.seqs, env, query)
    else:
        flags.append("level_regret_omitted")
    det = {"det_residual": None, "logdet_ratio": None, "logdet_bound": None}
    if model is not None:
        det = det_identity_summary(model)
    return DiagnosticsReport(
        level_regret=level,
        coverage_rate=trace.summary.get("covered_fraction"),
        det_residual=det["det_residual"],
        logdet_ratio=det["logdet_ratio"],
        logdet_bound=det["logdet_bound"],
        ratio_running_max=trace.summary.get("ratio_running_max"),
        flags=flags,
    )


# ---------------------------------------------------------------------------
# emission


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_trace_csv(trace: RunTrace, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in trace.rows:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])


def bound_series(T: int, L: int, d: int, scale: float, c: float) -> np.ndarray:
    """Reference curve scale * c * L * sqrt(d * t * log t) per round."""
    t = np.arange(1, T + 1, dtype=float)
    return scale * c * L * np.sqrt(d * t * np.log(np.maximum(t, 1.0)))


def bound_trace(cfg: RunConfig) -> RunTrace:
    curve = bound_series(cfg.T, cfg.L, cfg.d, cfg.bound_scale, cfg.bound_c)
    rows = [{
        "t": t, "algo": "bound", "seed": 0, "reward": float("nan"),
        "opt_value": float("nan"), "inst_regret": float("nan"),
        "cum_regret": float(curve[t - 1]), "seq_len": 0,
        "ratio_max": float("nan"), "ratio_mean": float("nan"),
        "beta": float("nan"), "flags": "bound",
    } for t in range(1, cfg.T + 1)]
    summary = {"algo": "bound", "seed": 0, "rounds": cfg.T,
               "final_cum_regret": float(curve[-1]),
               "scale": cfg.bound_scale, "c": cfg.bound_c}
    return RunTrace(algo="bound", seed=0, rows=rows, summary=summary)


def run_cell(cfg: RunConfig, algo: str, seed: int) -> RunTrace:
    env = make_env(cfg, seed)
    decoder = make_decoder(algo, env, cfg, seed)
    return drive(env, decoder, algo, seed, cfg.T)


def run_experiment(cfg: RunConfig) -> dict:
    """Execute every (algo, seed) cell, write per-cell CSVs plus summary.json.

    Returns the merged summary. The bound reference series is emitted as its
    own CSV whenever eoful is among the algorithms.
    """
    os.makedirs(cfg.out_path, exist_ok=True)
    cells = [(algo, seed) for algo in cfg.algos for seed in cfg.seeds]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            traces = list(pool.map(lambda c: run_cell(cfg, *c), cells))
    else:
        traces = [run_cell(cfg, *c) for c in cells]
    if "eoful" in cfg.algos:
        traces.append(bound_trace(cfg))
    files = []
    for trace in traces:
        name = f"{trace.algo}_seed{trace.seed}.csv" if trace.algo != "bound" \
            else "bound.csv"
        path = os.path.join(cfg.out_path, name)
        write_trace_csv(trace, path)
        files.append(name)
    summary = {
        "config": json.loads(cfg.model_dump_json(by_alias=True)),
        "cells": [t.summary for t in traces],
        "files": files,
    }
    with open(os.path.join(cfg.out_path, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary
