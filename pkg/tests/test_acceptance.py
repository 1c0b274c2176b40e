"""Acceptance gate: one test per shipped guarantee, with runtime budgets.

Each test prints a single PASS line (visible under pytest -s; the -v status
line carries the same verdict otherwise). Heavy simulations run once in
module-scoped fixtures and are shared by the criteria that inspect them.
"""

import csv
import math
import shutil
import subprocess
import time
from pathlib import Path

import numpy as np
import pytest

from tokbandit.bts import gen_bts, bts_to_tmab, path_sequence, tmab_to_bts
from tokbandit.core import canonicalize
from tokbandit.ddmc import (
    aggregate,
    gen_dump,
    group_by_common_suffix,
    write_stats_csv,
)
from tokbandit.decoding import brute_force_opt, gen_mix_env, greedy_decode
from tokbandit.eoful import EofulDecoder
from tokbandit.harness import RunConfig, drive, run_experiment
from tokbandit.linear_env import gen_affine_ddmc_env, gen_k_ddmc_env
from tokbandit.lookahead import KLookaheadEtcDecoder, LookaheadDecoder
from tokbandit.tmab import GreedyEtcDecoder, gen_table_env

FRONTEND_CLI = Path(__file__).resolve().parents[1] / "frontend" / "dist" / "cli.js"


def report(label: str, started: float, limit_s: float, detail: str):
    elapsed = time.monotonic() - started
    assert elapsed < limit_s, f"{label}: {elapsed:.1f}s exceeded the {limit_s:.0f}s budget"
    print(f"PASS {label}: {detail} ({elapsed:.1f}s)", flush=True)


def eoful_cells(summary: dict) -> list[dict]:
    return [c for c in summary["cells"] if c["algo"] == "eoful"]


@pytest.fixture(scope="module")
def coverage_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("coverage")
    cfg = RunConfig(algos=["eoful"], family="affine", n=4, L=4, d=8, sigma=0.2,
                    T=2000, delta=0.05, seeds=list(range(50)), out_path=str(out))
    started = time.monotonic()
    summary = run_experiment(cfg)
    return summary, out, time.monotonic() - started


@pytest.fixture(scope="module")
def growth_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("growth")
    cfg = RunConfig(algos=["eoful"], family="affine", n=4, L=4, d=8, sigma=0.2,
                    T=10000, seeds=list(range(20)), out_path=str(out))
    started = time.monotonic()
    summary = run_experiment(cfg)
    return summary, out, time.monotonic() - started


def test_criterion_01_confidence_region_coverage(coverage_run):
    started = time.monotonic()
    summary, _, sim_elapsed = coverage_run
    fractions = [c["covered_fraction"] for c in eoful_cells(summary)]
    assert len(fractions) == 50
    mean_cov = float(np.mean(fractions))
    assert mean_cov >= 0.95
    assert sim_elapsed < 120.0
    report("criterion 1 (coverage)", started, 120.0,
           f"mean covered fraction {mean_cov:.4f} >= 0.95, sim {sim_elapsed:.1f}s")


def test_criterion_02_determinant_identity_and_bound(coverage_run):
    started = time.monotonic()
    summary, _, _ = coverage_run
    cells = eoful_cells(summary)
    worst_residual = max(c["det_residual"] for c in cells)
    assert worst_residual < 1e-8
    for c in cells:
        assert c["logdet_ratio"] <= c["logdet_bound"]
    report("criterion 2 (determinant identity)", started, 30.0,
           f"worst relative residual {worst_residual:.2e} < 1e-8 on {len(cells)} traces")


def test_criterion_03_regret_growth_and_bound_domination(growth_run):
    started = time.monotonic()
    summary, out, sim_elapsed = growth_run
    cells = eoful_cells(summary)
    assert len(cells) == 20

    half, full = [], []
    for c in cells:
        path = out / f"eoful_seed{c['seed']}.csv"
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 10000
        half.append(float(rows[4999]["cum_regret"]))
        full.append(float(rows[9999]["cum_regret"]))
    ratio = float(np.mean(full)) / float(np.mean(half))
    assert ratio < 1.9

    T, L, d = 10000, 4, 8
    dominated = sum(
        1 for c in cells
        if c["ratio_running_max"] * L * math.sqrt(d * T * math.log(T))
        >= c["final_cum_regret"])
    assert dominated >= math.ceil(0.95 * len(cells))
    assert sim_elapsed < 600.0
    report("criterion 3 (sublinear growth)", started, 600.0,
           f"Reg(2T)/Reg(T) {ratio:.3f} < 1.9, bound dominates {dominated}/20, "
           f"sim {sim_elapsed:.1f}s")


def test_criterion_04_explore_commit_rate_and_gap():
    # eps > 0 keeps the level-1 value surface non-flat; at eps = 0 every
    # depth-1 continuation ties and short horizons pay exactly zero regret
    started = time.monotonic()
    horizons = (1000, 10000, 100000)
    rates = []
    for T in horizons:
        finals = []
        for seed in range(10):
            env = gen_affine_ddmc_env(3, 3, 6, 0.1, 0.1, seed)
            trace = drive(env, GreedyEtcDecoder(env, T), "greedy_etc", seed, T)
            finals.append(trace.summary["final_cum_regret"])
        rates.append(float(np.mean(finals)) / T ** (2.0 / 3.0))
    spread = max(rates) / min(rates)
    cap = 4.0 * math.log(max(horizons)) ** (1.0 / 3.0)
    assert spread < cap

    T = 10000
    ok = 0
    for seed in range(100):
        env = gen_affine_ddmc_env(3, 3, 6, 0.1, 0.1, 1000 + seed)
        dec = GreedyEtcDecoder(env, T)
        drive(env, dec, "greedy_etc", seed, T)
        assert dec.committed is not None
        gap = env.opt_value(0) - env.utility_of(0, dec.committed)
        if gap <= 2.0 * env.L * math.sqrt(2.0 * math.log(T) / dec.N) + env.eps:
            ok += 1
    assert ok >= 95
    report("criterion 4 (explore-commit rate)", started, 600.0,
           f"rate spread {spread:.2f} < {cap:.2f}, committed gap within bound "
           f"on {ok}/100 seeds")


def test_criterion_05_greedy_gap_within_slack():
    started = time.monotonic()
    rng = np.random.default_rng(2024)
    worst_excess = -math.inf
    for i in range(200):
        eps = (0.0, 0.01, 0.1)[i % 3]
        n = int(rng.integers(2, 6))
        L = int(rng.integers(1, 6))
        d = int(rng.integers(2, 9))
        env = gen_affine_ddmc_env(n, L, d, 0.0, eps, int(rng.integers(10 ** 6)))
        u = lambda s: env.utility_of(0, s)
        y, _ = greedy_decode(u, env.vocab, env.L)
        _, best = brute_force_opt(u, env.vocab, env.L)
        gap = best - u(y)
        assert gap <= eps + 1e-12, f"instance {i}: gap {gap} > eps {eps}"
        worst_excess = max(worst_excess, gap - eps)
    report("criterion 5 (greedy near-optimality)", started, 60.0,
           f"200 instances, worst gap-minus-slack {worst_excess:.2e} <= 1e-12")


def test_criterion_06_needle_random_decoder(tmp_path):
    started = time.monotonic()
    L, T = 5, 2000
    cfg = RunConfig(algos=["random"], family="needle", L=L, T=T,
                    seeds=list(range(50)), out_path=str(tmp_path))
    summary = run_experiment(cfg)
    rewards = np.array([c["mean_reward"] * T for c in summary["cells"]])
    regrets = np.array([c["final_cum_regret"] for c in summary["cells"]])
    target_reward = T / 2 ** (L - 2)
    target_regret = T * (1.0 - 1.0 / 2 ** (L - 2))
    se = rewards.std(ddof=1) / math.sqrt(rewards.size)
    assert abs(rewards.mean() - target_reward) <= 3.0 * se
    assert abs(regrets.mean() - target_regret) <= 0.05 * target_regret
    report("criterion 6 (needle hardness)", started, 60.0,
           f"mean reward {rewards.mean():.1f} within 3se ({se:.2f}) of "
           f"{target_reward:.0f}, mean regret {regrets.mean():.1f} within 5% of "
           f"{target_regret:.0f}")


def test_criterion_07_reduction_decision_equivalence():
    started = time.monotonic()
    rng = np.random.default_rng(7)
    checks = 0

    for i in range(100):
        arity = int(rng.integers(1, 4))
        depth = int(rng.integers(1, 5))
        tree = gen_bts(arity, depth, seed=i)
        env = bts_to_tmab(tree)
        path_values = [env.utility_of(0, path_sequence(tree, env.util, leaf))
                       for leaf in tree.leaf_values]
        env_max = max(0.0, max(path_values))
        bodies = sum((env.vocab.n - 1) ** l for l in range(env.L))
        if bodies <= 20000:
            _, brute = brute_force_opt(lambda s: env.utility_of(0, s),
                                       env.vocab, env.L)
            assert brute == env_max
        tree_max = tree.max_value()
        for _ in range(20):
            a = float(rng.uniform(-0.1, tree_max + 0.1))
            assert (tree_max >= a) == (env_max >= a)
            checks += 1

    for i in range(100):
        n = int(rng.integers(2, 4))
        L = int(rng.integers(2, 4))
        env = gen_table_env(n, L, sigma=0.0, seed=500 + i)
        tree = tmab_to_bts(env)
        _, env_max = brute_force_opt(lambda s: env.utility_of(0, s),
                                     env.vocab, env.L)
        tree_max = max(0.0, tree.max_value())
        for _ in range(20):
            a = float(rng.uniform(-0.1, env_max + 0.1))
            assert (tree_max >= a) == (env_max >= a)
            checks += 1

    report("criterion 7 (reduction equivalence)", started, 60.0,
           f"{checks} threshold decisions agree in both directions")


def test_criterion_08_augmented_parameter_identity():
    started = time.monotonic()
    rng = np.random.default_rng(0)
    worst = 0.0
    checks = 0
    for e_idx in range(50):
        gamma = float(rng.uniform(0.0, 1.0))
        env = gen_mix_env(3, 4, 5, sigma=0.0, gamma=gamma, seed=e_idx,
                          query_pool=100)
        for _ in range(200):
            q = env.sample_query(rng)
            body = tuple(int(t) for t in
                         rng.integers(0, env.vocab.n - 1,
                                      size=int(rng.integers(0, env.L))))
            y = canonicalize(body + (env.vocab.eos,), env.vocab)
            e_aug = env.embed(q, y)
            lhs = float(env.theta @ e_aug)
            rhs = (gamma * env.base_value(q, y)
                   + (1.0 - gamma) * float(env.theta_inner @ e_aug[:-1]))
            worst = max(worst, abs(lhs - rhs))
            checks += 1
    assert checks == 10000
    assert worst < 1e-12
    report("criterion 8 (alignment fold identity)", started, 30.0,
           f"worst deviation {worst:.2e} < 1e-12 over 10^4 triples")


def nan_equal_rows(rows_a: list[dict], rows_b: list[dict]) -> bool:
    def same(a, b):
        if isinstance(a, float) and isinstance(b, float):
            if math.isnan(a) and math.isnan(b):
                return True
        return a == b

    return len(rows_a) == len(rows_b) and all(
        all(same(ra[c], rb[c]) for c in ra if c != "algo")
        for ra, rb in zip(rows_a, rows_b))


def test_criterion_09_block_lookahead_separation_and_degeneracy():
    started = time.monotonic()
    T = 300
    finals = {1: [], 2: []}
    for seed in range(20):
        env = gen_k_ddmc_env(3, 5, 6, k=2, sigma=0.1, seed=seed)
        for k in (1, 2):
            trace = drive(env, LookaheadDecoder(env, T=T, k=k), f"k{k}", seed, T)
            finals[k].append(trace.summary["final_cum_regret"])
    mean1, mean2 = float(np.mean(finals[1])), float(np.mean(finals[2]))
    assert mean2 < mean1

    for seed in range(3):
        env = gen_k_ddmc_env(3, 5, 6, k=2, sigma=0.1, seed=seed)
        a = drive(env, LookaheadDecoder(env, T=T, k=1), "a", seed, T)
        b = drive(env, EofulDecoder(env, T=T), "b", seed, T)
        assert a.seqs == b.seqs and nan_equal_rows(a.rows, b.rows)
        c = drive(env, KLookaheadEtcDecoder(env, T=T, k=1), "c", seed, T)
        e = drive(env, GreedyEtcDecoder(env, T=T), "e", seed, T)
        assert c.seqs == e.seqs and nan_equal_rows(c.rows, e.rows)

    report("criterion 9 (block lookahead)", started, 300.0,
           f"k=2 mean regret {mean2:.2f} < k=1 {mean1:.2f}; k=1 traces match "
           f"the one-token decoders exactly")


def test_criterion_10_distance_dump_monotonicity():
    started = time.monotonic()
    env = gen_affine_ddmc_env(4, 6, 8, 0.0, 0.0, seed=0, w_frac=(0.0, 0.0))
    records = gen_dump(env, 200, seed=0)
    for metric in ("d1", "l2"):
        score = aggregate(records, metric).monotonicity_score()
        assert score == 1.0, f"{metric} score {score}"

    got = group_by_common_suffix((0, 1, 2, 3, 4, 5), (0, 9, 8, 3, 4, 5))
    assert got == [(1, 1), (2, 0), (3, 0), (4, 1), (5, 2), (6, 3)]
    report("criterion 10 (distance dump)", started, 30.0,
           "monotonicity score 1.0 for d1 and l2; grouping example exact")


def test_criterion_11_bit_identical_reruns(tmp_path):
    started = time.monotonic()
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        cfg = RunConfig(algos=["eoful", "greedy_etc"], family="affine",
                        n=3, L=3, d=4, sigma=0.1, T=150, seeds=[0, 1],
                        out_path=str(out))
        run_experiment(cfg)
        outs.append(out)
    names = sorted(p.name for p in outs[0].glob("*.csv"))
    assert names
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    report("criterion 11 (reproducibility)", started, 60.0,
           f"{len(names)} CSVs byte-identical across reruns")


@pytest.mark.secondary
def test_criterion_12_plot_rendering(tmp_path):
    started = time.monotonic()
    if shutil.which("node") is None:
        pytest.skip("node unavailable")
    if not FRONTEND_CLI.exists():
        pytest.skip("frontend not built (npm run build in frontend/)")

    run_dir = tmp_path / "runs"
    cfg = RunConfig(algos=["eoful", "wrong_theta", "misaligned_greedy"],
                    family="mix", n=3, L=3, d=3, gamma=0.8, sigma=0.05,
                    T=200, seeds=[0, 1, 2], out_path=str(run_dir))
    run_experiment(cfg)

    env = gen_affine_ddmc_env(4, 6, 8, 0.0, 0.0, seed=0, w_frac=(0.0, 0.0))
    stats = aggregate(gen_dump(env, 50, seed=0), "l2")
    stats_csv = tmp_path / "stats.csv"
    write_stats_csv(stats, stats_csv, "dump")

    def plot(args):
        return subprocess.run(["node", str(FRONTEND_CLI), *args],
                              capture_output=True, text=True)

    regret_svg = tmp_path / "regret.svg"
    r = plot(["plot-regret", "--in", str(run_dir / "*.csv"),
              "--out", str(regret_svg)])
    assert r.returncode == 0, r.stderr
    body = regret_svg.read_text()
    assert body.startswith("<svg")
    for series in ("eoful", "wrong_theta", "misaligned_greedy", "bound"):
        assert series in body

    ratio_svg = tmp_path / "ratio.svg"
    r = plot(["plot-ratio", "--in", str(run_dir / "eoful_seed0.csv"),
              "--out", str(ratio_svg)])
    assert r.returncode == 0, r.stderr
    assert ratio_svg.read_text().startswith("<svg")

    bad_csv = tmp_path / "bad.csv"
    with open(run_dir / "eoful_seed0.csv") as fh:
        rows = list(csv.DictReader(fh))
    rows[5]["ratio_max"] = "0.0"
    rows[5]["ratio_mean"] = "1.0"
    with open(bad_csv, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)
    r = plot(["plot-ratio", "--in", str(bad_csv), "--out", str(tmp_path / "x.svg")])
    assert r.returncode != 0

    ddmc_svg = tmp_path / "ddmc.svg"
    r = plot(["plot-ddmc", "--in", str(stats_csv), "--out", str(ddmc_svg)])
    assert r.returncode == 0, r.stderr
    body = ddmc_svg.read_text()
    assert body.startswith("<svg")
    assert "monotonicity" in body
    report("criterion 12 (plots)", started, 120.0,
           "regret, ratio, and bucket figures rendered; ratio guard enforced")
