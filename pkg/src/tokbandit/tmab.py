"""Tabular sequence bandit: explore-then-commit over a fixed utility.

This setting drops the query and the linear structure: one unknown bounded
utility over complete sequences, noisy bandit feedback only. The decoder
builds its sequence greedily, one position at a time, by pulling the
stop-right-after-this-token completion of every candidate a fixed number of
times and committing the best empirical mean before moving on.
"""

from __future__ import annotations

import math

import numpy as np

from .core import TokenSeq, Vocab, canonicalize, complete_sequences, rng_from
from .linear_env import LinearEnv, NoiseModel, TableUtility, TargetEmbedding


def explore_pulls(T: int) -> int:
    """Per-(position, token) pull count N = ceil(T^(2/3) (ln T)^(1/3))."""
    if T < 2:
        return 1
    return math.ceil(T ** (2.0 / 3.0) * math.log(T) ** (1.0 / 3.0))


class GreedyEtcDecoder:
    """Greedy explore-then-commit for the tabular setting.

    Levels are filled left to right. At each level every token (eos included)
    is tried N times via the completed sequence prefix+token+eos; the empirical
    argmax (lowest index on ties) is committed. Committing eos, or filling
    L-1 positions, ends exploration and the final sequence is exploited for
    the remaining rounds. If the horizon cannot cover another full level of
    exploration, the current prefix is stopped early and exploited, and the
    run is flagged as truncated.
    """

    name = "greedy_etc"

    def __init__(self, env, T: int, pulls: int | None = None):
        if getattr(env.util, "query_dependent", False):
            raise ValueError("explore-then-commit needs a query-independent utility")
        self.env = env
        self.T = int(T)
        self.N = int(pulls) if pulls is not None else explore_pulls(T)
        self.level = 0
        self.prefix: TokenSeq = ()
        self.tok = 0
        self.pull = 0
        self.means = np.zeros(env.vocab.n)
        self.committed: TokenSeq | None = None
        self.rounds_used = 0
        self.truncated = False
        if env.L == 1:
            self.committed = (env.vocab.eos,)
        else:
            self._maybe_truncate()

    def _maybe_truncate(self) -> None:
        if self.committed is not None:
            return
        budget = self.T - self.rounds_used
        if budget < self.env.vocab.n * self.N:
            self.committed = self.prefix + (self.env.vocab.eos,)
            self.truncated = True

    def _arm(self) -> TokenSeq:
        probe = self.prefix + (self.tok, self.env.vocab.eos)
        return canonicalize(probe, self.env.vocab)

    def decode(self, query: int) -> TokenSeq:
        if self.committed is not None:
            return self.committed
        return self._arm()

    def observe(self, query: int, y: TokenSeq, reward: float) -> None:
        self.rounds_used += 1
        if self.committed is not None:
            return
        # streaming mean update keeps long pull counts numerically stable
        self.pull += 1
        self.means[self.tok] += (reward - self.means[self.tok]) / self.pull
        if self.pull < self.N:
            return
        self.pull = 0
        self.tok += 1
        if self.tok < self.env.vocab.n:
            return
        best = int(np.argmax(self.means))
        self.tok = 0
        self.means[:] = 0.0
        self.prefix = self.prefix + (best,)
        self.level += 1
        if best == self.env.vocab.eos:
            self.committed = self.prefix
        elif len(self.prefix) >= self.env.L - 1:
            self.committed = self.prefix + (self.env.vocab.eos,)
        else:
            self._maybe_truncate()

    @property
    def flags(self) -> list[str]:
        return ["explore_truncated"] if self.truncated else []


def regret_of_trace(seqs, env, query: int = 0,
                    opt_value: float | None = None) -> np.ndarray:
    """Cumulative regret of a sequence of submitted arms.

    Uses the environment's certified optimum when available; otherwise a
    caller-supplied optimal value is required.
    """
    if opt_value is None:
        if not env.opt_certified:
            raise ValueError("optimum not enumerable; supply opt_value")
        opt_value = env.opt_value(query)
    inst = np.array([
        opt_value - env.utility_of(query, canonicalize(tuple(y), env.vocab))
        for y in seqs
    ])
    return np.cumsum(inst)


def gen_table_env(
    n: int,
    L: int,
    sigma: float,
    seed: int,
    *,
    d: int = 4,
    noise: str = "uniform",
    value_range: tuple = (0.05, 0.95),
    query_pool: int = 1,
) -> LinearEnv:
    """Fixed random utility table over all complete sequences up to length L."""
    vocab = Vocab(n)
    rng = rng_from(seed, "table")
    table = {}
    for y in complete_sequences(vocab, L):
        table[y] = float(rng.uniform(value_range[0], value_range[1]))
    util = TableUtility(table, vocab)
    theta_raw = rng_from(seed, "theta").standard_normal(d)
    theta = theta_raw / np.linalg.norm(theta_raw)
    emb = TargetEmbedding(theta, util, vocab, seed)
    return LinearEnv(
        vocab=vocab, L=L, d=d, theta=theta, util=util, emb=emb,
        noise=NoiseModel(noise, sigma), seed=seed, family="table",
        ddmc_variant="none", query_pool=query_pool,
    )
