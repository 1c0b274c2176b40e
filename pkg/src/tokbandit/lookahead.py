"""Block lookahead decoding on top of the shared ridge-UCB model.

Instead of committing one token at a time, the decoder enumerates all k-token
continuations (shorter at the tail when the free positions are not a multiple
of k), scores each canonicalized extension with the same closed-form UCB, and
commits the whole winning block. Blocks are visited in lexicographic order and
ties keep the first maximum, so k=1 reproduces the token-level decoder's
choices bit for bit. An eos inside the committed block ends the sequence.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import TokenSeq, canonicalize, is_complete
from .eoful import RidgeUcb
from .tmab import explore_pulls


def lookahead_decode(model: RidgeUcb, env, query: int, k: int) -> TokenSeq:
    vocab = env.vocab
    free = env.L - 1
    y: TokenSeq = ()
    while len(y) < free:
        size = min(k, free - len(y))
        best: TokenSeq | None = None
        best_score = -np.inf
        for block in itertools.product(range(vocab.n), repeat=size):
            cand = canonicalize(y + block, vocab)
            score = float(model.scores(env.embed(query, cand))[0])
            if score > best_score:
                best_score = score
                best = cand
        y = best
        if is_complete(y, vocab):
            return y
    return y + (vocab.eos,)


def _validate_block_depth(env, k: int, cap: int) -> int:
    k = int(k)
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > env.L:
        raise ValueError("k cannot exceed the length cap")
    if env.vocab.n**k > cap:
        raise ValueError(
            f"{env.vocab.n**k} candidate blocks exceed enumeration cap {cap}")
    return k


class LookaheadDecoder:
    """Round-based wrapper around block-lookahead decoding."""

    def __init__(self, env, T: int, k: int, lam: float = 1.0,
                 delta: float | None = None, beta_schedule: str = "horizon",
                 cap: int = 10**6):
        self.env = env
        self.k = _validate_block_depth(env, k, cap)
        self.name = f"lookahead_k{self.k}"
        if delta is None:
            delta = 1.0 / T
        self.model = RidgeUcb(env.d, env.L, env.sigma, lam=lam, delta=delta,
                              beta_schedule=beta_schedule)

    def decode(self, query: int) -> TokenSeq:
        return lookahead_decode(self.model, self.env, query, self.k)

    def observe(self, query: int, y: TokenSeq, reward: float) -> None:
        self.model.update(self.env.embed(query, y), reward)

    @property
    def beta_used(self) -> float:
        return self.model.beta()

    def covered(self) -> bool:
        return self.model.covered(self.env.theta)


class KLookaheadEtcDecoder:
    """Explore-then-commit over k-token blocks.

    Each commit step tries every length-k continuation (shorter at the tail),
    completing prefix+block with eos and pulling it N times, then commits the
    block with the best streaming mean (first block on ties, so k=1 reproduces
    the token-level variant arm for arm). An eos inside the winning block ends
    the sequence at that eos. When the horizon cannot cover another full
    exploration step, the current prefix is stopped early and the run is
    flagged as truncated.
    """

    name = "k_lookahead_etc"

    def __init__(self, env, T: int, k: int, pulls: int | None = None,
                 cap: int = 10**6):
        if getattr(env.util, "query_dependent", False):
            raise ValueError("explore-then-commit needs a query-independent utility")
        self.env = env
        self.T = int(T)
        self.k = _validate_block_depth(env, k, cap)
        self.N = int(pulls) if pulls is not None else explore_pulls(T)
        self.prefix: TokenSeq = ()
        self.block = 0
        self.pull = 0
        self.committed: TokenSeq | None = None
        self.rounds_used = 0
        self.truncated = False
        if env.L == 1:
            self.committed = (env.vocab.eos,)
        else:
            self._start_step()

    def _start_step(self) -> None:
        size = min(self.k, self.env.L - 1 - len(self.prefix))
        self.blocks = list(itertools.product(range(self.env.vocab.n), repeat=size))
        self.means = np.zeros(len(self.blocks))
        self.block = 0
        self.pull = 0
        budget = self.T - self.rounds_used
        if budget < len(self.blocks) * self.N:
            self.committed = self.prefix + (self.env.vocab.eos,)
            self.truncated = True

    def _arm(self) -> TokenSeq:
        probe = self.prefix + self.blocks[self.block] + (self.env.vocab.eos,)
        return canonicalize(probe, self.env.vocab)

    def decode(self, query: int) -> TokenSeq:
        if self.committed is not None:
            return self.committed
        return self._arm()

    def observe(self, query: int, y: TokenSeq, reward: float) -> None:
        self.rounds_used += 1
        if self.committed is not None:
            return
        self.pull += 1
        self.means[self.block] += (reward - self.means[self.block]) / self.pull
        if self.pull < self.N:
            return
        self.pull = 0
        self.block += 1
        if self.block < len(self.blocks):
            return
        best = self.blocks[int(np.argmax(self.means))]
        chosen = canonicalize(self.prefix + best, self.env.vocab)
        if is_complete(chosen, self.env.vocab):
            self.committed = chosen
        elif len(chosen) >= self.env.L - 1:
            self.committed = chosen + (self.env.vocab.eos,)
        else:
            self.prefix = chosen
            self._start_step()

    @property
    def flags(self) -> list[str]:
        return ["explore_truncated"] if self.truncated else []
