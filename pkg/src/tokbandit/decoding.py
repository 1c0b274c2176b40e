"""Reference decoders, baselines, and the preference-mixing environment.

The mixing environment models a reward that trades off a known scored base
value against a hidden per-sequence preference: u = gamma * v + (1 - gamma) *
g. It reduces to the plain linear setting by stacking the preference embedding
with the base value as one extra feature coordinate, so the optimism decoder
runs unchanged on the augmented parameter [(1 - gamma) * theta : gamma].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    TokenSeq,
    Vocab,
    canonicalize,
    complete_sequences,
    count_complete_sequences,
    rng_from,
)
from .linear_env import (
    LinearEnv,
    NoiseModel,
    TargetEmbedding,
    gen_affine_rule,
)

UtilityOracle = Callable[[TokenSeq], float]


def greedy_decode(u: UtilityOracle, vocab: Vocab, L: int) -> tuple[TokenSeq, int]:
    """Level-wise argmax of u over one-token extensions.

    Stops at eos, forces eos at the length cap, breaks ties toward the lowest
    token index. Returns the sequence and the number of oracle calls, which
    never exceeds n * L. The oracle sees raw prefixes; callers with
    completion-scored utilities should wrap u to append eos themselves.
    """
    queries = 0
    y: TokenSeq = ()
    while len(y) < L - 1:
        scores = np.array([u(y + (int(t),)) for t in range(vocab.n)])
        queries += vocab.n
        tok = int(np.argmax(scores))
        y = y + (tok,)
        if tok == vocab.eos:
            return y, queries
    return y + (vocab.eos,), queries


def brute_force_opt(u: UtilityOracle, vocab: Vocab, L: int,
                    cap: int = 10**6) -> tuple[TokenSeq, float]:
    """Exhaustive argmax of u over canonical complete sequences up to L.

    Ties go to the lexicographically smallest sequence. Raises when the
    enumeration would exceed cap.
    """
    total = count_complete_sequences(vocab, L)
    if total > cap:
        raise ValueError(f"{total} complete sequences exceed cap {cap}")
    best_v = -np.inf
    best_y: TokenSeq = (vocab.eos,)
    for y in complete_sequences(vocab, L):
        v = float(u(y))
        if v > best_v or (v == best_v and y < best_y):
            best_v, best_y = v, y
    return best_y, best_v


def random_decode(env, query: int, rng: np.random.Generator) -> TokenSeq:
    """Uniform regular tokens at every free position, then stop."""
    body = tuple(int(t) for t in rng.choice(env.vocab.regular, size=env.L - 1))
    return body + (env.vocab.eos,)


class RandomDecoder:
    name = "random"

    def __init__(self, env, T: int, seed: int = 0):
        self.env = env
        self.rng = rng_from(seed, "random-decoder")

    def decode(self, query: int) -> TokenSeq:
        return random_decode(self.env, query, self.rng)

    def observe(self, query: int, y: TokenSeq, reward: float) -> None:
        pass


class GreedyOracleDecoder:
    """Plays the true-utility greedy sequence; a no-learning benchmark."""

    name = "oracle_greedy"

    def __init__(self, env, T: int):
        self.env = env

    def decode(self, query: int) -> TokenSeq:
        y, _ = greedy_decode(lambda s: self.env.utility_of(query, s),
                             self.env.vocab, self.env.L)
        return y

    def observe(self, query: int, y: TokenSeq, reward: float) -> None:
        pass


# ---------------------------------------------------------------------------
# preference-mixing environment


class MixUtility:
    """u(q, s) = gamma * v(s) + (1 - gamma) * g(q, s).

    v is the base rule's value shifted down by its anchor (so v ranges over
    (0, base - anchor]); g is a hashed per-(query, canonical sequence) latent
    in [0, latent_max]. Hashing the canonical form keeps eos padding neutral.
    """

    def __init__(self, base_rule, gamma: float, seed: int, anchor: float,
                 latent_max: float = 0.5):
        self.base_rule = base_rule
        self.gamma = float(gamma)
        self.seed = int(seed)
        self.anchor = float(anchor)
        self.latent_max = float(latent_max)
        self.vocab = base_rule.vocab
        self.query_dependent = True

    def base_value(self, query: int, seq) -> float:
        return self.base_rule.value(0, seq) - self.anchor

    def base_value_candidates(self, query: int, prefix, tokens) -> np.ndarray:
        return self.base_rule.value_candidates(0, prefix, tokens) - self.anchor

    def latent(self, query: int, seq) -> float:
        canon = canonicalize(tuple(seq), self.vocab)
        u = rng_from(self.seed, "latent", int(query), canon).uniform(0.0, 1.0)
        return u * self.latent_max

    def value(self, query: int, seq) -> float:
        return self.gamma * self.base_value(query, seq) \
            + (1.0 - self.gamma) * self.latent(query, seq)

    def value_candidates(self, query: int, prefix, tokens) -> np.ndarray:
        return np.array([self.value(query, tuple(prefix) + (int(t),)) for t in tokens])


class _LatentOracle:
    """Exposes only the hidden preference term as a utility to embed."""

    query_dependent = True

    def __init__(self, mix: MixUtility):
        self.mix = mix

    def value(self, query: int, seq) -> float:
        return self.mix.latent(query, seq)

    def value_candidates(self, query: int, prefix, tokens) -> np.ndarray:
        return np.array([self.mix.latent(query, tuple(prefix) + (int(t),))
                         for t in tokens])


class AugmentedFeature:
    """Inner embedding with the base value appended as one extra coordinate.

    Keeps total squared norm within 1 as long as the inner embedding respects
    a norm budget b and the base value stays within sqrt(1 - b^2).
    """

    def __init__(self, inner, v: Callable[[int, TokenSeq], float]):
        self.inner = inner
        self.v = v

    def embed_candidates(self, query: int, prefix, tokens) -> np.ndarray:
        E = self.inner.embed_candidates(query, prefix, tokens)
        vals = np.array([self.v(query, tuple(prefix) + (int(t),)) for t in tokens])
        return np.hstack([E, vals[:, None]])

    def embed(self, query: int, seq) -> np.ndarray:
        seq = tuple(seq)
        if not seq:
            return np.append(self.inner.embed(query, seq), self.v(query, seq))
        return self.embed_candidates(query, seq[:-1], [seq[-1]])[0]


class ReducedUtility:
    """Utility induced by a reduction: gamma * v + (1 - gamma) * <theta, e>."""

    query_dependent = True

    def __init__(self, v, emb, gamma: float, theta: np.ndarray):
        self.v = v
        self.emb = emb
        self.gamma = float(gamma)
        self.theta = np.asarray(theta, dtype=float)

    def base_value(self, query: int, seq) -> float:
        return float(self.v(query, tuple(seq)))

    def base_value_candidates(self, query: int, prefix, tokens) -> np.ndarray:
        return np.array([self.v(query, tuple(prefix) + (int(t),)) for t in tokens])

    def value(self, query: int, seq) -> float:
        inner = float(self.emb.embed(query, tuple(seq)) @ self.theta)
        return self.gamma * self.base_value(query, seq) + (1.0 - self.gamma) * inner

    def value_candidates(self, query: int, prefix, tokens) -> np.ndarray:
        E = self.emb.embed_candidates(query, prefix, tokens)
        vs = self.base_value_candidates(query, prefix, tokens)
        return self.gamma * vs + (1.0 - self.gamma) * (E @ self.theta)


@dataclass
class MixEnv(LinearEnv):
    gamma: float = 1.0
    theta_inner: np.ndarray | None = None
    theta_wrong: np.ndarray | None = None

    def base_value(self, query: int, seq) -> float:
        return self.util.base_value(query, seq)

    def base_value_candidates(self, query: int, prefix, tokens) -> np.ndarray:
        return self.util.base_value_candidates(query, prefix, tokens)


def align_reduce(
    v: Callable[[int, TokenSeq], float],
    emb,
    gamma: float,
    theta: np.ndarray,
    *,
    vocab: Vocab,
    L: int,
    sigma: float = 0.0,
    noise: str = "uniform",
    seed: int = 0,
    query_pool: int = 1,
    ranker=None,
) -> MixEnv:
    """Fold a known scored component into the linear setting.

    Builds the (d+1)-dimensional environment whose feature is [e(x, y) :
    v(x, y)] and whose parameter is [(1 - gamma) * theta : gamma], so the
    induced utility is exactly gamma * v + (1 - gamma) * <theta, e>.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    theta = np.asarray(theta, dtype=float)
    util = ReducedUtility(v, emb, gamma, theta)
    feat = AugmentedFeature(emb, v)
    theta_aug = np.append((1.0 - gamma) * theta, gamma)
    return MixEnv(
        vocab=vocab, L=L, d=theta.size + 1, theta=theta_aug, util=util,
        emb=feat, noise=NoiseModel(noise, sigma), seed=seed, family="mix",
        eps=float("nan"), ddmc_variant="none", query_pool=query_pool,
        ranker=ranker, gamma=float(gamma), theta_inner=theta,
        theta_wrong=np.full(theta.size + 1, -0.5),
    )


def default_inner_theta(d: int, fill: float = 0.5) -> np.ndarray:
    """Constant-fill parameter, scaled back to the unit sphere when too long."""
    theta = np.full(d, fill)
    norm = np.linalg.norm(theta)
    if norm > 1.0:
        theta = theta / norm
    return theta


def gen_mix_env(
    n: int,
    L: int,
    d: int,
    sigma: float,
    gamma: float,
    seed: int,
    *,
    eps: float = 0.0,
    noise: str = "uniform",
    query_pool: int = 1000,
    base: float = 0.9,
    anchor: float = 0.3,
    latent_max: float = 0.5,
) -> MixEnv:
    """Preference-mixing instance in the augmented (d+1)-dim linear form."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    if d < 2:
        raise ValueError("need d >= 2 so the latent fits the 0.8 norm budget")
    vocab = Vocab(n)
    rule = gen_affine_rule(vocab, L, eps, seed, base=base, anchor=anchor)
    mix = MixUtility(rule, gamma, seed, anchor, latent_max=latent_max)
    theta_inner = default_inner_theta(d)
    if latent_max > 0.8 * np.linalg.norm(theta_inner):
        raise ValueError("latent range exceeds the embedding budget")
    lat_emb = TargetEmbedding(theta_inner, _LatentOracle(mix), vocab, seed,
                              norm_budget=0.8)
    emb = AugmentedFeature(lat_emb, mix.base_value)
    theta_aug = np.append((1.0 - gamma) * theta_inner, gamma)

    def ranker(query, prefix, tokens):
        return rule.value_candidates(0, prefix, tokens) - anchor

    return MixEnv(
        vocab=vocab, L=L, d=d + 1, theta=theta_aug, util=mix, emb=emb,
        noise=NoiseModel(noise, sigma), seed=seed, family="mix",
        eps=eps, ddmc_variant="none", query_pool=query_pool, ranker=ranker,
        gamma=gamma, theta_inner=theta_inner,
        theta_wrong=np.full(d + 1, -0.5),
    )


class MisalignedGreedyDecoder:
    """Per-token argmax of the base value only; ignores the hidden preference.

    On mixing instances this is optimal exactly when gamma = 1.
    """

    name = "misaligned_greedy"

    def __init__(self, env, T: int):
        if not hasattr(env, "base_value_candidates"):
            raise ValueError("misaligned greedy needs a mixing environment")
        self.env = env

    def decode(self, query: int) -> TokenSeq:
        vocab = self.env.vocab
        tokens = np.arange(vocab.n)
        y: TokenSeq = ()
        while len(y) < self.env.L - 1:
            tok = int(np.argmax(self.env.base_value_candidates(query, y, tokens)))
            y = y + (tok,)
            if tok == vocab.eos:
                return y
        return y + (vocab.eos,)

    def observe(self, query: int, y: TokenSeq, reward: float) -> None:
        pass


class WrongThetaDecoder:
    """Exploit-only decoding under a fixed mis-specified parameter.

    Defaults to the environment's stock wrong parameter when present, else to
    the constant -0.5 vector.
    """

    name = "wrong_theta"

    def __init__(self, env, T: int, theta_wrong: np.ndarray | None = None):
        if theta_wrong is None:
            theta_wrong = getattr(env, "theta_wrong", None)
        if theta_wrong is None:
            theta_wrong = np.full(env.d, -0.5)
        theta_wrong = np.asarray(theta_wrong, dtype=float)
        if theta_wrong.shape != (env.d,):
            raise ValueError("theta_wrong dimension does not match the environment")
        self.env = env
        self.theta_wrong = theta_wrong

    def decode(self, query: int) -> TokenSeq:
        vocab = self.env.vocab
        tokens = np.arange(vocab.n)
        y: TokenSeq = ()
        while len(y) < self.env.L - 1:
            E = self.env.embed_candidates(query, y, tokens)
            tok = int(np.argmax(E @ self.theta_wrong))
            y = y + (tok,)
            if tok == vocab.eos:
                return y
        return y + (vocab.eos,)

    def observe(self, query: int, y: TokenSeq, reward: float) -> None:
        pass
