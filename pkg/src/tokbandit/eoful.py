"""Optimism-driven token-by-token decoding with a ridge linear reward model.

One reward observation per round (for the full submitted sequence) feeds a
regularized least-squares estimate. Decoding walks the sequence left to right;
at each position every one-token extension is scored by the closed-form upper
confidence bound

    score(e) = <theta_hat, e> + sqrt(beta_t) * ||e||_{Sigma_t^{-1}}

and the argmax token (lowest index on ties) is committed irrevocably. Before
any observation the confidence set is the origin alone, so every score is 0
and round 1 deterministically emits token 0 up to the length cap.
"""

from __future__ import annotations

import math

import numpy as np

from .core import TokenSeq


class RidgeUcb:
    """Ridge regression state shared by the token-level and block decoders."""

    def __init__(self, d: int, L: int, sigma: float, lam: float = 1.0,
                 delta: float = 0.1, beta_schedule: str = "horizon"):
        if lam <= 0:
            raise ValueError("lam must be positive")
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if beta_schedule not in ("horizon", "per_round"):
            raise ValueError(f"unknown beta schedule {beta_schedule!r}")
        self.d = int(d)
        self.L = int(L)
        self.sigma = float(sigma)
        self.lam = float(lam)
        self.delta = float(delta)
        self.beta_schedule = beta_schedule
        self.Sigma = lam * np.eye(self.d)
        self.Sigma_inv = np.eye(self.d) / lam
        self.xty = np.zeros(self.d)
        self.theta_hat = np.zeros(self.d)
        self.t = 1  # current round, == number of updates + 1
        self.log_factors: list[float] = []

    def beta(self, t: int | None = None) -> float:
        """Confidence radius at round t for sub-|sigma|-bounded noise."""
        t = self.t if t is None else int(t)
        if self.beta_schedule == "per_round":
            delta_t = 6.0 * self.delta / (math.pi**2 * t**2)
        else:
            delta_t = self.delta
        return self.sigma**2 * (
            2.0 + 4.0 * self.d * math.log(1.0 + t * self.L / self.d)
            + 8.0 * math.log(4.0 / delta_t)
        )

    def mahalanobis_sq(self, E: np.ndarray) -> np.ndarray:
        E = np.atleast_2d(E)
        return np.einsum("ij,jk,ik->i", E, self.Sigma_inv, E)

    def scores(self, E: np.ndarray) -> np.ndarray:
        """UCB scores for the rows of E; all zero before the first update."""
        E = np.atleast_2d(E)
        if self.t == 1:
            return np.zeros(E.shape[0])
        width = np.sqrt(np.clip(self.mahalanobis_sq(E), 0.0, None))
        return E @ self.theta_hat + math.sqrt(self.beta()) * width

    def update(self, e: np.ndarray, reward: float) -> float:
        """Absorb one (embedding, reward) pair; returns the pre-update leverage
        w_t = e^T Sigma_t^{-1} e, whose running product tracks det(Sigma)."""
        e = np.asarray(e, dtype=float)
        w = float(e @ self.Sigma_inv @ e)
        self.Sigma += np.outer(e, e)
        self.Sigma_inv = np.linalg.inv(self.Sigma)
        self.xty += reward * e
        self.theta_hat = self.Sigma_inv @ self.xty
        self.log_factors.append(math.log1p(w))
        self.t += 1
        return w

    def covered(self, theta: np.ndarray) -> bool:
        """Whether theta sits inside the current confidence ellipsoid."""
        diff = np.asarray(theta, dtype=float) - self.theta_hat
        return float(diff @ self.Sigma @ diff) <= self.beta()

    def logdet_ratio(self) -> float:
        """log det(Sigma_t) - log det(lam I), via the accumulated leverages."""
        return float(sum(self.log_factors))


def ucb_decode(model: RidgeUcb, env, query: int, top_k: int | None = None) -> TokenSeq:
    """Left-to-right decode under the model's UCB scores.

    Positions up to L-1 choose freely among all tokens (argmax, lowest index on
    ties); reaching the cap commits eos so the output is always complete. With
    top_k set, each position first narrows the candidates to the k best by the
    env's ranker (or by UCB score when the env has none).
    """
    vocab = env.vocab
    all_tokens = np.arange(vocab.n)
    y: TokenSeq = ()
    while len(y) < env.L - 1:
        tokens = all_tokens
        if top_k is not None and top_k < vocab.n:
            ranker = getattr(env, "ranker", None)
            if ranker is not None:
                rank = np.asarray(ranker(query, y, tokens))
            else:
                rank = model.scores(env.embed_candidates(query, y, tokens))
            keep = np.argsort(-rank, kind="stable")[:top_k]
            tokens = all_tokens[np.sort(keep)]
        E = env.embed_candidates(query, y, tokens)
        tok = int(tokens[np.argmax(model.scores(E))])
        y = y + (tok,)
        if tok == vocab.eos:
            return y
    return y + (vocab.eos,)


class EofulDecoder:
    """Round-based wrapper: decode, then observe the paid reward."""

    name = "eoful"

    def __init__(self, env, T: int, lam: float = 1.0, delta: float | None = None,
                 beta_schedule: str = "horizon", top_k: int | None = None):
        self.env = env
        self.top_k = top_k
        if delta is None:
            delta = 1.0 / T
        self.model = RidgeUcb(env.d, env.L, env.sigma, lam=lam, delta=delta,
                              beta_schedule=beta_schedule)

    def decode(self, query: int) -> TokenSeq:
        return ucb_decode(self.model, self.env, query, top_k=self.top_k)

    def observe(self, query: int, y: TokenSeq, reward: float) -> None:
        self.model.update(self.env.embed(query, y), reward)

    @property
    def beta_used(self) -> float:
        return self.model.beta()

    def covered(self) -> bool:
        return self.model.covered(self.env.theta)
