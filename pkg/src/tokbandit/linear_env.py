"""Synthetic linear-reward environments over token sequences.

An environment serves a query per round, exposes an embedding e(query, seq)
with bounded norm, and pays a bounded-noise reward for a complete submitted
sequence whose mean is the inner product of a hidden unit-ball parameter with
the embedding. Utilities are white-box here (the point of the simulator is to
check decoders and structural assumptions against the truth), so every env
also exposes ``utility_of`` directly.

Families
--------
affine
    One affine rule per (position, token): u(s:tau) = alpha[k][tau]*u(s) +
    b[k][tau], folded over the raw sequence, eos rule = identity. With
    b = (1-alpha)*anchor and all values above the anchor this family satisfies
    the difference-contraction property exactly for every same-length pair and
    every appended token, keeps eos-append idempotent, and strictly decreases
    when a finished sequence is extended with a regular token.
needle
    A per-query hidden leaf at full depth carries all the signal (embedding is
    a fixed one-hot), its sibling carries 1-eps of it, everything else embeds
    to zero. Deliberately violates difference contraction; used as the
    hard-instance control.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    TokenSeq,
    Vocab,
    canonicalize,
    complete_sequences,
    count_complete_sequences,
    first_deviation_level,
    is_complete,
    rng_from,
    validate_tokens,
)


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean reward noise with a hard bound at +-sigma."""

    kind: str = "uniform"
    sigma: float = 0.1

    def __post_init__(self):
        if self.kind not in ("uniform", "truncated_gaussian"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def sample(self, rng: np.random.Generator) -> float:
        if self.sigma == 0.0:
            return 0.0
        if self.kind == "uniform":
            return float(rng.uniform(-self.sigma, self.sigma))
        # rejection-sampled normal, scale sigma/2, support clipped to the bound
        while True:
            x = rng.normal(0.0, self.sigma / 2.0)
            if abs(x) <= self.sigma:
                return float(x)


class AffineLevelRule:
    """Per-(position, token) affine value evolution.

    ``alpha`` and ``b`` have one row per position (0-based; folds past the last
    row clamp to it) and one column per token. The eos column must be the
    identity rule (alpha 1, b 0), which makes eos padding value-neutral.
    """

    def __init__(self, alpha: np.ndarray, b: np.ndarray, base: float, vocab: Vocab):
        alpha = np.asarray(alpha, dtype=float)
        b = np.asarray(b, dtype=float)
        if alpha.shape != b.shape or alpha.ndim != 2 or alpha.shape[1] != vocab.n:
            raise ValueError("alpha and b must both be (rows, n)")
        if np.any(alpha < 0.0) or np.any(alpha > 1.0):
            raise ValueError("alpha entries must lie in [0, 1]")
        if not (np.all(alpha[:, vocab.eos] == 1.0) and np.all(b[:, vocab.eos] == 0.0)):
            raise ValueError("eos column must be the identity rule")
        self.alpha = alpha
        self.b = b
        self.base = float(base)
        self.vocab = vocab
        self.query_dependent = False

    def _row(self, pos: int) -> int:
        return min(pos, self.alpha.shape[0] - 1)

    def value(self, query: int, seq: Sequence[int]) -> float:
        v = self.base
        for pos, tok in enumerate(seq):
            r = self._row(pos)
            v = self.alpha[r, tok] * v + self.b[r, tok]
        return float(v)

    def value_candidates(self, query: int, prefix: Sequence[int], tokens) -> np.ndarray:
        """Values of prefix+(tok,) for each tok, one fold shared by all."""
        v = self.value(query, prefix)
        r = self._row(len(prefix))
        tokens = np.asarray(tokens, dtype=int)
        return self.alpha[r, tokens] * v + self.b[r, tokens]

    def prefix_values(self, query: int, seq: Sequence[int]) -> np.ndarray:
        """Values of seq[:1], seq[:2], ..., seq itself."""
        out = np.empty(len(seq))
        v = self.base
        for pos, tok in enumerate(seq):
            r = self._row(pos)
            v = self.alpha[r, tok] * v + self.b[r, tok]
            out[pos] = v
        return out


class TableUtility:
    """Utility read from a table over canonical complete sequences.

    Prefixes score 0; extending a finished sequence with a regular token halves
    the value per extra token, so the monotonicity checks see a strict decrease.
    """

    def __init__(self, table: dict, vocab: Vocab, default: float = 0.0):
        self.table = {tuple(k): float(v) for k, v in table.items()}
        self.vocab = vocab
        self.default = float(default)
        self.query_dependent = False

    def value(self, query: int, seq: Sequence[int]) -> float:
        seq = tuple(seq)
        canon = canonicalize(seq, self.vocab)
        if not is_complete(canon, self.vocab):
            return 0.0
        v = self.table.get(canon, self.default)
        junk = sum(1 for t in seq[len(canon):] if t != self.vocab.eos)
        return v * (0.5**junk)

    def value_candidates(self, query: int, prefix: Sequence[int], tokens) -> np.ndarray:
        return np.array([self.value(query, tuple(prefix) + (int(t),)) for t in tokens])


class TargetEmbedding:
    """e(query, seq) = w + (u / ||theta||^2) * theta with w orthogonal to theta.

    The orthogonal part is a deterministic function of (seed, query, parent
    prefix, token): one Gaussian matrix is drawn per (query, parent) and the
    candidate rows all come from it, so scoring a batch of one-token extensions
    and later re-embedding the chosen sequence agree bit for bit. Row norms are
    scaled so ||e|| <= norm_budget always holds.
    """

    def __init__(self, theta: np.ndarray, util, vocab: Vocab, seed: int,
                 norm_budget: float = 1.0, w_frac: tuple = (0.3, 0.9)):
        self.theta = np.asarray(theta, dtype=float)
        self.theta_nsq = float(self.theta @ self.theta)
        if self.theta_nsq == 0.0:
            raise ValueError("theta must be nonzero")
        if np.linalg.norm(self.theta) > 1.0 + 1e-12:
            raise ValueError("theta must lie in the unit ball")
        self.util = util
        self.vocab = vocab
        self.seed = int(seed)
        self.norm_budget = float(norm_budget)
        self.w_frac = w_frac
        self.d = self.theta.shape[0]

    def _w_matrix(self, query: int, parent: TokenSeq) -> np.ndarray:
        rng = rng_from(self.seed, "w", int(query), tuple(parent))
        raw = rng.standard_normal((self.vocab.n, self.d))
        frac = rng.uniform(self.w_frac[0], self.w_frac[1], size=self.vocab.n)
        unit_theta = self.theta / np.sqrt(self.theta_nsq)
        raw -= np.outer(raw @ unit_theta, unit_theta)
        norms = np.linalg.norm(raw, axis=1)
        norms[norms == 0.0] = 1.0
        return (raw / norms[:, None]) * frac[:, None]

    def embed_candidates(self, query: int, prefix: Sequence[int], tokens) -> np.ndarray:
        prefix = tuple(prefix)
        tokens = np.asarray(tokens, dtype=int)
        u = np.asarray(self.util.value_candidates(query, prefix, tokens), dtype=float)
        budget_sq = self.norm_budget**2 - u**2 / self.theta_nsq
        if np.any(budget_sq < -1e-12):
            raise ValueError("utility bound exceeds scaling budget")
        allow = np.sqrt(np.clip(budget_sq, 0.0, None))
        w = self._w_matrix(query, prefix)[tokens]
        return w * allow[:, None] + np.outer(u / self.theta_nsq, self.theta)

    def embed(self, query: int, seq: Sequence[int]) -> np.ndarray:
        seq = tuple(seq)
        if not seq:
            u = self.util.value(query, seq)
            return (u / self.theta_nsq) * self.theta
        return self.embed_candidates(query, seq[:-1], [seq[-1]])[0]


class NeedleEmbedding:
    """Per-query hidden full-depth leaf with a one-hot embedding.

    The sibling sharing all but the last regular token embeds to (1-eps) on the
    same coordinate; every other sequence embeds to zero.
    """

    def __init__(self, vocab: Vocab, L: int, d: int, eps: float, seed: int):
        if vocab.n != 3:
            raise ValueError("needle instances use two regular tokens plus eos")
        if L < 3:
            raise ValueError("needle instances need depth at least 3")
        self.vocab = vocab
        self.L = int(L)
        self.d = int(d)
        self.eps = float(eps)
        self.seed = int(seed)
        self.theta = np.zeros(self.d)
        self.theta[0] = 1.0
        self.query_dependent = True
        self._pair_cache: dict[int, tuple[TokenSeq, TokenSeq]] = {}

    def _pair(self, query: int) -> tuple[TokenSeq, TokenSeq]:
        hit = self._pair_cache.get(query)
        if hit is None:
            rng = rng_from(self.seed, "hidden", query)
            bits = rng.integers(0, 2, size=self.L - 1)
            regs = self.vocab.regular
            leaf = tuple(regs[b] for b in bits) + (self.vocab.eos,)
            flip = regs[1] if leaf[-2] == regs[0] else regs[0]
            hit = (leaf, leaf[:-2] + (flip, self.vocab.eos))
            self._pair_cache[query] = hit
        return hit

    def hidden_leaf(self, query: int) -> TokenSeq:
        return self._pair(int(query))[0]

    def sibling(self, query: int) -> TokenSeq:
        return self._pair(int(query))[1]

    def value(self, query: int, seq: Sequence[int]) -> float:
        canon = canonicalize(tuple(seq), self.vocab)
        if canon == self.hidden_leaf(query):
            return 1.0
        if canon == self.sibling(query):
            return 1.0 - self.eps
        return 0.0

    def value_candidates(self, query: int, prefix: Sequence[int], tokens) -> np.ndarray:
        return np.array([self.value(query, tuple(prefix) + (int(t),)) for t in tokens])

    def embed_candidates(self, query: int, prefix: Sequence[int], tokens) -> np.ndarray:
        u = self.value_candidates(query, prefix, tokens)
        out = np.zeros((len(u), self.d))
        out[:, 0] = u
        return out

    def embed(self, query: int, seq: Sequence[int]) -> np.ndarray:
        out = np.zeros(self.d)
        out[0] = self.value(query, seq)
        return out


@dataclass
class LinearEnv:
    """A query-conditioned linear-reward environment over token sequences."""

    vocab: Vocab
    L: int
    d: int
    theta: np.ndarray
    util: object
    emb: object
    noise: NoiseModel
    seed: int
    family: str
    eps: float = float("nan")
    ddmc_variant: str = "ddmc"
    k: int = 1
    query_pool: int = 1000
    opt_cap: int = 10**6
    ranker: Callable | None = None
    _opt_cache: dict = field(default_factory=dict, repr=False)

    @property
    def sigma(self) -> float:
        return self.noise.sigma

    @property
    def opt_certified(self) -> bool:
        return count_complete_sequences(self.vocab, self.L) <= self.opt_cap

    def sample_query(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.query_pool))

    def utility_of(self, query: int, seq: Sequence[int]) -> float:
        return self.util.value(query, seq)

    def utility_candidates(self, query: int, prefix: Sequence[int], tokens) -> np.ndarray:
        return self.util.value_candidates(query, prefix, tokens)

    def embed(self, query: int, seq: Sequence[int]) -> np.ndarray:
        return self.emb.embed(query, seq)

    def embed_candidates(self, query: int, prefix: Sequence[int], tokens) -> np.ndarray:
        return self.emb.embed_candidates(query, prefix, tokens)

    def sample_reward(self, query: int, seq: Sequence[int], rng: np.random.Generator) -> float:
        seq = validate_tokens(seq, self.vocab)
        if not is_complete(canonicalize(seq, self.vocab), self.vocab):
            raise ValueError("reward requires a complete sequence")
        return self.util.value(query, seq) + self.noise.sample(rng)

    def opt_value(self, query: int) -> float:
        key = int(query) if getattr(self.util, "query_dependent", True) else -1
        if key in self._opt_cache:
            return self._opt_cache[key]
        if self.opt_certified:
            best = max(self.util.value(key if key != -1 else query, s)
                       for s in complete_sequences(self.vocab, self.L))
        else:
            best = self._greedy_reference(query)
        self._opt_cache[key] = best
        return best

    def _greedy_reference(self, query: int) -> float:
        # fallback benchmark for non-enumerable instances, flagged upstream
        y: TokenSeq = ()
        while len(y) < self.L - 1:
            cand = self.util.value_candidates(query, y, np.arange(self.vocab.n))
            tok = int(np.argmax(cand))
            y = y + (tok,)
            if tok == self.vocab.eos:
                return self.util.value(query, y)
        return self.util.value(query, y + (self.vocab.eos,))


def gen_affine_rule(
    vocab: Vocab,
    L: int,
    eps: float,
    seed: int,
    *,
    base: float = 0.9,
    anchor: float = 0.3,
    alpha_range: tuple = (0.55, 0.95),
) -> AffineLevelRule:
    """Random anchor-pulling rule whose level-1 spread is capped at eps."""
    if not 0.0 < anchor < base <= 1.0:
        raise ValueError("need 0 < anchor < base <= 1")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    n = vocab.n
    rng = rng_from(seed, "affine-rule")
    rows = L + 2
    alpha = np.ones((rows, n))
    b = np.zeros((rows, n))
    lvl1_floor = 1.0 if eps == 0.0 else max(alpha_range[0], 1.0 - eps / (base - anchor))
    for tok in vocab.regular:
        alpha[0, tok] = rng.uniform(lvl1_floor, 1.0)
        alpha[1:, tok] = rng.uniform(alpha_range[0], alpha_range[1], size=rows - 1)
        b[:, tok] = (1.0 - alpha[:, tok]) * anchor
    return AffineLevelRule(alpha, b, base, vocab)


def gen_affine_ddmc_env(
    n: int,
    L: int,
    d: int,
    sigma: float,
    eps: float,
    seed: int,
    *,
    noise: str = "uniform",
    query_pool: int = 1000,
    base: float = 0.9,
    anchor: float = 0.3,
    alpha_range: tuple = (0.55, 0.95),
    w_frac: tuple = (0.3, 0.9),
) -> LinearEnv:
    """Difference-contracting instance with first-deviation gaps bounded by eps.

    All offsets pull toward one shared anchor strictly below every attainable
    value, so values only decay, finished-then-extended sequences strictly
    decrease, and the level-1 alpha floor pins the value spread reachable in
    one deviation from the optimum (stop immediately) to at most eps.
    w_frac=(0, 0) drops the embedding component orthogonal to theta, making
    embedding distances exact multiples of utility gaps.
    """
    vocab = Vocab(n)
    rule = gen_affine_rule(vocab, L, eps, seed, base=base, anchor=anchor,
                           alpha_range=alpha_range)
    theta_raw = rng_from(seed, "theta").standard_normal(d)
    theta = theta_raw / np.linalg.norm(theta_raw)
    emb = TargetEmbedding(theta, rule, vocab, seed, w_frac=w_frac)
    return LinearEnv(
        vocab=vocab, L=L, d=d, theta=theta, util=rule, emb=emb,
        noise=NoiseModel(noise, sigma), seed=seed, family="affine",
        eps=eps, ddmc_variant="ddmc", query_pool=query_pool,
    )


def gen_needle_env(
    L: int,
    d: int = 2,
    seed: int = 0,
    *,
    eps: float = 0.0,
    sigma: float = 0.0,
    noise: str = "uniform",
    query_pool: int = 1000,
) -> LinearEnv:
    """Hidden-leaf instance: per-query needle at full depth, sibling at 1-eps.

    The per-round optimum is always 1, so a horizon of T has hindsight value T,
    while blind guessing lands in the needle's subtree once per 2^(L-2) tries.
    """
    vocab = Vocab(3)
    ne = NeedleEmbedding(vocab, L, d, eps, seed)
    return LinearEnv(
        vocab=vocab, L=L, d=d, theta=ne.theta, util=ne, emb=ne,
        noise=NoiseModel(noise, sigma), seed=seed, family="needle",
        eps=eps, ddmc_variant="none", query_pool=query_pool,
    )


class KBlockRule:
    """Affine value evolution at k-token block granularity.

    The value folds once per completed block: v <- anchor + alpha[j][block] *
    (v - anchor), indexed by block position j and block content. A trailing
    partial block carries the value unchanged, so single-token extensions
    inside a block are value-blind until the block closes. Blocks of the form
    (tail ending in eos, then eos padding) must be identity (alpha 1): those
    are exactly the blocks eos-padding of a finished sequence can close.
    """

    def __init__(self, k: int, alpha: np.ndarray, base: float, anchor: float, vocab: Vocab):
        alpha = np.asarray(alpha, dtype=float)
        if k < 1:
            raise ValueError("k must be at least 1")
        if alpha.ndim != 2 or alpha.shape[1] != vocab.n**k:
            raise ValueError("alpha must be (rows, n^k)")
        if np.any(alpha <= 0.0) or np.any(alpha > 1.0):
            raise ValueError("alpha entries must lie in (0, 1]")
        for block in _padding_reachable_blocks(vocab, k):
            idx = _block_index(block, vocab.n)
            if not np.all(alpha[:, idx] == 1.0):
                raise ValueError(f"padding-reachable block {block} must be identity")
        self.k = int(k)
        self.alpha = alpha
        self.base = float(base)
        self.anchor = float(anchor)
        self.vocab = vocab
        self.query_dependent = False

    def _row(self, j: int) -> int:
        return min(j, self.alpha.shape[0] - 1)

    def value(self, query: int, seq: Sequence[int]) -> float:
        v = self.base
        n = self.vocab.n
        for j in range(len(seq) // self.k):
            block = seq[j * self.k:(j + 1) * self.k]
            a = self.alpha[self._row(j), _block_index(block, n)]
            if a != 1.0:  # identity folds stay bit-exact
                v = self.anchor + a * (v - self.anchor)
        return float(v)

    def value_candidates(self, query: int, prefix: Sequence[int], tokens) -> np.ndarray:
        prefix = tuple(prefix)
        tokens = np.asarray(tokens, dtype=int)
        if (len(prefix) + 1) % self.k != 0:
            return np.full(len(tokens), self.value(query, prefix))
        j = len(prefix) // self.k
        v = self.value(query, prefix[: j * self.k])
        tail = prefix[j * self.k:]
        n = self.vocab.n
        idx = np.array([_block_index(tail + (int(t),), n) for t in tokens])
        a = self.alpha[self._row(j), idx]
        return np.where(a == 1.0, v, self.anchor + a * (v - self.anchor))


def _block_index(block: Sequence[int], n: int) -> int:
    idx = 0
    for tok in block:
        idx = idx * n + int(tok)
    return idx


def _padding_reachable_blocks(vocab: Vocab, k: int):
    """Blocks (t + eos-fill) with t ending in eos: closable purely by padding."""
    import itertools

    out = [(vocab.eos,) * k]
    for tlen in range(1, k):
        for head in itertools.product(range(vocab.n), repeat=tlen - 1):
            t = head + (vocab.eos,)
            out.append(t + (vocab.eos,) * (k - tlen))
    return out


def gen_k_ddmc_env(
    n: int,
    L: int,
    d: int,
    k: int,
    sigma: float,
    seed: int,
    *,
    eps: float = 0.0,
    noise: str = "uniform",
    query_pool: int = 1000,
    base: float = 0.9,
    anchor: float = 0.3,
    alpha_range: tuple = (0.25, 0.45),
) -> LinearEnv:
    """Block-contracting instance separating block decoding from token decoding.

    One favored regular block per position (second regular token, then first
    ones) keeps the full value; every other regular block and every early stop
    through a regular-then-eos block decays hard. Token-level extensions inside
    a block all carry the same value, so a one-token-ahead decoder gets no
    utility signal at block starts while a k-token-ahead decoder sees the
    favored block directly.
    """
    if n**k > 4096:
        raise ValueError("block table too large; reduce n or k")
    vocab = Vocab(n)
    regs = vocab.regular
    if k > 1 and len(regs) < 2:
        raise ValueError("need at least two regular tokens")
    rng = rng_from(seed, "kblock-rule")
    import itertools

    rows = (L + 1) // k + 2
    alpha = np.ones((rows, n**k))
    identity = {tuple(b) for b in _padding_reachable_blocks(vocab, k)}
    for block in itertools.product(range(n), repeat=k):
        if block in identity or block[0] == vocab.eos:
            continue  # padding-reachable and post-stop blocks stay neutral
        alpha[:, _block_index(block, n)] = rng.uniform(
            alpha_range[0], alpha_range[1], size=rows)
    plateau = (regs[1],) + (regs[0],) * (k - 1) if k > 1 else (regs[1],)
    alpha[:, _block_index(plateau, n)] = 1.0
    rule = KBlockRule(k, alpha, base, anchor, vocab)
    theta_raw = rng_from(seed, "theta").standard_normal(d)
    theta = theta_raw / np.linalg.norm(theta_raw)
    emb = TargetEmbedding(theta, rule, vocab, seed)
    return LinearEnv(
        vocab=vocab, L=L, d=d, theta=theta, util=rule, emb=emb,
        noise=NoiseModel(noise, sigma), seed=seed, family="k_block",
        eps=eps, ddmc_variant="k_ddmc", k=k, query_pool=query_pool,
    )


# ---------------------------------------------------------------------------
# structural assumption checks


@dataclass
class CheckOutcome:
    passed: bool
    checked: int
    max_violation: float
    witness: dict | None = None

    def to_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "checked": int(self.checked),
            "max_violation": float(self.max_violation),
            "witness": self.witness,
        }


@dataclass
class AssumptionReport:
    eos_identity: CheckOutcome
    eos_weak_decrease: CheckOutcome
    eos_strict_decrease: CheckOutcome
    ddmc: CheckOutcome
    ddmc_variant: str
    sld_max_gap: float
    sld_declared_eps: float
    sld_passed: bool | None
    mode: str

    def to_dict(self) -> dict:
        return {
            "eos_identity": self.eos_identity.to_dict(),
            "eos_weak_decrease": self.eos_weak_decrease.to_dict(),
            "eos_strict_decrease": self.eos_strict_decrease.to_dict(),
            "ddmc": self.ddmc.to_dict(),
            "ddmc_variant": self.ddmc_variant,
            "sld_max_gap": self.sld_max_gap,
            "sld_declared_eps": self.sld_declared_eps,
            "sld_passed": self.sld_passed,
            "mode": self.mode,
        }


def _all_length_m(n: int, m: int):
    import itertools

    return list(itertools.product(range(n), repeat=m))


def _contraction_check(
    u, vocab: Vocab, lengths: Iterable[int], step: int, tol: float,
    pair_cap: int, mode: str, sample_pairs: int, seed: int,
    eos_scored: bool = False, aligned_only_note: str = "",
) -> CheckOutcome:
    """Shared engine: |u(y+a) - u(z+a)| <= |u(y) - u(z)| + tol over same-length
    pairs, extensions running over all blocks a of the given step length.
    For eos_scored instances both sides are completed with eos before scoring.
    """
    n = vocab.n
    eos = vocab.eos

    def score(seq):
        return u(seq + (eos,)) if eos_scored else u(seq)

    checked = 0
    worst = -np.inf
    witness = None
    blocks = _all_length_m(n, step)
    lengths = list(lengths)
    if mode == "exhaustive":
        total = sum((n**m) * (n**m - 1) // 2 * len(blocks) for m in lengths)
        if total > pair_cap:
            raise ValueError(
                f"exhaustive contraction check needs {total} pair checks, over the cap "
                f"{pair_cap}; use mode='sampled'"
            )
        for m in lengths:
            seqs = _all_length_m(n, m)
            vals = np.array([score(s) for s in seqs])
            base_gap = np.abs(vals[:, None] - vals[None, :])
            for a in blocks:
                ext = np.array([score(s + a) for s in seqs])
                gap = np.abs(ext[:, None] - ext[None, :])
                viol = gap - base_gap
                np.fill_diagonal(viol, -np.inf)
                checked += len(seqs) * (len(seqs) - 1) // 2
                i, j = np.unravel_index(np.argmax(viol), viol.shape)
                if viol[i, j] > worst:
                    worst = float(viol[i, j])
                    witness = {
                        "len": m, "y": list(seqs[i]), "z": list(seqs[j]),
                        "appended": list(a),
                        "lhs": float(gap[i, j]), "rhs": float(base_gap[i, j]),
                    }
    else:
        rng = rng_from(seed, "contraction-sample")
        for _ in range(sample_pairs):
            m = int(rng.choice(lengths))
            y = tuple(rng.integers(0, n, size=m))
            z = tuple(rng.integers(0, n, size=m))
            if y == z:
                continue
            a = tuple(rng.integers(0, n, size=step))
            lhs = abs(score(y + a) - score(z + a))
            rhs = abs(score(y) - score(z))
            checked += 1
            if lhs - rhs > worst:
                worst = float(lhs - rhs)
                witness = {
                    "len": m, "y": list(y), "z": list(z), "appended": list(a),
                    "lhs": float(lhs), "rhs": float(rhs),
                }
    if worst == -np.inf:
        worst = 0.0
        witness = None
    if witness is not None and aligned_only_note:
        witness["domain"] = aligned_only_note
    passed = worst <= tol
    return CheckOutcome(passed=passed, checked=checked,
                        max_violation=max(worst, 0.0), witness=None if passed else witness)


def check_assumptions(
    env,
    mode: str = "exhaustive",
    tol: float = 1e-9,
    pair_cap: int = 10**6,
    sample_pairs: int = 20000,
    query: int = 0,
    seed: int = 0,
    variant: str | None = None,
) -> AssumptionReport:
    """Verify the structural assumptions against the env's white-box utility.

    Checks, with witnesses on failure:
      * eos identity: appending eos to a finished sequence keeps its value;
      * post-eos decrease: appending a regular token to a finished sequence
        never increases the value (reported both weakly and strictly);
      * difference contraction, in the variant the env declares (prefix form,
        eos-completed form, or block-aligned k-step form), or an explicit
        ``variant`` override;
      * first-deviation gaps against the env's declared eps (skipped when the
        instance is too large to enumerate).
    """
    vocab: Vocab = env.vocab
    L: int = env.L
    u = lambda seq: env.utility_of(query, seq)
    variant = variant or getattr(env, "ddmc_variant", "ddmc")

    # monotonicity around eos
    ident = CheckOutcome(True, 0, 0.0)
    weak = CheckOutcome(True, 0, 0.0)
    strict = CheckOutcome(True, 0, 0.0)
    id_worst = weak_worst = strict_worst = -np.inf
    enumerable = count_complete_sequences(vocab, L) <= pair_cap
    completes = list(complete_sequences(vocab, L)) if enumerable else []
    if not enumerable:
        rng = rng_from(seed, "mono-sample")
        regs = np.array(vocab.regular)
        for _ in range(min(sample_pairs, 2000)):
            m = int(rng.integers(0, L))
            body = tuple(int(t) for t in rng.choice(regs, size=m))
            completes.append(body + (vocab.eos,))
    for y in completes:
        vy = u(y)
        dev = abs(u(y + (vocab.eos,)) - vy)
        ident.checked += 1
        if dev > id_worst:
            id_worst = dev
            ident.witness = {"y": list(y), "dev": float(dev)}
        for tok in vocab.regular:
            inc = u(y + (tok,)) - vy
            weak.checked += 1
            strict.checked += 1
            if inc > weak_worst:
                weak_worst = inc
                weak.witness = strict.witness = {"y": list(y), "tau": tok, "increase": float(inc)}
            strict_worst = max(strict_worst, inc)
    ident.max_violation = max(float(id_worst), 0.0) if ident.checked else 0.0
    ident.passed = ident.max_violation <= tol
    weak.max_violation = max(float(weak_worst), 0.0) if weak.checked else 0.0
    weak.passed = weak.max_violation <= tol
    # strict violation is signed: negative values show the worst-case margin
    strict.max_violation = float(strict_worst) if strict.checked else 0.0
    strict.passed = bool(strict.checked) and float(strict_worst) < 0.0
    for chk in (ident, weak, strict):
        if chk.passed:
            chk.witness = None

    # difference contraction
    if variant == "ddmc" or variant == "none":
        ddmc = _contraction_check(
            u, vocab, range(1, max(L, 2)), 1, tol, pair_cap, mode, sample_pairs, seed)
        variant_name = "ddmc"
    elif variant == "ddmc_prime":
        ddmc = _contraction_check(
            u, vocab, range(1, max(L, 2)), 1, tol, pair_cap, mode, sample_pairs, seed,
            eos_scored=True)
        variant_name = "ddmc_prime"
    elif variant == "k_ddmc":
        k = int(getattr(env, "k", 1))
        aligned = [m for m in range(k, max(L, k + 1), k)]
        ddmc = _contraction_check(
            u, vocab, aligned, k, tol, pair_cap, mode, sample_pairs, seed,
            aligned_only_note="block-aligned prefixes")
        variant_name = f"k_ddmc(k={k})"
    else:
        raise ValueError(f"unknown contraction variant {variant!r}")

    # first-deviation gaps relative to the optimum
    sld_max = float("nan")
    sld_passed: bool | None = None
    declared = float(getattr(env, "eps", float("nan")))
    if enumerable and completes:
        vals = [(u(y), y) for y in complete_sequences(vocab, L)]
        best_v = max(v for v, _ in vals)
        # among tied optima prefer the shortest, then lexicographic: deviations
        # are measured against the earliest-stopping optimal sequence
        opt = min((y for v, y in vals if v == best_v), key=lambda y: (len(y), y))
        sld_max = 0.0
        pad = lambda s: s + (vocab.eos,) * (L - len(s))
        o = pad(opt)
        for _, y in vals:
            if y == opt:
                continue
            a = pad(y)
            i = first_deviation_level(o, a)
            if i is None:
                continue
            gap = abs(u(o[:i]) - u(a[:i]))
            sld_max = max(sld_max, gap)
        if not np.isnan(declared):
            sld_passed = sld_max <= declared + tol

    return AssumptionReport(
        eos_identity=ident,
        eos_weak_decrease=weak,
        eos_strict_decrease=strict,
        ddmc=ddmc,
        ddmc_variant=variant_name,
        sld_max_gap=sld_max,
        sld_declared_eps=declared,
        sld_passed=sld_passed,
        mode=mode,
    )
