"""Leaf-valued search trees and their reductions to sequence bandits.

A tree instance assigns nonnegative values to leaves of a fixed-arity tree
indexed level-order (root 0, children of i at arity*i+1 .. arity*i+arity).
Two static reductions connect these to the fixed-utility sequence setting:

* tree -> sequences: one vocabulary token per leaf plus eos; per-level
  injections encode tree nodes as tokens; a complete sequence scores the value
  of a leaf exactly when it spells the root-to-leaf path and stops, and scores
  zero otherwise. The existence of a value above any threshold is preserved.
* sequences -> tree: an n-ary tree whose child slots follow token indices,
  with a terminating value-bearing child per node for eos; every complete
  sequence becomes one leaf carrying its utility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import (
    TokenSeq,
    Vocab,
    canonicalize,
    complete_sequences,
    count_complete_sequences,
    rng_from,
)
from .linear_env import LinearEnv, NoiseModel, TargetEmbedding


@dataclass
class BtsInstance:
    """Fixed-arity tree with values on its leaves.

    leaf_values maps level-order node ids to values. The tree consists of the
    value-bearing leaves and their ancestors; leaves may sit above the declared
    depth (terminating nodes from the sequence reduction), but never below it,
    and no leaf may be an ancestor of another.
    """

    arity: int
    depth: int
    leaf_values: dict[int, float]

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be at least 1")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if not self.leaf_values:
            raise ValueError("tree needs at least one leaf value")
        self.leaf_values = {int(i): float(v) for i, v in self.leaf_values.items()}
        for i, v in self.leaf_values.items():
            if i < 0:
                raise ValueError(f"invalid node id {i}")
            if v < 0.0:
                raise ValueError(f"leaf {i} has negative value {v}")
            if self.node_depth(i) > self.depth:
                raise ValueError(f"leaf {i} lies below the declared depth")
        for i in self.leaf_values:
            node = i
            while node != 0:
                node = self.parent(node)
                if node in self.leaf_values:
                    raise ValueError(f"leaf {node} is an ancestor of leaf {i}")

    # --- level-order indexing -------------------------------------------

    def parent(self, i: int) -> int:
        if i <= 0:
            raise ValueError("root has no parent")
        return (i - 1) // self.arity

    def children(self, i: int) -> list[int]:
        return [self.arity * i + 1 + j for j in range(self.arity)]

    def node_depth(self, i: int) -> int:
        d = 0
        while i != 0:
            i = self.parent(i)
            d += 1
        return d

    def is_leaf(self, i: int) -> bool:
        return i in self.leaf_values

    def nodes(self) -> set[int]:
        """All node ids present: leaves and their ancestors."""
        out: set[int] = set()
        for i in self.leaf_values:
            while i not in out:
                out.add(i)
                if i == 0:
                    break
                i = self.parent(i)
        return out

    def level_nodes(self, d: int) -> list[int]:
        return sorted(i for i in self.nodes() if self.node_depth(i) == d)

    def subtree_leaves(self, i: int) -> list[int]:
        if self.is_leaf(i):
            return [i]
        present = self.nodes()
        out: list[int] = []
        stack = [i]
        while stack:
            node = stack.pop()
            if self.is_leaf(node):
                out.append(node)
                continue
            stack.extend(c for c in self.children(node) if c in present)
        return sorted(out)

    def max_value(self) -> float:
        return max(self.leaf_values.values())

    # --- serialization ---------------------------------------------------

    def is_uniform(self) -> bool:
        """True when the leaves are exactly the full bottom level."""
        first = (self.arity**self.depth - 1) // (self.arity - 1) if self.arity > 1 \
            else self.depth
        bottom = range(first, first + self.arity**self.depth)
        return set(self.leaf_values) == set(bottom)

    def to_json(self) -> str:
        if self.is_uniform():
            leaves = [self.leaf_values[i] for i in sorted(self.leaf_values)]
            return json.dumps({"arity": self.arity, "depth": self.depth,
                               "leaves": leaves})
        return json.dumps({"arity": self.arity, "depth": self.depth,
                           "leaf_map": {str(i): v for i, v in
                                        sorted(self.leaf_values.items())}})

    @classmethod
    def from_json(cls, text: str) -> "BtsInstance":
        obj = json.loads(text)
        arity, depth = int(obj["arity"]), int(obj["depth"])
        if "leaves" in obj:
            first = (arity**depth - 1) // (arity - 1) if arity > 1 else depth
            values = obj["leaves"]
            if len(values) != arity**depth:
                raise ValueError("leaf count does not match arity^depth")
            leaf_values = {first + j: float(v) for j, v in enumerate(values)}
        else:
            leaf_values = {int(i): float(v) for i, v in obj["leaf_map"].items()}
        return cls(arity, depth, leaf_values)


def gen_bts(arity: int, depth: int, seed: int,
            value_range: tuple = (0.0, 1.0)) -> BtsInstance:
    """Uniform-depth tree with independent uniform leaf values."""
    rng = rng_from(seed, "bts")
    first = (arity**depth - 1) // (arity - 1) if arity > 1 else depth
    count = arity**depth
    values = rng.uniform(value_range[0], value_range[1], size=count)
    return BtsInstance(arity, depth, {first + j: float(v) for j, v in enumerate(values)})


# ---------------------------------------------------------------------------
# tree -> sequence reduction


class BtsReducedUtility:
    """Sequence utility encoding a tree: path-spelling sequences score their
    leaf value, everything else scores zero, trailing eos is absorbed."""

    query_dependent = False

    def __init__(self, bts: BtsInstance, vocab: Vocab):
        self.bts = bts
        self.vocab = vocab
        # per level: node id -> token (level-order rank) and its inverse
        self.sigma: list[dict[int, int]] = [{}]
        self.sigma_inv: list[dict[int, int]] = [{}]
        for d in range(1, bts.depth + 1):
            nodes = bts.level_nodes(d)
            self.sigma.append({node: j for j, node in enumerate(nodes)})
            self.sigma_inv.append({j: node for j, node in enumerate(nodes)})

    def value(self, query: int, seq) -> float:
        y = tuple(int(t) for t in seq)
        while len(y) >= 2 and y[-1] == self.vocab.eos and y[-2] == self.vocab.eos:
            y = y[:-1]
        if not y or y[-1] != self.vocab.eos:
            return 0.0
        body = y[:-1]
        if self.vocab.eos in body:
            return 0.0
        m = len(body)
        if m == 0 or m > self.bts.depth:
            return 0.0
        leaf = self.sigma_inv[m].get(body[-1])
        if leaf is None or not self.bts.is_leaf(leaf):
            return 0.0
        node = leaf
        for k in range(m - 1, 0, -1):
            node = self.bts.parent(node)
            if self.sigma[k].get(node) != body[k - 1]:
                return 0.0
        return self.bts.leaf_values[leaf]

    def value_candidates(self, query: int, prefix, tokens) -> np.ndarray:
        return np.array([self.value(query, tuple(prefix) + (int(t),)) for t in tokens])


def bts_to_tmab(bts: BtsInstance, *, d: int = 4, sigma: float = 0.0,
                noise: str = "uniform", seed: int = 0) -> LinearEnv:
    """Encode a tree as a fixed-utility sequence environment.

    One token per leaf plus eos; length cap depth+1. For every leaf there is
    exactly one complete sequence with its value, so thresholds transfer both
    ways (all other sequences score zero and values are nonnegative).
    """
    if any(v > 1.0 for v in bts.leaf_values.values()):
        raise ValueError("leaf values must stay within [0, 1]")
    vocab = Vocab(len(bts.leaf_values) + 1)
    util = BtsReducedUtility(bts, vocab)
    theta_raw = rng_from(seed, "theta").standard_normal(d)
    theta = theta_raw / np.linalg.norm(theta_raw)
    emb = TargetEmbedding(theta, util, vocab, seed)
    return LinearEnv(
        vocab=vocab, L=bts.depth + 1, d=d, theta=theta, util=util, emb=emb,
        noise=NoiseModel(noise, sigma), seed=seed, family="bts-reduced",
        ddmc_variant="none", query_pool=1,
    )


def path_sequence(bts: BtsInstance, util: BtsReducedUtility, leaf: int) -> TokenSeq:
    """The unique complete sequence that spells the path to a leaf."""
    chain = [leaf]
    while chain[-1] != 0:
        chain.append(bts.parent(chain[-1]))
    chain = chain[::-1][1:]  # drop the root
    body = tuple(util.sigma[d + 1][node] for d, node in enumerate(chain))
    return body + (util.vocab.eos,)


# ---------------------------------------------------------------------------
# sequence -> tree reduction


def tmab_to_bts(env, cap: int = 10**6) -> BtsInstance:
    """Encode an enumerable fixed-utility environment as a tree.

    Child slots follow token indices; the eos slot is a terminating leaf. Each
    complete sequence maps to one leaf valued at its utility, so the maxima of
    the two sides coincide.
    """
    if getattr(env.util, "query_dependent", False):
        raise ValueError("reduction needs a query-independent utility")
    total = count_complete_sequences(env.vocab, env.L)
    if total > cap:
        raise ValueError(f"{total} complete sequences exceed cap {cap}")
    arity = env.vocab.n
    leaf_values: dict[int, float] = {}
    for y in complete_sequences(env.vocab, env.L):
        node = 0
        for tok in y:
            node = arity * node + 1 + int(tok)
        leaf_values[node] = float(env.utility_of(0, y))
    return BtsInstance(arity, env.L, leaf_values)


# ---------------------------------------------------------------------------
# smoothness diagnostic


@dataclass
class SmoothnessProfile:
    """Per-depth bounds on the value gap inside optimal-path subtrees."""

    delta: list[float] = field(default_factory=list)


def smoothness_profile(bts: BtsInstance) -> SmoothnessProfile:
    """delta_d = min over depth-d ancestors of an optimal leaf of
    (best value - worst leaf value in that ancestor's subtree)."""
    best = bts.max_value()
    optimal = [i for i, v in bts.leaf_values.items() if v == best]
    delta: list[float] = []
    for d in range(bts.depth + 1):
        anchors = set()
        for leaf in optimal:
            depth_l = bts.node_depth(leaf)
            if depth_l < d:
                continue
            node = leaf
            for _ in range(depth_l - d):
                node = bts.parent(node)
            anchors.add(node)
        if not anchors:
            delta.append(0.0)
            continue
        delta.append(min(
            best - min(bts.leaf_values[l] for l in bts.subtree_leaves(a))
            for a in anchors
        ))
    return SmoothnessProfile(delta=delta)
