"""Suffix-grouped distance statistics over embedding dumps.

Checks the difference-contraction property empirically: for pairs of token
sequences, embedding distances between same-length prefixes are grouped by how
many trailing tokens the prefixes share, and bucket means should not grow as
the shared suffix gets longer. Dumps are JSONL files of precomputed embedding
pairs; a companion generator emits dumps from the synthetic environments so
the whole pipeline runs self-contained.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .core import TokenSeq, rng_from

MONO_SLACK = 1e-12


@dataclass
class EmbeddingRecord:
    """One prefix pair: embeddings of x^(1:k) and y^(1:k) plus their grouping."""

    pair_id: str
    prefix_len: int
    common_suffix: int
    emb_x: np.ndarray
    emb_y: np.ndarray

    def __post_init__(self):
        self.pair_id = str(self.pair_id)
        self.prefix_len = int(self.prefix_len)
        self.common_suffix = int(self.common_suffix)
        self.emb_x = np.asarray(self.emb_x, dtype=float)
        self.emb_y = np.asarray(self.emb_y, dtype=float)
        if self.prefix_len < 1:
            raise ValueError("prefix_len must be at least 1")
        if not 0 <= self.common_suffix <= self.prefix_len:
            raise ValueError("common_suffix must lie in [0, prefix_len]")
        if self.emb_x.ndim != 1 or self.emb_x.shape != self.emb_y.shape:
            raise ValueError("emb_x and emb_y must be vectors of equal dimension")


def group_by_common_suffix(x: TokenSeq, y: TokenSeq) -> list[tuple[int, int]]:
    """(prefix_len, common_suffix) for every prefix length k in [1, |x|].

    The common suffix of x^(1:k) and y^(1:k) ends at position k, so it extends
    the previous one by one exactly when the k-th tokens agree.
    """
    x, y = tuple(x), tuple(y)
    if len(x) != len(y):
        raise ValueError("sequences must have equal length")
    out: list[tuple[int, int]] = []
    suffix = 0
    for k, (a, b) in enumerate(zip(x, y), start=1):
        suffix = suffix + 1 if a == b else 0
        out.append((k, suffix))
    return out


# ---------------------------------------------------------------------------
# distance metrics


def distance(ex, ey, metric: str = "l2", *, theta=None, p: float = 2.0,
             signed: bool = False) -> float:
    """Distance between two embeddings.

    d1 is the inner product of theta (default all-ones) with the difference,
    reported as an absolute value unless signed=True; l2 and lp are the usual
    norms of the difference.
    """
    ex = np.asarray(ex, dtype=float)
    ey = np.asarray(ey, dtype=float)
    if ex.shape != ey.shape:
        raise ValueError("embedding dimensions differ")
    diff = ex - ey
    if metric == "d1":
        t = np.ones_like(diff) if theta is None else np.asarray(theta, dtype=float)
        if t.shape != diff.shape:
            raise ValueError("theta dimension differs from the embeddings")
        val = float(t @ diff)
        return val if signed else abs(val)
    if metric == "l2":
        return float(np.linalg.norm(diff))
    if metric == "lp":
        return float(np.sum(np.abs(diff) ** p) ** (1.0 / p))
    raise ValueError(f"unknown metric {metric!r}")


def metric_label(metric: str, *, p: float = 2.0, signed: bool = False) -> str:
    if metric == "d1":
        return "d1_signed" if signed else "d1"
    if metric == "l2":
        return "l2"
    if metric == "lp":
        return f"l{p:g}"
    raise ValueError(f"unknown metric {metric!r}")


# ---------------------------------------------------------------------------
# streaming aggregation


@dataclass
class BucketStat:
    """Streaming count/mean/variance accumulator (Welford)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push(self, x: float):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @property
    def variance(self) -> float:
        return self.m2 / self.count if self.count else 0.0

    def merge(self, other: "BucketStat") -> "BucketStat":
        if self.count == 0:
            return BucketStat(other.count, other.mean, other.m2)
        if other.count == 0:
            return BucketStat(self.count, self.mean, self.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return BucketStat(n, mean, m2)


@dataclass
class SuffixStats:
    """Per-bucket distance statistics keyed by common-suffix count."""

    metric: str
    buckets: dict[int, BucketStat] = field(default_factory=dict)

    def push(self, bucket: int, x: float):
        self.buckets.setdefault(bucket, BucketStat()).push(x)

    def merge(self, other: "SuffixStats") -> "SuffixStats":
        if self.metric != other.metric:
            raise ValueError("cannot merge stats of different metrics")
        out = SuffixStats(self.metric)
        for s in set(self.buckets) | set(other.buckets):
            a = self.buckets.get(s, BucketStat())
            out.buckets[s] = a.merge(other.buckets.get(s, BucketStat()))
        return out

    def monotonicity_score(self) -> float:
        """Fraction of adjacent populated buckets (s, s+1) whose means do not
        increase; vacuously 1.0 with fewer than two buckets."""
        pairs = [(s, s + 1) for s in sorted(self.buckets) if s + 1 in self.buckets]
        if not pairs:
            return 1.0
        ok = sum(1 for s, t in pairs
                 if self.buckets[t].mean <= self.buckets[s].mean + MONO_SLACK)
        return ok / len(pairs)

    def to_rows(self, dump_id: str) -> list[dict]:
        return [
            {"bucket": s, "count": b.count, "mean": b.mean,
             "variance": b.variance, "metric": self.metric, "dump_id": dump_id}
            for s, b in sorted(self.buckets.items())
        ]


def aggregate(records, metric: str = "l2", *, theta=None, p: float = 2.0,
              signed: bool = False) -> SuffixStats:
    """Pooled per-bucket statistics over a stream of records."""
    stats = SuffixStats(metric_label(metric, p=p, signed=signed))
    for rec in records:
        d = distance(rec.emb_x, rec.emb_y, metric, theta=theta, p=p, signed=signed)
        stats.push(rec.common_suffix, d)
    if not stats.buckets:
        raise ValueError("no records to aggregate")
    return stats


@dataclass
class DumpAnalysis:
    """Pooled statistics plus a per-prefix-length breakdown."""

    pooled: SuffixStats
    by_prefix_len: dict[int, SuffixStats]
    signed: bool

    def to_summary(self, dump_id: str) -> dict:
        def block(stats: SuffixStats) -> dict:
            return {
                "monotonicity_score": stats.monotonicity_score(),
                "buckets": {
                    str(s): {"count": b.count, "mean": b.mean, "variance": b.variance}
                    for s, b in sorted(stats.buckets.items())
                },
            }

        return {
            "dump_id": dump_id,
            "metric": self.pooled.metric,
            "d1_signed": self.signed,
            "pooled": block(self.pooled),
            "by_prefix_len": {str(k): block(v)
                              for k, v in sorted(self.by_prefix_len.items())},
        }


def analyze(records, metric: str = "l2", *, theta=None, p: float = 2.0,
            signed: bool = False) -> DumpAnalysis:
    """Single pass computing pooled and prefix-length-stratified statistics."""
    label = metric_label(metric, p=p, signed=signed)
    pooled = SuffixStats(label)
    strata: dict[int, SuffixStats] = {}
    for rec in records:
        d = distance(rec.emb_x, rec.emb_y, metric, theta=theta, p=p, signed=signed)
        pooled.push(rec.common_suffix, d)
        strata.setdefault(rec.prefix_len, SuffixStats(label)).push(rec.common_suffix, d)
    if not pooled.buckets:
        raise ValueError("no records to aggregate")
    return DumpAnalysis(pooled=pooled, by_prefix_len=strata, signed=signed)


# ---------------------------------------------------------------------------
# dump files


def ingest(path):
    """Stream records from a JSONL dump, failing with the offending line number."""
    dim: int | None = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            missing = [k for k in
                       ("pair_id", "prefix_len", "common_suffix", "emb_x", "emb_y")
                       if k not in obj]
            if missing:
                raise ValueError(f"line {lineno}: missing fields {missing}")
            try:
                rec = EmbeddingRecord(obj["pair_id"], obj["prefix_len"],
                                      obj["common_suffix"], obj["emb_x"], obj["emb_y"])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from exc
            if dim is None:
                dim = rec.emb_x.shape[0]
            elif rec.emb_x.shape[0] != dim:
                raise ValueError(
                    f"line {lineno}: dimension {rec.emb_x.shape[0]} differs from "
                    f"earlier records ({dim})")
            yield rec


def write_dump(records, path):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps({
                "pair_id": rec.pair_id,
                "prefix_len": rec.prefix_len,
                "common_suffix": rec.common_suffix,
                "emb_x": list(rec.emb_x),
                "emb_y": list(rec.emb_y),
            }) + "\n")


def write_stats_csv(stats: SuffixStats, path, dump_id: str):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["bucket", "count", "mean", "variance", "metric", "dump_id"])
        writer.writeheader()
        for row in stats.to_rows(dump_id):
            row["mean"] = f"{row['mean']:.17g}"
            row["variance"] = f"{row['variance']:.17g}"
            writer.writerow(row)


def write_summary_json(analysis: DumpAnalysis, path, dump_id: str):
    with open(path, "w") as fh:
        json.dump(analysis.to_summary(dump_id), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# synthetic dump generation


def gen_dump(env, pairs: int, seed: int, *, diverge_at: int = 2,
             query: int = 0) -> list[EmbeddingRecord]:
    """Prefix-embedding pairs from a synthetic environment.

    Each pair is two full-length sequences equal everywhere except at one
    position, so prefix k shares a suffix of k - diverge_at tokens. Prefixes
    before the divergence are identical and carry no distance signal, so no
    records are emitted for them; every bucket then has one sample per pair and
    on difference-contracting environments with collinear embeddings the bucket
    means are nonincreasing by construction.
    """
    vocab = env.vocab
    if len(vocab.regular) < 2:
        raise ValueError("need at least two regular tokens to diverge")
    if not 1 <= diverge_at <= env.L - 1:
        raise ValueError("diverge_at must name a body position")
    rng = rng_from(seed, "dump")
    out: list[EmbeddingRecord] = []
    for i in range(pairs):
        body = rng.choice(vocab.regular, size=env.L - 1)
        a, b = rng.choice(vocab.regular, size=2, replace=False)
        x = [int(t) for t in body] + [vocab.eos]
        y = list(x)
        x[diverge_at - 1] = int(a)
        y[diverge_at - 1] = int(b)
        for k in range(diverge_at, env.L + 1):
            out.append(EmbeddingRecord(
                pair_id=f"pair-{i}",
                prefix_len=k,
                common_suffix=k - diverge_at,
                emb_x=env.embed(query, tuple(x[:k])),
                emb_y=env.embed(query, tuple(y[:k])),
            ))
    return out
