"""Sequence primitives shared by every decoder and environment.

Tokens are dense integer indices in [0, n). One distinguished index is the
end-of-sequence token (eos). Sequences are plain tuples of ints; all helpers
are pure and never mutate their inputs.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np

TokenSeq = Tuple[int, ...]


@dataclass(frozen=True)
class Vocab:
    """Token alphabet of size ``n`` with a designated eos index.

    By default eos is the last index, so token 0 is always a regular token.
    """

    n: int
    eos: int = -1

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("vocab needs at least one regular token plus eos")
        if self.eos == -1:
            object.__setattr__(self, "eos", self.n - 1)
        if not 0 <= self.eos < self.n:
            raise ValueError(f"eos index {self.eos} outside [0, {self.n})")

    @property
    def regular(self) -> Tuple[int, ...]:
        """All non-eos token indices, ascending."""
        return tuple(t for t in range(self.n) if t != self.eos)


def validate_tokens(seq: Sequence[int], vocab: Vocab) -> TokenSeq:
    seq = tuple(int(t) for t in seq)
    for t in seq:
        if not 0 <= t < vocab.n:
            raise ValueError(f"token {t} outside vocab of size {vocab.n}")
    return seq


def concat(seq: Sequence[int], tail: Sequence[int]) -> TokenSeq:
    """Concatenate without mutating either argument."""
    return tuple(seq) + tuple(tail)


def canonicalize(seq: Sequence[int], vocab: Vocab) -> TokenSeq:
    """Truncate everything after the first eos (the eos itself is kept).

    Idempotent: canonicalize(canonicalize(s)) == canonicalize(s).
    """
    seq = tuple(seq)
    for i, t in enumerate(seq):
        if t == vocab.eos:
            return seq[: i + 1]
    return seq


def is_complete(seq: Sequence[int], vocab: Vocab) -> bool:
    """A sequence is complete when its last token is eos."""
    return len(seq) > 0 and seq[-1] == vocab.eos


def equalize_lengths(
    a: Sequence[int], b: Sequence[int], vocab: Vocab, target_len: int | None = None
) -> Tuple[TokenSeq, TokenSeq]:
    """Pad the shorter of two complete sequences with eos so lengths match.

    With ``target_len`` both are padded to that length, which must be at least
    the longer of the two. Padding a complete sequence with eos does not change
    its canonical form, so downstream utilities are unaffected.
    """
    a, b = tuple(a), tuple(b)
    if not (is_complete(a, vocab) and is_complete(b, vocab)):
        raise ValueError("length equalization is defined for complete sequences")
    m = max(len(a), len(b)) if target_len is None else int(target_len)
    if m < max(len(a), len(b)):
        raise ValueError("target_len shorter than one of the sequences")
    return a + (vocab.eos,) * (m - len(a)), b + (vocab.eos,) * (m - len(b))


def first_deviation_level(a: Sequence[int], b: Sequence[int]) -> int | None:
    """1-based index of the first position where the sequences differ.

    Inputs must have equal length (equalize first). Returns None when equal.
    """
    if len(a) != len(b):
        raise ValueError("sequences must have equal length")
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i + 1
    return None


def complete_sequences(vocab: Vocab, max_len: int) -> Iterator[TokenSeq]:
    """Enumerate every canonical complete sequence of length <= max_len.

    These are m regular tokens followed by eos, 0 <= m <= max_len - 1, yielded
    in lexicographic order within each length, shorter prefixes first per
    regular-prefix block. The count is sum_{m} (n-1)^m.
    """
    regs = vocab.regular
    for m in range(max_len):
        for prefix in itertools.product(regs, repeat=m):
            yield prefix + (vocab.eos,)


def count_complete_sequences(vocab: Vocab, max_len: int) -> int:
    r = vocab.n - 1
    if r == 1:
        return max_len
    return (r**max_len - 1) // (r - 1)


def stable_seed(*parts) -> int:
    """Collision-resistant 64-bit seed derived from heterogeneous parts.

    Hash-based so the same (namespace, ids, tokens...) always yields the same
    stream regardless of process, platform, or call order. Accepts ints, strs,
    and int sequences.
    """
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        if isinstance(p, str):
            h.update(b"s" + p.encode())
        elif isinstance(p, (int, np.integer)):
            h.update(b"i" + int(p).to_bytes(16, "little", signed=True))
        elif isinstance(p, (tuple, list)):
            h.update(b"t%d" % len(p))
            for t in p:
                h.update(int(t).to_bytes(8, "little", signed=True))
        else:
            raise TypeError(f"unhashable seed part: {type(p)}")
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")


def rng_from(*parts) -> np.random.Generator:
    """Deterministic generator keyed by stable_seed(*parts)."""
    return np.random.default_rng(stable_seed(*parts))
