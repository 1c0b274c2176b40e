"""Token-level sequential decoding bandit simulator.

A round presents a query; the learner emits one token at a time, irrevocably,
until an end-of-sequence token, then observes a single bounded-noise reward for
the whole sequence. The package provides the optimistic linear decoder, an
explore-then-commit decoder for the fixed-utility case, k-token lookahead
variants of both, synthetic environment families with checkable structural
assumptions, reductions to and from value trees, an embedding-distance
validation pipeline, and a run harness with a CSV/JSON contract. A FastAPI
service wraps every operation; the CLI is a thin client of that service.
"""

__version__ = "0.1.0"
