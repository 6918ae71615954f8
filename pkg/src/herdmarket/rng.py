"""Deterministic keyed randomness.

Every random decision in a run is drawn from a Philox counter-based
generator whose key is a blake2b hash of a (seed, label, indices...) path.
A drawn value therefore depends only on its key, never on how many draws
happened before it, which is what lets paired scenario runs share outcome
realizations while their trajectories diverge, and lets replicates execute
in any order (or in parallel) without changing results.
"""

from __future__ import annotations

import hashlib

import numpy as np

# Key parts are signed integers up to this many bytes; anything larger is
# rejected rather than silently wrapped.
_INT_PART_BYTES = 32


def derive_key(*parts: int | str) -> int:
    """Hash a heterogeneous key path into a 128-bit integer.

    Parts are type-tagged and length-prefixed before hashing so distinct
    paths can never collide byte-wise ("ab", "c" vs "a", "bc").
    """
    h = hashlib.blake2b(digest_size=16)
    for part in parts:
        if isinstance(part, (bool, np.bool_)):
            raise TypeError("bool key parts are ambiguous; use an int or str")
        if isinstance(part, (int, np.integer)):
            try:
                payload = int(part).to_bytes(_INT_PART_BYTES, "little", signed=True)
            except OverflowError as exc:
                raise ValueError(f"integer key part out of range: {part!r}") from exc
            h.update(b"i")
        elif isinstance(part, str):
            payload = part.encode("utf-8")
            h.update(b"s")
        else:
            raise TypeError(f"unsupported key part type: {type(part).__name__}")
        h.update(len(payload).to_bytes(4, "little"))
        h.update(payload)
    return int.from_bytes(h.digest(), "little")


def keyed_generator(*parts: int | str) -> np.random.Generator:
    """A fresh generator whose stream is a pure function of the key path."""
    return np.random.Generator(np.random.Philox(key=derive_key(*parts)))


def replicate_seed(master_seed: int, replicate: int) -> int:
    """Derive the per-replicate seed all of a replicate's streams hang off."""
    return derive_key(master_seed, "replicate", replicate)


class BernoulliStream:
    """Fair coin outcomes addressed by (step, agent), not by draw order.

    Two runs built on the same replicate seed read identical bits for
    identical (step, agent) pairs regardless of which trades actually
    happen in each run. That is the common-random-numbers contract the
    paired reference/focal comparisons rely on.
    """

    def __init__(self, seed: int):
        self.seed = seed

    def row(self, step: int, n: int) -> np.ndarray:
        """Outcome bits for all n agents in one trading session."""
        gen = keyed_generator(self.seed, "bernoulli", step)
        return gen.integers(0, 2, size=n, dtype=np.uint8)

    def bit(self, step: int, agent: int) -> int:
        """Single outcome bit; agrees with row(step, n)[agent] for any n > agent.

        Bounded-integer generation consumes the underlying stream element by
        element, so the prefix of a row does not depend on the row length.
        """
        gen = keyed_generator(self.seed, "bernoulli", step)
        return int(gen.integers(0, 2, size=agent + 1, dtype=np.uint8)[agent])
