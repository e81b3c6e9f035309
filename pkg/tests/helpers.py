"""Shared test utilities: stub randomness and independent plaintext oracles.

The oracles here are deliberately primitive (Python ints over lists, no
numpy, no library arithmetic) so they stay independent of the code paths
they check.
"""

from __future__ import annotations

import itertools

from secagg import PairwiseSeedTable, RandomStream, Seed, kdf


class StubRng:
    """Feeds predetermined values to code expecting a randomness stream."""

    def __init__(self, values):
        self.values = list(values)

    def field_element(self, p: int) -> int:
        return self.values.pop(0) % p

    def randbelow(self, m: int) -> int:
        return self.values.pop(0) % m


def oracle_sum(inputs: list[list[int]], survivors, R: int) -> list[int]:
    """Plaintext survivor sum, plain Python ints throughout."""
    survivors = list(survivors)
    if not survivors:
        return [0] * (len(inputs[0]) if inputs else 0)
    K = len(inputs[0])
    return [sum(inputs[u - 1][k] for u in survivors) % R for k in range(K)]


def fresh_seed(label: int, salt: int = 0) -> Seed:
    """Distinct deterministic 16-byte seeds for test instances."""
    return kdf(b"test-helpers", "fresh-seed", label, salt)


def symmetric_seed_tables(user_ids, instance: int = 0) -> dict[int, PairwiseSeedTable]:
    """Consistent pairwise seed tables: table[u][v] == table[v][u]."""
    ids = sorted(user_ids)
    pair_seeds = {
        (u, v): fresh_seed(instance, u * 100003 + v)
        for u, v in itertools.combinations(ids, 2)
    }
    tables = {}
    for u in ids:
        seeds = {}
        for v in ids:
            if v == u:
                continue
            seeds[v] = pair_seeds[(min(u, v), max(u, v))]
        tables[u] = PairwiseSeedTable(u, seeds)
    return tables


def stream_of(label: int) -> RandomStream:
    return RandomStream(fresh_seed(label, 0xABCD))
