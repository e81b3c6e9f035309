"""The double-masking algebra.

Each user submits y = x + PRG(b) + sum_{v>u} PRG(s_uv) - sum_{v<u} PRG(s_uv)
(mod R): pairwise masks cancel pair-by-pair in the aggregate, and the
self mask PRG(b) protects a user whose mask key is later rebuilt by the
server. Unmasking removes survivors' self masks and restores the pairwise
sums that dropped users never contributed, leaving exactly the survivor sum.

Sign convention (fixed for transcript reproducibility): the positive term
is "peer id greater than mine".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crypto import Seed, pairwise_seed, prg_expand
from .errors import LengthMismatch, MissingSeed
from .ring import RingModulus, RingVector

__all__ = [
    "PairwiseSeedTable",
    "MaskedInput",
    "pairwise_mask",
    "self_mask",
    "mask_input",
    "dropped_user_mask",
    "unmask_aggregate",
]


@dataclass(frozen=True)
class PairwiseSeedTable:
    """One user's agreed mask seeds, keyed by peer id (symmetric across owners)."""

    owner: int
    seeds: dict[int, Seed]

    def seed_for(self, peer: int) -> Seed:
        try:
            return self.seeds[peer]
        except KeyError:
            raise MissingSeed(f"user {self.owner} has no pairwise seed for peer {peer}") from None


@dataclass(frozen=True)
class MaskedInput:
    """Round-2 message body: the sender's double-masked vector."""

    sender: int
    y: RingVector


def _signed_accumulate(acc: np.ndarray, mask: RingVector, positive: bool, R: RingModulus) -> np.ndarray:
    if positive:
        return (acc + mask.entries) & R.mask
    return (acc - mask.entries) & R.mask


def pairwise_mask(
    u: int, table: PairwiseSeedTable, peers, K: int, R: RingModulus
) -> RingVector:
    """Signed sum of u's pairwise PRG masks over ``peers`` (u itself skipped)."""
    acc = np.zeros(K, dtype=np.uint64)
    for v in sorted(peers):
        if v == u:
            continue
        mask = prg_expand(table.seed_for(v), K, R)
        acc = _signed_accumulate(acc, mask, positive=v > u, R=R)
    return RingVector(acc)


def self_mask(b: Seed, K: int, R: RingModulus) -> RingVector:
    """The user's own mask, PRG(b)."""
    return prg_expand(b, K, R)


def mask_input(
    x: RingVector,
    b: Seed,
    u: int,
    table: PairwiseSeedTable,
    peers,
    K: int,
    R: RingModulus,
) -> MaskedInput:
    """y = x + PRG(b) + signed pairwise masks, mod R."""
    if len(x) != K:
        raise LengthMismatch(f"input length {len(x)} != K={K}")
    acc = (x.entries + self_mask(b, K, R).entries) & R.mask
    acc = (acc + pairwise_mask(u, table, peers, K, R).entries) & R.mask
    return MaskedInput(u, RingVector(acc))


def dropped_user_mask(
    dropped: int,
    reconstructed_sk: bytes,
    survivor_pks: dict[int, bytes],
    survivors,
    K: int,
    R: RingModulus,
    group,
) -> RingVector:
    """The signed pairwise sum the dropped user would have contributed.

    Re-derives s_{dropped,v} for every survivor v from the reconstructed
    mask key; bytewise equal to ``pairwise_mask(dropped, ...)`` restricted
    to the survivor set. Adding this back into the aggregate completes the
    cancellation the dropped user never performed.
    """
    survivors = sorted(survivors)
    if dropped in survivors:
        raise ValueError(f"user {dropped} cannot be both dropped and a survivor")
    acc = np.zeros(K, dtype=np.uint64)
    for v in survivors:
        shared = group.agree(reconstructed_sk, survivor_pks[v])
        mask = prg_expand(pairwise_seed(shared, dropped, v), K, R)
        acc = _signed_accumulate(acc, mask, positive=v > dropped, R=R)
    return RingVector(acc)


def unmask_aggregate(
    sum_y: RingVector,
    survivor_self_masks: list[RingVector],
    dropped_masks: list[RingVector],
    R: RingModulus,
) -> RingVector:
    """Strip masking from the summed survivor inputs.

    Survivors' self masks are subtracted; dropped users' would-have pairwise
    sums are added back (their negated halves already sit inside sum_y).
    The result equals the plaintext survivor sum mod R when inputs are
    consistent.
    """
    acc = sum_y.entries.copy()
    for m in survivor_self_masks:
        if len(m) != len(sum_y):
            raise LengthMismatch(f"self mask length {len(m)} != {len(sum_y)}")
        acc = (acc - m.entries) & R.mask
    for m in dropped_masks:
        if len(m) != len(sum_y):
            raise LengthMismatch(f"dropped mask length {len(m)} != {len(sum_y)}")
        acc = (acc + m.entries) & R.mask
    return RingVector(acc)
