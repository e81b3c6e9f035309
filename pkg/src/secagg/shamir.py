"""t-out-of-n Shamir secret sharing over Z_p.

Byte-string secrets (seeds, secret keys) are embedded as little-endian
60-bit chunks so every chunk fits below the default 2^61 - 1 modulus, and
each chunk is shared with its own independent random polynomial. One
:class:`SecretShare` bundles a recipient's values for all chunks, which is
also how shares travel on the wire (owner, x, then one 8-byte word per
chunk).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import DuplicateEvaluationPoint, InsufficientShares, InvalidThreshold
from .ring import FieldPrime, mod_inv, mod_mul, mod_sub

CHUNK_BITS = 60


@dataclass(frozen=True)
class ChunkedSecret:
    """A byte-string secret as field elements, plus its original length."""

    chunks: tuple[int, ...]
    num_bytes: int

    @staticmethod
    def chunk_count(num_bytes: int) -> int:
        return max(1, (num_bytes * 8 + CHUNK_BITS - 1) // CHUNK_BITS)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ChunkedSecret":
        value = int.from_bytes(data, "little")
        count = cls.chunk_count(len(data))
        mask = (1 << CHUNK_BITS) - 1
        chunks = tuple((value >> (CHUNK_BITS * i)) & mask for i in range(count))
        return cls(chunks, len(data))

    def to_bytes(self) -> bytes:
        value = 0
        for i, c in enumerate(self.chunks):
            value |= c << (CHUNK_BITS * i)
        return value.to_bytes(self.num_bytes, "little")


@dataclass(frozen=True)
class SecretShare:
    """Evaluation point of one user's sharing: (owner, x, one y per chunk)."""

    owner_id: int
    x: int
    ys: tuple[int, ...]

    def encode(self) -> bytes:
        """Wire layout: owner 4LE + x 4LE + each chunk value 8LE."""
        return struct.pack("<II", self.owner_id, self.x) + b"".join(
            struct.pack("<Q", y) for y in self.ys
        )

    @classmethod
    def decode(cls, data: bytes, num_chunks: int) -> "SecretShare":
        if len(data) != 8 + 8 * num_chunks:
            raise ValueError(f"share record must be {8 + 8 * num_chunks} bytes, got {len(data)}")
        owner, x = struct.unpack_from("<II", data)
        ys = struct.unpack_from(f"<{num_chunks}Q", data, 8)
        return cls(owner, x, tuple(ys))

    @staticmethod
    def encoded_size(num_chunks: int) -> int:
        return 8 + 8 * num_chunks


def _poly_eval(coeffs: list[int], x: int, p: int) -> int:
    """Horner evaluation of coeffs[0] + coeffs[1]*x + ... mod p."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def share(
    secret: ChunkedSecret,
    t: int,
    n: int,
    rng,
    field: FieldPrime = FieldPrime(),
    owner_id: int = 0,
) -> list[SecretShare]:
    """Split ``secret`` into n shares, any t of which reconstruct it.

    Per chunk, samples a degree-(t-1) polynomial with the chunk as constant
    term and coefficients drawn uniformly from ``rng.field_element(p)``, and
    evaluates it at x = 1..n. ``rng`` is the caller's determinism contract.
    """
    if t < 1 or t > n:
        raise InvalidThreshold(f"threshold {t} outside [1, {n}]")
    p = field.p
    if n >= p:
        raise InvalidThreshold(f"share count {n} must be below field modulus {p}")
    for c in secret.chunks:
        if c >= p:
            raise ValueError(f"secret chunk {c} not below field modulus {p}")
    polys = [[c] + [rng.field_element(p) for _ in range(t - 1)] for c in secret.chunks]
    return [
        SecretShare(owner_id, x, tuple(_poly_eval(poly, x, p) for poly in polys))
        for x in range(1, n + 1)
    ]


def lagrange_weights(xs: list[int], field: FieldPrime = FieldPrime()) -> list[int]:
    """Interpolation-at-zero weights: sum_i w_i * f(x_i) = f(0) for deg f < |xs|."""
    p = field.p
    if len(set(xs)) != len(xs):
        raise DuplicateEvaluationPoint(f"evaluation points not distinct: {xs}")
    if any(x % p == 0 for x in xs):
        raise ValueError("evaluation points must be nonzero")
    weights = []
    for i, xi in enumerate(xs):
        num, den = 1, 1
        for j, xj in enumerate(xs):
            if j == i:
                continue
            num = mod_mul(num, xj % p, p)
            den = mod_mul(den, mod_sub(xj % p, xi % p, p), p)
        weights.append(mod_mul(num, mod_inv(den, p), p))
    return weights


def reconstruct(
    shares: list[SecretShare],
    t: int,
    field: FieldPrime = FieldPrime(),
    num_bytes: int | None = None,
) -> ChunkedSecret:
    """Rebuild the secret from any t shares (interpolation at x = 0).

    Uses exactly the t shares with smallest x (order-independent); duplicate
    evaluation points are rejected. ``num_bytes`` restores the original byte
    length; when omitted, the chunk payload is kept with its maximum length.
    """
    if not shares:
        raise InsufficientShares(f"0 shares supplied, need {t}")
    xs_all = [s.x for s in shares]
    if len(set(xs_all)) != len(xs_all):
        raise DuplicateEvaluationPoint(f"duplicate evaluation points in {sorted(xs_all)}")
    if len(shares) < t:
        raise InsufficientShares(f"{len(shares)} shares supplied, need {t}")
    chunk_counts = {len(s.ys) for s in shares}
    if len(chunk_counts) != 1:
        raise ValueError(f"shares disagree on chunk count: {sorted(chunk_counts)}")
    use = sorted(shares, key=lambda s: s.x)[:t]
    weights = lagrange_weights([s.x for s in use], field)
    p = field.p
    num_chunks = chunk_counts.pop()
    chunks = tuple(
        sum(mod_mul(w, s.ys[k], p) for w, s in zip(weights, use)) % p
        for k in range(num_chunks)
    )
    if num_bytes is None:
        num_bytes = num_chunks * CHUNK_BITS // 8
    return ChunkedSecret(chunks, num_bytes)
