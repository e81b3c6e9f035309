"""Exact modular arithmetic for the two regimes the protocol mixes.

Secret shares live in a prime field Z_p (default the Mersenne prime
2^61 - 1); inputs, masks, and aggregates live in a power-of-two ring Z_R
as length-K vectors of uint64 residues. Scalar field ops use Python ints
(arbitrary precision, so 64-bit products never overflow); vector ring ops
use numpy uint64 with explicit masking.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import LengthMismatch, ZeroInverse

M61 = (1 << 61) - 1

# Witness set proving primality for every n < 2^64.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime_u64(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all n < 2^64."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FieldPrime:
    """Prime modulus for the share field."""

    p: int = M61

    def __post_init__(self):
        if not 3 <= self.p < (1 << 64):
            raise ValueError(f"field modulus must be in [3, 2^64): {self.p}")
        if not is_prime_u64(self.p):
            raise ValueError(f"field modulus must be prime: {self.p}")


@dataclass(frozen=True)
class RingModulus:
    """Power-of-two modulus R = 2^bits for the data ring."""

    bits: int = 32

    def __post_init__(self):
        if not 1 <= self.bits <= 64:
            raise ValueError(f"ring bits must be in [1, 64]: {self.bits}")

    @property
    def R(self) -> int:
        return 1 << self.bits

    @cached_property
    def mask(self) -> np.uint64:
        # All-ones for bits=64: uint64 wraparound then is exactly mod R.
        return np.uint64((1 << self.bits) - 1)

    @property
    def bytes_per_entry(self) -> int:
        return (self.bits + 7) // 8


class RingVector:
    """Length-K vector of residues in [0, R), stored as numpy uint64.

    Construction does not validate range (internal arithmetic keeps it by
    masking); use :meth:`of` for values from outside the library.
    """

    __slots__ = ("entries",)

    def __init__(self, entries: np.ndarray):
        self.entries = np.ascontiguousarray(entries, dtype=np.uint64)

    @classmethod
    def of(cls, values, R: RingModulus) -> "RingVector":
        arr = np.asarray(values, dtype=np.uint64)
        if arr.ndim != 1:
            raise ValueError("ring vector must be one-dimensional")
        if arr.size and int(arr.max()) >= R.R:
            raise ValueError(f"entry {int(arr.max())} out of range for R=2^{R.bits}")
        return cls(arr)

    @classmethod
    def zeros(cls, K: int) -> "RingVector":
        return cls(np.zeros(K, dtype=np.uint64))

    def __len__(self) -> int:
        return self.entries.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, RingVector):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self) -> str:
        head = ", ".join(str(int(v)) for v in self.entries[:8])
        tail = ", ..." if len(self) > 8 else ""
        return f"RingVector([{head}{tail}], K={len(self)})"

    def tolist(self) -> list[int]:
        return [int(v) for v in self.entries]

    def to_bytes(self, R: RingModulus) -> bytes:
        """Wire encoding: each entry as ceil(bits/8) little-endian bytes."""
        bpe = R.bytes_per_entry
        rows = np.frombuffer(self.entries.astype("<u8").tobytes(), dtype=np.uint8)
        return rows.reshape(-1, 8)[:, :bpe].tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, K: int, R: RingModulus) -> "RingVector":
        """Inverse of :meth:`to_bytes`; rejects out-of-range entries."""
        bpe = R.bytes_per_entry
        if len(data) != K * bpe:
            raise ValueError(f"expected {K * bpe} vector bytes, got {len(data)}")
        cols = np.frombuffer(data, dtype=np.uint8).reshape(K, bpe)
        vals = np.zeros(K, dtype=np.uint64)
        for i in range(bpe):
            vals |= cols[:, i].astype(np.uint64) << np.uint64(8 * i)
        if vals.size and R.bits < 64 and int(vals.max()) >= R.R:
            raise ValueError("vector entry exceeds ring modulus")
        return cls(vals)


# ---------------------------------------------------------------------------
# Scalar operations (exact, Python ints)
# ---------------------------------------------------------------------------


def mod_add(a: int, b: int, m: int) -> int:
    """(a + b) mod m for residues a, b < m."""
    s = a + b
    return s - m if s >= m else s


def mod_sub(a: int, b: int, m: int) -> int:
    """(a - b) mod m in [0, m)."""
    d = a - b
    return d + m if d < 0 else d


def mod_mul(a: int, b: int, p: FieldPrime | int) -> int:
    """(a * b) mod p; Python ints make the widened intermediate exact."""
    m = p.p if isinstance(p, FieldPrime) else p
    return a * b % m


def mod_inv(a: int, p: FieldPrime | int) -> int:
    """Multiplicative inverse of a in Z_p, 0 < a < p."""
    if a == 0:
        raise ZeroInverse("0 has no multiplicative inverse")
    m = p.p if isinstance(p, FieldPrime) else p
    return pow(a, -1, m)


# ---------------------------------------------------------------------------
# Vector operations (numpy, elementwise mod R)
# ---------------------------------------------------------------------------


def _check_lengths(u: RingVector, v: RingVector) -> None:
    if len(u) != len(v):
        raise LengthMismatch(f"vector lengths differ: {len(u)} vs {len(v)}")


def vec_add(u: RingVector, v: RingVector, R: RingModulus) -> RingVector:
    """Elementwise (u + v) mod R."""
    _check_lengths(u, v)
    return RingVector((u.entries + v.entries) & R.mask)


def vec_sub(u: RingVector, v: RingVector, R: RingModulus) -> RingVector:
    """Elementwise (u - v) mod R."""
    _check_lengths(u, v)
    return RingVector((u.entries - v.entries) & R.mask)
