"""Key agreement, key derivation, sealed share transport, and the mask PRG.

Each user runs two independent keypairs: one whose pairwise agreements seed
the masks (its secret key is what gets Shamir-shared, and possibly rebuilt
by the server for dropouts), and one whose agreements key the sealing of
shares in transit. Reconstructing a dropped user's mask key must never also
unseal that user's past share traffic, hence the split.

The group is pluggable: ``prod`` is X25519 (via the cryptography package),
``test`` is the multiplicative group mod 23 with generator 5, small enough
for hand-checked examples and exhaustive tests.
"""

from __future__ import annotations

import hmac
import struct
from dataclasses import dataclass
from hashlib import sha256

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import keystream
from .errors import AuthenticationFailure, InvalidPublicElement
from .ring import RingModulus, RingVector

SEED_BYTES = 16

# Domain-separation labels for every KDF use.
LABEL_PAIRWISE_MASK = "pairwise-mask"
LABEL_SELF_MASK = "self-mask"
LABEL_SEAL = "seal"
LABEL_USER_RNG = "user-rng"
LABEL_INPUT = "input"
LABEL_SWEEP_POINT = "sweep-point"


@dataclass(frozen=True)
class Seed:
    """Exactly 16 bytes; feeds the mask PRG and the sealing cipher."""

    data: bytes

    def __post_init__(self):
        if len(self.data) != SEED_BYTES:
            raise ValueError(f"seed must be {SEED_BYTES} bytes, got {len(self.data)}")

    def hex(self) -> str:
        return self.data.hex()


@dataclass(frozen=True)
class KeyPair:
    """Secret scalar and its public group element, both as fixed-width bytes."""

    sk: bytes
    pk: bytes


@dataclass(frozen=True)
class SealedBox:
    """Authenticated ciphertext bound to its (sender, recipient, round) context."""

    sender: int
    recipient: int
    round_tag: int
    ciphertext: bytes


class RandomStream:
    """Deterministic byte/field-element source keyed by a 16-byte seed.

    A thin resumable cursor over the keystream; every draw advances the
    position, so a fixed draw order gives a fully replayable party.
    """

    def __init__(self, seed: Seed | bytes):
        self._seed = seed.data if isinstance(seed, Seed) else bytes(seed)
        if len(self._seed) != SEED_BYTES:
            raise ValueError(f"stream seed must be {SEED_BYTES} bytes")
        self._pos = 0

    def take(self, n: int) -> bytes:
        out = keystream.keystream_bytes(self._seed, n, offset=self._pos)
        self._pos += n
        return out

    def randbelow(self, m: int) -> int:
        """Uniform integer in [0, m) by rejection sampling."""
        if m <= 0:
            raise ValueError("m must be positive")
        bits = (m - 1).bit_length() or 1
        nbytes = (bits + 7) // 8
        mask = (1 << bits) - 1
        while True:
            v = int.from_bytes(self.take(nbytes), "little") & mask
            if v < m:
                return v

    def field_element(self, p: int) -> int:
        """Uniform element of Z_p (the rng contract `shamir.share` relies on)."""
        return self.randbelow(p)


# ---------------------------------------------------------------------------
# Key-agreement groups
# ---------------------------------------------------------------------------


class TestGroup:
    """Multiplicative group mod 23, generator 5; order 22.

    Elements and scalars travel as 8-byte little-endian words so the wire
    layout matches the production group's fixed-width discipline.
    """

    name = "test"
    modulus = 23
    generator = 5
    order = 22
    public_bytes = 8
    secret_bytes = 8

    def keygen(self, rng: RandomStream) -> KeyPair:
        scalar = 1 + rng.randbelow(self.order - 1)  # uniform in [1, 21]
        pk = pow(self.generator, scalar, self.modulus)
        return KeyPair(struct.pack("<Q", scalar), struct.pack("<Q", pk))

    def agree(self, sk: bytes, pk: bytes) -> bytes:
        element = self._check_element(pk)
        scalar = struct.unpack("<Q", sk)[0]
        return struct.pack("<Q", pow(element, scalar, self.modulus))

    def _check_element(self, pk: bytes) -> int:
        if len(pk) != self.public_bytes:
            raise InvalidPublicElement(f"test-group element must be 8 bytes, got {len(pk)}")
        element = struct.unpack("<Q", pk)[0]
        if not 1 <= element < self.modulus:
            raise InvalidPublicElement(f"{element} outside [1, {self.modulus - 1}]")
        return element


class X25519Group:
    """Production group: X25519 with 32-byte raw keys."""

    name = "prod"
    public_bytes = 32
    secret_bytes = 32

    def keygen(self, rng: RandomStream) -> KeyPair:
        sk = rng.take(32)
        pk = (
            X25519PrivateKey.from_private_bytes(sk)
            .public_key()
            .public_bytes_raw()
        )
        return KeyPair(sk, pk)

    def agree(self, sk: bytes, pk: bytes) -> bytes:
        try:
            peer = X25519PublicKey.from_public_bytes(pk)
            return X25519PrivateKey.from_private_bytes(sk).exchange(peer)
        except ValueError as exc:
            raise InvalidPublicElement(str(exc)) from exc


_GROUPS = {"test": TestGroup(), "prod": X25519Group()}


def get_group(name: str):
    try:
        return _GROUPS[name]
    except KeyError:
        raise ValueError(f"unknown group {name!r}; choose from {sorted(_GROUPS)}") from None


# ---------------------------------------------------------------------------
# Key derivation
# ---------------------------------------------------------------------------


def kdf(shared: bytes, label: str, a: int, b: int) -> Seed:
    """16-byte seed from shared bytes, a domain label, and an id pair.

    HMAC-SHA256 keyed by ``shared``; the label is NUL-terminated so no
    (label, ids) collision is possible across uses.
    """
    msg = label.encode() + b"\x00" + struct.pack("<II", a, b)
    return Seed(hmac.new(shared, msg, sha256).digest()[:SEED_BYTES])


def pairwise_seed(shared: bytes, u: int, v: int) -> Seed:
    """Mask seed for the unordered pair {u, v}: ids sorted inside the KDF."""
    return kdf(shared, LABEL_PAIRWISE_MASK, min(u, v), max(u, v))


def sealing_seed(shared: bytes, u: int, v: int) -> Seed:
    """Share-sealing key for the unordered pair {u, v}."""
    return kdf(shared, LABEL_SEAL, min(u, v), max(u, v))


# ---------------------------------------------------------------------------
# Authenticated sealing (AES-128-GCM, nonce derived from the context)
# ---------------------------------------------------------------------------


def _nonce(sender: int, recipient: int, round_tag: int) -> bytes:
    return struct.pack("<III", sender, recipient, round_tag)


def seal(key: Seed, sender: int, recipient: int, round_tag: int, plaintext: bytes) -> SealedBox:
    """Encrypt-and-authenticate under the (sender, recipient, round) context.

    The 12-byte nonce is the packed context, so a given (key, context) pair
    must be used for at most one message -- which the protocol guarantees
    (one share box per ordered pair per round).
    """
    nonce = _nonce(sender, recipient, round_tag)
    ct = AESGCM(key.data).encrypt(nonce, plaintext, nonce)
    return SealedBox(sender, recipient, round_tag, ct)


def open_box(key: Seed, sender: int, recipient: int, round_tag: int, box: SealedBox) -> bytes:
    """Recover the plaintext iff key and expected context match the sealing."""
    if (box.sender, box.recipient, box.round_tag) != (sender, recipient, round_tag):
        raise AuthenticationFailure(
            f"context mismatch: box claims {(box.sender, box.recipient, box.round_tag)}, "
            f"expected {(sender, recipient, round_tag)}",
            sender=box.sender,
        )
    nonce = _nonce(sender, recipient, round_tag)
    try:
        return AESGCM(key.data).decrypt(nonce, box.ciphertext, nonce)
    except InvalidTag as exc:
        raise AuthenticationFailure(
            f"sealed box from {sender} to {recipient} failed to open", sender=sender
        ) from exc


# ---------------------------------------------------------------------------
# Mask PRG
# ---------------------------------------------------------------------------


def prg_expand(seed: Seed, K: int, R: RingModulus) -> RingVector:
    """Expand a seed into K residues mod R; a prefix-stable keystream draw."""
    return RingVector(keystream.expand_residues(seed.data, K, R.bits))
