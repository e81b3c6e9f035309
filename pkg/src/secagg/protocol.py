"""Four-round user and server state machines with a bit-exact wire format.

Round 0  users advertise two public keys; server fixes U1, broadcasts the
         key directory.
Round 1  users Shamir-share their self-mask seed and their mask secret key
         t-out-of-|U1|, sealing each recipient's pair of shares; server
         fixes U2 and routes the boxes.
Round 2  users open their boxes, derive pairwise seeds against the share
         senders (U2), and submit double-masked inputs; server fixes U3,
         sums, and broadcasts the survivor list.
Round 3  users reveal self-mask shares for survivors and mask-key shares
         for dropped users (never both for the same id); server rebuilds
         the missing secrets, unmasks, and emits the aggregate.

Participant sets are nested (U0 >= U1 >= U2 >= U3) and the threshold t is
enforced at every round, so an abort is always a ThresholdNotMet at the
earliest failing round.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

from . import masking
from .crypto import (
    LABEL_SELF_MASK,
    LABEL_USER_RNG,
    KeyPair,
    RandomStream,
    Seed,
    SealedBox,
    get_group,
    kdf,
    open_box,
    pairwise_seed,
    seal,
    sealing_seed,
)
from .errors import (
    AuthenticationFailure,
    InsufficientParticipants,
    MalformedMessage,
    PhaseViolation,
    ReconstructionFailure,
    ThresholdNotMet,
)
from .masking import PairwiseSeedTable
from .ring import FieldPrime, RingModulus, RingVector, vec_add
from .shamir import ChunkedSecret, SecretShare, reconstruct, share


@dataclass(frozen=True)
class ProtocolConfig:
    """Session parameters shared by every party.

    ``t`` defaults to floor(n/2) + 1 when not given. ``master_seed`` roots
    every party's randomness, so (config, dropout schedule) fully determine
    the transcript.
    """

    n: int
    K: int
    t: int | None = None
    ring: RingModulus = RingModulus(32)
    field: FieldPrime = FieldPrime()
    group_name: str = "prod"
    master_seed: bytes = bytes(16)

    def __post_init__(self):
        if self.t is None:
            object.__setattr__(self, "t", self.n // 2 + 1)
        if self.n < 1:
            raise ValueError(f"need at least one user, got n={self.n}")
        if not 1 <= self.t <= self.n:
            raise ValueError(f"threshold must satisfy 1 <= t <= n: t={self.t}, n={self.n}")
        if self.K < 1:
            raise ValueError(f"vector length must be positive: K={self.K}")
        if len(self.master_seed) != 16:
            raise ValueError("master_seed must be 16 bytes")
        get_group(self.group_name)  # validates the name

    @property
    def group(self):
        return get_group(self.group_name)

    def user_rng(self, uid: int) -> RandomStream:
        return RandomStream(kdf(self.master_seed, LABEL_USER_RNG, uid, 0))


SEED_SECRET_BYTES = 16
SERVER_ID = 0


class RevealKind(enum.Enum):
    SELF_MASK = 1
    MASK_KEY = 2


# ---------------------------------------------------------------------------
# Round messages
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdvertiseKeys:
    mask_pk: bytes
    seal_pk: bytes


@dataclass(frozen=True)
class KeyDirectory:
    keys: dict[int, tuple[bytes, bytes]]  # id -> (mask_pk, seal_pk)


@dataclass(frozen=True)
class EncryptedShares:
    boxes: dict[int, SealedBox]  # recipient -> box


@dataclass(frozen=True)
class ShareDelivery:
    boxes: tuple[SealedBox, ...]


@dataclass(frozen=True)
class MaskedInputMsg:
    y: RingVector


@dataclass(frozen=True)
class SurvivorList:
    ids: tuple[int, ...]


@dataclass(frozen=True)
class ShareReveal:
    reveals: dict[int, tuple[RevealKind, SecretShare]]  # subject -> (kind, share)


@dataclass(frozen=True)
class AggregateOutput:
    z: RingVector


RoundMessage = (
    AdvertiseKeys
    | KeyDirectory
    | EncryptedShares
    | ShareDelivery
    | MaskedInputMsg
    | SurvivorList
    | ShareReveal
    | AggregateOutput
)

_TAGS: dict[type, int] = {
    AdvertiseKeys: 1,
    KeyDirectory: 2,
    EncryptedShares: 3,
    ShareDelivery: 4,
    MaskedInputMsg: 5,
    SurvivorList: 6,
    ShareReveal: 7,
    AggregateOutput: 8,
}


# ---------------------------------------------------------------------------
# Wire codec
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WireProfile:
    """Fixed-width parameters the byte format needs for unambiguous parsing.

    Lengths are declared by the protocol config (group element width, ring
    bits, K, chunk counts), never inferred from the bytes themselves.
    """

    pk_len: int
    bits: int
    K: int
    seed_chunks: int
    sk_chunks: int

    @classmethod
    def from_config(cls, config: ProtocolConfig) -> "WireProfile":
        group = config.group
        return cls(
            pk_len=group.public_bytes,
            bits=config.ring.bits,
            K=config.K,
            seed_chunks=ChunkedSecret.chunk_count(SEED_SECRET_BYTES),
            sk_chunks=ChunkedSecret.chunk_count(group.secret_bytes),
        )

    @property
    def ring(self) -> RingModulus:
        return RingModulus(self.bits)

    def share_size(self, kind: RevealKind) -> int:
        chunks = self.seed_chunks if kind is RevealKind.SELF_MASK else self.sk_chunks
        return SecretShare.encoded_size(chunks)

    def share_chunks(self, kind: RevealKind) -> int:
        return self.seed_chunks if kind is RevealKind.SELF_MASK else self.sk_chunks


class _Reader:
    """Cursor over a payload; truncation surfaces as MalformedMessage."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedMessage(
                MalformedMessage.TRUNCATED,
                f"need {n} bytes at offset {self.pos}, have {len(self.data) - self.pos}",
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def expect_end(self) -> None:
        if self.pos != len(self.data):
            raise MalformedMessage(
                MalformedMessage.LENGTH_MISMATCH,
                f"{len(self.data) - self.pos} trailing payload bytes",
            )


def _encode_box(box: SealedBox) -> bytes:
    return (
        struct.pack("<IIB", box.sender, box.recipient, box.round_tag)
        + struct.pack("<I", len(box.ciphertext))
        + box.ciphertext
    )


def _decode_box(r: _Reader) -> SealedBox:
    sender, recipient = struct.unpack("<II", r.take(8))
    round_tag = r.u8()
    clen = r.u32()
    return SealedBox(sender, recipient, round_tag, r.take(clen))


def _decode_share(r: _Reader, num_chunks: int) -> SecretShare:
    return SecretShare.decode(r.take(SecretShare.encoded_size(num_chunks)), num_chunks)


def encode_message(msg: RoundMessage, sender: int, profile: WireProfile) -> bytes:
    """[1-byte tag][4-byte LE sender][4-byte LE payload length][payload].

    Map-valued fields are serialized in sorted key order, so the encoding
    is injective and replayable.
    """
    if type(msg) not in _TAGS:
        raise TypeError(f"not a round message: {type(msg).__name__}")
    if isinstance(msg, AdvertiseKeys):
        payload = msg.mask_pk + msg.seal_pk
    elif isinstance(msg, KeyDirectory):
        payload = struct.pack("<I", len(msg.keys)) + b"".join(
            struct.pack("<I", uid) + mask_pk + seal_pk
            for uid, (mask_pk, seal_pk) in sorted(msg.keys.items())
        )
    elif isinstance(msg, EncryptedShares):
        payload = struct.pack("<I", len(msg.boxes)) + b"".join(
            _encode_box(box) for _, box in sorted(msg.boxes.items())
        )
    elif isinstance(msg, ShareDelivery):
        payload = struct.pack("<I", len(msg.boxes)) + b"".join(
            _encode_box(box) for box in msg.boxes
        )
    elif isinstance(msg, MaskedInputMsg):
        payload = msg.y.to_bytes(profile.ring)
    elif isinstance(msg, SurvivorList):
        payload = struct.pack("<I", len(msg.ids)) + struct.pack(
            f"<{len(msg.ids)}I", *msg.ids
        )
    elif isinstance(msg, ShareReveal):
        payload = struct.pack("<I", len(msg.reveals)) + b"".join(
            struct.pack("<IB", subject, kind.value) + shr.encode()
            for subject, (kind, shr) in sorted(msg.reveals.items())
        )
    else:  # AggregateOutput
        payload = msg.z.to_bytes(profile.ring)
    return struct.pack("<BII", _TAGS[type(msg)], sender, len(payload)) + payload


def decode_message(data: bytes, profile: WireProfile) -> tuple[RoundMessage, int]:
    """Inverse of :func:`encode_message` on its image; returns (message, sender)."""
    if len(data) < 9:
        raise MalformedMessage(MalformedMessage.TRUNCATED, f"envelope needs 9 bytes, have {len(data)}")
    tag, sender, plen = struct.unpack_from("<BII", data)
    body = data[9:]
    if len(body) < plen:
        raise MalformedMessage(
            MalformedMessage.TRUNCATED, f"payload declares {plen} bytes, have {len(body)}"
        )
    if len(body) > plen:
        raise MalformedMessage(
            MalformedMessage.LENGTH_MISMATCH, f"{len(body) - plen} bytes beyond declared payload"
        )
    r = _Reader(body)
    if tag == _TAGS[AdvertiseKeys]:
        msg: RoundMessage = AdvertiseKeys(r.take(profile.pk_len), r.take(profile.pk_len))
    elif tag == _TAGS[KeyDirectory]:
        count = r.u32()
        keys = {}
        for _ in range(count):
            uid = r.u32()
            keys[uid] = (r.take(profile.pk_len), r.take(profile.pk_len))
        msg = KeyDirectory(keys)
    elif tag == _TAGS[EncryptedShares]:
        count = r.u32()
        boxes = {}
        for _ in range(count):
            box = _decode_box(r)
            boxes[box.recipient] = box
        msg = EncryptedShares(boxes)
    elif tag == _TAGS[ShareDelivery]:
        count = r.u32()
        msg = ShareDelivery(tuple(_decode_box(r) for _ in range(count)))
    elif tag == _TAGS[MaskedInputMsg]:
        try:
            y = RingVector.from_bytes(r.take(profile.K * profile.ring.bytes_per_entry),
                                      profile.K, profile.ring)
        except ValueError as exc:
            raise MalformedMessage(MalformedMessage.LENGTH_MISMATCH, str(exc)) from exc
        msg = MaskedInputMsg(y)
    elif tag == _TAGS[SurvivorList]:
        count = r.u32()
        msg = SurvivorList(struct.unpack(f"<{count}I", r.take(4 * count)))
    elif tag == _TAGS[ShareReveal]:
        count = r.u32()
        reveals = {}
        for _ in range(count):
            subject = r.u32()
            kind_code = r.u8()
            try:
                kind = RevealKind(kind_code)
            except ValueError:
                raise MalformedMessage(
                    MalformedMessage.UNKNOWN_TAG, f"reveal kind {kind_code}"
                ) from None
            reveals[subject] = (kind, _decode_share(r, profile.share_chunks(kind)))
        msg = ShareReveal(reveals)
    elif tag == _TAGS[AggregateOutput]:
        try:
            z = RingVector.from_bytes(r.take(profile.K * profile.ring.bytes_per_entry),
                                      profile.K, profile.ring)
        except ValueError as exc:
            raise MalformedMessage(MalformedMessage.LENGTH_MISMATCH, str(exc)) from exc
        msg = AggregateOutput(z)
    else:
        raise MalformedMessage(MalformedMessage.UNKNOWN_TAG, f"tag {tag:#x}")
    r.expect_end()
    return msg, sender


# ---------------------------------------------------------------------------
# User state machine
# ---------------------------------------------------------------------------


class Phase(enum.Enum):
    INIT = 0
    KEYS_ADVERTISED = 1
    SHARES_DISTRIBUTED = 2
    INPUT_MASKED = 3
    REVEALED = 4
    DONE = 5
    ABORTED = 6


@dataclass
class _ReceivedShares:
    seed_share: SecretShare
    key_share: SecretShare


class ProtocolUser:
    """One user's four-round state machine, externally driven.

    Phases advance monotonically INIT -> KEYS_ADVERTISED ->
    SHARES_DISTRIBUTED -> INPUT_MASKED -> REVEALED; driving a round twice
    or out of order raises PhaseViolation. All randomness flows from the
    per-user stream, so a (config, uid) pair replays bit-identically.
    """

    def __init__(self, uid: int, config: ProtocolConfig, rng: RandomStream | None = None):
        if not 1 <= uid <= config.n:
            raise ValueError(f"user id {uid} outside [1, {config.n}]")
        self.uid = uid
        self.config = config
        self.rng = rng if rng is not None else config.user_rng(uid)
        self.phase = Phase.INIT
        self.mask_keys: KeyPair | None = None
        self.seal_keys: KeyPair | None = None
        self.directory: dict[int, tuple[bytes, bytes]] = {}
        self.self_seed: Seed | None = None
        self.received: dict[int, _ReceivedShares] = {}
        self.survivor_view: tuple[int, ...] = ()
        self._seal_keys_cache: dict[int, Seed] = {}

    def _require(self, phase: Phase) -> None:
        if self.phase is not phase:
            raise PhaseViolation(
                f"user {self.uid}: expected phase {phase.name}, in {self.phase.name}"
            )

    def _sealing_key(self, peer: int) -> Seed:
        """Symmetric sealing key with ``peer``; own boxes key off our own sk."""
        cached = self._seal_keys_cache.get(peer)
        if cached is not None:
            return cached
        if peer == self.uid:
            key = sealing_seed(self.seal_keys.sk, self.uid, self.uid)
        else:
            shared = self.config.group.agree(self.seal_keys.sk, self.directory[peer][1])
            key = sealing_seed(shared, self.uid, peer)
        self._seal_keys_cache[peer] = key
        return key

    # -- round 0 ------------------------------------------------------------

    def round0_advertise_keys(self) -> AdvertiseKeys:
        """Generate the mask and seal keypairs and publish both public keys."""
        self._require(Phase.INIT)
        group = self.config.group
        self.mask_keys = group.keygen(self.rng)
        self.seal_keys = group.keygen(self.rng)
        self.phase = Phase.KEYS_ADVERTISED
        return AdvertiseKeys(self.mask_keys.pk, self.seal_keys.pk)

    # -- round 1 ------------------------------------------------------------

    def round1_share_keys(self, directory: KeyDirectory) -> EncryptedShares:
        """Shamir-share the self-mask seed and the mask key to every directory member."""
        self._require(Phase.KEYS_ADVERTISED)
        members = sorted(directory.keys)
        if len(members) < self.config.t or self.uid not in directory.keys:
            raise InsufficientParticipants(
                f"user {self.uid}: directory of {len(members)} cannot support t={self.config.t}",
                ids=tuple(members),
            )
        self.directory = dict(directory.keys)

        raw = self.rng.take(SEED_SECRET_BYTES)
        self.self_seed = kdf(raw, LABEL_SELF_MASK, self.uid, self.uid)
        seed_shares = share(
            ChunkedSecret.from_bytes(self.self_seed.data),
            self.config.t,
            len(members),
            self.rng,
            self.config.field,
            owner_id=self.uid,
        )
        key_shares = share(
            ChunkedSecret.from_bytes(self.mask_keys.sk),
            self.config.t,
            len(members),
            self.rng,
            self.config.field,
            owner_id=self.uid,
        )

        boxes = {}
        for idx, member in enumerate(members):
            plaintext = seed_shares[idx].encode() + key_shares[idx].encode()
            boxes[member] = seal(self._sealing_key(member), self.uid, member, 1, plaintext)
        self.phase = Phase.SHARES_DISTRIBUTED
        return EncryptedShares(boxes)

    # -- round 2 ------------------------------------------------------------

    def round2_masked_input(self, delivery: ShareDelivery, x: RingVector) -> MaskedInputMsg:
        """Open delivered share boxes, derive pairwise seeds, emit the masked input."""
        self._require(Phase.SHARES_DISTRIBUTED)
        config = self.config
        profile = WireProfile.from_config(config)
        for box in delivery.boxes:
            sender = box.sender
            if sender not in self.directory:
                raise AuthenticationFailure(
                    f"user {self.uid}: share box from unknown sender {sender}", sender=sender
                )
            plaintext = open_box(self._sealing_key(sender), sender, self.uid, 1, box)
            seed_size = profile.share_size(RevealKind.SELF_MASK)
            key_size = profile.share_size(RevealKind.MASK_KEY)
            if len(plaintext) != seed_size + key_size:
                raise AuthenticationFailure(
                    f"user {self.uid}: share payload from {sender} has wrong size",
                    sender=sender,
                )
            self.received[sender] = _ReceivedShares(
                SecretShare.decode(plaintext[:seed_size], profile.seed_chunks),
                SecretShare.decode(plaintext[seed_size:], profile.sk_chunks),
            )
        senders = sorted(self.received)
        if len(senders) < config.t:
            raise InsufficientParticipants(
                f"user {self.uid}: shares from {len(senders)} senders, need t={config.t}",
                ids=tuple(senders),
            )
        if self.uid not in self.received:
            raise InsufficientParticipants(
                f"user {self.uid}: delivery is missing the user's own share box",
                ids=tuple(senders),
            )

        seeds = {}
        for peer in senders:
            if peer == self.uid:
                continue
            shared = config.group.agree(self.mask_keys.sk, self.directory[peer][0])
            seeds[peer] = pairwise_seed(shared, self.uid, peer)
        table = PairwiseSeedTable(self.uid, seeds)
        masked = masking.mask_input(
            x, self.self_seed, self.uid, table, senders, config.K, config.ring
        )
        self.phase = Phase.INPUT_MASKED
        return MaskedInputMsg(masked.y)

    # -- round 3 ------------------------------------------------------------

    def round3_reveal(self, survivors: SurvivorList) -> ShareReveal:
        """Reveal self-mask shares for survivors, mask-key shares for the dropped.

        Never both for the same user: that pair would hand the server the
        masked input's full opening.
        """
        self._require(Phase.INPUT_MASKED)
        alive = sorted(survivors.ids)
        known = sorted(self.received)
        unknown = sorted(set(alive) - set(known))
        if unknown:
            raise ValueError(f"user {self.uid}: survivors {unknown} never sent shares")
        if len(alive) < self.config.t:
            self.phase = Phase.ABORTED
            raise ThresholdNotMet(
                f"user {self.uid}: {len(alive)} survivors below threshold {self.config.t}"
            )
        self.survivor_view = tuple(alive)
        reveals: dict[int, tuple[RevealKind, SecretShare]] = {}
        for u in alive:
            reveals[u] = (RevealKind.SELF_MASK, self.received[u].seed_share)
        for u in known:
            if u not in self.survivor_view:
                reveals[u] = (RevealKind.MASK_KEY, self.received[u].key_share)
        self.phase = Phase.REVEALED
        return ShareReveal(reveals)


# ---------------------------------------------------------------------------
# Server state machine
# ---------------------------------------------------------------------------


@dataclass
class ServerRoundResult:
    """What the server hands the transport after a round.

    ``broadcast`` goes to every member of ``recipients``; ``addressed``
    carries per-recipient payloads; ``output`` is the final aggregate.
    """

    broadcast: RoundMessage | None = None
    addressed: dict[int, RoundMessage] = field(default_factory=dict)
    recipients: tuple[int, ...] = ()
    output: RingVector | None = None


class ProtocolServer:
    """Mediates all four rounds; enforces nesting and the threshold.

    Nothing the server sees lets it recover an individual input: it learns
    masked vectors, sealed boxes it cannot open, and exactly one share kind
    per user at reveal time.
    """

    def __init__(self, config: ProtocolConfig):
        self.config = config
        self.profile = WireProfile.from_config(config)
        self.phase = 0  # next expected round; -1 aborted, 4 done
        self.participants: dict[int, tuple[int, ...]] = {0: tuple(range(1, config.n + 1))}
        self.directory: dict[int, tuple[bytes, bytes]] = {}
        self.outgoing_boxes: dict[int, dict[int, SealedBox]] = {}
        self.sum_y: RingVector | None = None
        self.survivors: tuple[int, ...] = ()
        self.output: RingVector | None = None

    def alive_after(self, round_idx: int) -> tuple[int, ...]:
        """U_{round_idx+1}: the senders still standing after that round."""
        return self.participants[round_idx + 1]

    def _fix_round_set(self, round_idx: int, senders) -> tuple[int, ...]:
        prev = self.participants[round_idx]
        extra = sorted(set(senders) - set(prev))
        if extra:
            raise ValueError(f"round {round_idx}: senders {extra} were not participants")
        fixed = tuple(sorted(senders))
        self.participants[round_idx + 1] = fixed
        if len(fixed) < self.config.t:
            self.phase = -1
            raise ThresholdNotMet(
                f"round {round_idx}: {len(fixed)} participants below threshold {self.config.t}"
            )
        return fixed

    def run_round(self, round_idx: int, inbox: dict[int, RoundMessage]) -> ServerRoundResult:
        """Collect one round's messages and produce the server's responses."""
        if self.phase == -1:
            raise PhaseViolation("server: protocol already aborted")
        if round_idx != self.phase:
            raise PhaseViolation(f"server: expected round {self.phase}, got {round_idx}")
        handler = (self._round0, self._round1, self._round2, self._round3)[round_idx]
        result = handler(inbox)
        self.phase = round_idx + 1
        return result

    def _round0(self, inbox: dict[int, AdvertiseKeys]) -> ServerRoundResult:
        for uid, msg in inbox.items():
            if not isinstance(msg, AdvertiseKeys):
                raise TypeError(f"round 0 expects AdvertiseKeys, got {type(msg).__name__}")
        u1 = self._fix_round_set(0, inbox)
        self.directory = {uid: (inbox[uid].mask_pk, inbox[uid].seal_pk) for uid in u1}
        return ServerRoundResult(broadcast=KeyDirectory(dict(self.directory)), recipients=u1)

    def _round1(self, inbox: dict[int, EncryptedShares]) -> ServerRoundResult:
        for sender, msg in inbox.items():
            if not isinstance(msg, EncryptedShares):
                raise TypeError(f"round 1 expects EncryptedShares, got {type(msg).__name__}")
            for recipient, box in msg.boxes.items():
                if box.sender != sender:
                    raise ValueError(
                        f"round 1: box from {sender} claims sender {box.sender}"
                    )
                if recipient not in self.participants[1]:
                    raise ValueError(
                        f"round 1: box from {sender} addressed outside the directory"
                    )
            self.outgoing_boxes[sender] = dict(msg.boxes)
        u2 = self._fix_round_set(1, inbox)
        deliveries = {}
        for recipient in u2:
            try:
                boxes = tuple(self.outgoing_boxes[sender][recipient] for sender in u2)
            except KeyError as exc:
                raise ValueError(f"round 1: missing box for recipient {recipient}") from exc
            deliveries[recipient] = ShareDelivery(boxes)
        return ServerRoundResult(addressed=deliveries, recipients=u2)

    def _round2(self, inbox: dict[int, MaskedInputMsg]) -> ServerRoundResult:
        total = RingVector.zeros(self.config.K)
        for sender in sorted(inbox):
            msg = inbox[sender]
            if not isinstance(msg, MaskedInputMsg):
                raise TypeError(f"round 2 expects MaskedInputMsg, got {type(msg).__name__}")
            total = vec_add(total, msg.y, self.config.ring)
        u3 = self._fix_round_set(2, inbox)
        self.sum_y = total
        self.survivors = u3
        return ServerRoundResult(broadcast=SurvivorList(u3), recipients=u3)

    def _round3(self, inbox: dict[int, ShareReveal]) -> ServerRoundResult:
        revealers = self._fix_round_set(3, inbox)
        dropped = tuple(u for u in self.participants[2] if u not in self.survivors)
        seed_shares: dict[int, list[SecretShare]] = {u: [] for u in self.survivors}
        key_shares: dict[int, list[SecretShare]] = {u: [] for u in dropped}
        for revealer in revealers:
            msg = inbox[revealer]
            if not isinstance(msg, ShareReveal):
                raise TypeError(f"round 3 expects ShareReveal, got {type(msg).__name__}")
            for subject, (kind, shr) in msg.reveals.items():
                if kind is RevealKind.SELF_MASK:
                    if subject not in seed_shares:
                        raise ValueError(
                            f"round 3: {revealer} revealed a self-mask share for "
                            f"non-survivor {subject}"
                        )
                    seed_shares[subject].append(shr)
                else:
                    if subject not in key_shares:
                        raise ValueError(
                            f"round 3: {revealer} revealed a mask-key share for "
                            f"survivor {subject}"
                        )
                    key_shares[subject].append(shr)

        config = self.config
        self_masks = []
        for u in self.survivors:
            secret = self._reconstruct(seed_shares[u], u, "self-mask seed", SEED_SECRET_BYTES)
            self_masks.append(masking.self_mask(Seed(secret.to_bytes()), config.K, config.ring))
        dropped_masks = []
        mask_pks = {u: self.directory[u][0] for u in self.survivors}
        for u in dropped:
            secret = self._reconstruct(key_shares[u], u, "mask key", config.group.secret_bytes)
            dropped_masks.append(
                masking.dropped_user_mask(
                    u, secret.to_bytes(), mask_pks, self.survivors,
                    config.K, config.ring, config.group,
                )
            )
        self.output = masking.unmask_aggregate(self.sum_y, self_masks, dropped_masks, config.ring)
        return ServerRoundResult(output=self.output)

    def _reconstruct(
        self, shares: list[SecretShare], subject: int, what: str, num_bytes: int
    ) -> ChunkedSecret:
        distinct = {s.x for s in shares}
        if len(distinct) < self.config.t:
            raise ReconstructionFailure(
                f"{len(distinct)} distinct shares of {subject}'s {what}, "
                f"need {self.config.t}"
            )
        return reconstruct(shares, self.config.t, self.config.field, num_bytes)
