"""Deterministic in-process protocol orchestrator and benchmark sweep.

Transport is a function call, but every message still round-trips through
the wire codec, so byte counters and transcript digests reflect exactly
what a socket transport would carry. Dropouts are injected by schedule:
a user silent from round r has its round-r and later computation and
messages suppressed entirely.

(config, inputs, schedule) determine every transcript byte; wall-clock
timings are the only non-reproducible fields and are excluded from the
transcript digest.
"""

from __future__ import annotations

import csv
import os
import struct
import time
from dataclasses import dataclass, field
from hashlib import sha256
from pathlib import Path

from .crypto import LABEL_INPUT, LABEL_SWEEP_POINT, RandomStream, kdf, prg_expand
from .errors import ReconstructionFailure, ThresholdNotMet
from .protocol import (
    SERVER_ID,
    AggregateOutput,
    ProtocolConfig,
    ProtocolServer,
    ProtocolUser,
    WireProfile,
    decode_message,
    encode_message,
)
from .ring import RingModulus, RingVector

LAST_ROUND = 3


def default_group_name() -> str:
    """Group selected by SECAGG_GROUP ("test" or "prod"); prod when unset."""
    name = os.environ.get("SECAGG_GROUP", "prod").strip().lower()
    if name not in ("test", "prod"):
        raise ValueError(f"SECAGG_GROUP must be 'test' or 'prod', got {name!r}")
    return name


@dataclass(frozen=True)
class DropoutSchedule:
    """Map user id -> round (0..3) from which the user goes silent."""

    silent_from: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        for uid, rnd in self.silent_from.items():
            if not 0 <= rnd <= LAST_ROUND:
                raise ValueError(f"dropout round for user {uid} must be in [0, 3]: {rnd}")

    def is_active(self, uid: int, round_idx: int) -> bool:
        return self.silent_from.get(uid, LAST_ROUND + 1) > round_idx

    @classmethod
    def parse(cls, text: str) -> "DropoutSchedule":
        """Parse the CLI form ``"id:round,id:round"`` (empty means no dropouts)."""
        silent = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            uid_s, _, rnd_s = part.partition(":")
            try:
                silent[int(uid_s)] = int(rnd_s)
            except ValueError:
                raise ValueError(f"bad dropout entry {part!r}; expected id:round") from None
        return cls(silent)


@dataclass(frozen=True)
class MessageRecord:
    """One logged wire message; digest is sha256 of the full encoding."""

    round: int
    sender: int
    recipient: int
    size: int
    digest: bytes


@dataclass
class Transcript:
    """Replayable record of one execution: messages, events, counters, timings."""

    n: int
    K: int
    t: int
    bits: int
    group_name: str
    master_seed_hex: str
    records: list[MessageRecord] = field(default_factory=list)
    dropout_events: list[tuple[int, int]] = field(default_factory=list)
    reveal_log: list[tuple[int, int, str]] = field(default_factory=list)
    sent_bytes: dict[int, int] = field(default_factory=dict)
    received_bytes: dict[int, int] = field(default_factory=dict)
    client_compute_s: dict[int, float] = field(default_factory=dict)
    server_phase_s: dict[int, float] = field(default_factory=dict)
    outcome: str = "ok"
    abort_reason: str | None = None
    output: RingVector | None = None

    def client_bytes(self, uid: int) -> int:
        return self.sent_bytes.get(uid, 0) + self.received_bytes.get(uid, 0)

    @property
    def server_bytes(self) -> int:
        return self.sent_bytes.get(SERVER_ID, 0) + self.received_bytes.get(SERVER_ID, 0)

    @property
    def total_bytes(self) -> int:
        return sum(rec.size for rec in self.records)

    def digest(self) -> str:
        """sha256 over all deterministic content; timings excluded."""
        h = sha256()
        for rec in self.records:
            h.update(struct.pack("<BIII", rec.round, rec.sender, rec.recipient, rec.size))
            h.update(rec.digest)
        for uid, rnd in self.dropout_events:
            h.update(struct.pack("<IB", uid, rnd))
        for revealer, subject, kind in self.reveal_log:
            h.update(struct.pack("<II", revealer, subject) + kind.encode())
        h.update(self.outcome.encode())
        if self.abort_reason:
            h.update(self.abort_reason.encode())
        if self.output is not None:
            h.update(self.output.entries.tobytes())
        return h.hexdigest()


def run_protocol(
    config: ProtocolConfig,
    inputs: list[RingVector],
    schedule: DropoutSchedule | None = None,
) -> Transcript:
    """Drive all four rounds end to end and return the complete transcript.

    Protocol aborts (threshold, reconstruction) become transcript outcomes,
    never exceptions.
    """
    schedule = schedule if schedule is not None else DropoutSchedule()
    if len(inputs) != config.n:
        raise ValueError(f"need {config.n} input vectors, got {len(inputs)}")
    for i, x in enumerate(inputs):
        if len(x) != config.K:
            raise ValueError(f"input {i + 1} has length {len(x)}, expected K={config.K}")

    profile = WireProfile.from_config(config)
    users = {uid: ProtocolUser(uid, config) for uid in range(1, config.n + 1)}
    server = ProtocolServer(config)
    tr = Transcript(
        n=config.n, K=config.K, t=config.t, bits=config.ring.bits,
        group_name=config.group_name, master_seed_hex=config.master_seed.hex(),
    )

    def transport(sender: int, recipient: int, round_idx: int, msg):
        data = encode_message(msg, sender, profile)
        tr.records.append(
            MessageRecord(round_idx, sender, recipient, len(data), sha256(data).digest())
        )
        tr.sent_bytes[sender] = tr.sent_bytes.get(sender, 0) + len(data)
        tr.received_bytes[recipient] = tr.received_bytes.get(recipient, 0) + len(data)
        decoded, wire_sender = decode_message(data, profile)
        assert wire_sender == sender
        return decoded

    def client_step(uid: int, round_idx: int, fn, *args):
        t0 = time.perf_counter()
        msg = fn(*args)
        tr.client_compute_s[uid] = (
            tr.client_compute_s.get(uid, 0.0) + time.perf_counter() - t0
        )
        return transport(uid, SERVER_ID, round_idx, msg)

    def server_step(round_idx: int, inbox):
        t0 = time.perf_counter()
        result = server.run_round(round_idx, inbox)
        tr.server_phase_s[round_idx] = (
            tr.server_phase_s.get(round_idx, 0.0) + time.perf_counter() - t0
        )
        return result

    mailbox: dict[int, object] = {}
    try:
        # round 0: advertise keys -> key directory
        inbox = {}
        for uid in server.participants[0]:
            if not schedule.is_active(uid, 0):
                tr.dropout_events.append((uid, 0))
                continue
            inbox[uid] = client_step(uid, 0, users[uid].round0_advertise_keys)
        result = server_step(0, inbox)
        for uid in result.recipients:
            mailbox[uid] = transport(SERVER_ID, uid, 0, result.broadcast)

        # round 1: sealed share distribution -> per-recipient delivery
        inbox = {}
        for uid in server.alive_after(0):
            if not schedule.is_active(uid, 1):
                tr.dropout_events.append((uid, 1))
                continue
            inbox[uid] = client_step(uid, 1, users[uid].round1_share_keys, mailbox[uid])
        result = server_step(1, inbox)
        for uid in sorted(result.addressed):
            mailbox[uid] = transport(SERVER_ID, uid, 1, result.addressed[uid])

        # round 2: masked inputs -> survivor list
        inbox = {}
        for uid in server.alive_after(1):
            if not schedule.is_active(uid, 2):
                tr.dropout_events.append((uid, 2))
                continue
            inbox[uid] = client_step(
                uid, 2, users[uid].round2_masked_input, mailbox[uid], inputs[uid - 1]
            )
        result = server_step(2, inbox)
        for uid in result.recipients:
            mailbox[uid] = transport(SERVER_ID, uid, 2, result.broadcast)

        # round 3: share reveal -> unmasked aggregate
        inbox = {}
        for uid in server.alive_after(2):
            if not schedule.is_active(uid, 3):
                tr.dropout_events.append((uid, 3))
                continue
            inbox[uid] = client_step(uid, 3, users[uid].round3_reveal, mailbox[uid])
            for subject, (kind, _) in sorted(inbox[uid].reveals.items()):
                tr.reveal_log.append((uid, subject, kind.name))
        result = server_step(3, inbox)
        transport(SERVER_ID, SERVER_ID, 3, AggregateOutput(result.output))
        tr.output = result.output
        tr.outcome = "ok"
    except (ThresholdNotMet, ReconstructionFailure) as exc:
        tr.outcome = "abort"
        tr.abort_reason = f"{type(exc).__name__}: {exc}"
    return tr


def reveal_exclusivity_violations(transcript: Transcript) -> list[int]:
    """Users for whom both a self-mask and a mask-key share were revealed.

    Any non-empty result means some honest party leaked enough to unmask an
    individual input; the protocol must never produce one.
    """
    kinds: dict[int, set[str]] = {}
    for _, subject, kind in transcript.reveal_log:
        kinds.setdefault(subject, set()).add(kind)
    return sorted(u for u, seen in kinds.items() if len(seen) > 1)


# ---------------------------------------------------------------------------
# Byte-cost closed form
# ---------------------------------------------------------------------------


def client_byte_coefficients(config: ProtocolConfig) -> tuple[int, int, int]:
    """(A, B, C) with per-client bytes = A*K*ceil(bits/8) + B*n + C.

    Derived from the wire layout alone (dropout-free run): the K term is the
    client's own masked vector; the n terms are the directory, the sealed
    boxes each way, the reveal entries, and the survivor ids; C is the
    envelopes plus fixed fields.
    """
    profile = WireProfile.from_config(config)
    env = 9  # tag + sender + payload length
    pk_pair = 2 * profile.pk_len
    plaintext = (8 + 8 * profile.seed_chunks) + (8 + 8 * profile.sk_chunks)
    box_record = 9 + 4 + (plaintext + 16)  # ctx(4+4+1) + length + ciphertext(+tag)
    reveal_entry = 4 + 1 + (8 + 8 * profile.seed_chunks)
    A = 1
    B = (
        box_record  # sent: one sealed box per directory member
        + reveal_entry  # sent: one self-mask reveal per survivor
        + (4 + pk_pair)  # received: one directory entry per member
        + box_record  # received: one delivered box per sender
        + 4  # received: one survivor id
    )
    C = (env + pk_pair) + (env + 4) + env + (env + 4) + 3 * (env + 4)
    return A, B, C


def predict_client_bytes(config: ProtocolConfig) -> int:
    """Closed-form per-client byte total for a dropout-free run."""
    A, B, C = client_byte_coefficients(config)
    bpe = config.ring.bytes_per_entry
    return A * config.K * bpe + B * config.n + C


# ---------------------------------------------------------------------------
# Benchmark records and sweep
# ---------------------------------------------------------------------------

CSV_COLUMNS = (
    "n", "K", "t", "dropouts", "seed",
    "client_bytes_max", "client_bytes_mean", "server_bytes", "client_ms_mean",
    "server_ms_r0", "server_ms_r1", "server_ms_r2", "server_ms_r3", "outcome",
)

TIMING_COLUMNS = (
    "client_ms_mean", "server_ms_r0", "server_ms_r1", "server_ms_r2", "server_ms_r3",
)


@dataclass(frozen=True)
class BenchRecord:
    """One measured run; column order in CSV matches field order."""

    n: int
    K: int
    t: int
    dropouts: int
    seed: str
    client_bytes_max: int
    client_bytes_mean: float
    server_bytes: int
    client_ms_mean: float
    server_ms_r0: float
    server_ms_r1: float
    server_ms_r2: float
    server_ms_r3: float
    outcome: str

    @classmethod
    def from_transcript(cls, tr: Transcript, dropouts: int) -> "BenchRecord":
        per_client = [tr.client_bytes(uid) for uid in range(1, tr.n + 1)]
        compute = [tr.client_compute_s.get(uid, 0.0) for uid in range(1, tr.n + 1)]
        return cls(
            n=tr.n,
            K=tr.K,
            t=tr.t,
            dropouts=dropouts,
            seed=tr.master_seed_hex,
            client_bytes_max=max(per_client),
            client_bytes_mean=sum(per_client) / tr.n,
            server_bytes=tr.server_bytes,
            client_ms_mean=1000.0 * sum(compute) / tr.n,
            server_ms_r0=1000.0 * tr.server_phase_s.get(0, 0.0),
            server_ms_r1=1000.0 * tr.server_phase_s.get(1, 0.0),
            server_ms_r2=1000.0 * tr.server_phase_s.get(2, 0.0),
            server_ms_r3=1000.0 * tr.server_phase_s.get(3, 0.0),
            outcome=tr.outcome,
        )

    def row(self) -> list:
        return [getattr(self, col) for col in CSV_COLUMNS]


def derive_inputs(point_seed: bytes, n: int, K: int, ring: RingModulus) -> list[RingVector]:
    """Per-user input vectors, uniform mod R, fixed by the point seed."""
    return [
        prg_expand(kdf(point_seed, LABEL_INPUT, uid, 0), K, ring)
        for uid in range(1, n + 1)
    ]


def pick_dropouts(point_seed: bytes, n: int, count: int) -> DropoutSchedule:
    """Deterministically choose ``count`` users to silence at round 2."""
    stream = RandomStream(kdf(point_seed, "dropout-pick", 0, 0))
    ids = list(range(1, n + 1))
    for i in range(count):
        j = i + stream.randbelow(n - i)
        ids[i], ids[j] = ids[j], ids[i]
    return DropoutSchedule({uid: 2 for uid in ids[:count]})


def sweep(
    users: list[int],
    veclens: list[int],
    dropout_fracs: list[float],
    trials: int,
    seed: bytes,
    threshold_frac: float | None = None,
    bits: int = 32,
    group_name: str | None = None,
) -> list[BenchRecord]:
    """One BenchRecord per (n, K, dropout fraction) point and trial.

    Trials re-run the identical point (same derived seed, inputs, and
    schedule), so byte counters and outputs are trial-invariant and only
    the timing columns vary.
    """
    if not users or not veclens or not dropout_fracs or trials < 1:
        raise ValueError("sweep grid must be non-empty and trials >= 1")
    group = group_name if group_name is not None else default_group_name()
    records = []
    point_index = 0
    for n in users:
        for K in veclens:
            for frac in dropout_fracs:
                point_seed = kdf(seed, LABEL_SWEEP_POINT, point_index, 0).data
                point_index += 1
                t = n // 2 + 1 if threshold_frac is None else min(n, max(1, int(threshold_frac * n)))
                d = int(frac * n)
                config = ProtocolConfig(
                    n=n, K=K, t=t, ring=RingModulus(bits),
                    group_name=group, master_seed=point_seed,
                )
                inputs = derive_inputs(point_seed, n, K, config.ring)
                schedule = pick_dropouts(point_seed, n, d)
                for _ in range(trials):
                    tr = run_protocol(config, inputs, schedule)
                    records.append(BenchRecord.from_transcript(tr, d))
    return records


def emit_csv(records: list[BenchRecord], destination) -> Path:
    """Write records with the fixed column order; returns the path written."""
    path = Path(destination)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for rec in records:
                writer.writerow(rec.row())
    except OSError as exc:
        raise OSError(f"cannot write benchmark CSV to {path}: {exc}") from exc
    return path


def load_csv(source) -> list[BenchRecord]:
    """Parse a file produced by :func:`emit_csv` back into records."""
    path = Path(source)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if tuple(header or ()) != CSV_COLUMNS:
                raise ValueError(f"unexpected CSV header in {path}: {header}")
            out = []
            for row in reader:
                vals = dict(zip(CSV_COLUMNS, row))
                out.append(
                    BenchRecord(
                        n=int(vals["n"]),
                        K=int(vals["K"]),
                        t=int(vals["t"]),
                        dropouts=int(vals["dropouts"]),
                        seed=vals["seed"],
                        client_bytes_max=int(vals["client_bytes_max"]),
                        client_bytes_mean=float(vals["client_bytes_mean"]),
                        server_bytes=int(vals["server_bytes"]),
                        client_ms_mean=float(vals["client_ms_mean"]),
                        server_ms_r0=float(vals["server_ms_r0"]),
                        server_ms_r1=float(vals["server_ms_r1"]),
                        server_ms_r2=float(vals["server_ms_r2"]),
                        server_ms_r3=float(vals["server_ms_r3"]),
                        outcome=vals["outcome"],
                    )
                )
            return out
    except OSError as exc:
        raise OSError(f"cannot read benchmark CSV from {path}: {exc}") from exc
