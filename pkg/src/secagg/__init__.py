"""Dropout-robust secure aggregation of user-held vectors.

A library, deterministic simulator, and benchmark CLI for the four-round
double-masking protocol: an honest-but-curious server learns the sum of
the survivors' vectors mod R and nothing else, even when users drop out
mid-protocol.
"""

from .crypto import (
    KeyPair,
    RandomStream,
    SealedBox,
    Seed,
    get_group,
    kdf,
    open_box,
    prg_expand,
    seal,
)
from .errors import (
    AuthenticationFailure,
    DuplicateEvaluationPoint,
    InsufficientParticipants,
    InsufficientShares,
    InvalidPublicElement,
    InvalidThreshold,
    LengthMismatch,
    MalformedMessage,
    MissingSeed,
    PhaseViolation,
    ReconstructionFailure,
    SecAggError,
    ThresholdNotMet,
    ZeroInverse,
)
from .harness import (
    BenchRecord,
    DropoutSchedule,
    Transcript,
    emit_csv,
    load_csv,
    predict_client_bytes,
    reveal_exclusivity_violations,
    run_protocol,
    sweep,
)
from .masking import (
    MaskedInput,
    PairwiseSeedTable,
    dropped_user_mask,
    mask_input,
    pairwise_mask,
    self_mask,
    unmask_aggregate,
)
from .protocol import (
    AdvertiseKeys,
    AggregateOutput,
    EncryptedShares,
    KeyDirectory,
    MaskedInputMsg,
    ProtocolConfig,
    ProtocolServer,
    ProtocolUser,
    RevealKind,
    ShareDelivery,
    ShareReveal,
    SurvivorList,
    WireProfile,
    decode_message,
    encode_message,
)
from .ring import (
    FieldPrime,
    RingModulus,
    RingVector,
    mod_add,
    mod_inv,
    mod_mul,
    mod_sub,
    vec_add,
    vec_sub,
)
from .shamir import ChunkedSecret, SecretShare, lagrange_weights, reconstruct, share

__version__ = "0.1.0"
