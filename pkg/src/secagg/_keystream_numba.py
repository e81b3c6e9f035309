"""numba kernel for the ChaCha20 keystream.

Works in the uint64 domain with explicit 32-bit masking: numba's integer
promotion rules make native uint32 arithmetic easy to get subtly wrong,
and masked 64-bit ops compile to the same handful of ALU instructions.
Must stay bit-identical to keystream._blocks_numpy.
"""

import numpy as np
from numba import njit

_M32 = np.uint64(0xFFFFFFFF)
_C0 = np.uint64(0x61707865)  # "expa"
_C1 = np.uint64(0x3320646E)  # "nd 3"
_C2 = np.uint64(0x79622D32)  # "2-by"
_C3 = np.uint64(0x6B206574)  # "te k"


@njit(cache=True)
def _core(key_words, first_block, nblocks, out):
    k0 = np.uint64(key_words[0])
    k1 = np.uint64(key_words[1])
    k2 = np.uint64(key_words[2])
    k3 = np.uint64(key_words[3])
    k4 = np.uint64(key_words[4])
    k5 = np.uint64(key_words[5])
    k6 = np.uint64(key_words[6])
    k7 = np.uint64(key_words[7])
    for blk in range(nblocks):
        # first_block is a plain int; mixing uint64 and int64 would float-promote
        ctr = np.uint64(first_block + blk)
        i12 = ctr & _M32
        i13 = (ctr >> np.uint64(32)) & _M32
        x0, x1, x2, x3 = _C0, _C1, _C2, _C3
        x4, x5, x6, x7 = k0, k1, k2, k3
        x8, x9, x10, x11 = k4, k5, k6, k7
        x12, x13 = i12, i13
        x14 = np.uint64(0)
        x15 = np.uint64(0)
        for _ in range(10):
            # column rounds
            x0 = (x0 + x4) & _M32
            x12 ^= x0
            x12 = ((x12 << np.uint64(16)) | (x12 >> np.uint64(16))) & _M32
            x8 = (x8 + x12) & _M32
            x4 ^= x8
            x4 = ((x4 << np.uint64(12)) | (x4 >> np.uint64(20))) & _M32
            x0 = (x0 + x4) & _M32
            x12 ^= x0
            x12 = ((x12 << np.uint64(8)) | (x12 >> np.uint64(24))) & _M32
            x8 = (x8 + x12) & _M32
            x4 ^= x8
            x4 = ((x4 << np.uint64(7)) | (x4 >> np.uint64(25))) & _M32

            x1 = (x1 + x5) & _M32
            x13 ^= x1
            x13 = ((x13 << np.uint64(16)) | (x13 >> np.uint64(16))) & _M32
            x9 = (x9 + x13) & _M32
            x5 ^= x9
            x5 = ((x5 << np.uint64(12)) | (x5 >> np.uint64(20))) & _M32
            x1 = (x1 + x5) & _M32
            x13 ^= x1
            x13 = ((x13 << np.uint64(8)) | (x13 >> np.uint64(24))) & _M32
            x9 = (x9 + x13) & _M32
            x5 ^= x9
            x5 = ((x5 << np.uint64(7)) | (x5 >> np.uint64(25))) & _M32

            x2 = (x2 + x6) & _M32
            x14 ^= x2
            x14 = ((x14 << np.uint64(16)) | (x14 >> np.uint64(16))) & _M32
            x10 = (x10 + x14) & _M32
            x6 ^= x10
            x6 = ((x6 << np.uint64(12)) | (x6 >> np.uint64(20))) & _M32
            x2 = (x2 + x6) & _M32
            x14 ^= x2
            x14 = ((x14 << np.uint64(8)) | (x14 >> np.uint64(24))) & _M32
            x10 = (x10 + x14) & _M32
            x6 ^= x10
            x6 = ((x6 << np.uint64(7)) | (x6 >> np.uint64(25))) & _M32

            x3 = (x3 + x7) & _M32
            x15 ^= x3
            x15 = ((x15 << np.uint64(16)) | (x15 >> np.uint64(16))) & _M32
            x11 = (x11 + x15) & _M32
            x7 ^= x11
            x7 = ((x7 << np.uint64(12)) | (x7 >> np.uint64(20))) & _M32
            x3 = (x3 + x7) & _M32
            x15 ^= x3
            x15 = ((x15 << np.uint64(8)) | (x15 >> np.uint64(24))) & _M32
            x11 = (x11 + x15) & _M32
            x7 ^= x11
            x7 = ((x7 << np.uint64(7)) | (x7 >> np.uint64(25))) & _M32

            # diagonal rounds
            x0 = (x0 + x5) & _M32
            x15 ^= x0
            x15 = ((x15 << np.uint64(16)) | (x15 >> np.uint64(16))) & _M32
            x10 = (x10 + x15) & _M32
            x5 ^= x10
            x5 = ((x5 << np.uint64(12)) | (x5 >> np.uint64(20))) & _M32
            x0 = (x0 + x5) & _M32
            x15 ^= x0
            x15 = ((x15 << np.uint64(8)) | (x15 >> np.uint64(24))) & _M32
            x10 = (x10 + x15) & _M32
            x5 ^= x10
            x5 = ((x5 << np.uint64(7)) | (x5 >> np.uint64(25))) & _M32

            x1 = (x1 + x6) & _M32
            x12 ^= x1
            x12 = ((x12 << np.uint64(16)) | (x12 >> np.uint64(16))) & _M32
            x11 = (x11 + x12) & _M32
            x6 ^= x11
            x6 = ((x6 << np.uint64(12)) | (x6 >> np.uint64(20))) & _M32
            x1 = (x1 + x6) & _M32
            x12 ^= x1
            x12 = ((x12 << np.uint64(8)) | (x12 >> np.uint64(24))) & _M32
            x11 = (x11 + x12) & _M32
            x6 ^= x11
            x6 = ((x6 << np.uint64(7)) | (x6 >> np.uint64(25))) & _M32

            x2 = (x2 + x7) & _M32
            x13 ^= x2
            x13 = ((x13 << np.uint64(16)) | (x13 >> np.uint64(16))) & _M32
            x8 = (x8 + x13) & _M32
            x7 ^= x8
            x7 = ((x7 << np.uint64(12)) | (x7 >> np.uint64(20))) & _M32
            x2 = (x2 + x7) & _M32
            x13 ^= x2
            x13 = ((x13 << np.uint64(8)) | (x13 >> np.uint64(24))) & _M32
            x8 = (x8 + x13) & _M32
            x7 ^= x8
            x7 = ((x7 << np.uint64(7)) | (x7 >> np.uint64(25))) & _M32

            x3 = (x3 + x4) & _M32
            x14 ^= x3
            x14 = ((x14 << np.uint64(16)) | (x14 >> np.uint64(16))) & _M32
            x9 = (x9 + x14) & _M32
            x4 ^= x9
            x4 = ((x4 << np.uint64(12)) | (x4 >> np.uint64(20))) & _M32
            x3 = (x3 + x4) & _M32
            x14 ^= x3
            x14 = ((x14 << np.uint64(8)) | (x14 >> np.uint64(24))) & _M32
            x9 = (x9 + x14) & _M32
            x4 ^= x9
            x4 = ((x4 << np.uint64(7)) | (x4 >> np.uint64(25))) & _M32

        base = blk * 16
        out[base + 0] = np.uint32((x0 + _C0) & _M32)
        out[base + 1] = np.uint32((x1 + _C1) & _M32)
        out[base + 2] = np.uint32((x2 + _C2) & _M32)
        out[base + 3] = np.uint32((x3 + _C3) & _M32)
        out[base + 4] = np.uint32((x4 + k0) & _M32)
        out[base + 5] = np.uint32((x5 + k1) & _M32)
        out[base + 6] = np.uint32((x6 + k2) & _M32)
        out[base + 7] = np.uint32((x7 + k3) & _M32)
        out[base + 8] = np.uint32((x8 + k4) & _M32)
        out[base + 9] = np.uint32((x9 + k5) & _M32)
        out[base + 10] = np.uint32((x10 + k6) & _M32)
        out[base + 11] = np.uint32((x11 + k7) & _M32)
        out[base + 12] = np.uint32((x12 + i12) & _M32)
        out[base + 13] = np.uint32((x13 + i13) & _M32)
        out[base + 14] = np.uint32(x14 & _M32)
        out[base + 15] = np.uint32(x15 & _M32)


def blocks_numba(key_words: np.ndarray, first_block: int, nblocks: int) -> np.ndarray:
    """Keystream blocks as a uint8 array; same contract as _blocks_numpy."""
    words = np.empty(nblocks * 16, dtype=np.uint32)
    _core(key_words.astype(np.uint64), int(first_block), nblocks, words)
    return np.frombuffer(words.astype("<u4").tobytes(), dtype=np.uint8)
