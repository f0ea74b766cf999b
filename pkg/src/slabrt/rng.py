"""Counter-based random numbers (Philox4x32-10).

Every particle owns an independent stream addressed by ``(seed, particle
index, draw number)``, so a history never depends on how particles are
split across workers. Draw ``n`` of a stream is lane ``n % 2`` of the Philox
block with counter ``(n // 2, particle index)``; each lane packs two 32-bit
words into a 53-bit uniform on the open interval (0, 1).

The scalar functions are the transport kernels' source of randomness; the
vectorized numpy functions produce bit-identical values for batch work.
"""

from __future__ import annotations

import numpy as np

from ._jit import inline_kernel, kernel

M0 = 0xD2511F53
M1 = 0xCD9E8D57
W0 = 0x9E3779B9
W1 = 0xBB67AE85
MASK32 = 0xFFFFFFFF
INV53 = 1.0 / 9007199254740992.0


def seed_key(seed: int) -> tuple[int, int]:
    """Split a non-negative 64-bit seed into the two Philox key words."""
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must lie in [0, 2**64)")
    return seed & MASK32, (seed >> 32) & MASK32


# ---------------------------------------------------------------------------
# scalar kernel
# ---------------------------------------------------------------------------


_M0 = np.uint64(M0)
_M1 = np.uint64(M1)
_W0 = np.uint64(W0)
_W1 = np.uint64(W1)
_MASK = np.uint64(MASK32)
_S32 = np.uint64(32)


@inline_kernel
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten Philox rounds on one 128-bit counter, words given as 32-bit values."""
    c0 = np.uint64(c0)
    c1 = np.uint64(c1)
    c2 = np.uint64(c2)
    c3 = np.uint64(c3)
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (p1 >> _S32) ^ c1 ^ k0, p1 & _MASK, (p0 >> _S32) ^ c3 ^ k1, p0 & _MASK
    return c0, c1, c2, c3


@inline_kernel
def words_to_unit(hi, lo):
    m = (hi >> np.uint64(5)) * np.uint64(67108864) + (lo >> np.uint64(6))
    return (float(m) + 0.5) * INV53


@inline_kernel
def uniform_pair(k0, k1, stream, block):
    """Both uniforms of block ``block`` of stream ``stream``."""
    s = np.uint64(stream)
    b = np.uint64(block)
    x0, x1, x2, x3 = philox4x32(b & _MASK, b >> _S32, s & _MASK, s >> _S32, k0, k1)
    return words_to_unit(x0, x1), words_to_unit(x2, x3)


@inline_kernel
def next_uniform(k0, k1, stream, state, cache):
    """Advance a stream held in ``state[0]`` (draw counter) and ``cache[0]`` (spare lane)."""
    n = state[0]
    state[0] = n + 1
    if n & 1:
        return cache[0]
    a, b = uniform_pair(k0, k1, stream, n >> 1)
    cache[0] = b
    return a


# ---------------------------------------------------------------------------
# vectorized numpy path
# ---------------------------------------------------------------------------


def philox4x32_np(c0, c1, c2, c3, k0, k1):
    """Vectorized Philox over broadcastable uint64 arrays holding 32-bit words."""
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in (c0, c1, c2, c3))
    k0 = np.asarray(k0, dtype=np.uint64)
    k1 = np.asarray(k1, dtype=np.uint64)
    m32 = np.uint64(MASK32)
    s32 = np.uint64(32)
    for r in range(10):
        if r > 0:
            k0 = (k0 + np.uint64(W0)) & m32
            k1 = (k1 + np.uint64(W1)) & m32
        p0 = np.uint64(M0) * c0
        p1 = np.uint64(M1) * c2
        c0, c1, c2, c3 = (p1 >> s32) ^ c1 ^ k0, p1 & m32, (p0 >> s32) ^ c3 ^ k1, p0 & m32
    return c0, c1, c2, c3


def _words_to_unit_np(hi, lo):
    m = (hi >> np.uint64(5)) * np.uint64(67108864) + (lo >> np.uint64(6))
    return (m.astype(np.float64) + 0.5) * INV53


def uniforms_np(seed: int, stream, draw) -> np.ndarray:
    """Uniform number ``draw`` of stream ``stream``, vectorized over both arguments."""
    k0, k1 = seed_key(seed)
    stream = np.asarray(stream, dtype=np.uint64)
    draw = np.asarray(draw, dtype=np.uint64)
    block = draw >> np.uint64(1)
    m32 = np.uint64(MASK32)
    x0, x1, x2, x3 = philox4x32_np(block & m32, block >> np.uint64(32),
                                   stream & m32, stream >> np.uint64(32), k0, k1)
    lane = (draw & np.uint64(1)).astype(bool)
    return np.where(lane, _words_to_unit_np(x2, x3), _words_to_unit_np(x0, x1))


class CounterRNG:
    """Sequential view of one Philox stream.

    ``CounterRNG(seed, stream=i)`` reproduces exactly the draws that the
    transport kernel consumes for particle ``i``. ``random`` follows the
    ``numpy.random.Generator.random`` calling convention so either can be
    passed wherever a uniform source is expected.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.key = seed_key(seed)
        self.stream = int(stream)
        self.counter = 0

    def random(self, size=None):
        n = 1 if size is None else int(np.prod(size))
        draws = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        out = uniforms_np(self.seed, self.stream, draws)
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def state(self) -> tuple[np.ndarray, np.ndarray]:
        """Kernel-side state arrays positioned at the current draw."""
        st = np.array([self.counter], dtype=np.int64)
        cache = np.zeros(1)
        if self.counter & 1:
            cache[0] = uniforms_np(self.seed, self.stream, self.counter)
        return st, cache

    def sync(self, st: np.ndarray) -> None:
        """Adopt the draw counter after a kernel consumed numbers from ``state()``."""
        self.counter = int(st[0])
