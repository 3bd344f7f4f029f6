"""Counter-based random streams, one per (seed, replica) pair.

Each replica gets a 64-bit key derived by hashing the seed and the replica
index; the k-th draw of that replica is the SplitMix64 finaliser applied to
``key + (k + 1) * GOLDEN``.  Draws therefore depend only on
``(seed, replica, k)``, never on the order replicas are run in, and the
compiled engine reproduces them bit for bit.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
REPLICA_MULT = 0xD1B54A32D192ED03
SEED_SALT = 0x5851F42D4C957F2D
INV_2_53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, replica: int) -> int:
    return mix64(mix64(seed ^ SEED_SALT) ^ ((replica * REPLICA_MULT) & MASK64))


class Stream:
    """Sequential view of one replica's stream."""

    __slots__ = ("state",)

    def __init__(self, seed: int, replica: int = 0):
        self.state = stream_key(seed, replica)

    @classmethod
    def from_key(cls, key: int) -> "Stream":
        s = cls.__new__(cls)
        s.state = key & MASK64
        return s

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        """Uniform double on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * INV_2_53


class ConstantStream:
    """Stream returning a fixed value; for pinning a single step in tests."""

    def __init__(self, value: float):
        self.value = value

    def uniform(self) -> float:
        return self.value
