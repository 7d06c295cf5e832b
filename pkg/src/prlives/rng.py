"""Counter-based random streams keyed by ``(seed, stream_id)``.

Every stream is a pure function of its key: block ``i`` of the stream is
``blake2b(i, key=derive(seed, stream_id))``. Nothing is shared between
streams, so Alice-side draws can never depend on anything Bob does.
"""
from __future__ import annotations

import hashlib
from typing import Tuple, Union

Label = Union[int, str]

_BLOCK_BITS = 512
_MASK64 = (1 << 64) - 1


def _encode_label(part: Label) -> bytes:
    # Type-tagged and length-prefixed so ("1",) and (1,) never collide.
    if isinstance(part, bool) or not isinstance(part, (int, str)):
        raise TypeError(f"stream label parts must be int or str, got {part!r}")
    if isinstance(part, int):
        raw = b"i" + str(part).encode("ascii")
    else:
        raw = b"s" + part.encode("utf-8")
    return len(raw).to_bytes(4, "little") + raw


def derive_key(seed: int, stream_id: Tuple[Label, ...]) -> bytes:
    h = hashlib.blake2b(digest_size=32, person=b"prlives-stream")
    h.update((seed & _MASK64).to_bytes(8, "little"))
    for part in stream_id:
        h.update(_encode_label(part))
    return h.digest()


class RandomStream:
    """Reproducible bit source for one ``(seed, stream_id)`` pair.

    >>> a = RandomStream(7, (0, "alice", "input"))
    >>> b = RandomStream(7, (0, "alice", "input"))
    >>> [a.bit() for _ in range(8)] == [b.bit() for _ in range(8)]
    True
    """

    __slots__ = ("seed", "stream_id", "_key", "_counter", "_buf", "_avail")

    def __init__(self, seed: int, stream_id: Tuple[Label, ...] = ()):
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise TypeError("seed must be an int")
        self.seed = seed & _MASK64
        self.stream_id = tuple(stream_id)
        self._key = derive_key(self.seed, self.stream_id)
        self._counter = 0
        self._buf = 0
        self._avail = 0

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id!r})"

    def _refill(self) -> None:
        block = hashlib.blake2b(
            self._counter.to_bytes(8, "little"), key=self._key, digest_size=64
        ).digest()
        self._counter += 1
        self._buf |= int.from_bytes(block, "little") << self._avail
        self._avail += _BLOCK_BITS

    def bits(self, k: int) -> int:
        """Next ``k`` bits as a non-negative integer."""
        if k < 0:
            raise ValueError("k must be non-negative")
        while self._avail < k:
            self._refill()
        out = self._buf & ((1 << k) - 1)
        self._buf >>= k
        self._avail -= k
        return out

    def bit(self) -> int:
        if not self._avail:
            self._refill()
        out = self._buf & 1
        self._buf >>= 1
        self._avail -= 1
        return out

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return self.bits(53) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Uniform integer in ``range(n)`` by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        k = max(1, (n - 1).bit_length())
        while True:
            v = self.bits(k)
            if v < n:
                return v
