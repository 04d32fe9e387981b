"""One-time-key hash VRF with publicly checkable proofs.

Construction: a keychain derives one secret per round, sk_i =
H("vrf-sk" ‖ seed ‖ i) with i as an 8-byte big-endian counter, and
pre-publishes pk_i = H(sk_i). Evaluating on input alpha yields
beta = H(sk_i ‖ alpha) and the proof simply reveals sk_i, so each round key
is strictly single-use (revealing it spends it). Verification needs no
secrets: check H(sk) = pk and H(sk ‖ alpha) = beta.

This is a simulation-grade stand-in for an elliptic-curve VRF: it gives the
same interface guarantees (determinism, uniqueness, public verifiability)
from one hash primitive.

Outputs expand into an unbounded byte stream (block j = H(beta ‖ j)) from
which bounded integers are drawn by rejection sampling, so draws are exactly
uniform, never modulo-biased.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import HASH_LEN, encode_u64, sha256

_DOMAIN_SK = b"vrf-sk"


class KeyReuseError(Exception):
    """A round key was asked to evaluate twice."""


@dataclass(frozen=True)
class VrfOutput:
    beta: bytes

    def __post_init__(self) -> None:
        if len(self.beta) != HASH_LEN:
            raise ValueError("beta must be 32 bytes")


@dataclass(frozen=True)
class VrfProof:
    round_index: int
    revealed_secret: bytes

    def __post_init__(self) -> None:
        if len(self.revealed_secret) != HASH_LEN:
            raise ValueError("revealed secret must be 32 bytes")


class VrfKeyChain:
    """Per-round single-use keys derived from one 32-byte seed.

    ``publics`` is the pre-published key list; secrets never leave the chain
    except inside proofs. Evaluation mutates consumed-round state, so a chain
    must not be shared across threads without external locking.
    """

    def __init__(self, seed: bytes, rounds: int):
        if len(seed) != HASH_LEN:
            raise ValueError("seed must be 32 bytes")
        if rounds < 1:
            raise ValueError("rounds must be at least 1")
        self._secrets = tuple(
            sha256(_DOMAIN_SK, seed, encode_u64(i)) for i in range(rounds)
        )
        self.publics: tuple[bytes, ...] = tuple(sha256(sk) for sk in self._secrets)
        self._consumed: set[int] = set()

    @property
    def rounds(self) -> int:
        return len(self.publics)

    def public_key(self, round_index: int) -> bytes:
        if not 0 <= round_index < self.rounds:
            raise ValueError(f"round {round_index} out of range")
        return self.publics[round_index]

    def evaluate(self, round_index: int, alpha: bytes) -> tuple[VrfOutput, VrfProof]:
        """Consume the round key and produce (output, proof) for ``alpha``."""
        if not 0 <= round_index < self.rounds:
            raise ValueError(f"round {round_index} out of range")
        if round_index in self._consumed:
            raise KeyReuseError(f"round {round_index} already consumed")
        self._consumed.add(round_index)
        sk = self._secrets[round_index]
        beta = sha256(sk, alpha)
        return VrfOutput(beta=beta), VrfProof(round_index=round_index, revealed_secret=sk)


def keychain_new(seed: bytes, rounds: int) -> VrfKeyChain:
    return VrfKeyChain(seed, rounds)


def vrf_verify(pk: bytes, alpha: bytes, out: VrfOutput, proof: VrfProof) -> bool:
    """Accept iff the revealed secret matches the published key and
    reproduces beta on ``alpha``. Total: never raises on malformed sizes."""
    sk = proof.revealed_secret
    return sha256(sk) == pk and sha256(sk, alpha) == out.beta


class VrfStream:
    """Deterministic unbounded byte stream expanded from one VRF output."""

    def __init__(self, out: VrfOutput):
        self._beta = out.beta
        self._counter = 0
        self._buf = b""
        self._pos = 0

    def read(self, n: int) -> bytes:
        chunks = []
        while n > 0:
            if self._pos == len(self._buf):
                self._buf = sha256(self._beta, encode_u64(self._counter))
                self._counter += 1
                self._pos = 0
            take = min(n, len(self._buf) - self._pos)
            chunks.append(self._buf[self._pos : self._pos + take])
            self._pos += take
            n -= take
        return b"".join(chunks)

    def uniform_below(self, bound: int) -> int:
        """Exactly uniform draw from [0, bound) by rejection sampling.

        Chunk width is the minimal byte count covering bound-1; values at or
        above the largest multiple of ``bound`` are rejected and redrawn, so
        accepted draws are unbiased.
        """
        if bound < 1:
            raise ValueError("bound must be positive")
        width = max(1, ((bound - 1).bit_length() + 7) // 8)
        space = 256**width
        limit = (space // bound) * bound
        while True:
            v = int.from_bytes(self.read(width), "big")
            if v < limit:
                return v % bound


def vrf_stream(out: VrfOutput) -> VrfStream:
    return VrfStream(out)


def stream_uniform_below(stream: VrfStream, bound: int) -> int:
    return stream.uniform_below(bound)
