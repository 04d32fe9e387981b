"""Verifiable randomness from single-use hash keys.

A keychain publishes one public key per round up front. Evaluating round i
on an input reveals that round's secret as the proof, so anyone can check
the output, and the key is spent forever — a tamper-evident randomness
beacon from nothing but SHA-256.
"""

from fairflow.core import sha256
from fairflow.vrf import KeyReuseError, VrfKeyChain, VrfOutput, VrfStream, vrf_verify

chain = VrfKeyChain(seed=sha256(b"demo-beacon"), rounds=4)
print("published round keys:")
for i, pk in enumerate(chain.publics):
    print(f"  round {i}: {pk.hex()[:24]}…")

alpha = b"slot 0 of the demo chain"
out, proof = chain.evaluate(0, alpha)
print(f"\nevaluated round 0 on {alpha!r}")
print(f"  beta  = {out.beta.hex()[:24]}…")
print(f"  proof reveals secret {proof.revealed_secret.hex()[:24]}…")
print(f"  third-party verify: {vrf_verify(chain.public_key(0), alpha, out, proof)}")

tampered = VrfOutput(beta=bytes([out.beta[0] ^ 1]) + out.beta[1:])
print(f"  verify with one flipped beta bit: {vrf_verify(chain.public_key(0), alpha, tampered, proof)}")

try:
    chain.evaluate(0, b"second try")
except KeyReuseError as exc:
    print(f"  re-using round 0: KeyReuseError({exc})")

print("\nexpanding the output into unbiased draws:")
stream = VrfStream(out)
print(f"  20 d6 rolls: {[stream.uniform_below(6) + 1 for _ in range(20)]}")
print(f"  a draw below 10^9: {stream.uniform_below(10**9)}")
