"""Commit-reveal envelopes: what the network sees before execution.

A sealed swap exposes exactly three fields — a salted handle, the gas
limit, and a blinded sender hash. Direction and size stay hidden until the
reveal key arrives; any tampering breaks the commitment and drops the tx.
"""

import os

from fairflow.core import Swap, Transaction
from fairflow.envelope import RevealFailure, RevealKey, minimal_view, open_envelope, seal

tx = Transaction(
    sender="whale-77",
    nonce=0,
    gas_limit=100_000,
    max_fee_per_gas=120,
    payload=Swap(pool_id="main", direction="buy", amount_in=5_000_000, min_out=4_900_000),
)
key, salt = os.urandom(32), os.urandom(16)
env = seal(tx, key, salt)

view = minimal_view(env)
print("what everyone sees before execution:")
print(f"  tx_id_public  = {view.tx_id_public.hex()[:24]}…")
print(f"  gas_limit     = {view.gas_limit}")
print(f"  sender_blinded= {view.sender_blinded.hex()[:24]}…")
print(f"  ciphertext    = {env.ciphertext.hex()[:48]}… ({len(env.ciphertext)} bytes)")
print(f"  'whale' in ciphertext bytes: {b'whale' in env.ciphertext}")

sell_variant = Transaction(
    sender=tx.sender,
    nonce=tx.nonce,
    gas_limit=tx.gas_limit,
    max_fee_per_gas=tx.max_fee_per_gas,
    payload=Swap("main", "sell", 5_000_000, 4_900_000),
)
same_view = minimal_view(seal(sell_variant, key, salt)).encode() == view.encode()
print(f"  buy and sell variants share identical view bytes: {same_view}")

print("\nafter ordering is fixed, the reveal key opens the envelope:")
opened = open_envelope(env, RevealKey(key, salt))
print(f"  payload: {opened.payload}")

bad_key = bytes([key[0] ^ 1]) + key[1:]
try:
    open_envelope(env, RevealKey(bad_key, salt))
except RevealFailure as exc:
    print(f"  one wrong key bit: RevealFailure({exc}) — the tx would be dropped")
