"""Verifiable shuffle: bijection, uniformity, canonicalization, audit."""

import random
from itertools import permutations

import pytest

from fairflow.core import Noop, Slot, Transaction, sha256
from fairflow.envelope import seal
from fairflow.ordering import (
    OrderingRecord,
    apply_ordering,
    derive_permutation,
    order_transactions,
    verify_ordering,
)
from fairflow.vrf import KeyReuseError, VrfKeyChain, VrfOutput

SEED = sha256(b"ordering-test-seed")


def fresh_output(i: int) -> VrfOutput:
    return VrfOutput(beta=sha256(b"beta", i.to_bytes(8, "big")))


def random_envelopes(n: int, rng: random.Random):
    envs = []
    for i in range(n):
        tx = Transaction(f"user-{i}", rng.randrange(10**6), 21_000, 1, Noop())
        envs.append(seal(tx, rng.randbytes(32), rng.randbytes(16)))
    return envs


def test_degenerate_sizes():
    out = fresh_output(0)
    assert derive_permutation(out, 0) == ()
    assert derive_permutation(out, 1) == (0,)
    with pytest.raises(ValueError):
        derive_permutation(out, -1)


def test_determinism():
    out = fresh_output(1)
    assert derive_permutation(out, 5) == derive_permutation(out, 5)


def test_always_a_bijection():
    for i in range(300):
        n = i % 12
        perm = derive_permutation(fresh_output(i), n)
        assert sorted(perm) == list(range(n))


def test_uniform_over_small_factorial():
    # n=3 light check; the full n=4 x 120k chi-square runs in the acceptance suite
    counts = {p: 0 for p in permutations(range(3))}
    n = 6_000
    for i in range(n):
        counts[derive_permutation(fresh_output(i), 3)] += 1
    expected = n / 6
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert chi2 < 20.52  # df=5 critical value at p=0.001


def test_presentation_order_independence():
    rng = random.Random(2)
    envs = random_envelopes(6, rng)
    records = []
    for shuffle_seed in range(3):
        chain = VrfKeyChain(SEED, 4)
        order = envs[:]
        random.Random(shuffle_seed).shuffle(order)
        records.append(order_transactions(order, chain, Slot(index=2, capacity_gas=10**6)))
    assert records[0] == records[1] == records[2]


def test_single_winner_identity():
    rng = random.Random(3)
    record = order_transactions(
        random_envelopes(1, rng), VrfKeyChain(SEED, 1), Slot(index=0, capacity_gas=10**6)
    )
    assert record.permutation == (0,)


def test_winner_set_mutation_changes_permutation():
    rng = random.Random(4)
    differing = 0
    for trial in range(100):
        envs = random_envelopes(6, rng)
        base_chain = VrfKeyChain(SEED, 1)
        base = order_transactions(envs[:5], base_chain, Slot(index=0, capacity_gas=10**6))
        mutated_chain = VrfKeyChain(SEED, 1)  # same key, different winner set
        mutated = order_transactions(
            envs[:4] + [envs[5]], mutated_chain, Slot(index=0, capacity_gas=10**6)
        )
        differing += mutated.permutation != base.permutation
    assert differing >= 99


def test_key_consumed_per_slot():
    rng = random.Random(5)
    chain = VrfKeyChain(SEED, 2)
    envs = random_envelopes(3, rng)
    order_transactions(envs, chain, Slot(index=0, capacity_gas=10**6))
    with pytest.raises(KeyReuseError):
        order_transactions(envs, chain, Slot(index=0, capacity_gas=10**6))
    order_transactions(envs, chain, Slot(index=1, capacity_gas=10**6))


def test_honest_record_verifies():
    rng = random.Random(6)
    chain = VrfKeyChain(SEED, 3)
    record = order_transactions(random_envelopes(5, rng), chain, Slot(index=1, capacity_gas=10**6))
    assert verify_ordering(record, chain.public_key(1))
    assert not verify_ordering(record, chain.public_key(2))


def test_swapped_permutation_entries_reject():
    rng = random.Random(7)
    chain = VrfKeyChain(SEED, 1)
    record = order_transactions(random_envelopes(5, rng), chain, Slot(index=0, capacity_gas=10**6))
    perm = list(record.permutation)
    perm[0], perm[1] = perm[1], perm[0]
    tampered = OrderingRecord(
        slot_index=record.slot_index,
        input_tx_ids=record.input_tx_ids,
        permutation=tuple(perm),
        proof=record.proof,
    )
    assert not verify_ordering(tampered, chain.public_key(0))


def test_cross_slot_proof_substitution_rejects():
    rng = random.Random(8)
    chain = VrfKeyChain(SEED, 2)
    envs = random_envelopes(4, rng)
    rec0 = order_transactions(envs, chain, Slot(index=0, capacity_gas=10**6))
    rec1 = order_transactions(envs, chain, Slot(index=1, capacity_gas=10**6))
    franken = OrderingRecord(
        slot_index=rec1.slot_index,
        input_tx_ids=rec1.input_tx_ids,
        permutation=rec1.permutation,
        proof=rec0.proof,  # proof from a different slot
    )
    assert not verify_ordering(franken, chain.public_key(1))


def test_apply_ordering_matches_permutation():
    rng = random.Random(9)
    envs = random_envelopes(5, rng)
    chain = VrfKeyChain(SEED, 1)
    record = order_transactions(envs, chain, Slot(index=0, capacity_gas=10**6))
    final = apply_ordering(record, envs)
    canonical = sorted(envs, key=lambda e: e.public_view.tx_id_public)
    assert [e.public_view.tx_id_public for e in final] == [
        canonical[i].public_view.tx_id_public for i in record.permutation
    ]
