"""Anatomy of a sandwich: why ordering is worth money.

One victim buy between an attacker's front-run and back-run. Enumerating
all six orders of the same three transactions shows the whole game: the
classic order books a large profit, its mirror image books the matching
loss, and everything else is roundtrip dust. Randomizing the order is what
takes the expected value away.
"""

from itertools import permutations

from fairflow.chain import Account, ChainState, Pool, simulate_block, swap_quote
from fairflow.core import Swap, Transaction

R = 10**12
state = ChainState(
    accounts={
        "victim": Account(eth_balance=10**15, token_balance=10**15),
        "attacker": Account(eth_balance=10**15, token_balance=10**15),
    },
    pools={"main": Pool(reserve_eth=R, reserve_token=R, fee_ppm=0)},
)
attack = victim_size = 10**10  # 1% of the pool
back_amount = swap_quote(state.pools["main"], "buy", attack)

txs = {
    "F": Transaction("attacker", 0, 100_000, 0, Swap("main", "buy", attack, 0)),
    "V": Transaction("victim", 0, 100_000, 0, Swap("main", "buy", victim_size, 0)),
    "B": Transaction("attacker", 1, 100_000, 0, Swap("main", "sell", back_amount, 0)),
}
before = state.account("attacker")

print("pool 10^12/10^12, victim buys 10^10, attacker fronts 10^10 and exits\n")
print("order   attacker profit (marked at that order's final spot)")
total = 0
for perm in permutations("FVB"):
    end, _ = simulate_block(state, [txs[c] for c in perm])
    after = end.account("attacker")
    pool = end.pools["main"]
    profit = (after.eth_balance - before.eth_balance) + (
        (after.token_balance - before.token_balance) * pool.reserve_eth
    ) // pool.reserve_token
    total += profit
    note = ""
    if perm == ("F", "V", "B"):
        note = "  <- the sandwich"
    elif perm == ("B", "V", "F"):
        note = "  <- its mirror image"
    print(f"{''.join(perm)}    {profit:>+16,}{note}")
print(f"\nmean over the six equally likely orders: {total / 6:>+16,.0f}")
print("a fee-ordered mempool always lands FVB; a uniform shuffle nets ~nothing")
