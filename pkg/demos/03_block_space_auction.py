"""One auction round: scoring, the hybrid score/lottery split, rewards.

Three quarters of the gas goes to the highest scores; the rest is raffled
among the remaining bids with win odds proportional to score, so small
bidders keep a foothold and the winner set stays unpredictable.
"""

from fractions import Fraction

from fairflow.auction import (
    AuctionManager,
    DEFAULT_SPLIT,
    ScoringWeights,
    distribute_rewards,
    score_bid,
    submit_bid,
)
from fairflow.core import Bid, Slot, sha256
from fairflow.vrf import VrfKeyChain

weights = ScoringWeights(w_fee=Fraction(1), w_urgency=Fraction(5000))
manager = AuctionManager("am-0", VrfKeyChain(sha256(b"demo-auction"), rounds=1))
round_ = manager.open_round(
    Slot(index=0, capacity_gas=300_000), weights, lottery_fraction=Fraction(1, 4)
)

bidders = [
    ("alice", 9_000_000, 3, 100_000),
    ("bob", 12_000_000, 0, 100_000),
    ("carol", 2_000_000, 10, 100_000),
    ("dave", 1_500_000, 1, 100_000),
    ("erin", 800_000, 8, 100_000),
]
print(f"capacity 300k gas, lottery fraction 1/4  ->  score tranche budget 225k")
for name, fee, urgency, gas in bidders:
    bid = Bid(
        bid_id=sha256(b"bid", name.encode()),
        tx_id=sha256(b"tx", name.encode()),
        bidder=name,
        fee_offered=fee,
        urgency=urgency,
        gas_declared=gas,
    )
    outcome = submit_bid(round_, bid)
    print(f"  {name:6s} fee {fee:>10,} urgency {urgency:2d} -> score {float(score_bid(bid, weights)):>9,.1f} [{outcome}]")

manager.close_round(0)
result, _ = manager.decide(0)
names = {sha256(b"bid", n.encode()): n for n, *_ in bidders}
score_part = [names[w] for w in result.winners[: result.score_winner_count]]
lottery_part = [names[w] for w in result.winners[result.score_winner_count :]]
print(f"\nscore tranche winners : {score_part}")
print(f"lottery tranche winner: {lottery_part}  (weighted by score, VRF-drawn)")
print(f"total fees collected  : {result.total_fees:,}")

roster = {
    "proposer": ("proposer-0",),
    "auction_manager": ("am-0",),
    "order_guardian": ("og-0", "og-1"),
    "privacy_keeper": ("pk-0",),
}
print("\nreward split (70/15/10/5, largest-remainder, conserved exactly):")
for entry in distribute_rewards(result, DEFAULT_SPLIT, roster):
    print(f"  {entry.node_id:12s} {entry.role:16s} {entry.amount:>10,}")
