"""FairFlow: deterministic block-space auction, VRF ordering and
commit-reveal privacy simulation with an adversarial MEV harness."""

from .auction import (
    AuctionManager,
    AuctionResult,
    AuctionRound,
    LedgerEntry,
    RewardSplit,
    ScoringWeights,
    distribute_rewards,
    score_bid,
    select_winners,
    submit_bid,
)
from .chain import (
    Account,
    ChainState,
    ExecutionReceipt,
    Pool,
    SlotReport,
    World,
    execute_transaction,
    run_slot,
    simulate_block,
    swap_quote,
)
from .core import (
    Bid,
    Block,
    Noop,
    Slot,
    Swap,
    Transaction,
    Transfer,
    canonical_serialize,
    deserialize_transaction,
    tx_hash,
)
from .envelope import (
    EncryptedTransaction,
    PrivacyKeeper,
    RevealKey,
    minimal_view,
    open_envelope,
    seal,
)
from .equilibrium import (
    RoleGame,
    brute_force_best_response,
    deviate_value,
    equilibrium_check,
    honest_value,
)
from .harness import (
    MevMetrics,
    compute_metrics,
    generate_workload,
    mev_optimal_order,
    run_comparison,
)
from .ordering import (
    OrderGuardian,
    OrderingRecord,
    derive_permutation,
    order_transactions,
    verify_ordering,
)
from .scenario import ScenarioConfig, load_scenario
from .vrf import (
    KeyReuseError,
    VrfKeyChain,
    VrfOutput,
    VrfProof,
    keychain_new,
    vrf_stream,
    vrf_verify,
)

__version__ = "0.1.0"
