"""Why the operators behave: a repeated game with grim exclusion.

Each node role earns r per round while honest. A deviation pays g once but
is caught with probability p, costing the penalty F and the job forever.
Honesty is the best response exactly when p clears a closed-form threshold;
an exhaustive search over every finite strategy sequence agrees.
"""

from fractions import Fraction

from fairflow.equilibrium import (
    brute_force_best_response,
    default_role_games,
    deviate_value,
    equilibrium_check,
    honest_value,
)

games = default_role_games()
print(f"{'role':<18} {'V_honest':>9} {'V_deviate':>10} {'p*':>8} {'honest?':>8}")
for role, game in games.items():
    res = equilibrium_check(game)
    print(
        f"{role:<18} {float(res.v_honest):>9.2f} {float(res.v_deviate):>10.2f}"
        f" {float(res.p_star):>8.4f} {str(res.honest_is_best_response):>8}"
    )

guardian = games["order_guardian"]
p_star = equilibrium_check(guardian).p_star
print(f"\nthe guardian's threshold is the exact rational {p_star} (no float, no tolerance)")

table = brute_force_best_response(guardian, horizon=12)
print(f"brute force over all 2^12 = {len(table.values)} strategies at T=12:")
print(f"  argmax = {'all-honest' if table.all_honest_is_argmax else table.argmax}")
print(f"  best value {float(table.best_value):.4f} vs V_honest {float(honest_value(guardian)):.4f}"
      f" (gap = the discounted tail beyond the horizon)")

weak = type(guardian)(
    role="order_guardian",
    r=guardian.r,
    g=guardian.g,
    p=Fraction(1, 100),  # detection nearly never happens
    F=guardian.F,
    delta=guardian.delta,
)
res = equilibrium_check(weak)
print(f"\nwith detection at p=1/100 (< 4/29): honest_is_best_response = {res.honest_is_best_response}")
print("the equilibrium only holds while the system can actually catch and punish")
