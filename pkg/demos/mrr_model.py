"""Tour of the MRR order-flow model.

Simulates a path, checks the constant-spread identity on the integer price
lattice, compares the sign autocorrelation against its geometric law, runs
the martingale regression, and sweeps the enumeration oracle that certifies
a zero expected gap between the fair price and the next trade price.

Run:  python3 demos/mrr_model.py
"""
import numpy as np

from fairmarket import (
    MrrParams,
    MrrState,
    average_market_impact,
    next_ask_expectation,
    next_bid_expectation,
    quote,
    simulate,
)

params = MrrParams(rho=0.5, theta=1.0, p0=100.0, seed=42)
n = 200_000

print(f"simulating {n} orders with rho={params.rho}, theta={params.theta} ...")
path = simulate(params, n)

# The quotes bracket the fair price with offsets that depend on the previous
# order sign; the spread never moves.
state = MrrState(eps_prev=1, p=params.p0)
ask, bid = quote(params, state)
print(f"\nquotes after a buy:  ask={ask:.2f} bid={bid:.2f} (spread {ask - bid:.2f})")
impact_buy, impact_sell = average_market_impact(params, eps_prev=1)
print(f"expected impact of the next order: buy {impact_buy:+.2f}, sell {impact_sell:+.2f}")

spreads = np.unique(path.ask_steps - path.bid_steps)
print(f"\nsimulated spread levels (lattice steps): {spreads.tolist()}")
print(f"in currency, exactly 2*theta: {spreads[0] * path.price_step == 2 * params.theta}")

print("\nsign autocorrelation vs rho^k:")
eps = path.eps.astype(np.float64)
for k in range(1, 6):
    r = float((eps[k:] * eps[:-k]).mean())
    print(f"  lag {k}: {r:+.4f}   (rho^{k} = {params.rho ** k:+.4f})")

# A fair price has increments orthogonal to everything known beforehand;
# regressing the increment on the previous sign should give zero.
dp = np.diff(path.fair)
prev = path.eps_prev[:-1].astype(np.float64)
coef = float((dp * prev).mean())
se = float((dp * prev).std(ddof=1) / np.sqrt(dp.size))
print(f"\nmartingale check: E[dp * prev_sign] = {coef:+.2e} (se {se:.2e})")

print("\nenumeration oracle, E[next trade price] - fair price (depth 200):")
for rho in (0.1, 0.5, 0.9):
    p = MrrParams(rho=rho, theta=1.0)
    for eps_prev in (1, -1):
        a = next_ask_expectation(p, eps_prev, 200)
        b = next_bid_expectation(p, eps_prev, 200)
        print(
            f"  rho={rho} eps_prev={eps_prev:+d}: ask {a.value:+.2e} "
            f"(tail {a.tail_bound:.1e}), bid {b.value:+.2e} (tail {b.tail_bound:.1e})"
        )
print("every value is zero up to the truncation tail plus float roundoff:")
print("the expected next trade price equals the fair price on both sides.")
