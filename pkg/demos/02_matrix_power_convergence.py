"""How fast do powers of the augmented matrix reach their consensus limit?

The surplus gain delta controls the coupling between decisions and
surpluses.  Too small and the two blocks barely talk; too large and the
coupled system can go unstable.  This script sweeps delta on two
topologies and prints the fitted decay rate of

    gap(t) = || W(delta)^t  -  limit ||_inf

flagging regimes where the powers diverge instead.
"""
import numpy as np

from rgfopt import (
    build_augmented,
    equal_neighbor_weights,
    make_cycle,
    make_random_strongly_connected,
    matrix_power_gap_series,
    spectral_report,
)

topologies = {
    "one-way cycle, N=10": equal_neighbor_weights(make_cycle(10)),
    "random digraph, N=10": equal_neighbor_weights(
        make_random_strongly_connected(10, 0.3, seed=7)),
}
grid = [0.005, 0.01, 0.05, 0.1, 0.2]

for name, wp in topologies.items():
    print(f"\n=== {name} ===")
    rows = spectral_report(wp, grid)
    print(f"conservative bound delta_hat = {rows[0].delta_hat_value:.3e}")
    print(f"{'delta':>8} {'lambda_fit':>11} {'R^2':>8} {'gap(200)':>12}  verdict")
    for row in rows:
        verdict = "geometric decay" if row.geometric else "DIVERGES"
        print(f"{row.delta:>8} {row.lambda_fit:>11.4f} {row.r_squared:>8.4f} "
              f"{row.gap_last:>12.3e}  {verdict}")

print("""
Takeaways:
 * the random digraph tolerates the standard gain 0.1 comfortably,
 * the one-way cycle needs a much smaller gain (~0.01) to stay stable,
 * the bound delta_hat certifies stability but is far too small to be a
   practical operating point; fitted rates are the useful diagnostic.
""")

wp = topologies["one-way cycle, N=10"]
gaps = matrix_power_gap_series(build_augmented(wp, 0.01), 400)
halves = [(t, gaps[t - 1], gaps[2 * t - 1]) for t in (50, 100, 200)]
print("doubling the horizon keeps shrinking the gap at delta=0.01:")
for t, g1, g2 in halves:
    print(f"  gap({t}) = {g1:.4f}   gap({2 * t}) = {g2:.4f}")
