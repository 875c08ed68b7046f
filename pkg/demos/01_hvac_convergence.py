"""Five HVAC consumers find the equilibrium of their energy game.

Each consumer balances comfort (a quadratic penalty around its target
consumption) against an electricity price that rises with the average
consumption of everyone. Nobody shares its consumption: the peers exchange
only auxiliary estimates over the communication graph, and the estimates
drag every action to the unique equilibrium.

Run:  python demos/01_hvac_convergence.py [--plot hvac.png]
"""

import sys

import numpy as np

from aggseek import build_hvac, psi_star, simulate, solve_ne_unconstrained
from aggseek.scenarios import DEFAULT_INIT_SEED

sc = build_hvac()
game, graph = sc.game, sc.graph
init = sc.initial_state(DEFAULT_INIT_SEED)

print(f"{game.N} consumers, targets {sc.params.x_hat} kWh")
print(f"gains drawn from ({sc.gain_interval[0]:.4f}, {sc.gain_interval[1]:.2f}):",
      np.round(game.k, 3))

ne = solve_ne_unconstrained(game)
print("\nequilibrium from the direct linear solve:")
print("  x* =", np.round(ne.x_star, 4), f"(residual {ne.residual:.1e})")
print("  average consumption s(x*) =", np.round(ne.s_star, 4))

trace = simulate(game, graph, "unconstrained", init["x0"], init["sigma0"],
                 init["psi0"], dt=1e-3, t_end=200.0, stride=100)

err = np.max(np.abs(trace.x[-1] - ne.x_star))
print(f"\nsimulated flow, T = {trace.times[-1]:.0f}s:")
print("  x(T) =", np.round(trace.x[-1], 4))
print(f"  max action error vs oracle: {err:.2e}")

psi_ref = psi_star(graph, game.h, ne.x_star, init["psi0"])
print(f"  consensus-state error vs predicted limit: "
      f"{np.linalg.norm(trace.psi[-1] - psi_ref):.2e}")
drift = np.max(np.abs(trace.psi_mean[-1] - trace.psi_mean[0])) * game.N
print(f"  conserved-quantity drift over the whole run: {drift:.2e}")

if "--plot" in sys.argv:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = sys.argv[sys.argv.index("--plot") + 1]
    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(game.N):
        ax.plot(trace.times, trace.x[:, i], label=f"consumer {i + 1}")
        ax.axhline(ne.x_star[i], color="gray", lw=0.5, ls="--")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("consumption [kWh]")
    ax.set_xlim(0, 20)
    ax.legend(ncol=2, fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"\nwrote {out}")
