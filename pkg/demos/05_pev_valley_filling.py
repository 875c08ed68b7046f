"""A fleet of electric vehicles schedules its charging into the night valley.

Each vehicle must draw a fixed energy budget over 24 hours, one bounded
charging rate per hour, while the hourly price grows with total demand.
The budget equality is handled by an integral multiplier per vehicle, so
the flow may trade budget violation for optimality along the way and
restores it at the equilibrium. At the equilibrium the charging piles into
the hours where the base (non-vehicle) demand is lowest.

Run:  python demos/05_pev_valley_filling.py [--plot pev.png] [--full]
"""

import sys

import numpy as np

from aggseek import build_pev, kkt_residual_pev, simulate, valley_metrics
from aggseek.scenarios import PevParams

full = "--full" in sys.argv
params = PevParams(N=100) if full else PevParams()
t_end = 800.0 if full else 200.0

sc = build_pev(params)
game, graph = sc.game, sc.graph
print(f"{game.N} vehicles, horizon {game.n}h, "
      f"budgets {sc.budgets.min():.1f}..{sc.budgets.max():.1f} kWh")

init = sc.initial_state(777)
nsteps = int(round(t_end / 0.02))
trace = simulate(game, graph, "lagrangian", init["x0"], init["sigma0"],
                 init["psi0"], dt=0.02, t_end=t_end, stride=nsteps // 100,
                 lambda0=init["lambda0"], budgets=sc.budgets)

kkt = kkt_residual_pev(game, trace.x[-1], trace.lam[-1], sc.budgets)
budget_err = np.max(np.abs(trace.x[-1].reshape(game.N, game.n).sum(1) - sc.budgets))
print(f"\nafter T = {t_end:.0f}s of flow time:")
print(f"  stationarity + budget residual: {kkt:.2e}")
print(f"  worst budget error: {budget_err:.2e} kWh")

metrics = valley_metrics(trace, sc.demand)
print(f"  correlation(base demand, charging): {metrics.corr:.3f}")
print(f"  peak total demand increase: {metrics.peak_increase:.2f} kWh")

total = trace.x[-1].reshape(game.N, game.n).sum(axis=0)
scale = max(sc.demand + total)
print("\n  hour | base demand + charging")
for t in range(game.n):
    bars = int(40 * sc.demand[t] / scale)
    extra = int(40 * (sc.demand[t] + total[t]) / scale) - bars
    print(f"  {t:4d} | {'#' * bars}{'+' * extra}")

if "--plot" in sys.argv:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = sys.argv[sys.argv.index("--plot") + 1]
    hours = np.arange(game.n)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.step(hours, sc.demand, where="mid", label="base demand")
    ax.step(hours, sc.demand + total, where="mid", label="base + charging")
    ax.set_xlabel("hour")
    ax.set_ylabel("demand [kWh]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"\nwrote {out}")
