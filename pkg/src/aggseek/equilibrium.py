"""Independent Nash-equilibrium oracles and equilibrium characterizations.

These solvers never integrate the seeking dynamics; they provide ground
truth (direct linear solve, projected-gradient fixed point, KKT residuals)
against which simulated trajectories are tested.
"""

from dataclasses import dataclass, field

import numpy as np

from . import game as game_mod
from .errors import MissingEquilibrium, SingularSystem
from .graph import kron_apply


@dataclass
class NESolution:
    """Equilibrium estimate with its residual and provenance tag."""

    x_star: np.ndarray
    s_star: np.ndarray
    residual: float
    method: str
    iterations: int = 0
    converged: bool = True
    warnings: list = field(default_factory=list)


def _coupling_matrix(game):
    """Dense matrix of the stationarity system: block (i,j) = delta_ij A_i + (h_j/N) D_i."""
    N, n = game.N, game.n
    M = np.zeros((N * n, N * n))
    for i in range(N):
        ri = slice(i * n, (i + 1) * n)
        for j in range(N):
            cj = slice(j * n, (j + 1) * n)
            M[ri, cj] = (game.h[j] / N) * game.D[i]
            if i == j:
                M[ri, cj] += game.A[i]
    return M


def solve_ne_unconstrained(game):
    """Solve col(f_i(x_i, s(x))) = 0 by a direct dense factorization.

    Valid for quadratic games; raises SingularSystem instead of silently
    regularizing, since admissible instances are provably nonsingular.
    """
    M = _coupling_matrix(game)
    rhs = -game.d.ravel()
    try:
        x = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"stationarity system is singular: {exc}") from exc
    residual = float(np.linalg.norm(game_mod.pseudo_gradient(game, x)))
    scale = 1.0 + float(np.linalg.norm(game.d.ravel()))
    if not np.isfinite(residual) or residual > 1e-10 * scale:
        raise SingularSystem(
            f"solve succeeded but residual {residual:.3e} exceeds 1e-10*(1+||d||); "
            "the system is numerically unreliable"
        )
    return NESolution(
        x_star=x, s_star=game.aggregate(x), residual=residual, method="linear_solve"
    )


def natural_residual(game, x):
    """||x - proj_X(x - K F_pg(x))||: zero exactly at the constrained NE."""
    g = game.k_times(game_mod.pseudo_gradient(game, x))
    lo, hi = game.lower_bounds(), game.upper_bounds()
    return float(np.linalg.norm(x - np.clip(x - g, lo, hi)))


def solve_vi_constrained(game, tol=1e-10, max_iter=100_000, epsilon=None, step=None):
    """Projected pseudo-gradient fixed point for the box-constrained NE.

    Iterates x <- proj_X(x - tau K F_pg(x)) with the fixed step
    tau = epsilon / (gamma_bar + h_bar)^2, which contracts under the game's
    joint strong monotonicity. Pass `epsilon` explicitly for games admissible
    only through the relaxed (case-study) interval. A run that exhausts
    max_iter returns the best iterate with converged=False.
    """
    if epsilon is None:
        epsilon = game_mod.compute_epsilon(game)
    if step is None:
        gamma_bar = max(
            game.k[i] * game_mod.gradient_bound(game, i) for i in range(game.N)
        )
        h_bar = float(np.max(game.h))
        step = epsilon / (gamma_bar + h_bar) ** 2
    lo, hi = game.lower_bounds(), game.upper_bounds()
    x = np.concatenate(
        [b.midpoint() if b.is_bounded() else b.project(np.zeros(b.n))
         for b in game.action_sets]
    )
    warnings = []
    best = x
    best_res = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = game.k_times(game_mod.pseudo_gradient(game, x))
        x_new = np.clip(x - step * g, lo, hi)
        res = float(np.linalg.norm(x_new - np.clip(x_new - g, lo, hi)))
        x = x_new
        if res < best_res:
            best, best_res = x, res
        if res <= tol:
            break
    converged = best_res <= tol
    if not converged:
        warnings.append(
            f"max_iter={max_iter} exhausted; best natural residual {best_res:.3e}"
        )
    return NESolution(
        x_star=best,
        s_star=game.aggregate(best),
        residual=best_res,
        method="projected_gradient",
        iterations=it,
        converged=converged,
        warnings=warnings,
    )


def psi_star(G, h_weights, x_star, psi0):
    """Predicted consensus-state limit for a run started at psi0.

    Combines the graph-pseudoinverse image of the weighted equilibrium
    actions with the conserved blockwise mean of psi(0).
    """
    x_star = np.asarray(x_star, dtype=float)
    psi0 = np.asarray(psi0, dtype=float)
    N = G.N
    n = x_star.size // N
    h = np.asarray(h_weights, dtype=float)
    hx = (h[:, None] * x_star.reshape(N, n)).ravel()
    mean0 = psi0.reshape(N, n).mean(axis=0)
    return kron_apply(G, "Lpinv", hx) + np.tile(mean0, N)


def kkt_residual_pev(game, x, lam, budgets, active_tol=1e-9):
    """Stationarity-plus-budget residual for box/budget constrained games.

    The box multipliers are eliminated in closed form: at interior
    components the stationarity expression g = K F_pg(x) + (I otimes 1) lam
    must vanish; at a lower bound it must be >= 0 and at an upper bound
    <= 0. Violations accumulate into r_stat; the budget mismatch
    ||(I otimes 1') x - budgets|| forms r_eq, and r_stat + r_eq is returned.
    """
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    budgets = np.asarray(budgets, dtype=float)
    N, n = game.N, game.n
    g = game.k_times(game_mod.pseudo_gradient(game, x)) + np.repeat(lam, n)
    lo, hi = game.lower_bounds(), game.upper_bounds()
    span = np.where(np.isfinite(hi - lo), hi - lo, 1.0)
    at_lo = x <= lo + active_tol * (1.0 + span)
    at_hi = x >= hi - active_tol * (1.0 + span)
    viol = np.abs(g)
    viol = np.where(at_lo, np.maximum(0.0, -g), viol)
    viol = np.where(at_hi, np.maximum(0.0, g), viol)
    viol = np.where(at_lo & at_hi, np.zeros_like(g), viol)
    r_stat = float(np.linalg.norm(viol))
    r_eq = float(np.linalg.norm(x.reshape(N, n).sum(axis=1) - budgets))
    return r_stat + r_eq


def deviation_norm(x, sigma, psi, ne, psi_ref, G):
    """Joint deviation ||col(x~, sigma~, Pi psi~)|| from an equilibrium.

    psi~ is measured after removing the consensus component, consistent with
    the predicted limit from :func:`psi_star` absorbing the mean of psi(0).
    """
    if ne is None or psi_ref is None:
        raise MissingEquilibrium("equilibrium data (x*, psi*) is required")
    n = ne.s_star.size
    sigma_star = np.tile(ne.s_star, G.N)
    dx = np.asarray(x, float) - ne.x_star
    ds = np.asarray(sigma, float) - sigma_star
    dpsi = kron_apply(G, "Pi", np.asarray(psi, float) - psi_ref)
    return float(np.sqrt(dx @ dx + ds @ ds + dpsi @ dpsi))
