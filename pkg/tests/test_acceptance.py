"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run pytest with -s to see them
inline). The energy-game runs use the shipped default seeds; the
full-population charging run is gated behind AGGSEEK_PEV_FULL=1.
"""

import os
import time

import numpy as np
import pytest

from aggseek import (
    ReplicaTransform,
    build_hvac,
    build_pev,
    build_replica,
    compute_epsilon,
    gain_interval,
    kkt_residual_pev,
    mu_ell,
    psi_star,
    sample_monotonicity_check,
    simulate,
    solve_ne_unconstrained,
    solve_vi_constrained,
    valley_metrics,
    verify_indistinguishability,
    verify_iss,
)
from aggseek.game import pseudo_gradient
from aggseek.privacy import public_output_match
from aggseek.robustness import iss_certificate
from aggseek.scenarios import (
    DEFAULT_HVAC_DISTURBANCE_SEED,
    DEFAULT_INIT_SEED,
    PevParams,
    hvac_disturbance,
)


def report(criterion, passed, detail):
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def hvac_run(hvac, hvac_init):
    """The reference smooth run shared by criteria 1 and 2."""
    t0 = time.perf_counter()
    trace = simulate(
        hvac.game, hvac.graph, "unconstrained",
        hvac_init["x0"], hvac_init["sigma0"], hvac_init["psi0"],
        dt=1e-3, t_end=200.0, stride=100,
    )
    wall = time.perf_counter() - t0
    return trace, wall


def test_criterion_1_unconstrained_convergence(hvac, hvac_init, hvac_run):
    trace, wall = hvac_run
    ne = solve_ne_unconstrained(hvac.game)
    err = float(np.max(np.abs(trace.x[-1] - ne.x_star)))
    ok = err <= 1e-4 and wall < 5.0
    report(1, ok, f"||x(T)-x*||_inf = {err:.3e} (tol 1e-4), wall {wall:.2f}s (< 5s)")


def test_criterion_2_equilibrium_characterization(hvac, hvac_init, hvac_run):
    trace, _ = hvac_run
    g, G = hvac.game, hvac.graph
    ne = solve_ne_unconstrained(g)
    psi_ref = psi_star(G, g.h, ne.x_star, hvac_init["psi0"])
    psi_err = float(np.linalg.norm(trace.psi[-1] - psi_ref))
    drift = float(np.max(np.abs(
        (trace.psi[-1] - trace.psi[0]).reshape(g.N, g.n).sum(axis=0)
    )))
    ok = psi_err <= 1e-3 and drift <= 1e-6
    report(2, ok, f"||psi(T)-psi*|| = {psi_err:.3e} (tol 1e-3), "
                  f"conserved drift {drift:.3e} (tol 1e-6)")


def test_criterion_3_constrained_convergence(hvac, hvac_init):
    g, G = hvac.game, hvac.graph
    trace = simulate(g, G, "projected",
                     hvac_init["x0"], hvac_init["sigma0"], hvac_init["psi0"],
                     dt=1e-3, t_end=200.0, stride=100)
    lo, hi = g.lower_bounds(), g.upper_bounds()
    feasible = bool(np.all(trace.x >= lo) and np.all(trace.x <= hi))
    vi = solve_vi_constrained(g, tol=1e-11)
    err = float(np.max(np.abs(trace.x[-1] - vi.x_star)))
    kf = g.k_times(pseudo_gradient(g, vi.x_star))
    rng = np.random.default_rng(2024)
    worst = min(
        float((rng.uniform(lo, hi) - vi.x_star) @ kf) for _ in range(1000)
    )
    ok = feasible and err <= 1e-4 and worst >= -1e-8
    report(3, ok, f"feasible={feasible}, ||x(T)-x*_VI||_inf = {err:.3e} (tol 1e-4), "
                  f"min sampled VI value {worst:.2e} (>= -1e-8)")


def test_criterion_4_privacy(hvac, hvac_init):
    g, G = hvac.game, hvac.graph
    transform = ReplicaTransform(r=np.array([2.0, 1, 1, 1, 1]), s=np.ones(5))
    rep = build_replica(g, hvac_init["x0"], transform)

    ident = 0.0
    for i in range(g.N):
        s, r = transform.s[i], transform.r[i]
        ident = max(ident, float(np.max(np.abs(rep.game.A[i] - s * g.A[i]))))
        ident = max(ident, float(np.max(np.abs(rep.game.D[i] - s * r * g.D[i]))))
        ident = max(ident, float(np.max(np.abs(rep.game.d[i] - s * r * g.d[i]))))
        ident = max(ident, abs(rep.game.h[i] * r - g.h[i]))
        ident = max(ident, abs(rep.game.k[i] * s - g.k[i]))

    kw = dict(dt=1e-3, t_end=200.0, stride=100)
    tr = simulate(g, G, "unconstrained", hvac_init["x0"],
                  hvac_init["sigma0"], hvac_init["psi0"], **kw)
    tr_p = simulate(rep.game, G, "unconstrained", rep.x0,
                    hvac_init["sigma0"], hvac_init["psi0"], **kw)
    pr = verify_indistinguishability(tr, tr_p, transform)
    ws, wi = public_output_match(
        g, rep.game, G, hvac_init["x0"], rep.x0,
        hvac_init["sigma0"], hvac_init["psi0"], kmax=3,
    )
    rescaled = np.abs(transform.r - 1.0) > 0
    ok = (
        pr.max_sigma_gap <= 1e-8
        and pr.max_psi_gap <= 1e-8
        and bool(np.all(pr.min_x_gap[rescaled] > 0))
        and ident <= 1e-12
        and max(ws, wi) <= 1e-9
    )
    report(4, ok, f"sigma gap {pr.max_sigma_gap:.2e}, psi gap {pr.max_psi_gap:.2e} "
                  f"(tol 1e-8), min x gap {pr.min_x_gap[0]:.2f} (> 0), "
                  f"identities {ident:.2e} (tol 1e-12), "
                  f"observability {max(ws, wi):.2e} (tol 1e-9)")


def test_criterion_5_iss(hvac, hvac_init):
    g, G = hvac.game, hvac.graph
    sig = hvac_disturbance(DEFAULT_HVAC_DISTURBANCE_SEED)
    t0 = time.perf_counter()
    trace = simulate(g, G, "disturbed",
                     hvac_init["x0"], hvac_init["sigma0"], hvac_init["psi0"],
                     dt=1e-3, t_end=200.0, stride=100, disturbance=sig)
    wall = time.perf_counter() - t0
    cert = iss_certificate(g, G, kappa_frac=0.5, beta=0.5)
    ne = solve_ne_unconstrained(g)
    psi_ref = psi_star(G, g.h, ne.x_star, hvac_init["psi0"])
    rep = verify_iss(trace, cert, G, ne, psi_ref)
    control = verify_iss(trace, cert, G, ne, psi_ref, shrink=100.0)
    ok = rep.violations == 0 and control.violations > 0 and wall < 10.0
    report(5, ok, f"violations {rep.violations} (expect 0, max ratio "
                  f"{rep.max_ratio:.3f}), /100 control violations "
                  f"{control.violations} (> 0), wall {wall:.2f}s (< 10s)")


def test_criterion_6_monotonicity(hvac):
    g = hvac.game
    eps = compute_epsilon(g)
    rep = sample_monotonicity_check(g, trials=10_000, seed=60)
    joint_ok = (not rep.failed) and rep.min_ratio >= eps - 1e-9

    rng = np.random.default_rng(61)
    lo, hi = g.lower_bounds(), g.upper_bounds()
    pg_failures = 0
    for _ in range(10_000):
        x1 = rng.uniform(lo, hi)
        x2 = rng.uniform(lo, hi)
        dx = x1 - x2
        df = g.k_times(pseudo_gradient(g, x1) - pseudo_gradient(g, x2))
        if dx @ df < eps * (dx @ dx) - 1e-9:
            pg_failures += 1

    det_worst = 0.0
    for i in range(g.N):
        mu, ell = mu_ell(g, i)
        for kk in gain_interval(mu, ell, g.h[i]):
            det_worst = max(det_worst, abs(kk * mu - ((kk * ell + g.h[i]) / 2.0) ** 2))
    ok = joint_ok and pg_failures == 0 and det_worst <= 1e-9
    report(6, ok, f"joint min ratio {rep.min_ratio:.4f} >= eps {eps:.4f}, "
                  f"pseudo-gradient failures {pg_failures}/10000, "
                  f"endpoint |det| {det_worst:.2e} (tol 1e-9)")


def _pev_criterion(params, dt, t_end, stride, budget_label):
    sc = build_pev(params)
    g, G = sc.game, sc.graph
    init = sc.initial_state(777)
    t0 = time.perf_counter()
    trace = simulate(g, G, "lagrangian", init["x0"], init["sigma0"], init["psi0"],
                     dt=dt, t_end=t_end, stride=stride,
                     lambda0=init["lambda0"], budgets=sc.budgets)
    wall = time.perf_counter() - t0
    kkt = kkt_residual_pev(g, trace.x[-1], trace.lam[-1], sc.budgets)
    budget_err = float(np.max(np.abs(
        trace.x[-1].reshape(g.N, g.n).sum(axis=1) - sc.budgets
    )))
    vm = valley_metrics(trace, sc.demand)
    ok = kkt <= 1e-3 and budget_err <= 1e-3 and vm.corr < 0.0
    return ok, (f"{budget_label}: kkt {kkt:.2e} (tol 1e-3), budget err "
                f"{budget_err:.2e} (tol 1e-3), corr {vm.corr:.3f} (< 0), "
                f"wall {wall:.1f}s")


def test_criterion_7_pev_desk_scale():
    ok, detail = _pev_criterion(PevParams(N=20), dt=0.02, t_end=200.0,
                                stride=500, budget_label="N=20")
    report(7, ok, detail)


@pytest.mark.skipif(
    not os.environ.get("AGGSEEK_PEV_FULL"),
    reason="full-population run; enable with AGGSEEK_PEV_FULL=1",
)
def test_criterion_7_pev_full_population():
    t0 = time.perf_counter()
    ok, detail = _pev_criterion(PevParams(N=100), dt=0.02, t_end=800.0,
                                stride=2000, budget_label="N=100")
    ok = ok and (time.perf_counter() - t0) < 120.0
    report("7 (N=100)", ok, detail)


def test_criterion_8_integrator_order(hvac, hvac_init):
    g, G = hvac.game, hvac.graph
    ends = {}
    for dt in (0.04, 0.02, 0.01):
        tr = simulate(g, G, "unconstrained", hvac_init["x0"],
                      hvac_init["sigma0"], hvac_init["psi0"],
                      dt=dt, t_end=2.0, stride=int(round(2.0 / dt)))
        ends[dt] = tr.x[-1]
    d1 = float(np.linalg.norm(ends[0.04] - ends[0.02]))
    d2 = float(np.linalg.norm(ends[0.02] - ends[0.01]))
    ratio = d1 / d2
    ok = ratio >= 12.0
    report(8, ok, f"step-halving error ratio {ratio:.1f} (>= 12)")
