"""Config-driven command line front end.

Four subcommands wrap the library: ``simulate`` (trace CSV + summary JSON),
``ne-oracle`` (equilibrium JSON), ``privacy-check`` (paired-run report), and
``iss-check`` (certificate + envelope verification). A run is fully
described by one JSON config; numeric fields may be written as decimal
strings so configs never depend on locale or float formatting.

Exit codes: 0 success, 1 usage or config error, 2 numeric failure.
"""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import scenarios
from .dynamics import ZohUniform, simulate
from .equilibrium import (
    kkt_residual_pev,
    psi_star,
    solve_ne_unconstrained,
    solve_vi_constrained,
)
from .errors import (
    AggseekError,
    CertificateFailure,
    ConfigError,
    InfeasibleInitialState,
    IntervalUndefined,
    NonFiniteState,
    NotStronglyMonotone,
    SingularSystem,
)
from .game import (
    BoxSet,
    QuadraticGame,
    gain_interval,
    mu_ell,
    relaxed_epsilon_affine,
    scalar_affine_structure,
)
from .graph import build_graph
from .privacy import (
    ReplicaTransform,
    build_replica,
    public_output_match,
    verify_indistinguishability,
)
from .robustness import iss_certificate, verify_iss
from .scenarios import build_hvac, build_pev, hvac_disturbance

CONFIG_VERSION = 1
OUT_ENV_VAR = "AGGSEEK_OUT"

_NUMERIC_ERRORS = (
    NonFiniteState,
    CertificateFailure,
    SingularSystem,
    NotStronglyMonotone,
    IntervalUndefined,
    InfeasibleInitialState,
)


def _num(value, where):
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: expected a number, got {value!r}") from exc


def _int(value, where):
    try:
        return int(str(value))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: expected an integer, got {value!r}") from exc


def _vector(values, where):
    return np.array([_num(v, where) for v in values])


def load_config(path):
    """Read and structurally validate a run config; returns (dict, sha256 hex)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    digest = hashlib.sha256(raw).hexdigest()
    try:
        cfg = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    version = _int(cfg.get("version", 0), "version")
    if version != CONFIG_VERSION:
        raise ConfigError(f"{path}: unsupported config version {version}")
    if "scenario" not in cfg:
        raise ConfigError(f"{path}: missing 'scenario' section")
    return cfg, digest


def _inline_game(section):
    players = section.get("players")
    if not players:
        raise ConfigError("inline game needs a nonempty 'players' list")
    N = len(players)
    h = _vector(section.get("h", [1.0] * N), "inline.h")
    k = _vector(section.get("k", [1.0] * N), "inline.k")
    Q, D, d, boxes = [], [], [], []
    for idx, p in enumerate(players):
        where = f"inline.players[{idx}]"
        Q.append([[_num(v, where + ".Q") for v in row] for row in p["Q"]])
        D.append([[_num(v, where + ".D") for v in row] for row in p["D"]])
        d.append([_num(v, where + ".d") for v in p["d"]])
        n = len(d[-1])
        lo = p.get("lower", ["-inf"] * n)
        hi = p.get("upper", ["inf"] * n)
        boxes.append(BoxSet(_vector(lo, where + ".lower"), _vector(hi, where + ".upper")))
    try:
        game = QuadraticGame(np.array(Q), np.array(D), np.array(d), h, k, boxes)
    except (ValueError, AggseekError) as exc:
        raise ConfigError(f"inline game rejected: {exc}") from exc
    edges = [(_int(a, "edges"), _int(b, "edges")) for a, b in section.get("edges", [])]
    graph = build_graph(N, edges)
    x0 = _vector(section.get("x0", [0.0] * game.dim), "inline.x0")
    return game, graph, x0, None


class LoadedRun:
    """Resolved config: game, graph, initial state, and run settings."""

    def __init__(self, cfg, digest):
        self.cfg = cfg
        self.digest = digest
        sc = cfg["scenario"]
        self.scenario_name = sc.get("name", "inline")
        self.budgets = None
        self.demand = None
        if "inline" in sc:
            self.game, self.graph, x0, _ = _inline_game(sc["inline"])
            init_seed = _int(sc.get("init_seed", scenarios.DEFAULT_INIT_SEED), "init_seed")
            rng = np.random.default_rng(init_seed)
            self.init = {
                "x0": x0,
                "sigma0": rng.uniform(-1, 1, self.game.dim),
                "psi0": rng.uniform(-1, 1, self.game.dim),
            }
        elif sc.get("name") == "hvac":
            seed = _int(sc.get("gain_seed", scenarios.DEFAULT_HVAC_SEED), "gain_seed")
            gains = sc.get("gains")
            bundle = build_hvac(
                seed=seed, gains=None if gains is None else _vector(gains, "gains")
            )
            self.game, self.graph = bundle.game, bundle.graph
            self.init = bundle.initial_state(
                _int(sc.get("init_seed", scenarios.DEFAULT_INIT_SEED), "init_seed")
            )
            self.bundle = bundle
        elif sc.get("name") == "pev":
            params = scenarios.PevParams(
                N=_int(sc.get("players", 20), "players"),
                seed=_int(sc.get("seed", scenarios.DEFAULT_PEV_SEED), "seed"),
            )
            bundle = build_pev(params)
            self.game, self.graph = bundle.game, bundle.graph
            self.budgets = bundle.budgets
            self.demand = bundle.demand
            self.init = bundle.initial_state(_int(sc.get("init_seed", 777), "init_seed"))
            self.bundle = bundle
        else:
            raise ConfigError(f"unknown scenario {sc.get('name')!r}")

        integ = cfg.get("integrator", {})
        self.dt = _num(integ.get("dt", "1e-3"), "integrator.dt")
        self.t_end = _num(integ.get("t_end", "200"), "integrator.t_end")
        self.stride = _int(integ.get("stride", 100), "integrator.stride")
        self.variant = cfg.get("variant", "unconstrained")

        self.disturbance = None
        if "disturbance" in cfg:
            dist_cfg = cfg["disturbance"]
            if self.game.n != 1:
                raise ConfigError("the built-in disturbance recipe assumes n = 1")
            self.disturbance = hvac_disturbance(
                _int(dist_cfg.get("seed", scenarios.DEFAULT_HVAC_DISTURBANCE_SEED), "seed"),
                N=self.game.N,
                amplitude=_num(dist_cfg.get("amplitude", 20.0), "amplitude"),
                hold=_num(dist_cfg.get("hold", 0.1), "hold"),
            )

    def run_trace(self):
        return simulate(
            self.game,
            self.graph,
            self.variant,
            self.init["x0"],
            self.init["sigma0"],
            self.init["psi0"],
            dt=self.dt,
            t_end=self.t_end,
            stride=self.stride,
            lambda0=self.init.get("lambda0"),
            disturbance=self.disturbance if self.variant == "disturbed" else None,
            budgets=self.budgets if self.variant == "lagrangian" else None,
        )

    def gain_warnings(self):
        out = []
        for i in range(self.game.N):
            mu, ell = mu_ell(self.game, i)
            h_i, k_i = self.game.h[i], self.game.k[i]
            if ell == 0:
                continue
            if mu > ell * h_i:
                lo, hi = gain_interval(mu, ell, h_i)
                if not lo < k_i < hi:
                    out.append(
                        f"player {i}: gain {k_i:.6g} outside ({lo:.6g}, {hi:.6g})"
                    )
                continue
            structure = scalar_affine_structure(self.game, i)
            if structure is not None:
                c, a = structure
                if relaxed_epsilon_affine(c, a, self.game.N, h_i, k_i) <= 0:
                    out.append(
                        f"player {i}: gain {k_i:.6g} fails the relaxed "
                        "admissibility check"
                    )
            else:
                out.append(
                    f"player {i}: local condition mu > ell*h fails and no "
                    "closed-form relaxation applies; rely on sampled checks"
                )
        return out


def _write_json(path, payload):
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _gnuplot_script(csv_name, N, n, variant):
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 't'",
        f"plot for [i=2:{1 + N * n}] '{csv_name}' using 1:i with lines",
        "pause -1",
    ]
    return "\n".join(lines) + "\n"


def cmd_simulate(run, outdir, emit_gnuplot=False):
    t0 = time.perf_counter()
    trace = run.run_trace()
    wall = time.perf_counter() - t0
    csv_path = os.path.join(outdir, "trace.csv")
    trace.to_csv(csv_path)

    summary = {
        "config_hash": run.digest,
        "scenario": run.scenario_name,
        "variant": run.variant,
        "dt": run.dt,
        "t_end": run.t_end,
        "stride": run.stride,
        "wall_time_s": wall,
        "conserved_drift": float(
            np.max(np.abs(trace.psi_mean[-1] - trace.psi_mean[0])) * trace.N
        ),
        "gain_warnings": run.gain_warnings(),
    }
    if run.variant == "disturbed":
        summary["disturbance_generator"] = ZohUniform.GENERATOR
    if run.variant in ("unconstrained", "disturbed"):
        ne = solve_ne_unconstrained(run.game)
        summary["ne_error"] = float(np.max(np.abs(trace.x[-1] - ne.x_star)))
    elif run.variant == "projected":
        ne = solve_vi_constrained(run.game, tol=1e-10)
        summary["ne_error"] = float(np.max(np.abs(trace.x[-1] - ne.x_star)))
        summary["vi_iterations"] = ne.iterations
    elif run.variant == "lagrangian":
        summary["kkt_residual"] = kkt_residual_pev(
            run.game, trace.x[-1], trace.lam[-1], run.budgets
        )
        summary["budget_error"] = float(
            np.max(
                np.abs(
                    trace.x[-1].reshape(trace.N, trace.n).sum(axis=1) - run.budgets
                )
            )
        )
    _write_json(os.path.join(outdir, "summary.json"), summary)
    if emit_gnuplot:
        with open(os.path.join(outdir, "trace.gp"), "w", newline="\n") as fh:
            fh.write(_gnuplot_script("trace.csv", trace.N, trace.n, run.variant))
    return summary


def _vi_oracle(game):
    """VI solve that tolerates inadmissible gains.

    The box-constrained solution set is unchanged by any positive diagonal
    gain (the per-player inequalities decouple), so when the configured
    gains have no monotonicity margin the solve is retried with surrogate
    gains from the interval midpoints, or with the exact scalar-structure
    margin when the game has the case-study form.
    """
    try:
        return solve_vi_constrained(game, tol=1e-10)
    except NotStronglyMonotone:
        pass
    relaxed = []
    for i in range(game.N):
        structure = scalar_affine_structure(game, i)
        if structure is None:
            break
        e_i = relaxed_epsilon_affine(
            structure[0], structure[1], game.N, game.h[i], game.k[i]
        )
        if e_i <= 0:
            break
        relaxed.append(e_i)
    if len(relaxed) == game.N:
        return solve_vi_constrained(game, tol=1e-10, epsilon=min(relaxed))
    k_new = np.empty(game.N)
    for i in range(game.N):
        mu, ell = mu_ell(game, i)
        lo, hi = gain_interval(mu, ell, game.h[i])  # raises if mu <= ell*h
        k_new[i] = 1.0 if not np.isfinite(hi) else np.sqrt(lo * hi)
    surrogate = QuadraticGame(
        game.Q, game.D, game.d, game.h, k_new, action_sets=list(game.action_sets)
    )
    sol = solve_vi_constrained(surrogate, tol=1e-10)
    sol.warnings.append(
        "configured gains have no monotonicity margin; solved with surrogate "
        "admissible gains (identical solution set)"
    )
    return sol


def cmd_ne_oracle(run, outdir):
    method = run.cfg.get("oracle", "auto")
    if method == "auto":
        bounded = any(b.is_bounded() for b in run.game.action_sets)
        method = "vi" if bounded else "linear"
    if method == "linear":
        sol = solve_ne_unconstrained(run.game)
    elif method == "vi":
        sol = _vi_oracle(run.game)
    else:
        raise ConfigError(f"unknown oracle {method!r}; use 'linear', 'vi', or 'auto'")
    payload = {
        "config_hash": run.digest,
        "method": sol.method,
        "x_star": sol.x_star.tolist(),
        "s_star": sol.s_star.tolist(),
        "residual": sol.residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "warnings": sol.warnings + run.gain_warnings(),
    }
    _write_json(os.path.join(outdir, "ne_solution.json"), payload)
    return payload


def cmd_privacy_check(run, outdir):
    if run.variant != "unconstrained":
        raise ConfigError("privacy-check runs the smooth unconstrained flow; "
                          "set variant to 'unconstrained'")
    priv_cfg = run.cfg.get("privacy", {})
    N = run.game.N
    if "r" in priv_cfg or "s" in priv_cfg:
        transform = ReplicaTransform(
            _vector(priv_cfg.get("r", [1.0] * N), "privacy.r"),
            _vector(priv_cfg.get("s", [1.0] * N), "privacy.s"),
        )
    else:
        transform = ReplicaTransform.random(N, _int(priv_cfg.get("seed", 7), "privacy.seed"))
    replica = build_replica(run.game, run.init["x0"], transform)

    trace = run.run_trace()
    trace_p = simulate(
        replica.game,
        run.graph,
        run.variant,
        replica.x0,
        run.init["sigma0"],
        run.init["psi0"],
        dt=run.dt,
        t_end=run.t_end,
        stride=run.stride,
    )
    report = verify_indistinguishability(trace, trace_p, transform)
    ws, wi = public_output_match(
        run.game,
        replica.game,
        run.graph,
        run.init["x0"],
        replica.x0,
        run.init["sigma0"],
        run.init["psi0"],
    )
    payload = {
        "config_hash": run.digest,
        "transform_r": transform.r.tolist(),
        "transform_s": transform.s.tolist(),
        "max_sigma_gap": report.max_sigma_gap,
        "max_psi_gap": report.max_psi_gap,
        "min_x_gap_per_player": report.min_x_gap.tolist(),
        "generator_state_mismatch": ws,
        "generator_input_mismatch": wi,
        "verdict": report.verdict,
        "warnings": report.warnings + replica.warnings,
    }
    _write_json(os.path.join(outdir, "privacy_report.json"), payload)
    return payload


def cmd_iss_check(run, outdir):
    iss_cfg = run.cfg.get("iss", {})
    if run.disturbance is None:
        raise ConfigError("iss-check requires a 'disturbance' section")
    run.variant = "disturbed"
    cert = iss_certificate(
        run.game,
        run.graph,
        kappa_frac=_num(iss_cfg.get("kappa_frac", 0.5), "iss.kappa_frac"),
        beta=_num(iss_cfg.get("beta", 0.5), "iss.beta"),
    )
    ne = solve_ne_unconstrained(run.game)
    psi_ref = psi_star(run.graph, run.game.h, ne.x_star, run.init["psi0"])
    trace = run.run_trace()
    report = verify_iss(trace, cert, run.graph, ne, psi_ref)
    shrink = _num(iss_cfg.get("shrink_control", 100.0), "iss.shrink_control")
    control = verify_iss(trace, cert, run.graph, ne, psi_ref, shrink=shrink)
    payload = {
        "config_hash": run.digest,
        "certificate": cert.as_dict(),
        "violations": report.violations,
        "max_ratio": report.max_ratio,
        "init_dev": report.init_dev,
        "nu_sup": report.nu_sup,
        "shrink_control": shrink,
        "shrink_control_violations": control.violations,
        "disturbance_generator": ZohUniform.GENERATOR,
    }
    _write_json(os.path.join(outdir, "iss_report.json"), payload)
    env_path = os.path.join(outdir, "envelope.csv")
    with open(env_path, "w", newline="\n") as fh:
        fh.write("t,deviation,envelope\n")
        for t, d, e in zip(trace.times, report.deviations, report.envelope):
            fh.write(f"{t:.17g},{d:.17g},{e:.17g}\n")
    return payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def make_parser():
    parser = _Parser(
        prog="aggseek",
        description="Simulate and verify distributed equilibrium seeking runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "integrate a run and write trace.csv + summary.json"),
        ("ne-oracle", "solve for the equilibrium and write ne_solution.json"),
        ("privacy-check", "run a replica pair and write privacy_report.json"),
        ("iss-check", "verify the disturbance envelope and write iss_report.json"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON run config")
        p.add_argument(
            "--out",
            default=None,
            help=f"output directory (default: ${OUT_ENV_VAR} or ./out)",
        )
        if name == "simulate":
            p.add_argument(
                "--emit-gnuplot",
                action="store_true",
                help="write a gnuplot script next to the CSV",
            )
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    outdir = args.out or os.environ.get(OUT_ENV_VAR, "out")
    try:
        cfg, digest = load_config(args.config)
        run = LoadedRun(cfg, digest)
        os.makedirs(outdir, exist_ok=True)
        if args.command == "simulate":
            cmd_simulate(run, outdir, emit_gnuplot=args.emit_gnuplot)
        elif args.command == "ne-oracle":
            cmd_ne_oracle(run, outdir)
        elif args.command == "privacy-check":
            cmd_privacy_check(run, outdir)
        elif args.command == "iss-check":
            cmd_iss_check(run, outdir)
    except ConfigError as exc:
        print(f"aggseek: config error: {exc}", file=sys.stderr)
        return 1
    except _NUMERIC_ERRORS as exc:
        print(f"aggseek: numeric failure: {exc}", file=sys.stderr)
        return 2
    except AggseekError as exc:
        print(f"aggseek: config error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
