"""Distributed Nash-equilibrium seeking for aggregative games.

Simulation of the consensus-coupled seeking flows (smooth, disturbed,
box-projected, and budget-augmented), independent equilibrium oracles,
privacy-replica construction, and disturbance-robustness certificates,
plus the two shipped case studies.
"""

from . import errors
from .dynamics import (
    DisturbanceSignal,
    SimState,
    Sinusoid,
    Trace,
    ZohUniform,
    eval_disturbance,
    rhs_unconstrained,
    simulate,
    tangent_project,
)
from .equilibrium import (
    NESolution,
    kkt_residual_pev,
    psi_star,
    solve_ne_unconstrained,
    solve_vi_constrained,
)
from .game import (
    BoxSet,
    GameModel,
    QuadraticGame,
    check_assumption2,
    compute_epsilon,
    eval_f,
    gain_interval,
    gradient_bound,
    mu_ell,
    relaxed_gain_interval,
    sample_monotonicity_check,
)
from .graph import GraphTopology, build_graph, kron_apply
from .privacy import (
    ReplicaTransform,
    build_replica,
    unweighted_rescaling,
    verify_indistinguishability,
)
from .robustness import IssCertificate, iss_certificate, iss_envelope, verify_iss
from .scenarios import (
    HvacParams,
    PevParams,
    build_hvac,
    build_pev,
    hvac_disturbance,
    valley_metrics,
)

__version__ = "0.1.0"

__all__ = [
    "BoxSet",
    "DisturbanceSignal",
    "GameModel",
    "GraphTopology",
    "HvacParams",
    "IssCertificate",
    "NESolution",
    "PevParams",
    "QuadraticGame",
    "ReplicaTransform",
    "SimState",
    "Sinusoid",
    "Trace",
    "ZohUniform",
    "build_graph",
    "build_hvac",
    "build_pev",
    "build_replica",
    "check_assumption2",
    "compute_epsilon",
    "errors",
    "eval_disturbance",
    "eval_f",
    "gain_interval",
    "gradient_bound",
    "hvac_disturbance",
    "iss_certificate",
    "iss_envelope",
    "kkt_residual_pev",
    "kron_apply",
    "mu_ell",
    "psi_star",
    "relaxed_gain_interval",
    "rhs_unconstrained",
    "sample_monotonicity_check",
    "simulate",
    "solve_ne_unconstrained",
    "solve_vi_constrained",
    "tangent_project",
    "unweighted_rescaling",
    "valley_metrics",
    "verify_indistinguishability",
    "verify_iss",
]
