"""Disturbance-robustness certificate for the smooth seeking flow.

The certificate bounds the deviation of a disturbed run from its
equilibrium by a decaying transient plus a gain on the disturbance
supremum. All constants are computed from the game, the graph spectrum,
and the joint monotonicity margin; for quadratic games the key matrix
inequality is evaluated exactly (constant Jacobian), otherwise a
conservative scalar bound is used.
"""

from dataclasses import dataclass, field

import numpy as np

from .equilibrium import deviation_norm
from .errors import CertificateFailure, MissingEquilibrium
from .game import QuadraticGame, compute_epsilon, gradient_bound
from .graph import kron_apply

# Above this state dimension the exact eigencheck is skipped for the
# conservative scalar bound even on quadratic games.
_EXACT_DELTA_LIMIT = 2400


@dataclass
class IssCertificate:
    """Constants of the input-to-state stability estimate.

    The deviation envelope is
    sqrt(alpha2/alpha1) * (exp(-alpha3 t / (2 alpha2)) * dev0
                           + alpha4 * sup ||nu||).
    """

    epsilon: float
    gamma_bar: float
    h_bar: float
    lambda_max: float
    lambda_min_nz: float
    kappa1: float
    kappa2: float
    kappa: float
    alpha1: float
    alpha2: float
    delta: float
    m: float
    beta: float
    alpha3: float
    alpha4: float
    delta_method: str = "exact"

    def as_dict(self):
        return {
            k: getattr(self, k)
            for k in (
                "epsilon", "gamma_bar", "h_bar", "lambda_max", "lambda_min_nz",
                "kappa1", "kappa2", "kappa", "alpha1", "alpha2", "delta", "m",
                "beta", "alpha3", "alpha4", "delta_method",
            )
        }


def _jacobian_U(game):
    """Constant Jacobian of the joint (x, sigma) operator of a quadratic game."""
    N, n = game.N, game.n
    m = N * n
    U = np.zeros((2 * m, 2 * m))
    for i in range(N):
        sl = slice(i * n, (i + 1) * n)
        U[sl, sl] = game.k[i] * game.A[i]
        U[sl, slice(m + i * n, m + (i + 1) * n)] = game.k[i] * game.D[i]
    U[m:, :m] = -np.diag(np.repeat(game.h, n))
    U[m:, m:] = np.eye(m)
    return U


def _delta_exact(game, G, epsilon, kappa):
    """Smallest eigenvalue of the assembled certificate matrix P."""
    N, n = game.N, game.n
    m = N * n
    U = _jacobian_U(game)
    LI = np.kron(G.L, np.eye(n))
    GGt = np.zeros((2 * m, 2 * m))
    GGt[m:, m:] = LI @ LI
    P = np.zeros((4 * m, 4 * m))
    P[: 2 * m, : 2 * m] = epsilon * np.eye(2 * m) - kappa * GGt
    P[: 2 * m, 2 * m :] = 0.5 * kappa * U.T
    P[2 * m :, : 2 * m] = 0.5 * kappa * U
    P[2 * m :, 2 * m :] = kappa * np.eye(2 * m)
    return float(np.linalg.eigvalsh(P)[0])


def _delta_scalar(epsilon, kappa, gamma_bar, h_bar, lam_max):
    """Conservative bound via ||U||^2 <= gamma_bar^2 + h_bar^2 + 1."""
    u = np.sqrt(gamma_bar**2 + h_bar**2 + 1.0)
    a = epsilon - kappa * lam_max**2
    b = 0.5 * kappa * u
    c = kappa
    return float(0.5 * (a + c) - np.sqrt(0.25 * (a - c) ** 2 + b**2))


def kappa_bounds(epsilon, gamma_bar, h_bar, lambda_max):
    """Admissible cross-term range endpoints (kappa1, kappa2)."""
    kappa1 = 1.0 / max(1.0, lambda_max**2)
    kappa2 = 4.0 * epsilon / (gamma_bar**2 + h_bar**2 + 1.0 + 4.0 * lambda_max**2)
    return float(kappa1), float(kappa2)


def iss_certificate(game, G, kappa_frac=0.5, beta=0.5, epsilon=None):
    """Assemble the full certificate for a game over a graph.

    kappa is placed at kappa_frac * min(kappa1, kappa2); beta in (0, 1)
    splits the dissipation between decay rate and disturbance gain. Both
    have no canonical value and are exposed to the run config.
    """
    if not 0 < kappa_frac < 1 or not 0 < beta < 1:
        raise ValueError("kappa_frac and beta must lie in (0, 1)")
    if epsilon is None:
        epsilon = compute_epsilon(game)
    if isinstance(game, QuadraticGame):
        gamma = np.array([gradient_bound(game, i) for i in range(game.N)])
    elif game.grad_bound is not None:
        gamma = game.grad_bound
    else:
        raise CertificateFailure(
            "non-quadratic games need per-player grad_bound values"
        )
    gamma_bar = float(np.max(gamma * game.k))
    h_bar = float(np.max(game.h))
    lam_max = G.lambda_max
    lam2 = G.lambda_min_nz

    big = max(1.0, lam_max**2)
    kappa1, kappa2 = kappa_bounds(epsilon, gamma_bar, h_bar, lam_max)
    kappa = kappa_frac * min(kappa1, kappa2)

    if isinstance(game, QuadraticGame) and 4 * game.dim <= _EXACT_DELTA_LIMIT:
        delta = _delta_exact(game, G, epsilon, kappa)
        method = "exact"
    else:
        delta = _delta_scalar(epsilon, kappa, gamma_bar, h_bar, lam_max)
        method = "scalar_bound"
    if delta <= 0:
        raise CertificateFailure(
            f"certificate matrix not positive definite (delta={delta:.3e}); "
            "this should not happen for kappa below kappa2"
        )

    m_const = delta * min(1.0, lam2**2)
    alpha1 = 0.5 * (1.0 - kappa * big)
    alpha2 = 0.5 * (1.0 + kappa * big)
    alpha3 = m_const * (1.0 - beta)
    alpha4 = np.sqrt(1.0 + kappa**2 * lam_max**2) / (beta * m_const)
    return IssCertificate(
        epsilon=float(epsilon),
        gamma_bar=gamma_bar,
        h_bar=h_bar,
        lambda_max=lam_max,
        lambda_min_nz=lam2,
        kappa1=float(kappa1),
        kappa2=float(kappa2),
        kappa=float(kappa),
        alpha1=float(alpha1),
        alpha2=float(alpha2),
        delta=float(delta),
        m=float(m_const),
        beta=float(beta),
        alpha3=float(alpha3),
        alpha4=float(alpha4),
        delta_method=method,
    )


def iss_envelope(cert, init_dev, nu_sup, t):
    """Deviation envelope value(s) at time(s) t."""
    t = np.asarray(t, dtype=float)
    ratio = np.sqrt(cert.alpha2 / cert.alpha1)
    decay = np.exp(-cert.alpha3 / (2.0 * cert.alpha2) * t)
    return ratio * (decay * init_dev + cert.alpha4 * np.asarray(nu_sup, dtype=float))


def iss_lyapunov(cert, G, dxi, dphi):
    """Certificate storage function 0.5||col(dxi, dphi)||^2 + kappa dphi' G' dxi."""
    dxi = np.asarray(dxi, dtype=float)
    dphi = np.asarray(dphi, dtype=float)
    m = dphi.size
    sigma_part = dxi[m:]
    cross = float(dphi @ kron_apply(G, "L", sigma_part))
    return 0.5 * (dxi @ dxi + dphi @ dphi) + cert.kappa * cross


@dataclass
class IssReport:
    """Per-sample envelope comparison of one disturbed run."""

    violations: int
    max_ratio: float
    init_dev: float
    nu_sup: float
    deviations: np.ndarray = field(repr=False, default=None)
    envelope: np.ndarray = field(repr=False, default=None)


def verify_iss(trace, cert, G, ne, psi_ref, shrink=1.0, atol=1e-9):
    """Check a disturbed trace against the certificate envelope.

    The deviation at each sample combines the action and estimate errors
    with the consensus-projected psi error; the envelope uses the running
    supremum of the recorded disturbance norm, shrunk by `shrink` (use
    shrink > 1 as a falsifiability control). Expected violations: zero at
    shrink = 1. `atol` absorbs integrator roundoff when the envelope is
    identically zero (undisturbed run started at the equilibrium).
    """
    if ne is None or psi_ref is None:
        raise MissingEquilibrium("verify_iss needs the equilibrium pair (x*, psi*)")
    S = len(trace)
    devs = np.empty(S)
    for idx in range(S):
        devs[idx] = deviation_norm(
            trace.x[idx], trace.sigma[idx], trace.psi[idx], ne, psi_ref, G
        )
    env = iss_envelope(cert, devs[0], trace.dist_sup, trace.times) / shrink
    violations = int(np.count_nonzero(devs > env + atol))
    max_ratio = float(np.max(devs / (env + atol)))
    return IssReport(
        violations=violations,
        max_ratio=max_ratio,
        init_dev=float(devs[0]),
        nu_sup=float(trace.dist_sup[-1]),
        deviations=devs,
        envelope=env,
    )
