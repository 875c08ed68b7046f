"""Replica construction and indistinguishability checks for quadratic games.

A replica is a second quadratic game, built from per-player positive
scalings of the weight and gain matrices, whose communicated trajectories
(sigma, psi) coincide exactly with the original's while every rescaled
player's action trajectory differs. An eavesdropper holding all
communicated data therefore cannot tell the two systems apart, so the
private actions and cost parameters cannot be reconstructed. No noise is
injected anywhere: the equilibrium of the game is untouched.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import linear_system_matrices
from .errors import GridMismatch, NonPositiveScaling, WeightsNotUnit
from .game import QuadraticGame, gain_interval, mu_ell


@dataclass
class ReplicaTransform:
    """Per-player scalings: r_i rescales the weight block, s_i the gain block.

    The replica uses h_i' = h_i / r_i and k_i' = k_i / s_i, together with
    the matched cost rescalings of :func:`build_replica`.
    """

    r: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        self.r = np.atleast_1d(np.asarray(self.r, dtype=float))
        self.s = np.atleast_1d(np.asarray(self.s, dtype=float))
        if np.any(self.r <= 0) or np.any(self.s <= 0):
            raise NonPositiveScaling("replica scalings must be strictly positive")

    @classmethod
    def identity(cls, N):
        return cls(np.ones(N), np.ones(N))

    @classmethod
    def random(cls, N, seed, r_range=(0.5, 2.0), s_range=(0.8, 1.25)):
        """Log-uniform witness transform, the default for privacy tests."""
        rng = np.random.default_rng(seed)
        r = np.exp(rng.uniform(np.log(r_range[0]), np.log(r_range[1]), N))
        s = np.exp(rng.uniform(np.log(s_range[0]), np.log(s_range[1]), N))
        return cls(r, s)

    def is_identity(self, tol=0.0):
        return bool(np.all(np.abs(self.r - 1) <= tol) and np.all(np.abs(self.s - 1) <= tol))


@dataclass
class ReplicaGame:
    """Replica quadratic game plus its matched initial actions."""

    game: QuadraticGame
    x0: np.ndarray
    transform: ReplicaTransform
    warnings: list = field(default_factory=list)


def build_replica(game, x0, transform):
    """Construct the replica of a quadratic game for a given transform.

    Field formulas: Q_i' = s_i Q_i, D_i' = s_i r_i D_i, d_i' = s_i r_i d_i,
    h_i' = h_i / r_i, k_i' = k_i / s_i, and x_i'(0) = r_i x_i(0). These make
    the communicated trajectories of the two systems identical when started
    from the same sigma(0), psi(0).

    Local admissibility (mu' > ell'h') is inherited automatically; the gain
    interval is not, so a warning is attached when a replica gain leaves its
    own interval. Trajectory indistinguishability holds either way.
    """
    if not isinstance(game, QuadraticGame):
        raise TypeError("replicas are defined for quadratic games only")
    r, s = transform.r, transform.s
    if r.size != game.N or s.size != game.N:
        raise NonPositiveScaling(f"transform must have N={game.N} entries per vector")
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != game.dim:
        raise NonPositiveScaling(f"x0 must have length N*n={game.dim}")

    Qp = s[:, None, None] * game.Q
    Dp = (s * r)[:, None, None] * game.D
    dp = (s * r)[:, None] * game.d
    hp = game.h / r
    kp = game.k / s
    x0p = (r[:, None] * x0.reshape(game.N, game.n)).ravel()
    replica = QuadraticGame(Qp, Dp, dp, hp, kp, action_sets=list(game.action_sets))

    warnings = []
    for i in range(game.N):
        mu_p, ell_p = mu_ell(replica, i)
        if ell_p == 0.0:
            continue
        lo, hi = gain_interval(mu_p, ell_p, hp[i])
        if not lo < kp[i] < hi:
            warnings.append(
                f"player {i}: replica gain {kp[i]:.4g} outside its interval "
                f"({lo:.4g}, {hi:.4g}); trajectories still match"
            )
    return ReplicaGame(game=replica, x0=x0p, transform=transform, warnings=warnings)


@dataclass
class PrivacyReport:
    """Gap summary of a paired run and the resulting verdict."""

    max_sigma_gap: float
    max_psi_gap: float
    min_x_gap: np.ndarray
    verdict: str
    warnings: list = field(default_factory=list)


def verify_indistinguishability(trace, trace_prime, transform=None, gap_tol=1e-8):
    """Compare a run with its replica run on identical grids.

    Gaps are infinity norms over all samples. The verdict is
    ``indistinguishable`` when the communicated trajectories agree within
    gap_tol and every rescaled player's action trajectory stays bounded away
    from its replica; ``no-witness`` when no player is actually rescaled (or
    a rescaled action is identically zero); ``mismatch`` when the
    communicated trajectories differ beyond gap_tol.
    """
    if trace.times.shape != trace_prime.times.shape or np.any(
        trace.times != trace_prime.times
    ):
        raise GridMismatch("traces are not on identical time grids")
    max_sigma_gap = float(np.max(np.abs(trace.sigma - trace_prime.sigma)))
    max_psi_gap = float(np.max(np.abs(trace.psi - trace_prime.psi)))
    S, N, n = len(trace), trace.N, trace.n
    gaps = np.abs(trace.x - trace_prime.x).reshape(S, N, n)
    min_x_gap = gaps.max(axis=2).min(axis=0)

    warnings = []
    if max_sigma_gap > gap_tol or max_psi_gap > gap_tol:
        verdict = "mismatch"
    else:
        if transform is None:
            rescaled = min_x_gap > 0
        else:
            rescaled = np.abs(transform.r - 1.0) > 0
        if not np.any(rescaled):
            verdict = "no-witness"
            warnings.append("transform rescales no player; nothing is hidden")
        elif np.all(min_x_gap[rescaled] > 0):
            verdict = "indistinguishable"
        else:
            verdict = "no-witness"
            flat = np.flatnonzero(rescaled & (min_x_gap <= 0))
            warnings.append(
                f"rescaled players {flat.tolist()} have coinciding action "
                "trajectories (likely identically zero); not a valid witness"
            )
    return PrivacyReport(
        max_sigma_gap=max_sigma_gap,
        max_psi_gap=max_psi_gap,
        min_x_gap=min_x_gap,
        verdict=verdict,
        warnings=warnings,
    )


@dataclass
class RescaledGame:
    """Unit-weight game rewritten in locally scaled action coordinates."""

    game: QuadraticGame
    p: np.ndarray

    def to_original(self, xhat):
        """Map scaled actions back: x = p * xhat (blockwise)."""
        xhat = np.asarray(xhat, dtype=float)
        return (self.p[:, None] * xhat.reshape(self.game.N, self.game.n)).ravel()

    def to_rescaled(self, x):
        x = np.asarray(x, dtype=float)
        return (x.reshape(self.game.N, self.game.n) / self.p[:, None]).ravel()


def unweighted_rescaling(game, p):
    """Coordinate change hiding actions of a unit-weight (h = 1) game.

    Each player picks a private p_i > 0 and runs the flow in xhat = x / p_i
    coordinates; the communicated variables are unchanged while the
    recovered actions are p_i * xhat_i. Implemented as the replica with
    r = 1/p, s = p, which realizes exactly that coordinate change.
    """
    if np.any(np.abs(game.h - 1.0) > 0):
        raise WeightsNotUnit("rescaling requires unit aggregation weights")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p <= 0):
        raise NonPositiveScaling("p must be strictly positive")
    transform = ReplicaTransform(r=1.0 / p, s=p.copy())
    rep = build_replica(game, np.zeros(game.dim), transform)
    return RescaledGame(game=rep.game, p=p)


def output_matrix(N, n):
    """Selector of the communicated block col(sigma, psi) from col(x, sigma, psi)."""
    m = N * n
    C = np.zeros((2 * m, 3 * m))
    C[:m, m : 2 * m] = np.eye(m)
    C[m:, 2 * m :] = np.eye(m)
    return C


def public_output_match(game, replica, G, x0, x0_prime, sigma0, psi0, kmax=3):
    """Generator-level indistinguishability check on dense matrices.

    Returns the worst absolute mismatch over k = 0..kmax of the observed
    Krylov iterates C A^k xi(0) vs C A'^k xi'(0), and of the forced parts
    C A^k b vs C A'^k b'.
    """
    Aq, bq = linear_system_matrices(game, G)
    Ap, bp = linear_system_matrices(replica, G)
    C = output_matrix(game.N, game.n)
    xi = np.concatenate([np.asarray(x0, float).ravel(), sigma0, psi0])
    xip = np.concatenate([np.asarray(x0_prime, float).ravel(), sigma0, psi0])
    worst_state = 0.0
    worst_input = 0.0
    v, vp = xi, xip
    w, wp = bq, bp
    for _ in range(kmax + 1):
        worst_state = max(worst_state, float(np.max(np.abs(C @ v - C @ vp))))
        worst_input = max(worst_input, float(np.max(np.abs(C @ w - C @ wp))))
        v, vp = Aq @ v, Ap @ vp
        w, wp = Aq @ w, Ap @ wp
    return worst_state, worst_input
