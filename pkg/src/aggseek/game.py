"""Aggregative game instances and their admissibility constants.

A game couples N players through the weighted average s(x) = (1/N) sum_j
h_j x_j of their actions. Each player owns a local map f_i(x_i, sigma_i)
combining its own-action gradient with the aggregate sensitivity; its zero
set (jointly, with sigma_i replaced by s(x)) characterizes the Nash
equilibrium. Quadratic games carry per-player matrices (Q_i, D_i, d_i) so
that f_i is affine and every admissibility constant has a closed form.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    IntervalUndefined,
    NotStronglyMonotone,
)


@dataclass
class BoxSet:
    """Axis-aligned box [lower, upper], with +-inf encoding free coordinates."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise DimensionMismatch("box bounds must have equal shapes")
        if np.any(self.lower > self.upper):
            raise ValueError("box is empty: lower > upper somewhere")

    @classmethod
    def unbounded(cls, n):
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    @property
    def n(self):
        return self.lower.size

    def is_bounded(self):
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def contains(self, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def project(self, x):
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def midpoint(self):
        if not self.is_bounded():
            raise ValueError("midpoint undefined for unbounded box")
        return 0.5 * (self.lower + self.upper)

    def sample(self, rng, inflate=0.0):
        """Uniform sample, optionally from the box inflated about its center."""
        lo, hi = self.lower, self.upper
        if inflate > 0.0 and self.is_bounded():
            c = 0.5 * (lo + hi)
            r = 0.5 * (hi - lo) * (1.0 + inflate)
            lo, hi = c - r, c + r
        lo = np.where(np.isfinite(lo), lo, -10.0)
        hi = np.where(np.isfinite(hi), hi, 10.0)
        return rng.uniform(lo, hi)


class GameModel:
    """Aggregative game with oracle-supplied per-player maps.

    Parameters
    ----------
    h, k : arrays of N positive reals (aggregation weights, seeking gains).
    action_sets : list of N BoxSet, each of dimension n.
    f_oracle : callable (i, x_i, sigma_i) -> ndarray of shape (n,),
        the combined local gradient map of player i.
    grad_bound : optional array of per-player bounds on the Jacobian norm
        of f_i, needed by the disturbance certificate for oracle games.
    """

    def __init__(self, h, k, action_sets, f_oracle, grad_bound=None):
        self.h = np.asarray(h, dtype=float)
        self.k = np.asarray(k, dtype=float)
        self.action_sets = list(action_sets)
        self.f_oracle = f_oracle
        self.N = self.h.size
        if self.k.size != self.N or len(self.action_sets) != self.N:
            raise DimensionMismatch("h, k, and action_sets must all have length N")
        if np.any(self.h <= 0) or np.any(self.k <= 0):
            raise ValueError("weights h_i and gains k_i must be positive")
        self.n = self.action_sets[0].n
        if any(b.n != self.n for b in self.action_sets):
            raise DimensionMismatch("all action boxes must share one dimension n")
        self.grad_bound = None if grad_bound is None else np.asarray(grad_bound, float)

    @property
    def dim(self):
        return self.N * self.n

    def check_index(self, i):
        if not 0 <= i < self.N:
            raise IndexOutOfRange(f"player index {i} outside 0..{self.N - 1}")

    def blocks(self, v):
        """View a stacked (N*n,) vector as (N, n) player blocks."""
        v = np.asarray(v, dtype=float)
        if v.size != self.dim:
            raise DimensionMismatch(f"expected length {self.dim}, got {v.size}")
        return v.reshape(self.N, self.n)

    def aggregate(self, x):
        """Weighted average s(x) = (1/N) sum_j h_j x_j, shape (n,)."""
        return self.h @ self.blocks(x) / self.N

    def f_all(self, x, sigma):
        """Stacked col(f_i(x_i, sigma_i)) for stacked x and sigma."""
        xb, sb = self.blocks(x), self.blocks(sigma)
        out = np.empty_like(xb)
        for i in range(self.N):
            out[i] = self.f_oracle(i, xb[i], sb[i])
        return out.ravel()

    def k_times(self, v):
        """Apply the gain block-diagonal K to a stacked vector."""
        return (self.k[:, None] * self.blocks(v)).ravel()

    def h_times(self, v):
        """Apply the weight block-diagonal H to a stacked vector."""
        return (self.h[:, None] * self.blocks(v)).ravel()

    def lower_bounds(self):
        return np.concatenate([b.lower for b in self.action_sets])

    def upper_bounds(self):
        return np.concatenate([b.upper for b in self.action_sets])


class QuadraticGame(GameModel):
    """Game with payoffs x'Q_i x + (D_i s + d_i)'x, so f_i is affine.

    The effective own-action matrix is A_i = 2 Q_i + (h_i / N) D_i' and
    f_i(x_i, sigma_i) = A_i x_i + D_i sigma_i + d_i holds exactly.
    """

    def __init__(self, Q, D, d, h, k, action_sets=None, check_definite=True):
        Q = np.asarray(Q, dtype=float)
        D = np.asarray(D, dtype=float)
        d = np.asarray(d, dtype=float)
        if Q.ndim != 3 or D.shape != Q.shape or d.shape != Q.shape[:2]:
            raise DimensionMismatch("expected Q,D of shape (N,n,n) and d of shape (N,n)")
        N, n = d.shape
        if action_sets is None:
            action_sets = [BoxSet.unbounded(n) for _ in range(N)]
        super().__init__(h, k, action_sets, self._f_affine)
        if self.N != N or self.n != n:
            raise DimensionMismatch("Q/D/d shapes inconsistent with h and boxes")
        if check_definite:
            for i in range(N):
                if np.linalg.norm(Q[i] - Q[i].T) > 1e-12 * (1 + np.linalg.norm(Q[i])):
                    raise ValueError(f"Q_{i} is not symmetric")
                if np.linalg.eigvalsh(Q[i])[0] <= 0:
                    raise ValueError(f"Q_{i} is not positive definite")
        self.Q = Q
        self.D = D
        self.d = d
        # A_i = 2 Q_i + (h_i/N) D_i^T
        self.A = 2.0 * Q + (self.h / N)[:, None, None] * np.transpose(D, (0, 2, 1))

    def _f_affine(self, i, x_i, sigma_i):
        return self.A[i] @ x_i + self.D[i] @ sigma_i + self.d[i]

    def f_all(self, x, sigma):
        xb, sb = self.blocks(x), self.blocks(sigma)
        out = np.einsum("nij,nj->ni", self.A, xb)
        out += np.einsum("nij,nj->ni", self.D, sb)
        out += self.d
        return out.ravel()

    def payoff(self, i, x_i, s):
        """J_i evaluated at own action x_i and aggregate s."""
        self.check_index(i)
        return float(x_i @ self.Q[i] @ x_i + (self.D[i] @ s + self.d[i]) @ x_i)


def eval_f(game, i, x_i, sigma_i):
    """Evaluate the local map f_i(x_i, sigma_i) for player i (0-based)."""
    game.check_index(i)
    x_i = np.atleast_1d(np.asarray(x_i, dtype=float))
    sigma_i = np.atleast_1d(np.asarray(sigma_i, dtype=float))
    if x_i.size != game.n or sigma_i.size != game.n:
        raise DimensionMismatch(f"x_i and sigma_i must have length n={game.n}")
    return np.atleast_1d(np.asarray(game.f_oracle(i, x_i, sigma_i), dtype=float))


def pseudo_gradient(game, x):
    """col(f_i(x_i, s(x))): the pseudo-gradient at a joint action x."""
    s = game.aggregate(x)
    sigma = np.tile(s, game.N)
    return game.f_all(x, sigma)


def augmented_operator(game, x, sigma):
    """The joint operator col(K col(f_i(x_i, sigma_i)), sigma - H x)."""
    top = game.k_times(game.f_all(x, sigma))
    bottom = np.asarray(sigma, dtype=float) - game.h_times(x)
    return np.concatenate([top, bottom])


def mu_ell(game, i):
    """Strong-monotonicity and Lipschitz constants (mu_i, ell_i) of player i.

    mu_i is the smallest eigenvalue of 2Q_i + h_i (D_i + D_i')/(2N); ell_i
    is the spectral norm of D_i.
    """
    game.check_index(i)
    Dsym = (game.D[i] + game.D[i].T) / 2.0
    M = 2.0 * game.Q[i] + (game.h[i] / game.N) * Dsym
    mu = float(np.linalg.eigvalsh(M)[0])
    ell = float(np.linalg.norm(game.D[i], 2))
    return mu, ell


def check_assumption2(game):
    """Per-player verdicts of the local admissibility test mu_i > ell_i h_i."""
    out = np.zeros(game.N, dtype=bool)
    for i in range(game.N):
        mu, ell = mu_ell(game, i)
        out[i] = mu > ell * game.h[i]
    return out


def gain_interval(mu, ell, h):
    """Open interval of admissible gains for constants (mu, ell, h).

    Endpoints are (sqrt(mu) -+ sqrt(mu - ell*h))^2 / ell^2. Returns (0, inf)
    when ell = 0; raises IntervalUndefined when mu <= ell*h.
    """
    if ell < 0 or h < 0:
        raise ValueError("ell and h must be nonnegative")
    if mu <= ell * h:
        raise IntervalUndefined(f"need mu > ell*h, got mu={mu}, ell*h={ell * h}")
    if ell == 0.0:
        return 0.0, np.inf
    root = np.sqrt(mu - ell * h)
    lo = (np.sqrt(mu) - root) ** 2 / ell**2
    hi = (np.sqrt(mu) + root) ** 2 / ell**2
    return float(lo), float(hi)


def relaxed_gain_interval(c, a, N):
    """Gain interval for the scalar affine map f = c*x + a*N*sigma + const.

    This is the exact (less conservative) admissibility interval used by the
    case studies; it reduces to (0, inf) as the coupling a -> 0.
    """
    if c <= 0 or a < 0 or N < 1:
        raise ValueError("need c > 0, a >= 0, N >= 1")
    if a == 0.0:
        return 0.0, np.inf
    aN = a * N
    lo = (np.sqrt(c) - np.sqrt(c + aN)) ** 2 / aN**2
    hi = (np.sqrt(c) + np.sqrt(c + aN)) ** 2 / aN**2
    return float(lo), float(hi)


def _two_by_two_lambda_min(a, b, c):
    """Smallest eigenvalue of [[a, b], [b, c]]."""
    half_tr = 0.5 * (a + c)
    disc = np.sqrt(0.25 * (a - c) ** 2 + b**2)
    return half_tr - disc


def epsilon_pair(mu, ell, h, k):
    """Per-player monotonicity margin: lambda_min of the admissibility matrix
    [[k*mu, -(k*ell+h)/2], [-(k*ell+h)/2, 1]]."""
    return float(_two_by_two_lambda_min(k * mu, -(k * ell + h) / 2.0, 1.0))


def relaxed_epsilon_affine(c, a, N, h, k):
    """Exact per-player margin for the scalar affine case-study map."""
    return float(_two_by_two_lambda_min(k * c, (k * a * N - h) / 2.0, 1.0))


def compute_epsilon(game):
    """Joint strong-monotonicity constant eps = min_i eps_i of the game.

    Each eps_i is the smallest eigenvalue of the per-player admissibility
    matrix; raises NotStronglyMonotone if any matrix fails to be positive
    definite (gain outside its interval).
    """
    eps = np.inf
    for i in range(game.N):
        mu, ell = mu_ell(game, i)
        e_i = epsilon_pair(mu, ell, game.h[i], game.k[i])
        if e_i <= 0:
            raise NotStronglyMonotone(
                f"player {i}: admissibility matrix not PD (eps_i={e_i:.3e}); "
                f"gain k={game.k[i]:.4g} outside its interval"
            )
        eps = min(eps, e_i)
    return float(eps)


def gradient_bound(game, i):
    """Norm bound gamma_i = ||[A_i D_i]||_2 on the Jacobian of f_i."""
    game.check_index(i)
    return float(np.linalg.norm(np.hstack([game.A[i], game.D[i]]), 2))


def scalar_affine_structure(game, i):
    """Detect the case-study structure f_i = c x_i + a N sigma_i + const.

    Returns (c, a) when A_i and D_i are exact positive multiples of the
    identity (any n), else None. Only this structure admits the exact
    relaxed gain interval.
    """
    game.check_index(i)
    A, Dm = game.A[i], game.D[i]
    eye = np.eye(game.n)
    c, aN = A[0, 0], Dm[0, 0]
    if (
        np.array_equal(A, c * eye)
        and np.array_equal(Dm, aN * eye)
        and c > 0
        and aN >= 0
    ):
        return float(c), float(aN / game.N)
    return None


@dataclass
class MonotonicityReport:
    """Sampled monotonicity ratios of the joint operator on (x, sigma)."""

    trials: int
    min_ratio: float
    num_nonpositive: int
    failed: bool
    eigen_probe: float = None
    worst_direction: np.ndarray = field(default=None, repr=False)


def _joint_jacobian(game):
    """Dense Jacobian of the joint operator for a quadratic game."""
    N, n = game.N, game.n
    kv = np.repeat(game.k, n)
    Jxx = np.zeros((N * n, N * n))
    Jxs = np.zeros((N * n, N * n))
    for i in range(N):
        sl = slice(i * n, (i + 1) * n)
        Jxx[sl, sl] = game.A[i]
        Jxs[sl, sl] = game.D[i]
    top = np.hstack([kv[:, None] * Jxx, kv[:, None] * Jxs])
    Hm = np.diag(np.repeat(game.h, n))
    bottom = np.hstack([-Hm, np.eye(N * n)])
    return np.vstack([top, bottom])


def sample_monotonicity_check(game, trials, seed, sampling_box=None):
    """Estimate the monotonicity modulus of the joint (x, sigma) operator.

    Draws `trials` random pairs (z, z') and records the minimal observed
    ratio <z - z', F(z) - F(z')> / ||z - z'||^2. For quadratic games one
    extra deterministic pair along the worst eigendirection of the symmetric
    Jacobian is included, so inadmissible gains are always detected.

    The default sampling region is each action box inflated by 50% (with
    [-10, 10] substituted for unbounded coordinates), and sigma drawn from
    the correspondingly inflated range of the weighted actions.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    N, n = game.N, game.n

    if sampling_box is not None:
        lo, hi = sampling_box
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.size != 2 * N * n or hi.size != 2 * N * n:
            raise DimensionMismatch("sampling box must cover the stacked (x, sigma)")
    else:
        xlo = np.concatenate([b.lower for b in game.action_sets])
        xhi = np.concatenate([b.upper for b in game.action_sets])
        xlo = np.where(np.isfinite(xlo), xlo, -10.0)
        xhi = np.where(np.isfinite(xhi), xhi, 10.0)
        c, r = 0.5 * (xlo + xhi), 0.75 * (xhi - xlo)
        xlo, xhi = c - r, c + r
        hx_lo = (game.h[:, None] * xlo.reshape(N, n)).min(axis=0)
        hx_hi = (game.h[:, None] * xhi.reshape(N, n)).max(axis=0)
        slo, shi = np.tile(hx_lo, N), np.tile(hx_hi, N)
        lo = np.concatenate([xlo, slo])
        hi = np.concatenate([xhi, shi])

    pairs = []
    for _ in range(trials):
        z = rng.uniform(lo, hi)
        zp = rng.uniform(lo, hi)
        if np.allclose(z, zp):
            continue
        pairs.append((z, zp))

    eigen_probe = None
    worst_dir = None
    if isinstance(game, QuadraticGame):
        J = _joint_jacobian(game)
        Jsym = 0.5 * (J + J.T)
        w, V = np.linalg.eigh(Jsym)
        eigen_probe = float(w[0])
        worst_dir = V[:, 0]
        z0 = 0.5 * (lo + hi)
        pairs.append((z0 + worst_dir, z0))

    min_ratio = np.inf
    bad = 0
    for z, zp in pairs:
        dz = z - zp
        dF = augmented_operator(game, z[: N * n], z[N * n :]) - augmented_operator(
            game, zp[: N * n], zp[N * n :]
        )
        ratio = float(dz @ dF) / float(dz @ dz)
        min_ratio = min(min_ratio, ratio)
        if ratio <= 0:
            bad += 1

    return MonotonicityReport(
        trials=len(pairs),
        min_ratio=float(min_ratio),
        num_nonpositive=bad,
        failed=bad > 0,
        eigen_probe=eigen_probe,
        worst_direction=worst_dir,
    )
