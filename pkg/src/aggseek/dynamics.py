"""Fixed-step integration of the continuous-time seeking flows.

Four variants are supported:

* ``unconstrained``: the smooth consensus-coupled gradient flow.
* ``disturbed``: the same flow with an additive signal on the (x, sigma)
  block.
* ``projected``: actions evolve inside their boxes via the exact
  tangent-cone projection, clamped after every full step so feasibility
  is exact at samples.
* ``lagrangian``: box-projected actions plus integral multipliers driving
  per-player budget equalities (the budget is a soft constraint along the
  trajectory).

Integration is classical fourth-order fixed-step throughout; quadratic
games on small state spaces use a precomputed one-matrix-per-step
propagator for the smooth undisturbed variant, which is the same
Runge-Kutta polynomial evaluated in one matrix. Fixed stepping keeps
traces reproducible and lets paired runs share identical grids.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    InfeasibleInitialState,
    NonFiniteState,
    PointOutsideSet,
)
from .game import QuadraticGame
from .graph import kron_apply

VARIANTS = ("unconstrained", "disturbed", "projected", "lagrangian")

# Above this stacked dimension the dense closed-loop matrix is not assembled.
_DENSE_LIMIT = 256
_DIVERGENCE_GUARD = 1e9


@dataclass
class SimState:
    """One sampled point of a run: stacked actions, estimates, consensus states."""

    x: np.ndarray
    sigma: np.ndarray
    psi: np.ndarray
    lam: np.ndarray = None
    t: float = 0.0


@dataclass
class Trace:
    """Uniformly sampled trajectory with the conserved-quantity log."""

    times: np.ndarray
    x: np.ndarray
    sigma: np.ndarray
    psi: np.ndarray
    psi_mean: np.ndarray
    dist_norm: np.ndarray
    dist_sup: np.ndarray
    lam: np.ndarray = None
    variant: str = "unconstrained"
    dt: float = 0.0
    stride: int = 1
    N: int = 0
    n: int = 0

    def __len__(self):
        return self.times.size

    def state(self, idx):
        return SimState(
            x=self.x[idx],
            sigma=self.sigma[idx],
            psi=self.psi[idx],
            lam=None if self.lam is None else self.lam[idx],
            t=float(self.times[idx]),
        )

    def final_state(self):
        return self.state(-1)

    def column_names(self):
        names = ["t"]
        for tag in ("x", "sigma", "psi"):
            names += [f"{tag}_{i + 1}_{j + 1}" for i in range(self.N) for j in range(self.n)]
        if self.lam is not None:
            names += [f"lambda_{i + 1}" for i in range(self.N)]
        names += [f"psi_mean_{j + 1}" for j in range(self.n)]
        names.append("dist_norm")
        return names

    def to_csv(self, path, decimate=1):
        """Write the trace as CSV: '.' decimal, ',' separator, LF endings,
        17 significant digits."""
        idx = np.arange(0, len(self), decimate)
        if idx[-1] != len(self) - 1:
            idx = np.append(idx, len(self) - 1)
        cols = [self.times, self.x, self.sigma, self.psi]
        if self.lam is not None:
            cols.append(self.lam)
        cols += [self.psi_mean, self.dist_norm]
        data = np.column_stack([np.atleast_2d(c.T).T for c in cols])
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(self.column_names()) + "\n")
            for r in idx:
                fh.write(",".join(f"{v:.17g}" for v in data[r]) + "\n")


@dataclass
class Sinusoid:
    """amplitude * sin(omega * t + phase)."""

    amplitude: float
    omega: float
    phase: float = 0.0

    def eval(self, t):
        return self.amplitude * np.sin(self.omega * np.asarray(t, dtype=float) + self.phase)


@dataclass
class ZohUniform:
    """Zero-order-hold uniform noise in [-amplitude, amplitude].

    Values are constant on [m*hold, (m+1)*hold) and drawn by a counter-based
    generator (philox4x64, stream "aggseek-zoh-v1"): hold index m is the
    counter and `seed` the key, so evaluation is random-access and
    bit-reproducible across runs and platforms.
    """

    amplitude: float
    hold: float
    seed: int
    _cache: dict = field(default_factory=dict, repr=False)

    GENERATOR = "philox4x64/aggseek-zoh-v1"

    def _draw(self, m):
        v = self._cache.get(m)
        if v is None:
            g = np.random.Generator(np.random.Philox(key=self.seed, counter=[m, 0, 0, 0]))
            v = self.amplitude * g.uniform(-1.0, 1.0)
            self._cache[m] = v
        return v

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        m = np.floor(t / self.hold).astype(np.int64)
        if m.ndim == 0:
            return self._draw(int(m))
        out = np.empty(m.shape)
        for mu in np.unique(m):
            out[m == mu] = self._draw(int(mu))
        return out


class DisturbanceSignal:
    """Deterministic time signal on the stacked (x, sigma) block.

    `components` maps each of the 2*N*n coordinates to a list of primitive
    components (ZohUniform / Sinusoid) whose values add up; coordinates may
    be left empty. The signal is bounded by the per-coordinate amplitude
    sums.
    """

    def __init__(self, dim, components=None):
        self.dim = dim
        self.components = [[] for _ in range(dim)]
        if components:
            for coord, comp in components:
                self.components[coord].append(comp)

    def add(self, coord, comp):
        self.components[coord].append(comp)
        return self

    def amplitude_bound(self):
        return np.array([sum(c.amplitude for c in comps) for comps in self.components])

    def eval(self, t):
        out = np.zeros(self.dim)
        for j, comps in enumerate(self.components):
            for c in comps:
                out[j] += c.eval(t)
        return out

    def sample(self, times):
        """Vectorized evaluation: shape (len(times), dim)."""
        times = np.asarray(times, dtype=float)
        out = np.zeros((times.size, self.dim))
        for j, comps in enumerate(self.components):
            for c in comps:
                out[:, j] += c.eval(times)
        return out


def eval_disturbance(sig, t):
    """Value of the disturbance signal at time t (scalar or array)."""
    if np.ndim(t) == 0 and t < 0:
        raise ValueError("disturbance is defined for t >= 0")
    return sig.eval(t)


def tangent_project(box, x, v):
    """Exact projection of v onto the tangent cone of a box at x.

    Componentwise: the velocity is zeroed where it points out of the box at
    an active bound, and passed through elsewhere. x must belong to the box.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if not box.contains(x, tol=1e-12):
        raise PointOutsideSet("base point is not inside the box")
    block_lo = (x <= box.lower) & (v < 0)
    block_hi = (x >= box.upper) & (v > 0)
    return np.where(block_lo | block_hi, 0.0, v)


def _tangent_mask(lo, hi, x, v):
    """Stage-level tangent projection; clips x first so boundary tests are exact."""
    xc = np.clip(x, lo, hi)
    block = ((xc <= lo) & (v < 0)) | ((xc >= hi) & (v > 0))
    return np.where(block, 0.0, v)


def rhs_unconstrained(game, G, state):
    """Time derivative (dx, dsigma, dpsi) of the smooth flow at a state."""
    f = game.f_all(state.x, state.sigma)
    dx = -game.k_times(f)
    dsigma = -state.sigma + game.h_times(state.x) - kron_apply(G, "L", state.psi)
    dpsi = kron_apply(G, "L", state.sigma)
    return dx, dsigma, dpsi


def linear_system_matrices(game, G, lagrangian=False, budgets=None):
    """Dense closed-loop pair (Aq, bq) of the quadratic-game flow.

    State ordering is col(x, sigma, psi[, lambda]). Only valid for
    :class:`QuadraticGame`.
    """
    if not isinstance(game, QuadraticGame):
        raise TypeError("dense closed-loop matrices require a quadratic game")
    N, n = game.N, game.n
    m = N * n
    kv = np.repeat(game.k, n)
    hv = np.repeat(game.h, n)
    Abar = np.zeros((m, m))
    Dbar = np.zeros((m, m))
    for i in range(N):
        sl = slice(i * n, (i + 1) * n)
        Abar[sl, sl] = game.A[i]
        Dbar[sl, sl] = game.D[i]
    LI = np.kron(G.L, np.eye(n))
    dim = 3 * m + (N if lagrangian else 0)
    Aq = np.zeros((dim, dim))
    Aq[:m, :m] = -kv[:, None] * Abar
    Aq[:m, m : 2 * m] = -kv[:, None] * Dbar
    Aq[m : 2 * m, :m] = np.diag(hv)
    Aq[m : 2 * m, m : 2 * m] = -np.eye(m)
    Aq[m : 2 * m, 2 * m : 3 * m] = -LI
    Aq[2 * m : 3 * m, m : 2 * m] = LI
    bq = np.zeros(dim)
    bq[:m] = -kv * game.d.ravel()
    if lagrangian:
        E = np.kron(np.eye(N), np.ones((n, 1)))
        Aq[:m, 3 * m :] = -E
        Aq[3 * m :, :m] = E.T
        bq[3 * m :] = -np.asarray(budgets, dtype=float)
    return Aq, bq


def _deriv_factory(game, G, variant, budgets):
    """Build deriv(state, nu) for the stage-based integrator."""
    N, n = game.N, game.n
    m = N * n
    projected = variant in ("projected", "lagrangian")
    lagrangian = variant == "lagrangian"
    lo = game.lower_bounds() if projected else None
    hi = game.upper_bounds() if projected else None

    dense_dim = 3 * m + (N if lagrangian else 0)
    if isinstance(game, QuadraticGame) and dense_dim <= _DENSE_LIMIT:
        Aq, bq = linear_system_matrices(game, G, lagrangian=lagrangian, budgets=budgets)

        def deriv(state, nu=None):
            ds = Aq @ state + bq
            if nu is not None:
                ds[: 2 * m] += nu
            if projected:
                ds[:m] = _tangent_mask(lo, hi, state[:m], ds[:m])
            return ds

        return deriv

    L = G.L
    h = game.h
    k = game.k
    gamma = None if budgets is None else np.asarray(budgets, dtype=float)

    def deriv(state, nu=None):
        xb = state[:m].reshape(N, n)
        sb = state[m : 2 * m].reshape(N, n)
        pb = state[2 * m : 3 * m].reshape(N, n)
        if projected:
            xb = np.clip(xb, lo.reshape(N, n), hi.reshape(N, n))
        f = game.f_all(xb.ravel(), sb.ravel()).reshape(N, n)
        dx = -k[:, None] * f
        if lagrangian:
            lam = state[3 * m :]
            dx = dx - lam[:, None]
        dsig = -sb + h[:, None] * xb - L @ pb
        dpsi = L @ sb
        ds = np.empty_like(state)
        dxf = dx.ravel()
        if nu is not None:
            dxf = dxf + nu[:m]
        if projected:
            dxf = _tangent_mask(lo, hi, xb.ravel(), dxf)
        ds[:m] = dxf
        dsf = dsig.ravel()
        if nu is not None:
            dsf = dsf + nu[m : 2 * m]
        ds[m : 2 * m] = dsf
        ds[2 * m : 3 * m] = dpsi.ravel()
        if lagrangian:
            ds[3 * m :] = xb.sum(axis=1) - gamma
        return ds

    return deriv


def _check_finite(state, t):
    if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > _DIVERGENCE_GUARD:
        raise NonFiniteState(f"state diverged at t={t:.6g}")


def simulate(
    game,
    G,
    variant,
    x0,
    sigma0,
    psi0,
    dt,
    t_end,
    lambda0=None,
    stride=1,
    disturbance=None,
    budgets=None,
):
    """Integrate one variant of the seeking flow and return a :class:`Trace`.

    The grid is uniform with step dt; every stride-th step is recorded
    (stride must divide the step count). Projected variants require a
    feasible x0 and keep x inside the boxes exactly at every sample.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    N, n = game.N, game.n
    m = N * n
    x0 = np.asarray(x0, dtype=float).ravel()
    sigma0 = np.asarray(sigma0, dtype=float).ravel()
    psi0 = np.asarray(psi0, dtype=float).ravel()
    if x0.size != m or sigma0.size != m or psi0.size != m:
        raise DimensionMismatch(f"x0, sigma0, psi0 must have length N*n={m}")

    if variant == "disturbed" and disturbance is None:
        raise ValueError("disturbed variant requires a DisturbanceSignal")
    if variant != "disturbed" and disturbance is not None:
        raise ValueError("disturbance is only meaningful for the disturbed variant")
    if disturbance is not None and disturbance.dim != 2 * m:
        raise DimensionMismatch("disturbance dimension must be 2*N*n")
    lagrangian = variant == "lagrangian"
    if lagrangian:
        if budgets is None:
            raise ValueError("lagrangian variant requires per-player budgets")
        lam0 = np.zeros(N) if lambda0 is None else np.asarray(lambda0, float).ravel()
        if lam0.size != N:
            raise DimensionMismatch("lambda0 must have length N")
    if variant in ("projected", "lagrangian"):
        lo, hi = game.lower_bounds(), game.upper_bounds()
        if np.any(x0 < lo) or np.any(x0 > hi):
            raise InfeasibleInitialState("x0 violates the action boxes")

    nsteps = int(round(t_end / dt))
    if abs(nsteps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError("t_end must be an integer multiple of dt")
    if nsteps % stride != 0:
        raise ValueError("stride must divide t_end/dt")
    nsamp = nsteps // stride + 1

    state = np.concatenate([x0, sigma0, psi0] + ([lam0] if lagrangian else []))

    times = np.empty(nsamp)
    xs = np.empty((nsamp, m))
    sigmas = np.empty((nsamp, m))
    psis = np.empty((nsamp, m))
    lams = np.empty((nsamp, N)) if lagrangian else None
    dist_norm = np.zeros(nsamp)
    dist_sup = np.zeros(nsamp)

    nu_stage = None
    if disturbance is not None:
        stage_times = 0.5 * dt * np.arange(2 * nsteps + 1)
        nu_stage = disturbance.sample(stage_times)
        stage_norms = np.linalg.norm(nu_stage, axis=1)
        running_sup = np.maximum.accumulate(stage_norms)

    def record(sample_idx, step_idx):
        times[sample_idx] = step_idx * dt
        xs[sample_idx] = state[:m]
        sigmas[sample_idx] = state[m : 2 * m]
        psis[sample_idx] = state[2 * m : 3 * m]
        if lagrangian:
            lams[sample_idx] = state[3 * m :]
        if nu_stage is not None:
            dist_norm[sample_idx] = stage_norms[2 * step_idx]
            dist_sup[sample_idx] = running_sup[2 * step_idx]

    use_propagator = (
        variant in ("unconstrained", "disturbed")
        and isinstance(game, QuadraticGame)
        and 3 * m <= _DENSE_LIMIT
    )

    if use_propagator:
        # One-matrix-per-step form of the classical fourth-order step for a
        # linear flow; with a disturbance the three stage samples enter
        # through precomputed weighting matrices, so the loop body stays a
        # single matvec.
        Aq, bq = linear_system_matrices(game, G)
        eye = np.eye(3 * m)
        A1 = dt * Aq
        A2 = A1 @ A1
        A3 = A2 @ A1
        A4 = A3 @ A1
        Phi = eye + A1 + A2 / 2.0 + A3 / 6.0 + A4 / 24.0
        cvec = dt * (eye + A1 / 2.0 + A2 / 6.0 + A3 / 24.0) @ bq
        forcing = None
        if nu_stage is not None:
            W0 = (dt / 6.0) * (eye + A1 + A2 / 2.0 + A3 / 4.0)[:, : 2 * m]
            W1 = (dt / 6.0) * (4.0 * eye + 2.0 * A1 + A2 / 2.0)[:, : 2 * m]
            W2 = (dt / 6.0) * eye[:, : 2 * m]
            forcing = (
                nu_stage[0 : 2 * nsteps : 2] @ W0.T
                + nu_stage[1 : 2 * nsteps : 2] @ W1.T
                + nu_stage[2 : 2 * nsteps + 1 : 2] @ W2.T
            )
        record(0, 0)
        sample_idx = 1
        for step in range(1, nsteps + 1):
            state = Phi @ state + cvec
            if forcing is not None:
                state += forcing[step - 1]
            if step % stride == 0:
                _check_finite(state, step * dt)
                record(sample_idx, step)
                sample_idx += 1
    else:
        deriv = _deriv_factory(game, G, variant, budgets)
        projected = variant in ("projected", "lagrangian")
        if projected:
            lo, hi = game.lower_bounds(), game.upper_bounds()
        record(0, 0)
        sample_idx = 1
        half = 0.5 * dt
        sixth = dt / 6.0
        for step in range(nsteps):
            if nu_stage is None:
                n0 = n1 = n2 = None
            else:
                n0 = nu_stage[2 * step]
                n1 = nu_stage[2 * step + 1]
                n2 = nu_stage[2 * step + 2]
            k1 = deriv(state, n0)
            k2 = deriv(state + half * k1, n1)
            k3 = deriv(state + half * k2, n1)
            k4 = deriv(state + dt * k3, n2)
            state = state + sixth * (k1 + 2.0 * (k2 + k3) + k4)
            if projected:
                state[:m] = np.clip(state[:m], lo, hi)
            if (step + 1) % stride == 0:
                _check_finite(state, (step + 1) * dt)
                record(sample_idx, step + 1)
                sample_idx += 1

    psi_mean = psis.reshape(nsamp, N, n).mean(axis=1)
    return Trace(
        times=times,
        x=xs,
        sigma=sigmas,
        psi=psis,
        psi_mean=psi_mean,
        dist_norm=dist_norm,
        dist_sup=dist_sup,
        lam=lams,
        variant=variant,
        dt=dt,
        stride=stride,
        N=N,
        n=n,
    )
