import numpy as np
import pytest

from aggseek import (
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
from aggseek.errors import IntervalUndefined, NotStronglyMonotone
from aggseek.game import (
    augmented_operator,
    epsilon_pair,
    pseudo_gradient,
    relaxed_epsilon_affine,
    scalar_affine_structure,
)
from conftest import random_quadratic


def hvac_player_game(k=1.0):
    # single consumer of the energy game: theta*gamma^2=1, a=0.04, N=5, b=5,
    # xhat=50, embedded as player 0 of a 5-player instance
    N = 5
    Q = np.full((N, 1, 1), 1.0)
    D = np.full((N, 1, 1), 0.2)
    d = np.full((N, 1), 5.0 - 100.0)
    return QuadraticGame(Q, D, d, h=np.ones(N), k=np.full(N, k))


class TestEvalF:
    def test_hvac_player_closed_form(self):
        g = hvac_player_game()
        x, s = 47.0, 52.3
        got = eval_f(g, 0, [x], [s])[0]
        assert got == pytest.approx(2.04 * x + 0.2 * s - 100.0 + 5.0, abs=1e-12)

    def test_identity_gradient(self):
        g = QuadraticGame(
            Q=0.5 * np.eye(2)[None], D=np.zeros((1, 2, 2)), d=np.zeros((1, 2)),
            h=[1.0], k=[1.0],
        )
        x = np.array([1.7, -2.2])
        np.testing.assert_allclose(eval_f(g, 0, x, np.zeros(2)), x, atol=1e-14)

    def test_matches_finite_difference_of_payoff(self):
        g = random_quadratic(3, N=4, n=3)
        rng = np.random.default_rng(1)
        i = 2
        x = rng.normal(size=3)
        s = rng.normal(size=3)
        eps = 1e-5
        grad_x = np.empty(3)
        grad_s = np.empty(3)
        for j in range(3):
            e = np.zeros(3)
            e[j] = eps
            grad_x[j] = (g.payoff(i, x + e, s) - g.payoff(i, x - e, s)) / (2 * eps)
            grad_s[j] = (g.payoff(i, x, s + e) - g.payoff(i, x, s - e)) / (2 * eps)
        oracle = grad_x + g.h[i] / g.N * grad_s
        np.testing.assert_allclose(eval_f(g, i, x, s), oracle, atol=1e-6)


class TestMuEll:
    def test_hvac_values(self):
        g = hvac_player_game()
        mu, ell = mu_ell(g, 0)
        assert mu == pytest.approx(2.04, abs=1e-12)
        assert ell == pytest.approx(0.2, abs=1e-12)

    def test_decoupled(self):
        g = QuadraticGame(
            Q=np.eye(3)[None], D=np.zeros((1, 3, 3)), d=np.zeros((1, 3)),
            h=[1.0], k=[1.0],
        )
        assert mu_ell(g, 0) == (pytest.approx(2.0), pytest.approx(0.0))

    def test_matches_general_eigensolver(self):
        g = random_quadratic(11, N=2, n=3, coupling=0.3)
        mu, _ = mu_ell(g, 0)
        M = 2 * g.Q[0] + g.h[0] * (g.D[0] + g.D[0].T) / (2 * g.N)
        oracle = float(np.min(np.linalg.eigvals(M).real))
        assert mu == pytest.approx(oracle, abs=1e-10)


class TestAssumption2:
    def test_hvac_passes(self):
        assert check_assumption2(hvac_player_game()).all()

    def test_strong_coupling_fails(self):
        # mu = lambda_min(2I + (1/4) 20 I) = 7 < ell*h = 10
        g = QuadraticGame(
            Q=np.tile(np.eye(2), (2, 1, 1)),
            D=np.tile(10.0 * np.eye(2), (2, 1, 1)),
            d=np.zeros((2, 2)),
            h=[1.0, 1.0],
            k=[1.0, 1.0],
        )
        mu, ell = mu_ell(g, 0)
        assert mu == pytest.approx(7.0)
        assert ell == pytest.approx(10.0)
        assert not check_assumption2(g).any()

    def test_no_coupling_always_passes(self):
        g = random_quadratic(5, coupling=0.0)
        assert check_assumption2(g).all()


class TestGainInterval:
    def test_hvac_endpoints(self):
        lo, hi = gain_interval(2.04, 0.2, 1.0)
        assert lo == pytest.approx((np.sqrt(2.04) - np.sqrt(1.84)) ** 2 / 0.04, rel=1e-12)
        assert hi == pytest.approx((np.sqrt(2.04) + np.sqrt(1.84)) ** 2 / 0.04, rel=1e-12)
        assert lo == pytest.approx(0.1289, abs=5e-4)
        assert hi == pytest.approx(193.88, abs=5e-2)

    def test_zero_lipschitz(self):
        assert gain_interval(2.0, 0.0, 1.0) == (0.0, np.inf)

    def test_half_weight(self):
        lo, hi = gain_interval(1.0, 1.0, 0.5)
        assert lo == pytest.approx((1 - np.sqrt(0.5)) ** 2, rel=1e-12)
        assert hi == pytest.approx((1 + np.sqrt(0.5)) ** 2, rel=1e-12)

    def test_undefined(self):
        with pytest.raises(IntervalUndefined):
            gain_interval(1.0, 2.0, 1.0)

    def test_endpoints_make_matrix_singular(self):
        mu, ell, h = 2.04, 0.2, 1.0
        for kk in gain_interval(mu, ell, h):
            det = kk * mu - ((kk * ell + h) / 2.0) ** 2
            assert abs(det) <= 1e-9


class TestRelaxedInterval:
    def test_hvac_interval(self):
        lo, hi = relaxed_gain_interval(2.04, 0.04, 5)
        assert lo == pytest.approx(0.1170, abs=5e-4)
        assert hi == pytest.approx(213.89, abs=5e-2)

    def test_pev_interval_contains_midpoint_gain(self):
        q, a, N = 0.004, 3.8e-3, 100
        c = 2 * q + a
        lo, hi = relaxed_gain_interval(c, a, N)
        k = (2 * c + a * N) / (a * N) ** 2
        assert lo < k < hi
        # the midpoint gain is the arithmetic mean of the endpoints
        assert k == pytest.approx(0.5 * (lo + hi), rel=1e-12)

    def test_no_coupling_limit(self):
        assert relaxed_gain_interval(2.0, 0.0, 5) == (0.0, np.inf)


class TestEpsilon:
    def test_hvac_unit_gain_closed_form(self):
        g = hvac_player_game(k=1.0)
        eps = compute_epsilon(g)
        assert eps == pytest.approx((3.04 - np.sqrt(2.5216)) / 2.0, rel=1e-12)
        assert eps == pytest.approx(0.7260, abs=5e-5)

    def test_interval_endpoint_gives_zero_margin(self):
        lo, hi = gain_interval(2.04, 0.2, 1.0)
        assert epsilon_pair(2.04, 0.2, 1.0, lo) == pytest.approx(0.0, abs=1e-10)
        assert epsilon_pair(2.04, 0.2, 1.0, hi) == pytest.approx(0.0, abs=1e-8)

    def test_diagonal_case(self):
        assert epsilon_pair(2.0, 0.0, 0.0, 1.0) == pytest.approx(1.0)

    def test_inadmissible_gain_raises(self):
        g = hvac_player_game(k=1e4 * 193.9)
        with pytest.raises(NotStronglyMonotone):
            compute_epsilon(g)

    def test_matches_eigensolver(self):
        g = hvac_player_game(k=1.0)
        M = np.array([[2.04, -0.6], [-0.6, 1.0]])
        assert compute_epsilon(g) == pytest.approx(np.linalg.eigvalsh(M)[0], abs=1e-12)


class TestGradientBound:
    def test_scalar(self):
        g = hvac_player_game()
        assert gradient_bound(g, 0) == pytest.approx(np.hypot(2.04, 0.2), rel=1e-12)
        assert gradient_bound(g, 0) == pytest.approx(2.0498, abs=1e-4)

    def test_identity(self):
        g = QuadraticGame(
            Q=0.5 * np.eye(2)[None], D=np.zeros((1, 2, 2)), d=np.zeros((1, 2)),
            h=[1.0], k=[1.0],
        )
        assert gradient_bound(g, 0) == pytest.approx(1.0)

    def test_matches_power_iteration(self):
        g = random_quadratic(17, N=2, n=4, coupling=0.5)
        B = np.hstack([g.A[0], g.D[0]])
        M = B @ B.T
        v = np.ones(M.shape[0]) / np.sqrt(M.shape[0])
        for _ in range(4000):
            v = M @ v
            v /= np.linalg.norm(v)
        oracle = np.sqrt(v @ M @ v)
        assert gradient_bound(g, 0) == pytest.approx(oracle, abs=1e-8)


class TestScalarStructure:
    def test_detects_case_study_form(self):
        g = hvac_player_game()
        c, a = scalar_affine_structure(g, 0)
        assert c == pytest.approx(2.04)
        assert a == pytest.approx(0.04)

    def test_rejects_general_games(self):
        assert scalar_affine_structure(random_quadratic(0), 0) is None

    def test_relaxed_epsilon_positive_inside_interval(self):
        lo, hi = relaxed_gain_interval(2.04, 0.04, 5)
        k = np.sqrt(lo * hi)
        assert relaxed_epsilon_affine(2.04, 0.04, 5, 1.0, k) > 0
        assert relaxed_epsilon_affine(2.04, 0.04, 5, 1.0, 2 * hi) < 0


class TestMonotonicity:
    def test_admissible_game_respects_epsilon(self, hvac):
        eps = compute_epsilon(hvac.game)
        rep = sample_monotonicity_check(hvac.game, trials=2000, seed=0)
        assert not rep.failed
        assert rep.min_ratio >= eps - 1e-9

    def test_near_identity_operator(self):
        # with vanishing weights and unit everything else the joint operator
        # approaches the identity, whose ratios are all one
        g = QuadraticGame(
            Q=0.5 * np.eye(1)[None, :, :].repeat(2, axis=0),
            D=np.zeros((2, 1, 1)),
            d=np.zeros((2, 1)),
            h=[1e-9, 1e-9],
            k=[1.0, 1.0],
        )
        rep = sample_monotonicity_check(g, trials=500, seed=1)
        assert rep.min_ratio == pytest.approx(1.0, abs=1e-6)

    def test_detects_inadmissible_gain(self):
        g = hvac_player_game(k=1e4 * 193.88)
        rep = sample_monotonicity_check(g, trials=200, seed=2)
        assert rep.failed
        assert rep.num_nonpositive >= 1
        assert rep.eigen_probe < 0

    def test_lemma_pseudo_gradient_monotonicity(self, hvac):
        # with sigma pinned to the true aggregate, the gained pseudo-gradient
        # inherits the same monotonicity margin
        g = hvac.game
        eps = compute_epsilon(g)
        rng = np.random.default_rng(3)
        lo, hi = g.lower_bounds(), g.upper_bounds()
        for _ in range(200):
            x1 = rng.uniform(lo, hi)
            x2 = rng.uniform(lo, hi)
            df = g.k_times(pseudo_gradient(g, x1) - pseudo_gradient(g, x2))
            dx = x1 - x2
            assert dx @ df >= eps * dx @ dx - 1e-9


def test_oracle_game_model_matches_quadratic():
    gq = random_quadratic(23, N=3, n=2)
    go = GameModel(
        h=gq.h, k=gq.k, action_sets=gq.action_sets,
        f_oracle=lambda i, x, s: gq.A[i] @ x + gq.D[i] @ s + gq.d[i],
    )
    rng = np.random.default_rng(0)
    x = rng.normal(size=gq.dim)
    s = rng.normal(size=gq.dim)
    np.testing.assert_allclose(go.f_all(x, s), gq.f_all(x, s), atol=1e-14)
    np.testing.assert_allclose(
        augmented_operator(go, x, s), augmented_operator(gq, x, s), atol=1e-14
    )


def test_box_set_validation():
    with pytest.raises(ValueError):
        BoxSet([1.0, 0.0], [0.0, 1.0])
    b = BoxSet([-np.inf, 0.0], [np.inf, 1.0])
    assert not b.is_bounded()
    assert b.contains([5.0, 0.5])
    np.testing.assert_allclose(b.project([3.0, 2.0]), [3.0, 1.0])
