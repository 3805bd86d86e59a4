import math

import numpy as np
import pytest

import triattack as ta
from triattack.attack import (
    AngleState,
    AttackConfig,
    AttackState,
    PHASE_INIT,
    boundary_bisect,
    initialize,
    subspace_round,
)
from triattack.errors import BudgetExhausted, InitializationError, ParameterError
from triattack.freq import dct2, idct2

from conftest import ConstantOracle, make_halfspace_instance, make_sphere_instance

SHAPE = (32, 32, 3)


def in_mask_offset(scale, seed=0, shape=SHAPE, ratio=0.1):
    """Pixel-space pattern of unit norm times scale, supported on the
    low-frequency coefficient block."""
    h, w, _ = shape
    rows, cols = int(ratio * h), int(ratio * w)
    coeffs = np.zeros(shape)
    coeffs[:rows, :cols, :] = np.random.default_rng(seed).normal(size=(rows, cols, shape[2]))
    coeffs /= np.linalg.norm(coeffs)
    return idct2(coeffs) * scale


def prepared_state(oracle_y=0, adv_scale=0.1, cfg=None):
    """AttackState around x = 0.5 with an adversary offset small enough that
    no candidate ever leaves [0, 1] (so clamping never distorts geometry)."""
    cfg = cfg or AttackConfig()
    x = np.full(SHAPE, 0.5)
    state = AttackState(x, oracle_y, cfg)
    state.set_adversary(x + in_mask_offset(adv_scale))
    return state


class TestUpdateAlpha:
    def test_success_step(self):
        state = AngleState(math.pi / 2, gamma=0.01, lam=0.05, tau=0.1)
        assert ta.update_alpha(state, True).alpha == pytest.approx(math.pi / 2 + 0.01, abs=1e-15)

    def test_success_clamps(self):
        state = AngleState(math.pi / 2 + 0.095, gamma=0.01, lam=0.05, tau=0.1)
        assert ta.update_alpha(state, True).alpha == pytest.approx(math.pi / 2 + 0.1, abs=1e-15)

    def test_failure_step(self):
        state = AngleState(math.pi / 2, gamma=0.01, lam=0.05, tau=0.1)
        assert ta.update_alpha(state, False).alpha == pytest.approx(math.pi / 2 - 0.0005, abs=1e-15)

    def test_failure_clamps(self):
        state = AngleState(math.pi / 2 - 0.0999, gamma=0.01, lam=0.05, tau=0.1)
        assert ta.update_alpha(state, False).alpha == pytest.approx(math.pi / 2 - 0.1, abs=1e-15)


class TestConfigValidation:
    def test_defaults_are_valid(self):
        cfg = AttackConfig()
        assert cfg.beta_min == pytest.approx(math.pi / 16)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"tau": math.pi / 6},
            {"gamma": 0.0},
            {"lam": 0.0},
            {"lam": 1.5},
            {"max_queries": 0},
            {"freq_ratio": 0.0},
            {"boundary_bisect_iters": -1},
        ],
    )
    def test_bad_values_rejected(self, kwargs):
        with pytest.raises(ParameterError):
            AttackConfig(**kwargs)


class TestInitialize:
    def test_never_adversarial_fails_after_exact_resamples(self):
        cfg = AttackConfig(init_max_resamples=100, max_queries=10_000)
        oracle = ta.counted(ConstantOracle(0), ta.QueryBudget(cfg.max_queries))
        x = np.full(SHAPE, 0.5)
        oracle.predict(x)  # the caller's verification query
        with pytest.raises(InitializationError):
            initialize(x, 0, oracle, cfg, np.random.default_rng(0))
        assert oracle.budget.used == 101

    def test_degenerate_tolerance_returns_raw_draw(self):
        cfg = AttackConfig(init_bisect_tol=1.0)
        oracle = ta.counted(ConstantOracle(1), ta.QueryBudget(100))
        x = np.full(SHAPE, 0.5)
        rng = np.random.default_rng(3)
        expected_draw = np.random.default_rng(3).random(SHAPE)
        adv, used = initialize(x, 0, oracle, cfg, rng)
        assert used == 1  # one draw, zero bisection halvings
        assert np.array_equal(adv, expected_draw)

    def test_halfspace_boundary_gap_bound(self):
        x, oracle, _ = make_halfspace_instance(0)
        y = oracle.predict(x)
        cfg = AttackConfig(init_bisect_tol=1e-3)
        counting = ta.counted(oracle, ta.QueryBudget(10_000))
        rng = np.random.default_rng(5)
        adv, used = initialize(x, y, counting, cfg, rng)
        assert oracle.predict(adv) != y
        # replay the draw sequence to recover the accepted random endpoint
        replay = np.random.default_rng(5)
        far = replay.random(x.shape)
        while oracle.predict(far) == y:
            far = replay.random(x.shape)
        segment = float(np.linalg.norm((far - x).ravel()))
        gap = abs(float(oracle.w.ravel() @ adv.ravel()) + oracle.b)
        bound = float(np.linalg.norm(oracle.w.ravel())) * segment * cfg.init_bisect_tol * math.sqrt(x.size)
        assert gap <= bound

    def test_budget_exhaustion_mid_initialization(self):
        cfg = AttackConfig()
        oracle = ta.counted(ConstantOracle(0), ta.QueryBudget(5))
        with pytest.raises(BudgetExhausted):
            initialize(np.full(SHAPE, 0.5), 0, oracle, cfg, np.random.default_rng(0))
        assert oracle.budget.used == 5


class TestSubspaceRound:
    def test_give_up_costs_two_probes(self):
        cfg = AttackConfig()
        state = prepared_state(oracle_y=0, cfg=cfg)
        oracle = ta.counted(ConstantOracle(0), ta.QueryBudget(100))  # never adversarial
        angle = AngleState(cfg.alpha_init, cfg.gamma, cfg.lam, cfg.tau)
        before = state.xadv_f.copy()
        state, angle = subspace_round(state, angle, oracle, cfg, np.random.default_rng(0))
        assert oracle.budget.used == 2
        assert angle.alpha == pytest.approx(math.pi / 2 - 2 * cfg.lam * cfg.gamma, abs=1e-14)
        assert np.array_equal(state.xadv_f, before)
        assert [r.phase for r in state.trace] == ["probe", "probe"]

    def test_always_adversarial_follows_bisection_schedule(self):
        cfg = AttackConfig()  # N = 2
        state = prepared_state(oracle_y=0, cfg=cfg)
        oracle = ta.counted(ConstantOracle(1), ta.QueryBudget(100))
        angle = AngleState(cfg.alpha_init, cfg.gamma, cfg.lam, cfg.tau)
        delta0 = state.adversary_distance
        state, angle = subspace_round(state, angle, oracle, cfg, np.random.default_rng(1))
        assert oracle.budget.used == 1 + cfg.iters_per_subspace
        # hand-simulated schedule: lo0 = pi/16, hi = pi/2, first-sign success
        b0 = math.pi / 16
        b1 = (b0 + math.pi / 2) / 2
        b2 = (b1 + math.pi / 2) / 2
        a0 = math.pi / 2
        a1 = a0 + 0.01
        a2 = a1 + 0.01
        ratios = [
            math.sin(a0 + b0) / math.sin(a0),
            math.sin(a1 + b1) / math.sin(a1),
            math.sin(a2 + b2) / math.sin(a2),
        ]
        expected = delta0 * min(ratios)
        assert state.adversary_distance == pytest.approx(expected, rel=1e-9)
        assert angle.alpha == pytest.approx(a2 + 0.01, abs=1e-14)
        recorded = [r.candidate_rmse for r in state.trace]
        np.testing.assert_allclose(
            recorded, [delta0 * r / math.sqrt(state.x_img.size) for r in ratios], rtol=1e-9
        )

    def test_in_plane_halfspace_probe_accepts_and_decreases(self):
        # adversarial half-plane: component along the adversary direction
        # exceeds 0.03; the +beta0 probe lands at ~0.096 and must succeed.
        cfg = AttackConfig()
        x = np.full(SHAPE, 0.5)
        e = in_mask_offset(1.0, seed=9)
        w = e
        b = -float(w.ravel() @ x.ravel()) - 0.03
        oracle_raw = ta.HalfspaceOracle(w, b, positive_label=1, negative_label=0)
        assert oracle_raw.predict(x) == 0
        state = AttackState(x, 0, cfg)
        state.set_adversary(x + 0.1 * e)
        assert oracle_raw.predict(state.xadv_img) == 1
        oracle = ta.counted(oracle_raw, ta.QueryBudget(100))
        angle = AngleState(cfg.alpha_init, cfg.gamma, cfg.lam, cfg.tau)
        before = state.adversary_distance
        state, angle = subspace_round(state, angle, oracle, cfg, np.random.default_rng(2))
        assert state.trace[0].phase == "probe"
        assert state.trace[0].outcome == "adversarial"
        assert state.adversary_distance < before
        assert oracle_raw.predict(state.xadv_img) == 1

    def test_invalid_triangle_rejected_without_query(self):
        # with a huge gamma the probe success pushes alpha so high that the
        # second bisection midpoint no longer forms a triangle; it must be
        # rejected geometrically, costing no query
        cfg = AttackConfig(gamma=0.5, tau=0.5)
        state = prepared_state(oracle_y=0, cfg=cfg)
        oracle = ta.counted(ConstantOracle(1), ta.QueryBudget(100))
        angle = AngleState(cfg.alpha_init, cfg.gamma, cfg.lam, cfg.tau)
        state, angle = subspace_round(state, angle, oracle, cfg, np.random.default_rng(3))
        # probe + first midpoint consumed queries; second midpoint did not
        assert oracle.budget.used == 2
        assert len(state.trace) == 2

    def test_progress_is_monotone_over_rounds(self):
        cfg = AttackConfig()
        x, oracle_raw = make_sphere_instance(1)
        y = oracle_raw.predict(x)
        state = AttackState(x, y, cfg)
        oracle = ta.counted(oracle_raw, ta.QueryBudget(10_000))
        oracle.predict(x)
        adv, _ = initialize(x, y, oracle, cfg, np.random.default_rng(4), state=state)
        state.set_adversary(adv)
        angle = AngleState(cfg.alpha_init, cfg.gamma, cfg.lam, cfg.tau)
        rng = np.random.default_rng(5)
        for _ in range(30):
            before = state.adversary_distance
            before_id = id(state.xadv_f)
            state, angle = subspace_round(state, angle, oracle, cfg, rng)
            if id(state.xadv_f) != before_id:
                assert state.adversary_distance < before
            else:
                assert state.adversary_distance == before


class TestBoundaryBisect:
    def test_disabled_by_default(self):
        cfg = AttackConfig()  # boundary_bisect_iters = 0
        state = prepared_state(cfg=cfg)
        oracle = ta.counted(ConstantOracle(1), ta.QueryBudget(10))
        boundary_bisect(state, 0, oracle, cfg)
        assert oracle.budget.used == 0

    def test_halfspace_converges_to_boundary(self):
        cfg = AttackConfig(boundary_bisect_iters=8)
        x, oracle_raw, _ = make_halfspace_instance(2)
        y = oracle_raw.predict(x)
        state = AttackState(x, y, cfg)
        # start from an adversarial point along the normal
        direction = -oracle_raw.w / np.linalg.norm(oracle_raw.w.ravel())
        adv = np.clip(x + 0.9 * direction, 0.0, 1.0)
        assert oracle_raw.predict(adv) != y
        state.set_adversary(adv)
        segment = float(np.linalg.norm((adv - x).ravel()))
        oracle = ta.counted(oracle_raw, ta.QueryBudget(100))
        boundary_bisect(state, y, oracle, cfg)
        assert oracle.budget.used == 8
        assert abs(oracle_raw.signed_distance(state.xadv_img)) <= segment / 2**8
        assert oracle_raw.predict(state.xadv_img) != y

    def test_always_adversarial_moves_to_eighth(self):
        cfg = AttackConfig(boundary_bisect_iters=3)
        state = prepared_state(oracle_y=0, cfg=cfg)
        oracle = ta.counted(ConstantOracle(1), ta.QueryBudget(10))
        delta0 = state.adversary_distance
        boundary_bisect(state, 0, oracle, cfg)
        assert oracle.budget.used == 3
        assert state.adversary_distance == pytest.approx(delta0 / 8, rel=1e-9)


class TestRun:
    def test_query_conservation_and_budget_termination(self):
        x, oracle_raw, _ = make_halfspace_instance(3)
        y = oracle_raw.predict(x)
        cfg = AttackConfig(max_queries=400)
        oracle = ta.counted(oracle_raw, ta.QueryBudget(cfg.max_queries))
        result = ta.run(x, y, oracle, cfg, np.random.default_rng(0))
        assert result.termination == "budget"
        assert oracle.budget.used == cfg.max_queries
        assert result.queries_used == cfg.max_queries
        assert len(result.trace) == cfg.max_queries
        assert [r.query_index for r in result.trace] == list(range(1, cfg.max_queries + 1))

    def test_best_rmse_non_increasing(self):
        x, oracle_raw, _ = make_halfspace_instance(4)
        y = oracle_raw.predict(x)
        result = ta.run(x, y, oracle_raw, AttackConfig(max_queries=300), np.random.default_rng(1))
        bests = [r.best_rmse for r in result.trace]
        assert all(b2 <= b1 for b1, b2 in zip(bests, bests[1:]))
        assert result.final_rmse == bests[-1]

    def test_alpha_containment(self):
        x, oracle_raw = make_sphere_instance(5)
        y = oracle_raw.predict(x)
        cfg = AttackConfig(max_queries=300)
        result = ta.run(x, y, oracle_raw, cfg, np.random.default_rng(2))
        for rec in result.trace:
            assert math.pi / 2 - cfg.tau - 1e-12 <= rec.alpha <= math.pi / 2 + cfg.tau + 1e-12

    def test_deterministic_trace(self):
        x, oracle_raw, _ = make_halfspace_instance(6)
        y = oracle_raw.predict(x)
        cfg = AttackConfig(max_queries=200)
        r1 = ta.run(x, y, oracle_raw, cfg, np.random.default_rng(7))
        r2 = ta.run(x, y, oracle_raw, cfg, np.random.default_rng(7))
        assert r1.trace == r2.trace
        assert r1.final_rmse == r2.final_rmse

    def test_result_is_adversarial(self):
        x, oracle_raw = make_sphere_instance(8)
        y = oracle_raw.predict(x)
        result = ta.run(x, y, oracle_raw, AttackConfig(max_queries=200), np.random.default_rng(3))
        assert result.best_adv is not None
        assert oracle_raw.predict(result.best_adv) != y
        assert ta.rmse(x, result.best_adv) == result.final_rmse

    def test_early_stop(self):
        x, oracle_raw, _ = make_halfspace_instance(9)
        y = oracle_raw.predict(x)
        cfg = AttackConfig(max_queries=1000, early_stop_rmse=0.2)
        result = ta.run(x, y, oracle_raw, cfg, np.random.default_rng(4))
        assert result.termination == "early_stop"
        assert result.final_rmse <= 0.2
        assert result.queries_used < 1000

    def test_misclassified_benign_is_init_failure(self):
        x = np.full(SHAPE, 0.5)
        result = ta.run(x, 3, ConstantOracle(5), AttackConfig(max_queries=50), np.random.default_rng(0))
        assert result.termination == "init_failure"
        assert result.queries_used == 1
        assert result.best_adv is None
        assert math.isinf(result.final_rmse)

    def test_resample_exhaustion_is_init_failure(self):
        x = np.full(SHAPE, 0.5)
        result = ta.run(x, 0, ConstantOracle(0), AttackConfig(max_queries=500), np.random.default_rng(0))
        assert result.termination == "init_failure"
        assert result.queries_used == 101  # verification + 100 draws
        assert result.best_adv is None

    def test_budget_hit_during_initialization(self):
        x = np.full(SHAPE, 0.5)
        result = ta.run(x, 0, ConstantOracle(0), AttackConfig(max_queries=5), np.random.default_rng(0))
        assert result.termination == "budget"
        assert result.queries_used == 5
        assert result.best_adv is None

    def test_input_space_mode(self, tiny_mlp):
        oracle_raw, shape = tiny_mlp
        rng = np.random.default_rng(10)
        x = rng.random(shape)
        y = oracle_raw.predict(x)
        cfg = AttackConfig(max_queries=200, input_space=True)
        result = ta.run(x, y, oracle_raw, cfg, np.random.default_rng(11))
        assert result.termination == "budget"
        assert result.best_adv is not None
        assert oracle_raw.predict(result.best_adv) != y

    def test_nondeterministic_oracle_warns(self):
        class FlipFlop(ta.Oracle):
            def __init__(self):
                self.n = 0

            def predict(self, image):
                self.n += 1
                return self.n % 2

        x = np.full(SHAPE, 0.5)
        # first call returns 1 (the "benign" label); the post-hoc recheck is
        # call 41, which also returns 1 and so contradicts the stored result
        with pytest.warns(RuntimeWarning, match="non-deterministic"):
            ta.run(x, 1, FlipFlop(), AttackConfig(max_queries=40), np.random.default_rng(0))
