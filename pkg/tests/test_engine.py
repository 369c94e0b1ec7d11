"""Strategy generation, self-financing conversion, and the daily backtest."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fungen import engine, genfun, lambdas, marketdata
from fungen.errors import ConfigError, DomainError, StrategyError

from conftest import build_path

ENTROPY_AT_START = 0.6730116670092565  # entropy of (0.6, 0.4)


def const_lambda(path, value=1.0):
    return lambdas.build_lambda("constant", {"value": value}, path)


def norm_entropy(path):
    g = genfun.make_entropy()
    x0 = marketdata.begin_weights(path, 0)
    return engine.normalize(g, 1.0, x0)


def market_function() -> genfun.GenFunction:
    """G(lam, x) = sum x_i: generates the market portfolio itself."""
    return genfun.GenFunction(
        name="market",
        eval_G=lambda lam, x: np.asarray(x).sum(axis=-1) + 0.0 * np.asarray(lam),
        eval_DG=lambda lam, x: np.ones_like(np.asarray(x, dtype=float)),
        domain=genfun.DomainSpec(lambda_kind="scalar", open_simplex=False),
        lyapunov_hint=genfun.LYAPUNOV_NONE,
    )


class TestNormalize:
    def test_divide_mode(self, step_path):
        g = norm_entropy(step_path)
        assert g.mode == "divide"
        assert g.g0 == pytest.approx(ENTROPY_AT_START, abs=1e-15)
        assert g.c_shift == 0.0
        assert float(g.eval_G(1.0, np.array([0.6, 0.4]))) == pytest.approx(1.0, abs=1e-15)

    def test_shift_mode_at_zero(self):
        # Quadratic with lam equal to the initial sum of squares starts at 0.
        g = engine.normalize(genfun.make_quadratic(), 0.52, (0.6, 0.4))
        assert g.mode == "shift"
        assert g.c_shift == 1.0
        assert float(g.eval_G(0.52, np.array([0.6, 0.4]))) == pytest.approx(1.0, abs=1e-15)
        # Shift mode leaves the gradient untouched.
        assert np.array_equal(g.eval_DG(0.52, np.array([0.6, 0.4])), [-1.2, -0.8])

    def test_negative_start_rejected(self):
        with pytest.raises(DomainError, match="needs G\\(0\\) >= 0"):
            engine.normalize(genfun.make_quadratic(), 0.0, (0.6, 0.4))

    def test_divide_scales_gradient(self, step_path):
        g = norm_entropy(step_path)
        raw = genfun.make_entropy()
        assert np.allclose(
            g.eval_DG(1.0, np.array([0.6, 0.4])),
            np.asarray(raw.eval_DG(1.0, np.array([0.6, 0.4]))) / g.g0,
            atol=1e-15,
        )


class TestSelfFinancingConvert:
    def test_uniform_positions(self):
        c, phi = engine.self_financing_convert(
            np.array([2.0, 2.0]), np.array([0.5, 0.5]), 1.0
        )
        assert c == 1.0
        assert np.array_equal(phi, [1.0, 1.0])

    def test_skewed_positions(self):
        c, phi = engine.self_financing_convert(
            np.array([0.0, 4.0]), np.array([0.5, 0.5]), 1.0
        )
        assert c == 1.0
        assert np.array_equal(phi, [-1.0, 3.0])

    def test_nonmembers_zeroed(self):
        c, phi = engine.self_financing_convert(
            np.array([2.0, 2.0, 0.0]),
            np.array([0.5, 0.5, 0.0]),
            1.0,
            member=np.array([True, True, False]),
        )
        assert c == 1.0
        assert np.array_equal(phi, [1.0, 1.0, 0.0])

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 100_000))
    def test_conversion_spends_exactly_v(self, seed):
        rng = np.random.default_rng(seed)
        d = rng.integers(2, 8)
        theta = rng.normal(0.0, 3.0, size=d)
        w = rng.dirichlet(np.ones(d))
        v = rng.uniform(0.1, 5.0)
        c, phi = engine.self_financing_convert(theta, w, v)
        assert float(phi @ w) == pytest.approx(v, abs=1e-12)
        assert c == pytest.approx(float(theta @ w) - v, abs=1e-12)


class TestThetaAdditive:
    def test_three_day_oracle(self, three_day_path):
        g = norm_entropy(three_day_path)
        theta = engine.theta_additive(g, three_day_path, const_lambda(three_day_path))
        assert theta.shape == (3, 2)
        assert theta[2] == pytest.approx(
            (-0.5975572474568235, -0.29938902051672317), abs=1e-13
        )

    def test_scalar_lambda_required(self, three_day_path):
        g = norm_entropy(three_day_path)
        wide = lambdas.build_lambda("moving_average", {"window": 2}, three_day_path)
        with pytest.raises(ConfigError, match="takes a scalar lambda, got width 2"):
            engine.theta_additive(g, three_day_path, wide)


class TestThetaMultiplicative:
    def test_exponent_oracle(self, three_day_path):
        g = norm_entropy(three_day_path)
        theta, expo = engine.theta_multiplicative(
            g, three_day_path, const_lambda(three_day_path)
        )
        assert expo[0] == 0.0
        assert expo[1] == 0.0  # day-0 earnings are zero under unit returns
        assert expo[2] == pytest.approx(0.007646388544710814, abs=1e-13)
        assert theta[2] == pytest.approx(
            (-0.602143915724967, -0.30168703987148604), abs=1e-13
        )

    def test_explicit_gamma_matches_default(self, three_day_path):
        g = norm_entropy(three_day_path)
        lam = const_lambda(three_day_path)
        gamma = engine.gamma_defect(g, three_day_path, lam)
        t1, e1 = engine.theta_multiplicative(g, three_day_path, lam)
        t2, e2 = engine.theta_multiplicative(g, three_day_path, lam, gamma=gamma)
        assert np.array_equal(t1, t2)
        assert np.array_equal(e1, e2)

    def test_negative_shift_rejected(self, three_day_path):
        g = norm_entropy(three_day_path)
        with pytest.raises(ConfigError, match="must be non-negative"):
            engine.theta_multiplicative(
                g, three_day_path, const_lambda(three_day_path), c=-0.1
            )

    def test_flat_path_multiplicative_equals_additive(self, flat_path):
        g = engine.normalize(
            genfun.make_entropy(), 1.0, marketdata.begin_weights(flat_path, 0)
        )
        lam = const_lambda(flat_path)
        t_add = engine.theta_additive(g, flat_path, lam)
        t_mul, expo = engine.theta_multiplicative(g, flat_path, lam)
        assert np.array_equal(expo, np.zeros(4))
        assert np.array_equal(t_add, t_mul)


class TestGammaRoutes:
    def test_one_step_defect_oracle(self, step_path):
        raw = genfun.make_entropy()
        gd = engine.gamma_defect(raw, step_path, const_lambda(step_path))
        assert gd.route == "defect"
        assert gd.values[0] == 0.0
        assert gd.values[1] == pytest.approx(0.020410997260127663, abs=1e-15)

    def test_one_step_closed_oracle(self, step_path):
        raw = genfun.make_entropy()
        gc = engine.gamma_closed(raw, step_path, const_lambda(step_path))
        assert gc.route == "closed"
        assert gc.values[1] == pytest.approx(0.020833333333333332, abs=1e-15)

    def test_three_day_defect_oracle(self, three_day_path):
        raw = genfun.make_entropy()
        gd = engine.gamma_defect(raw, three_day_path, const_lambda(three_day_path))
        assert np.allclose(
            gd.values,
            [0.0, 0.005146108701076308, 0.010171276627827009],
            atol=1e-15,
        )

    def test_three_day_closed_oracle(self, three_day_path):
        raw = genfun.make_entropy()
        gc = engine.gamma_closed(raw, three_day_path, const_lambda(three_day_path))
        assert np.allclose(
            gc.values,
            [0.0, 0.005208333333333333, 0.010258838383838384],
            atol=1e-15,
        )

    def test_normalized_gamma_divides_by_g0(self, three_day_path):
        raw = genfun.make_entropy()
        norm = norm_entropy(three_day_path)
        lam = const_lambda(three_day_path)
        gd_raw = engine.gamma_defect(raw, three_day_path, lam)
        gd_norm = engine.gamma_defect(norm, three_day_path, lam)
        assert np.allclose(gd_norm.values * norm.g0, gd_raw.values, atol=1e-15)
        gc_raw = engine.gamma_closed(raw, three_day_path, lam)
        gc_norm = engine.gamma_closed(norm, three_day_path, lam)
        assert np.allclose(gc_norm.values * norm.g0, gc_raw.values, atol=1e-15)

    def test_flat_path_earns_nothing(self, flat_path):
        raw = genfun.make_entropy()
        lam = const_lambda(flat_path)
        assert np.array_equal(engine.gamma_defect(raw, flat_path, lam).values, np.zeros(4))
        assert np.array_equal(engine.gamma_closed(raw, flat_path, lam).values, np.zeros(4))

    def test_quadratic_qv_lambda_cancels_exactly(self, sim_path):
        # Lambda equal to total realized QV makes the quadratic's earnings
        # vanish: the closed form is -(Lambda - Lambda_0) + QV identically.
        raw = genfun.make_quadratic()
        lam = lambdas.build_lambda("scaled_qv", {"scale": 1.0}, sim_path)
        gc = engine.gamma_closed(raw, sim_path, lam)
        assert np.allclose(gc.values, 0.0, atol=1e-15)
        gd = engine.gamma_defect(raw, sim_path, lam)
        assert np.allclose(gd.values, 0.0, atol=1e-12)

    def test_defect_nondecreasing_for_concave_g(self, sim_path):
        raw = genfun.make_entropy()
        gd = engine.gamma_defect(raw, sim_path, const_lambda(sim_path))
        assert (np.diff(gd.values) >= -1e-15).all()

    def test_routes_agree_to_third_order(self, sim_path):
        raw = genfun.make_entropy()
        lam = const_lambda(sim_path)
        gd = engine.gamma_defect(raw, sim_path, lam)
        gc = engine.gamma_closed(raw, sim_path, lam)
        assert np.allclose(gd.values, gc.values, atol=1e-4)
        # The two routes stay distinct computations: no shared increments.
        assert not np.array_equal(gd.values, gc.values)

    def test_no_closed_form_registered(self, three_day_path):
        g = genfun.make_ranked_hybrid(d1=1, d2=2, xi_lo=0.5, xi_hi=2.0)
        with pytest.raises(ConfigError, match="no closed-form Gamma registered"):
            engine.gamma_closed(g, three_day_path, const_lambda(three_day_path))


class TestGValues:
    def test_begin_and_end_points(self, step_path):
        raw = genfun.make_entropy()
        lam = const_lambda(step_path)
        at_begin = engine.g_values(raw, step_path, lam, at="begin")
        at_end = engine.g_values(raw, step_path, lam, at="end")
        assert at_begin[1] == pytest.approx(ENTROPY_AT_START, abs=1e-15)
        assert at_end[1] == pytest.approx(0.6931471805599453, abs=1e-15)

    def test_unknown_point(self, step_path):
        raw = genfun.make_entropy()
        with pytest.raises(ConfigError, match="unknown evaluation point 'mid'"):
            engine.g_values(raw, step_path, const_lambda(step_path), at="mid")

    def test_day_count_mismatch(self, step_path, three_day_path):
        raw = genfun.make_entropy()
        lam2 = const_lambda(step_path)
        with pytest.raises(ConfigError, match="lambda path has 2 days, market path has 3"):
            engine.g_values(raw, three_day_path, lam2)

    def test_vector_width_mismatch(self, step_path, flat_path):
        g = genfun.make_power_diversity(alpha=0.5, p=0.5)
        ma2 = lambdas.build_lambda("moving_average", {"window": 2}, step_path)
        wrong = lambdas.LambdaPath(
            np.tile(ma2.values, (2, 1))[:4], ma2.kind, None, 0.0
        )
        with pytest.raises(ConfigError, match="lambda vector of width 3, got 2"):
            engine.g_values(g, flat_path, wrong)

    def test_domain_error_names_day(self, three_day_path):
        # A decaying lambda clipped at zero breaks the entropy's domain on
        # day 2 only; the error must carry that day and its date.
        values = np.array([[1.0], [1.0], [0.0]])
        lam = lambdas.LambdaPath(values, "constant", None, 1.0)
        raw = genfun.make_entropy()
        with pytest.raises(DomainError, match="day 2 \\(2020-01-03\\): entropy needs lambda > 0") as err:
            engine.g_values(raw, three_day_path, lam)
        assert err.value.day == 2


class TestRunBacktest:
    def test_additive_wealth_oracle(self, three_day_path):
        g = norm_entropy(three_day_path)
        ledger, wealth = engine.run_backtest(
            g, three_day_path, const_lambda(three_day_path)
        )
        assert np.allclose(
            wealth,
            [1.0, 1.0301231856729898, 1.0450315970199948],
            atol=1e-13,
        )
        assert ledger.mode == "additive"
        assert np.array_equal(ledger.wealth, wealth)
        assert np.array_equal(ledger.v_end, wealth)

    def test_additive_ledger_identity(self, three_day_path):
        # V = normalized G at end-of-day weights plus Gamma, exactly.
        g = norm_entropy(three_day_path)
        lam = const_lambda(three_day_path)
        _, wealth = engine.run_backtest(g, three_day_path, lam)
        g_end = engine.g_values(g, three_day_path, lam, at="end")
        gamma = engine.gamma_defect(g, three_day_path, lam)
        assert np.allclose(wealth, g_end + gamma.values, atol=1e-13)

    def test_initial_conversion_constant(self, three_day_path):
        g = norm_entropy(three_day_path)
        ledger, _ = engine.run_backtest(g, three_day_path, const_lambda(three_day_path))
        theta0 = ledger.theta[0]
        w0 = marketdata.begin_weights(three_day_path, 0)
        assert ledger.defect_c[0] == pytest.approx(float(theta0 @ w0) - 1.0, abs=1e-15)
        assert ledger.v_begin[0] == 1.0

    def test_self_financing_every_day(self, sim_path):
        g = engine.normalize(
            genfun.make_entropy(), 1.0, marketdata.begin_weights(sim_path, 0)
        )
        ledger, _ = engine.run_backtest(g, sim_path, const_lambda(sim_path))
        wb = marketdata.begin_weights_all(sim_path)
        funded = (ledger.phi * wb).sum(axis=1)
        assert np.allclose(funded, ledger.v_begin, atol=1e-10)

    def test_multiplicative_wealth_oracle(self, three_day_path):
        g = norm_entropy(three_day_path)
        ledger, wealth = engine.run_backtest(
            g, three_day_path, const_lambda(three_day_path), mode="multiplicative"
        )
        assert wealth[1] == pytest.approx(1.0301231856729898, abs=1e-13)
        assert wealth[2] == pytest.approx(1.0451460294656638, abs=1e-13)
        assert ledger.mode == "multiplicative"

    def test_market_function_tracks_market(self, sim_path):
        g = engine.normalize(
            market_function(), 1.0, marketdata.begin_weights(sim_path, 0)
        )
        ledger, wealth = engine.run_backtest(g, sim_path, const_lambda(sim_path))
        assert np.allclose(wealth, 1.0, atol=1e-12)
        assert np.allclose(ledger.phi, 1.0, atol=1e-12)

    def test_unknown_mode(self, step_path):
        g = norm_entropy(step_path)
        with pytest.raises(ConfigError, match="unknown backtest mode 'hybrid'"):
            engine.run_backtest(g, step_path, const_lambda(step_path), mode="hybrid")

    def test_flat_path_stays_at_one(self, flat_path):
        g = engine.normalize(
            genfun.make_entropy(), 1.0, marketdata.begin_weights(flat_path, 0)
        )
        _, wealth = engine.run_backtest(g, flat_path, const_lambda(flat_path))
        assert np.array_equal(wealth, np.ones(4))

    def test_form_gap_tracked(self, sim_path):
        g = engine.normalize(
            genfun.make_entropy(), 1.0, marketdata.begin_weights(sim_path, 0)
        )
        ledger, _ = engine.run_backtest(g, sim_path, const_lambda(sim_path))
        assert 0.0 <= ledger.max_form_gap < 1e-12


def collapse_path(n_big_days=15):
    """One asset swallows the market: ten-fold moves squeeze entropy to ~0."""
    tr = [[1.0, 1.0]] + [[10.0, 1.0]] * n_big_days
    return build_path([0.5, 0.5], tr)


class TestPositivityFloor:
    def test_multiplicative_floor_trips_with_diagnosis(self):
        path = collapse_path()
        g = engine.normalize(
            genfun.make_entropy(), 1.0, marketdata.begin_weights(path, 0)
        )
        with pytest.raises(StrategyError, match="increase the shift c") as err:
            engine.run_backtest(g, path, const_lambda(path), mode="multiplicative")
        assert err.value.day is not None
        assert 0 < err.value.day < path.n_days
        # The clean prefix is replayed and attached for diagnosis.
        assert err.value.ledger is not None
        assert err.value.ledger.v_end.shape == (err.value.day,)

    def test_shift_c_rescues_the_run(self):
        path = collapse_path()
        g = engine.normalize(
            genfun.make_entropy(), 1.0, marketdata.begin_weights(path, 0)
        )
        ledger, wealth = engine.run_backtest(
            g, path, const_lambda(path), mode="multiplicative", c=0.5
        )
        assert (wealth > 0).all()
        assert ledger.c_shift == 0.5


class TestPartialLedger:
    def test_membership_drop_below_rank_band(self):
        # Three assets until day 3, then one leaves; d2=3 becomes infeasible.
        member = np.array(
            [
                [True, True, True],
                [True, True, True],
                [True, True, True],
                [True, True, False],
            ]
        )
        path = build_path([0.5, 0.3, 0.2], np.ones((4, 3)), member=member)
        raw = genfun.make_ranked_hybrid(d1=1, d2=3, xi_lo=0.5, xi_hi=2.0)
        g = engine.normalize(raw, 1.0, marketdata.begin_weights(path, 0))
        with pytest.raises(
            StrategyError,
            match="day 3 \\(2020-01-04\\): ranked_hybrid needs at least d2=3 weights, got 2",
        ) as err:
            engine.run_backtest(g, path, const_lambda(path))
        assert err.value.day == 3
        assert err.value.ledger is not None
        assert err.value.ledger.v_end.shape == (3,)
        assert np.allclose(err.value.ledger.v_end, 1.0, atol=1e-12)


class TestMembershipChange:
    def build(self):
        # Asset C trades days 0-2 and leaves from day 3 on; moves every day.
        member = np.array(
            [[True, True, True]] * 3 + [[True, True, False]] * 3
        )
        tr = [
            [1.0, 1.0, 1.0],
            [1.02, 0.99, 1.01],
            [0.98, 1.03, 0.99],
            [1.01, 1.02, 1.0],
            [0.97, 1.01, 1.0],
            [1.02, 0.98, 1.0],
        ]
        return build_path([0.5, 0.3, 0.2], tr, member=member)

    def test_flagged_days(self):
        path = self.build()
        ledger, _ = engine.run_backtest(
            engine.normalize(
                genfun.make_entropy(), 1.0, marketdata.begin_weights(path, 0)
            ),
            path,
            const_lambda(path),
        )
        assert np.array_equal(
            ledger.membership_change, [False, False, False, True, False, False]
        )

    def test_increment_identity_off_change_days(self):
        # The exact wealth identity holds day by day wherever membership is
        # stable; the change day re-normalizes weights and is exempt.
        path = self.build()
        lam = lambdas.build_lambda("exp_deterministic", {"rate": -1e-3}, path)
        g = engine.normalize(
            genfun.make_entropy(),
            float(lam.values[0, 0]),
            marketdata.begin_weights(path, 0),
        )
        ledger, wealth = engine.run_backtest(g, path, lam)
        g_end = engine.g_values(g, path, lam, at="end")
        gamma = engine.gamma_defect(g, path, lam)
        rhs = g_end + gamma.values
        dv = np.diff(wealth)
        drhs = np.diff(rhs)
        stable = ~ledger.membership_change[1:]
        assert np.allclose(dv[stable], drhs[stable], atol=1e-12)
        assert not np.allclose(dv[~stable], drhs[~stable], atol=1e-12)

    def test_wealth_carry_uses_capitalization_ratio(self):
        path = self.build()
        g = engine.normalize(
            genfun.make_entropy(), 1.0, marketdata.begin_weights(path, 0)
        )
        ledger, _ = engine.run_backtest(g, path, const_lambda(path))
        total_begin = marketdata.total_mv_begin(path)
        total_end = marketdata.total_mv_end(path)
        for l in range(1, path.n_days):
            expect = ledger.v_end[l - 1] * total_end[l - 1] / total_begin[l]
            assert ledger.v_begin[l] == pytest.approx(expect, abs=1e-15)

    def test_self_financing_still_holds_everywhere(self):
        path = self.build()
        g = engine.normalize(
            genfun.make_entropy(), 1.0, marketdata.begin_weights(path, 0)
        )
        ledger, _ = engine.run_backtest(g, path, const_lambda(path))
        wb = marketdata.begin_weights_all(path)
        funded = (ledger.phi * wb).sum(axis=1)
        assert np.allclose(funded, ledger.v_begin, atol=1e-12)


class TestArbitrageCheck:
    def test_no_crossing(self):
        verdict = engine.arbitrage_check(
            engine.GammaPath(np.zeros(10), "defect"), "additive"
        )
        assert not verdict.crossed
        assert verdict.day is None
        assert verdict.threshold == 1.0

    def test_first_crossing_day(self):
        ramp = engine.GammaPath(np.linspace(0.0, 1.5, 16), "defect")
        verdict = engine.arbitrage_check(ramp, "additive")
        assert verdict.crossed
        # values[10] = 1.0 exactly (not above); values[11] is first above.
        assert verdict.day == 11

    def test_epsilon_raises_threshold(self):
        ramp = engine.GammaPath(np.linspace(0.0, 1.5, 16), "defect")
        plain = engine.arbitrage_check(ramp, "multiplicative")
        padded = engine.arbitrage_check(ramp, "multiplicative", epsilon=0.2)
        assert plain.threshold == 1.0
        assert padded.threshold == 1.2
        assert padded.day > plain.day

    def test_bad_inputs(self):
        gamma = engine.GammaPath(np.zeros(3), "defect")
        with pytest.raises(ConfigError, match="unknown arbitrage mode"):
            engine.arbitrage_check(gamma, "sideways")
        with pytest.raises(ConfigError, match="epsilon must be non-negative"):
            engine.arbitrage_check(gamma, "additive", epsilon=-0.5)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_wealth_forms_agree_on_random_markets(seed):
    rng = np.random.default_rng(seed)
    tr = np.ones((30, 3))
    tr[1:] = np.exp(rng.normal(0.0, 0.02, size=(29, 3)))
    path = build_path(rng.uniform(0.5, 2.0, size=3), tr)
    g = engine.normalize(
        genfun.make_entropy(), 1.0, marketdata.begin_weights(path, 0)
    )
    ledger, wealth = engine.run_backtest(g, path, const_lambda(path))
    we = marketdata.end_weights_all(path)
    wb = marketdata.begin_weights_all(path)
    direct = (ledger.phi * we).sum(axis=1)
    cross = ledger.v_begin + (ledger.theta * (we - wb)).sum(axis=1)
    assert np.allclose(direct, cross, atol=1e-11)
    assert np.allclose(wealth, direct, rtol=0, atol=1e-13)
