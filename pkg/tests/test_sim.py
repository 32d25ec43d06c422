"""Tests for Monte Carlo surplus simulation and the per-period ruin bound."""

import math

import numpy as np
import pytest

from reinsure_dp.distributions import FamilySpec, discretize, ess_sup
from reinsure_dp.dp import (
    GridSpec,
    ModelConfig,
    PolicyTable,
    SearchSpec,
    StageData,
    solve_finite,
)
from reinsure_dp.errors import (
    InfeasiblePolicyRow,
    NotVaRConfig,
    ValidationError,
)
from reinsure_dp.premiums import PremiumSpec
from reinsure_dp.risk import RiskSpec, var
from reinsure_dp.sim import ruin_bound_check, simulate_paths
from reinsure_dp.treaties import make_treaty


def point(z):
    return discretize(FamilySpec("point-mass", (z,)))


def uniform01(m=101):
    return discretize(FamilySpec("uniform", (0.0, 1.0), atoms=m))


def identity_policy(config):
    grid = config.grid.points()
    row = tuple(make_treaty("identity", {}) for _ in grid)
    return PolicyTable(grid, tuple(row for _ in range(config.horizon)))


def basic_config(dY, dZ, horizon, grid=None, *, beta=1.0, constrained=False,
                 risk=None, family="stop-loss", layer_upper=None):
    stage = StageData(
        dY=dY,
        dZ=dZ,
        risk=risk if risk is not None else RiskSpec("expected-shortfall", 0.9),
        premium=PremiumSpec("expected", theta=0.2),
        beta=beta,
        budget_constrained=constrained,
    )
    return ModelConfig(
        horizon=horizon,
        stages=(stage,),
        grid=grid if grid is not None else GridSpec(-1.0, 2.0, 33),
        search=SearchSpec(family=family, layer_upper=layer_upper),
    )


def var_layer_config(horizon, *, m=301, z=0.3, grid_count=65):
    dY = uniform01(m)
    upper = var(dY, 0.95)
    stage = StageData(
        dY=dY,
        dZ=point(z),
        risk=RiskSpec("value-at-risk", 0.95),
        premium=PremiumSpec("expected", theta=0.2),
        beta=1.0,
        budget_constrained=True,
    )
    return ModelConfig(
        horizon=horizon,
        stages=(stage,),
        grid=GridSpec(-0.5, 1.5, grid_count),
        search=SearchSpec(family="layer", layer_upper=upper),
    )


class TestDegenerateDynamics:
    # point-mass claims and income make every path identical, so the
    # estimate must be exactly 0 or 1 and everything is reproducible

    def test_all_paths_identical_no_ruin(self):
        config = basic_config(point(0.4), point(0.5), horizon=2)
        policy = identity_policy(config)
        res = simulate_paths(policy, config, 0.1, 500, seed=3)
        # x: 0.1 -> 0.2 -> 0.3, never negative
        assert res.paths == 500
        assert res.ruin_estimate == 0.0
        assert res.ci_half_width == 0.0
        assert res.period_ruin_counts == (0, 0)
        assert res.terminal_mean == pytest.approx(0.3, abs=1e-12)
        for _, q in res.terminal_quantiles:
            assert q == pytest.approx(0.3, abs=1e-12)

    def test_all_paths_identical_certain_ruin(self):
        config = basic_config(point(0.4), point(0.0), horizon=2)
        policy = identity_policy(config)
        res = simulate_paths(policy, config, 0.3, 400, seed=3)
        # x: 0.3 -> -0.1 -> -0.5, ruined from period one onward
        assert res.ruin_estimate == 1.0
        assert res.ci_half_width == 0.0
        assert res.period_ruin_counts == (400, 400)

    def test_income_dominates_claims(self):
        dY = uniform01(51)
        config = basic_config(dY, point(float(ess_sup(dY))), horizon=3)
        policy = identity_policy(config)
        res = simulate_paths(policy, config, 0.0, 4000, seed=11)
        # X_{n+1} - X_n = z - Y >= 0, so the surplus never drops below 0
        assert res.ruin_estimate == 0.0
        assert res.period_ruin_counts == (0, 0, 0)


class TestSamplingAndDeterminism:

    def test_same_seed_bitwise_identical(self):
        config = var_layer_config(3)
        _, policy = solve_finite(config)
        a = simulate_paths(policy, config, 0.8, 12_345, seed=99)
        b = simulate_paths(policy, config, 0.8, 12_345, seed=99)
        assert a == b

    def test_different_seeds_differ(self):
        config = var_layer_config(2)
        _, policy = solve_finite(config)
        a = simulate_paths(policy, config, 0.2, 5000, seed=1)
        b = simulate_paths(policy, config, 0.2, 5000, seed=2)
        assert a.terminal_mean != b.terminal_mean

    def test_identity_policy_terminal_mean(self):
        # E[X_N] = x0 + N*(E[Z] - E[Y]); the seeded estimate must land
        # within three standard errors of it
        dY = uniform01(101)
        config = basic_config(dY, point(0.55), horizon=3)
        policy = identity_policy(config)
        n = 20_000
        res = simulate_paths(policy, config, 0.2, n, seed=7)
        expected = 0.2 + 3 * (0.55 - dY.mean())
        # Var(X_N) = 3 Var(Y) = 3/12, so SE = 0.5/sqrt(n)
        se = 0.5 / math.sqrt(n)
        assert abs(res.terminal_mean - expected) <= 3 * se

    def test_ci_half_width_formula(self):
        config = var_layer_config(2)
        _, policy = solve_finite(config)
        res = simulate_paths(policy, config, 0.05, 8000, seed=21)
        p = res.ruin_estimate
        assert 0.0 <= p <= 1.0
        want = 1.96 * math.sqrt(p * (1.0 - p) / res.paths)
        assert res.ci_half_width == pytest.approx(want, rel=1e-12, abs=1e-15)

    def test_odd_path_count_spans_batches(self):
        config = basic_config(point(0.4), point(0.5), horizon=1)
        policy = identity_policy(config)
        res = simulate_paths(policy, config, 0.0, 10_077, seed=5)
        assert res.paths == 10_077
        assert res.period_ruin_counts == (0,)


class TestPolicyLookup:

    def test_below_grid_uses_lowest_row(self):
        # start below the grid: the clamped lookup must apply the state-0
        # treaty, here full cession, making every path deterministic
        dY = uniform01(21)
        grid = GridSpec(0.0, 1.0, 17)
        config = basic_config(dY, point(0.8), horizon=1, grid=grid)
        pts = grid.points()
        full_cession = make_treaty("stop-loss", {"a": 0.0})
        row = [make_treaty("identity", {}) for _ in pts]
        row[0] = full_cession
        policy = PolicyTable(pts, (tuple(row),))
        res = simulate_paths(policy, config, -0.5, 200, seed=13)
        prem = 1.2 * dY.mean()
        want = -0.5 - prem + 0.8
        assert res.terminal_mean == pytest.approx(want, abs=1e-12)
        for _, q in res.terminal_quantiles:
            assert q == pytest.approx(want, abs=1e-12)

    def test_infeasible_row_rejected(self):
        config = var_layer_config(1, grid_count=17)
        pts = config.grid.points()
        # full cession at a negative-surplus state costs more than x+
        row = tuple(make_treaty("stop-loss", {"a": 0.0}) for _ in pts)
        policy = PolicyTable(pts, (row,))
        with pytest.raises(InfeasiblePolicyRow):
            simulate_paths(policy, config, 0.5, 100, seed=1)


class TestImputedCounts:

    def test_present_only_with_values(self):
        config = var_layer_config(2)
        values, policy = solve_finite(config)
        plain = simulate_paths(policy, config, 0.8, 3000, seed=4)
        assert plain.imputed_ruin_counts is None
        res = simulate_paths(policy, config, 0.8, 3000, seed=4, values=values)
        assert res.imputed_ruin_counts is not None
        assert len(res.imputed_ruin_counts) == 2
        assert all(0 <= c <= res.paths for c in res.imputed_ruin_counts)
        # supplying values must not perturb the sampled paths
        assert res.terminal_mean == plain.terminal_mean
        assert res.period_ruin_counts == plain.period_ruin_counts

    def test_wrong_values_length_rejected(self):
        config = var_layer_config(2)
        values, policy = solve_finite(config)
        with pytest.raises(ValidationError):
            simulate_paths(policy, config, 0.8, 100, seed=4, values=values[:-1])


class TestValidation:

    def test_rejects_infinite_config(self):
        stage = StageData(
            dY=uniform01(31),
            dZ=point(0.3),
            risk=RiskSpec("expected-shortfall", 0.9),
            premium=PremiumSpec("expected", theta=0.2),
            beta=0.9,
        )
        config = ModelConfig(None, (stage,), GridSpec(-1.0, 1.0, 17),
                             SearchSpec(family="stop-loss"))
        _, policy = solve_finite(var_layer_config(1))
        with pytest.raises(ValidationError):
            simulate_paths(policy, config, 0.0, 10, seed=1)

    def test_rejects_bad_path_count(self):
        config = var_layer_config(1)
        _, policy = solve_finite(config)
        with pytest.raises(ValidationError):
            simulate_paths(policy, config, 0.0, 0, seed=1)

    def test_rejects_row_count_mismatch(self):
        config = var_layer_config(2)
        one = var_layer_config(1)
        _, policy = solve_finite(one)
        with pytest.raises(ValidationError):
            simulate_paths(policy, config, 0.0, 10, seed=1)


class TestRuinBoundCheck:

    def test_bound_sums_tail_levels(self):
        config = var_layer_config(4)
        _, policy = solve_finite(config)
        bound, holds = ruin_bound_check(policy, config, 1.4)
        assert bound == pytest.approx(0.2, abs=1e-12)
        assert holds is True

    def test_single_period_bound(self):
        dY = uniform01(301)
        stage = StageData(
            dY=dY,
            dZ=point(0.3),
            risk=RiskSpec("value-at-risk", 0.99),
            premium=PremiumSpec("expected", theta=0.2),
            beta=1.0,
            budget_constrained=True,
        )
        config = ModelConfig(1, (stage,), GridSpec(-0.5, 1.5, 65),
                             SearchSpec(family="layer", layer_upper=var(dY, 0.99)))
        _, policy = solve_finite(config)
        bound, _ = ruin_bound_check(policy, config, 1.0)
        assert bound == pytest.approx(0.01, abs=1e-12)

    def test_precondition_fails_deep_in_deficit(self):
        config = var_layer_config(4)
        _, policy = solve_finite(config)
        bound, holds = ruin_bound_check(policy, config, -0.5)
        assert bound == pytest.approx(0.2, abs=1e-12)
        assert holds is False

    def test_requires_var_at_every_stage(self):
        config = basic_config(uniform01(31), point(0.3), horizon=2)
        policy = identity_policy(config)
        with pytest.raises(NotVaRConfig):
            ruin_bound_check(policy, config, 0.5)

    def test_bonferroni_bound_holds_empirically(self):
        # where the certified precondition holds, the empirical ruin
        # frequency minus its CI half-width must not exceed the bound
        config = var_layer_config(2)
        _, policy = solve_finite(config)
        x0 = 1.3
        bound, holds = ruin_bound_check(policy, config, x0)
        assert holds is True
        for seed in (11, 12, 13):
            res = simulate_paths(policy, config, x0, 20_000, seed=seed)
            assert res.ruin_estimate - res.ci_half_width <= bound
