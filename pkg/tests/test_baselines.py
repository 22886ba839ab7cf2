import numpy as np
import pytest

from adsbqp.baselines import (
    METHOD_NAMES,
    MethodReport,
    enumerate_selections,
    solve_ad_nspen,
    solve_ad_spen,
)
from adsbqp.channel import ChannelMatrix, ScenarioConfig, generate_channel
from adsbqp.driver import full_activation_allocation, solve
from adsbqp.rate import build_esr_problem, economic_objective, sum_rate


def scaled_problem(seed=1, n=8, k=8, noise=3e-14):
    cfg = ScenarioConfig(
        n_tx=n, n_users=k, seed=seed, r_th_mode="fraction", r_th_value=0.5,
        noise_n0b=noise,
    )
    return build_esr_problem(cfg)


def test_method_report_rejects_unknown_names():
    with pytest.raises(ValueError):
        MethodReport("unheard-of", 0.0, 0.0, 0, 0.0, "success")
    for name in METHOD_NAMES:
        MethodReport(name, 0.0, 0.0, 0, 0.0, "success")


def test_enumeration_refuses_large_instances():
    prob = scaled_problem(seed=0)
    with pytest.raises(ValueError):
        enumerate_selections(prob, n_limit=4)


def test_enumeration_is_order_invariant():
    prob = scaled_problem(seed=1, n=4, k=2)
    rng = np.random.default_rng(0)
    report_a, x_a, P_a = enumerate_selections(prob)
    order = list(range(1, 2 ** prob.n_tx))
    rng.shuffle(order)
    report_b, x_b, P_b = enumerate_selections(prob, order=order)
    assert report_a.objective == report_b.objective
    np.testing.assert_array_equal(x_a, x_b)
    np.testing.assert_allclose(P_a, P_b, atol=1e-12)


def test_enumeration_result_is_feasible_and_not_worse_than_any_solver():
    prob = scaled_problem(seed=1, n=4, k=2)
    report, x_best, P_best = enumerate_selections(prob)
    assert report.status == "success"
    assert report.complementarity == 0.0
    assert sum_rate(P_best, x_best, prob) >= prob.r_th - 1e-6
    sol, _ = solve(prob)
    assert report.objective <= sol.objective + 1e-9


def test_enumeration_skips_a_dead_antenna():
    # One antenna with a vanishing channel can only add standby cost; the
    # optimum must not select it.
    cfg = ScenarioConfig(
        n_tx=3, n_users=2, seed=5, r_th_mode="fraction", r_th_value=0.5,
        noise_n0b=3e-14,
    )
    channel = generate_channel(cfg)
    entries = channel.entries.copy()
    entries[1, :] *= 1e-9
    weak = ChannelMatrix(
        entries=entries,
        user_distances=channel.user_distances,
        user_positions=channel.user_positions,
    )
    prob = build_esr_problem(cfg, channel=weak)
    report, x_best, _ = enumerate_selections(prob)
    assert report.status == "success"
    assert x_best[1] == 0.0


def test_enumeration_reports_infeasibility_with_nan_objective():
    prob = build_esr_problem(
        ScenarioConfig(n_tx=2, n_users=2, seed=0, r_th_mode="absolute", r_th_value=1e6)
    )
    report, x_best, P_best = enumerate_selections(prob)
    assert report.status == "infeasible"
    assert np.isnan(report.objective)
    assert x_best is None and P_best is None


def test_penalty_baselines_stall_with_residual_complementarity():
    # The smooth penalty methods cannot push iterates onto the exact Boolean
    # lattice: the barrier keeps every coordinate strictly interior, so the
    # complementarity residual plateaus well above the homotopy method's.
    prob = scaled_problem(seed=0, n=8, k=8)
    sbqp, _ = solve(prob)
    assert sbqp.status == "success"
    assert abs(sbqp.complementarity) <= 1e-12
    for solver in (solve_ad_spen, solve_ad_nspen):
        sol, trace = solver(prob)
        assert sol.status in ("complementarity_not_met", "max_iter")
        assert sol.complementarity >= 1e-9
        assert sol.complementarity > sbqp.complementarity
        assert sbqp.objective <= sol.objective + 1e-12
        assert trace.method in METHOD_NAMES


def test_baselines_share_the_infeasibility_branch():
    prob = build_esr_problem(ScenarioConfig())  # stock 64x64, infeasible
    for solver in (solve_ad_spen, solve_ad_nspen):
        sol, trace = solver(prob)
        assert sol.status == "infeasible"
        assert sol.iterations == 0
        assert trace.rows == []


def test_baseline_solutions_respect_problem_constraints():
    prob = scaled_problem(seed=2, n=8, k=8)
    sol, _ = solve_ad_spen(prob)
    assert np.all(sol.x_star >= -1e-12) and np.all(sol.x_star <= 1.0 + 1e-12)
    assert np.all(sol.P_star >= -1e-10)
    assert sol.row_cap_residual <= 1e-8
    assert sol.objective == pytest.approx(
        economic_objective(sol.P_star, sol.x_star, prob), rel=1e-12
    )
